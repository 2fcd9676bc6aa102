//! Mann-Whitney U and Wilcoxon signed-rank tests.
//!
//! Small samples use the exact permutation distribution, conditional on the
//! observed tie pattern; ranks are kept as doubled midranks so every rank sum
//! is an integer and the distribution is counted exactly. Larger samples fall
//! back to the tie-corrected normal approximation with continuity correction.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::MetricsError;

/// Largest sample (total size for Mann-Whitney, nonzero differences for
/// Wilcoxon) evaluated by exact enumeration under [`TestVariant::Auto`].
pub const EXACT_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApprox => "normal_approx",
        })
    }
}

/// Which distribution to use for the p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    /// Exact up to [`EXACT_MAX`], normal approximation above.
    #[default]
    Auto,
    Exact,
    Normal,
}

impl TestVariant {
    fn method(self, n: usize) -> TestMethod {
        match self {
            TestVariant::Auto if n <= EXACT_MAX => TestMethod::Exact,
            TestVariant::Auto | TestVariant::Normal => TestMethod::NormalApprox,
            TestVariant::Exact => TestMethod::Exact,
        }
    }
}

/// How zero differences enter the signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroHandling {
    /// Drop zeros before ranking (classic Wilcoxon).
    #[default]
    Discard,
    /// Rank zeros with the rest, then drop them from the signed sums.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(U_x, U_y)`.
    pub u: f64,
    /// U statistic of the first sample.
    pub u_x: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// `min(W+, W-)`.
    pub w: f64,
    pub w_plus: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: TestMethod,
}

/// Doubled midranks (1-based) of `values`, in input order, plus the tie
/// correction term `sum(t^3 - t)`.
pub(crate) fn doubled_midranks(values: &[f64]) -> (Vec<u64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        let t = (end - start + 1) as f64;
        ties += t * t * t - t;
        start = end + 1;
    }
    (ranks, ties)
}

fn two_sided(below_or_eq: f64, above_or_eq: f64) -> f64 {
    (2.0 * below_or_eq.min(above_or_eq)).min(1.0)
}

fn normal_two_sided(stat: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((stat - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney, MetricsError> {
    mann_whitney_u_with(x, y, TestVariant::Auto)
}

pub fn mann_whitney_u_with(x: &[f64], y: &[f64], variant: TestVariant) -> Result<MannWhitney, MetricsError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let (nx, ny) = (x.len(), y.len());
    let n = nx + ny;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let sum_x: u64 = ranks[..nx].iter().sum();

    let u_x = sum_x as f64 / 2.0 - (nx * (nx + 1)) as f64 / 2.0;
    let u = u_x.min((nx * ny) as f64 - u_x);

    let method = variant.method(n);
    let p_value = match method {
        TestMethod::Exact => {
            let dist = subset_sum_distribution(&ranks, nx);
            tail_probabilities(&dist, sum_x)
        }
        TestMethod::NormalApprox => {
            let (nxf, nyf, nf) = (nx as f64, ny as f64, n as f64);
            let var = nxf * nyf / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)).max(1.0));
            normal_two_sided(u_x, nxf * nyf / 2.0, var)
        }
    };
    Ok(MannWhitney { u, u_x, p_value, method })
}

/// Counts of `k`-subsets of `ranks` by rank sum; index is the doubled sum.
fn subset_sum_distribution(ranks: &[u64], k: usize) -> Vec<u64> {
    let total: usize = ranks.iter().sum::<u64>() as usize;
    // dp[j][s]: subsets of size j with doubled rank sum s
    let mut dp = vec![vec![0u64; total + 1]; k + 1];
    dp[0][0] = 1;
    for &r in ranks {
        let r = r as usize;
        for j in (0..k).rev() {
            for s in (0..=total - r).rev() {
                let c = dp[j][s];
                if c != 0 {
                    dp[j + 1][s + r] += c;
                }
            }
        }
    }
    dp.swap_remove(k)
}

fn tail_probabilities(counts: &[u64], observed: u64) -> f64 {
    let total: u64 = counts.iter().sum();
    let obs = observed as usize;
    let below: u64 = counts[..=obs.min(counts.len() - 1)].iter().sum();
    let above: u64 = counts.get(obs..).map(|c| c.iter().sum()).unwrap_or(0);
    two_sided(below as f64 / total as f64, above as f64 / total as f64)
}

pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<Wilcoxon, MetricsError> {
    wilcoxon_signed_rank_with(differences, ZeroHandling::Discard, TestVariant::Auto)
}

pub fn wilcoxon_signed_rank_with(
    differences: &[f64],
    zeros: ZeroHandling,
    variant: TestVariant,
) -> Result<Wilcoxon, MetricsError> {
    let (ranks, positive): (Vec<u64>, Vec<bool>) = match zeros {
        ZeroHandling::Discard => {
            let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
            let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
            let (ranks, _) = doubled_midranks(&abs);
            (ranks, nonzero.iter().map(|&d| d > 0.0).collect())
        }
        ZeroHandling::Pratt => {
            let abs: Vec<f64> = differences.iter().map(|d| d.abs()).collect();
            let (ranks, _) = doubled_midranks(&abs);
            differences
                .iter()
                .zip(ranks)
                .filter(|(&d, _)| d != 0.0)
                .map(|(&d, r)| (r, d > 0.0))
                .unzip()
        }
    };
    let n = ranks.len();
    if n == 0 {
        return Err(MetricsError::AllZero);
    }

    let total: u64 = ranks.iter().sum();
    let plus: u64 = ranks.iter().zip(&positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let w_plus = plus as f64 / 2.0;
    let w = w_plus.min((total - plus) as f64 / 2.0);

    let method = variant.method(n);
    let p_value = match method {
        TestMethod::Exact => {
            // counts of sign assignments by doubled positive-rank sum
            let mut dist = vec![0u64; total as usize + 1];
            dist[0] = 1;
            for &r in &ranks {
                let r = r as usize;
                for s in (0..=total as usize - r).rev() {
                    let c = dist[s];
                    if c != 0 {
                        dist[s + r] += c;
                    }
                }
            }
            tail_probabilities(&dist, plus)
        }
        TestMethod::NormalApprox => {
            // W+ = sum r_i B_i with B_i ~ Bernoulli(1/2)
            let sum_r: f64 = ranks.iter().map(|&r| r as f64 / 2.0).sum();
            let sum_r2: f64 = ranks.iter().map(|&r| (r as f64 / 2.0).powi(2)).sum();
            normal_two_sided(w_plus, sum_r / 2.0, sum_r2 / 4.0)
        }
    };
    Ok(Wilcoxon {
        w,
        w_plus,
        n,
        p_value,
        method,
    })
}

/// Significance band used to shade bias cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "p<0.01")]
    P01,
    #[serde(rename = "p<0.05")]
    P05,
    #[serde(rename = "p<0.1")]
    P10,
    #[serde(rename = "ns")]
    Ns,
}

impl Band {
    pub fn of(p: f64) -> Band {
        if p < 0.01 {
            Band::P01
        } else if p < 0.05 {
            Band::P05
        } else if p < 0.1 {
            Band::P10
        } else {
            Band::Ns
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::P01 => "p<0.01",
            Band::P05 => "p<0.05",
            Band::P10 => "p<0.1",
            Band::Ns => "ns",
        }
    }
}

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p<0.01" => Ok(Band::P01),
            "p<0.05" => Ok(Band::P05),
            "p<0.1" => Ok(Band::P10),
            "ns" => Ok(Band::Ns),
            other => Err(format!("invalid band `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force: enumerate every labeling of the pooled sample.
    fn mwu_oracle(x: &[f64], y: &[f64]) -> f64 {
        let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
        let n = pooled.len();
        let rank = |v: f64| {
            let below = pooled.iter().filter(|&&w| w < v).count() as f64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        };
        let ranks: Vec<f64> = pooled.iter().map(|&v| rank(v)).collect();
        let observed: f64 = ranks[..x.len()].iter().sum();
        let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != x.len() {
                continue;
            }
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            total += 1;
            le += u64::from(s <= observed + 1e-9);
            ge += u64::from(s >= observed - 1e-9);
        }
        (2.0 * (le.min(ge) as f64 / total as f64)).min(1.0)
    }

    #[test]
    fn mwu_separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, TestMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert!((mwu_oracle(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mwu_likert_example() {
        let r = mann_whitney_u(&[0.75, 1.0], &[0.25, 0.5]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mwu_identical_samples() {
        let x = [0.0, 0.5, 0.5, 1.0];
        assert!((mann_whitney_u(&x, &x).unwrap().p_value - 1.0).abs() < 1e-9);
        let big: Vec<f64> = (0..40).map(|i| (i % 5) as f64 / 4.0).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.method, TestMethod::NormalApprox);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mwu_empty() {
        assert!(matches!(mann_whitney_u(&[], &[1.0]), Err(MetricsError::EmptySample)));
    }

    #[test]
    fn mwu_normal_matches_reference() {
        // x = 0..20, y = 10.5..30: x > y in 1 + 2 + ... + 9 = 45 pairs; mu = 200, sigma^2 = 400*41/12
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = (10..30).map(|v| f64::from(v) + 0.5).collect();
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.u_x, 45.0);
        let sigma = (400.0f64 * 41.0 / 12.0).sqrt();
        let expected = erfc(((200.0 - 45.0 - 0.5) / sigma) / std::f64::consts::SQRT_2);
        assert!((r.p_value - expected).abs() < 1e-12);
        // exact and approximate agree roughly at this size
        let exact = mann_whitney_u_with(&x, &y, TestVariant::Exact).unwrap();
        assert!((exact.p_value - r.p_value).abs() < 0.01, "{} vs {}", exact.p_value, r.p_value);
    }

    #[test]
    fn wilcoxon_examples() {
        assert!(matches!(wilcoxon_signed_rank(&[0.0, 0.0]), Err(MetricsError::AllZero)));
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.w, 0.0);
        assert!((r.p_value - 2.0 / 32.0).abs() < 1e-12);
        let r = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wilcoxon_zero_handling() {
        let d = [0.0, 0.25, 0.5, 0.75];
        let discard = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(discard.n, 3);
        assert_eq!(discard.w_plus, 6.0);
        let pratt = wilcoxon_signed_rank_with(&d, ZeroHandling::Pratt, TestVariant::Auto).unwrap();
        assert_eq!(pratt.w_plus, 9.0);
    }

    #[test]
    fn wilcoxon_normal_matches_textbook_variance() {
        let d: Vec<f64> = (1..=20).map(|i| if i % 3 == 0 { -f64::from(i) } else { f64::from(i) }).collect();
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(r.method, TestMethod::NormalApprox);
        let n = 20.0;
        let mu = n * (n + 1.0) / 4.0;
        let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
        let expected = erfc((((r.w_plus - mu).abs() - 0.5) / var.sqrt()) / std::f64::consts::SQRT_2);
        assert!((r.p_value - expected).abs() < 1e-12);
    }

    #[test]
    fn bands() {
        assert_eq!(Band::of(0.009), Band::P01);
        assert_eq!(Band::of(0.01), Band::P05);
        assert_eq!(Band::of(0.07), Band::P10);
        assert_eq!(Band::of(0.1), Band::Ns);
    }

    #[test]
    fn exact_matches_oracle_on_small_grid() {
        let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
        for a in 0..125usize {
            for b in 0..25usize {
                let x: Vec<f64> = (0..3).map(|i| levels[a / 5usize.pow(i) % 5]).collect();
                let y: Vec<f64> = (0..2).map(|i| levels[b / 5usize.pow(i) % 5]).collect();
                let got = mann_whitney_u(&x, &y).unwrap().p_value;
                assert!((got - mwu_oracle(&x, &y)).abs() < 1e-12, "{x:?} {y:?}");
            }
        }
    }
}
