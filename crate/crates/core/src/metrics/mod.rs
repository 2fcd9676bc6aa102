//! Accuracy, counterfactual bias, framing effects and Q-statistic diversity.
//!
//! Every metric has a `*_row` form taking a likelihood row aligned with corpus
//! order, so aggregated predictions can be scored without building a matrix.

mod significance;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use significance::{
    mann_whitney_u, mann_whitney_u_with, wilcoxon_signed_rank, wilcoxon_signed_rank_with, Band, MannWhitney,
    TestMethod, TestVariant, Wilcoxon, ZeroHandling, EXACT_MAX,
};

use crate::dataset::{Category, Corpus, DatasetError, Group, Headline, ResponseMatrix, Sentiment, Status};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("unknown responder `{0}`")]
    UnknownResponder(String),
    #[error("selector matches no answered headline")]
    EmptySubset,
    #[error("groups `{0}` and `{1}` are not complementary")]
    GroupMismatch(Group, Group),
    #[error("partner of `{0}` has no response")]
    MissingPartnerResponse(String),
    #[error("Q-statistic denominator is zero")]
    DegenerateTable,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
    #[error("all differences are zero")]
    AllZero,
    #[error(transparent)]
    Dataset(DatasetError),
}

impl From<DatasetError> for MetricsError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::UnknownResponder(id) => MetricsError::UnknownResponder(id),
            other => MetricsError::Dataset(other),
        }
    }
}

/// Filter over headline attributes; the empty selector matches everything.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSelector {
    pub category: Option<Category>,
    pub status: Option<Status>,
    pub sentiment: Option<Sentiment>,
    pub group: Option<Group>,
}

impl SubsetSelector {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn category(mut self, c: Category) -> Self {
        self.category = Some(c);
        self
    }

    pub fn status(mut self, s: Status) -> Self {
        self.status = Some(s);
        self
    }

    pub fn sentiment(mut self, s: Sentiment) -> Self {
        self.sentiment = Some(s);
        self
    }

    pub fn group(mut self, g: Group) -> Self {
        self.group = Some(g);
        self
    }

    pub fn matches(&self, h: &Headline) -> bool {
        self.category.is_none_or(|c| c == h.category)
            && self.status.is_none_or(|s| s == h.status)
            && self.sentiment.is_none_or(|s| s == h.sentiment)
            && self.group.is_none_or(|g| g == h.group)
    }
}

/// Credit for one answer: 1 if on the correct side of 0.5, 0 if on the wrong
/// side, 0.5 at exactly 0.5.
pub fn correctness(p: f64, status: Status) -> f64 {
    if p == 0.5 {
        0.5
    } else if (p > 0.5) == (status == Status::Genuine) {
        1.0
    } else {
        0.0
    }
}

pub fn correctness_row(corpus: &Corpus, row: &[Option<f64>]) -> Vec<Option<f64>> {
    corpus
        .headlines()
        .iter()
        .zip(row)
        .map(|(h, p)| p.map(|p| correctness(p, h.status)))
        .collect()
}

/// Per-headline correctness; missing responses are omitted.
pub fn correctness_vector(
    responses: &ResponseMatrix,
    corpus: &Corpus,
    responder: &str,
) -> Result<BTreeMap<String, f64>, MetricsError> {
    responses.ensure_aligned(corpus)?;
    let row = responses.row(responder)?;
    Ok(corpus
        .headlines()
        .iter()
        .zip(correctness_row(corpus, row))
        .filter_map(|(h, c)| c.map(|c| (h.id.clone(), c)))
        .collect())
}

pub fn accuracy_row(corpus: &Corpus, row: &[Option<f64>], selector: &SubsetSelector) -> Result<f64, MetricsError> {
    let (sum, n) = corpus
        .headlines()
        .iter()
        .zip(row)
        .filter(|(h, _)| selector.matches(h))
        .filter_map(|(h, p)| p.map(|p| correctness(p, h.status)))
        .fold((0.0, 0usize), |(s, n), c| (s + c, n + 1));
    if n == 0 {
        return Err(MetricsError::EmptySubset);
    }
    Ok(sum / n as f64)
}

pub fn accuracy(
    responses: &ResponseMatrix,
    corpus: &Corpus,
    responder: &str,
    selector: &SubsetSelector,
) -> Result<f64, MetricsError> {
    responses.ensure_aligned(corpus)?;
    accuracy_row(corpus, responses.row(responder)?, selector)
}

/// Mean likelihood gap between complementary groups at fixed status and
/// sentiment, with a Mann-Whitney p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasResult {
    pub delta: f64,
    pub p_value: f64,
    pub n_g: usize,
    pub n_g_prime: usize,
    pub method: TestMethod,
}

fn subset_likelihoods(corpus: &Corpus, row: &[Option<f64>], selector: &SubsetSelector) -> Vec<f64> {
    corpus
        .headlines()
        .iter()
        .zip(row)
        .filter(|(h, _)| selector.matches(h))
        .filter_map(|(_, p)| *p)
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn counterfactual_bias_row(
    corpus: &Corpus,
    row: &[Option<f64>],
    status: Status,
    sentiment: Sentiment,
    g: Group,
    g_prime: Group,
    variant: TestVariant,
) -> Result<BiasResult, MetricsError> {
    if g.complement() != g_prime {
        return Err(MetricsError::GroupMismatch(g, g_prime));
    }
    let base = SubsetSelector::all().status(status).sentiment(sentiment);
    let xs = subset_likelihoods(corpus, row, &base.group(g));
    let ys = subset_likelihoods(corpus, row, &base.group(g_prime));
    if xs.is_empty() || ys.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let test = mann_whitney_u_with(&xs, &ys, variant)?;
    Ok(BiasResult {
        delta: mean(&xs) - mean(&ys),
        p_value: test.p_value,
        n_g: xs.len(),
        n_g_prime: ys.len(),
        method: test.method,
    })
}

pub fn counterfactual_bias(
    responses: &ResponseMatrix,
    corpus: &Corpus,
    responder: &str,
    status: Status,
    sentiment: Sentiment,
    g: Group,
    g_prime: Group,
) -> Result<BiasResult, MetricsError> {
    responses.ensure_aligned(corpus)?;
    counterfactual_bias_row(
        corpus,
        responses.row(responder)?,
        status,
        sentiment,
        g,
        g_prime,
        TestVariant::Auto,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramingResult {
    pub delta_f: f64,
    /// Wilcoxon p-value; 1 when every difference is zero.
    pub p_value: f64,
    pub n: usize,
    pub method: TestMethod,
}

/// Mean of `p_h - (1 - p_partner)` over headlines with the given sentiment
/// and group. Headlines without a response are skipped; an answered headline
/// whose partner is unanswered is an error.
pub fn framing_effect_row(
    corpus: &Corpus,
    row: &[Option<f64>],
    sentiment: Sentiment,
    group: Group,
    zeros: ZeroHandling,
) -> Result<FramingResult, MetricsError> {
    let selector = SubsetSelector::all().sentiment(sentiment).group(group);
    let mut diffs = Vec::new();
    for (i, h) in corpus.headlines().iter().enumerate() {
        if !selector.matches(h) {
            continue;
        }
        let Some(p) = row[i] else { continue };
        let q = row[corpus.partner_index(i)].ok_or_else(|| MetricsError::MissingPartnerResponse(h.id.clone()))?;
        diffs.push(p - (1.0 - q));
    }
    if diffs.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let (p_value, method) = match wilcoxon_signed_rank_with(&diffs, zeros, TestVariant::Auto) {
        Ok(w) => (w.p_value, w.method),
        Err(MetricsError::AllZero) => (1.0, TestMethod::Exact),
        Err(e) => return Err(e),
    };
    Ok(FramingResult {
        delta_f: mean(&diffs),
        p_value,
        n: diffs.len(),
        method,
    })
}

pub fn framing_effect(
    responses: &ResponseMatrix,
    corpus: &Corpus,
    responder: &str,
    sentiment: Sentiment,
    group: Group,
) -> Result<FramingResult, MetricsError> {
    responses.ensure_aligned(corpus)?;
    framing_effect_row(corpus, responses.row(responder)?, sentiment, group, ZeroHandling::Discard)
}

/// 2x2 agreement counts between two binarized correctness vectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n00: u64,
    pub n10: u64,
    pub n01: u64,
}

impl ContingencyTable {
    pub fn from_vectors(a: &[bool], b: &[bool]) -> Result<Self, MetricsError> {
        if a.len() != b.len() {
            return Err(MetricsError::LengthMismatch(a.len(), b.len()));
        }
        let mut t = ContingencyTable::default();
        for (&x, &y) in a.iter().zip(b) {
            match (x, y) {
                (true, true) => t.n11 += 1,
                (false, false) => t.n00 += 1,
                (true, false) => t.n10 += 1,
                (false, true) => t.n01 += 1,
            }
        }
        Ok(t)
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n00 + self.n10 + self.n01
    }

    pub fn q(&self) -> Result<f64, MetricsError> {
        let agree = self.n11 * self.n00;
        let disagree = self.n10 * self.n01;
        let denom = agree + disagree;
        if denom == 0 {
            return Err(MetricsError::DegenerateTable);
        }
        Ok((agree as f64 - disagree as f64) / denom as f64)
    }
}

/// Yule's Q over two binarized correctness vectors on common headlines.
pub fn q_statistic(correct_a: &[bool], correct_b: &[bool]) -> Result<f64, MetricsError> {
    if correct_a.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    ContingencyTable::from_vectors(correct_a, correct_b)?.q()
}

/// Binarizes two correctness rows over their common headlines. Half-credit
/// entries carry no direction and are dropped, as are missing ones.
pub fn binarize_common(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<bool>, Vec<bool>) {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) if *x != 0.5 && *y != 0.5 => Some((*x == 1.0, *y == 1.0)),
            _ => None,
        })
        .unzip()
}

pub fn q_between_rows(corpus: &Corpus, a: &[Option<f64>], b: &[Option<f64>]) -> Result<f64, MetricsError> {
    let (x, y) = binarize_common(&correctness_row(corpus, a), &correctness_row(corpus, b));
    q_statistic(&x, &y)
}

/// Pairwise Q-statistics; `None` on the diagonal and for degenerate pairs.
pub fn q_matrix(
    responses: &ResponseMatrix,
    corpus: &Corpus,
    responders: &[String],
) -> Result<Vec<Vec<Option<f64>>>, MetricsError> {
    responses.ensure_aligned(corpus)?;
    let rows: Vec<Vec<Option<f64>>> = responders
        .iter()
        .map(|r| Ok(correctness_row(corpus, responses.row(r)?)))
        .collect::<Result<_, MetricsError>>()?;
    let n = rows.len();
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = binarize_common(&rows[i], &rows[j]);
            let q = q_statistic(&x, &y).ok();
            out[i][j] = q;
            out[j][i] = q;
        }
    }
    Ok(out)
}

/// Mean over the defined off-diagonal entries of a Q matrix.
pub fn mean_pairwise_q(q: &[Vec<Option<f64>>]) -> Option<f64> {
    let vals: Vec<f64> = q
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().skip(i + 1).flatten().copied())
        .collect();
    (!vals.is_empty()).then(|| mean(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::balanced;
    use crate::dataset::LikelihoodScale;
    use proptest::prelude::*;

    fn matrix_with(corpus: &Corpus, f: impl Fn(&Headline) -> f64) -> ResponseMatrix {
        let mut m = ResponseMatrix::new(corpus, LikelihoodScale::Continuous);
        m.push_row("r", corpus.headlines().iter().map(|h| Some(f(h))).collect()).unwrap();
        m
    }

    #[test]
    fn correctness_cases() {
        assert_eq!(correctness(0.75, Status::Genuine), 1.0);
        assert_eq!(correctness(0.75, Status::Altered), 0.0);
        assert_eq!(correctness(0.5, Status::Altered), 0.5);
        assert_eq!(correctness(0.25, Status::Altered), 1.0);
    }

    #[test]
    fn half_credit_keeps_random_responder_at_chance() {
        // uniform over the Likert levels: enumerate the expectation on both statuses
        let levels = crate::dataset::LIKERT_LEVELS;
        for status in Status::ALL {
            let with_half: f64 = levels.iter().map(|&p| correctness(p, status)).sum::<f64>() / 5.0;
            let zero_at_half: f64 = levels
                .iter()
                .map(|&p| if p == 0.5 { 0.0 } else { correctness(p, status) })
                .sum::<f64>()
                / 5.0;
            assert_eq!(with_half, 0.5);
            assert_eq!(zero_at_half, 0.4);
        }
    }

    #[test]
    fn accuracy_ceiling_and_chance() {
        let c = balanced(1);
        let m = matrix_with(&c, |_| 1.0);
        let sel = SubsetSelector::all().status(Status::Genuine);
        assert_eq!(accuracy(&m, &c, "r", &sel).unwrap(), 1.0);
        let m = matrix_with(&c, |_| 0.5);
        assert_eq!(accuracy(&m, &c, "r", &SubsetSelector::all()).unwrap(), 0.5);
        assert!(matches!(accuracy(&m, &c, "x", &sel), Err(MetricsError::UnknownResponder(_))));
    }

    #[test]
    fn accuracy_empty_subset() {
        let c = balanced(1);
        let mut m = ResponseMatrix::new(&c, LikelihoodScale::Likert);
        m.add_responder("r").unwrap();
        assert!(matches!(accuracy(&m, &c, "r", &SubsetSelector::all()), Err(MetricsError::EmptySubset)));
    }

    #[test]
    fn bias_arithmetic() {
        let c = balanced(2);
        // white genuine positive headlines at {0.75, 1.0}, african_american at {0.25, 0.5}
        let base = SubsetSelector::all().status(Status::Genuine).sentiment(Sentiment::Positive);
        let mut row = vec![Some(0.5); c.len()];
        let (mut nw, mut na) = (0, 0);
        for (i, h) in c.headlines().iter().enumerate() {
            if base.group(Group::White).matches(h) {
                row[i] = Some([0.75, 1.0][nw]);
                nw += 1;
            } else if base.group(Group::AfricanAmerican).matches(h) {
                row[i] = Some([0.25, 0.5][na]);
                na += 1;
            }
        }
        assert_eq!((nw, na), (2, 2));
        let mut m = ResponseMatrix::new(&c, LikelihoodScale::Likert);
        m.push_row("r", row).unwrap();
        let r = counterfactual_bias(&m, &c, "r", Status::Genuine, Sentiment::Positive, Group::White, Group::AfricanAmerican)
            .unwrap();
        // oracle: (0.75 + 1.0) / 2 - (0.25 + 0.5) / 2
        assert_eq!(r.delta, 0.5);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((r.n_g, r.n_g_prime), (2, 2));
    }

    #[test]
    fn bias_errors_and_symmetry() {
        let c = balanced(1);
        let m = matrix_with(&c, |_| 0.75);
        let r = counterfactual_bias(&m, &c, "r", Status::Altered, Sentiment::Negative, Group::Man, Group::Woman).unwrap();
        assert_eq!(r.delta, 0.0);
        assert!(matches!(
            counterfactual_bias(&m, &c, "r", Status::Altered, Sentiment::Negative, Group::Man, Group::Old),
            Err(MetricsError::GroupMismatch(..))
        ));
    }

    #[test]
    fn framing_cases() {
        let c = balanced(1);
        // perfectly consistent: p_h = 1 - p_partner
        let consistent = |h: &Headline| if h.status == Status::Genuine { 0.75 } else { 0.25 };
        let m = matrix_with(&c, consistent);
        for s in Sentiment::ALL {
            for g in Group::ALL {
                let r = framing_effect(&m, &c, "r", s, g).unwrap();
                assert_eq!(r.delta_f, 0.0);
                assert_eq!(r.p_value, 1.0);
            }
        }
        let m = matrix_with(&c, |_| 1.0);
        assert_eq!(framing_effect(&m, &c, "r", Sentiment::Positive, Group::Old).unwrap().delta_f, 1.0);
    }

    #[test]
    fn framing_two_pair_arithmetic() {
        let c = balanced(2);
        // the two (positive, man) genuine-or-altered headlines with their partners
        let sel = SubsetSelector::all().sentiment(Sentiment::Positive).group(Group::Man);
        let idx: Vec<usize> = (0..c.len()).filter(|&i| sel.matches(&c.headlines()[i])).collect();
        assert_eq!(idx.len(), 4);
        let mut row = vec![Some(0.5); c.len()];
        // (p_h, p_h') = (0.75, 0.5) for the first, (0.5, 0.5) for the rest
        row[idx[0]] = Some(0.75);
        for &i in &idx {
            row[c.partner_index(i)] = Some(0.5);
        }
        let r = framing_effect_row(&c, &row, Sentiment::Positive, Group::Man, ZeroHandling::Discard).unwrap();
        assert_eq!(r.delta_f, 0.25 / 4.0);
        let two: Vec<f64> = [(0.75, 0.5), (0.5, 0.5)].iter().map(|(p, q)| p - (1.0 - q)).collect();
        assert_eq!(two.iter().sum::<f64>() / 2.0, 0.125);
    }

    #[test]
    fn framing_missing_partner() {
        let c = balanced(1);
        let mut row = vec![Some(0.5); c.len()];
        let i = (0..c.len()).find(|&i| c.headlines()[i].group == Group::Man).unwrap();
        row[c.partner_index(i)] = None;
        let g = c.headlines()[i].group;
        let s = c.headlines()[i].sentiment;
        assert!(matches!(
            framing_effect_row(&c, &row, s, g, ZeroHandling::Discard),
            Err(MetricsError::MissingPartnerResponse(_))
        ));
    }

    #[test]
    fn q_examples() {
        let a = [true, false, true, false];
        assert_eq!(q_statistic(&a, &a).unwrap(), 1.0);
        let b: Vec<bool> = a.iter().map(|x| !x).collect();
        assert_eq!(q_statistic(&a, &b).unwrap(), -1.0);
        let t = ContingencyTable { n11: 4, n00: 2, n10: 1, n01: 3 };
        assert_eq!(t.q().unwrap(), 5.0 / 11.0);
        assert!(matches!(q_statistic(&[true, true], &[true, true]), Err(MetricsError::DegenerateTable)));
        assert!(matches!(q_statistic(&[true], &[true, false]), Err(MetricsError::LengthMismatch(1, 2))));
    }

    #[test]
    fn binarize_drops_half_credit() {
        let (x, y) = binarize_common(&[Some(1.0), Some(0.5), None, Some(0.0)], &[Some(0.0), Some(1.0), Some(1.0), Some(0.0)]);
        assert_eq!(x, vec![true, false]);
        assert_eq!(y, vec![false, false]);
    }

    proptest! {
        #[test]
        fn q_symmetric_and_bounded(v in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let (a, b): (Vec<bool>, Vec<bool>) = v.into_iter().unzip();
            match (q_statistic(&a, &b), q_statistic(&b, &a)) {
                (Ok(x), Ok(y)) => { prop_assert_eq!(x, y); prop_assert!(x.abs() <= 1.0); }
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }

        #[test]
        fn bias_antisymmetric(levels in proptest::collection::vec(0usize..5, 48), s in 0usize..2, t in 0usize..2, c in 0usize..3) {
            let corpus = balanced(2);
            let row: Vec<Option<f64>> = levels.iter().map(|&l| Some(l as f64 / 4.0)).collect();
            let [g, gp] = Category::ALL[c].groups();
            let a = counterfactual_bias_row(&corpus, &row, Status::ALL[s], Sentiment::ALL[t], g, gp, TestVariant::Auto).unwrap();
            let b = counterfactual_bias_row(&corpus, &row, Status::ALL[s], Sentiment::ALL[t], gp, g, TestVariant::Auto).unwrap();
            prop_assert_eq!(a.delta, -b.delta);
        }

        #[test]
        fn framing_zero_law(levels in proptest::collection::vec(0usize..5, 24)) {
            let corpus = balanced(1);
            let mut row = vec![None; corpus.len()];
            for (k, (a, b)) in corpus.pairs().into_iter().enumerate() {
                let p = levels[k] as f64 / 4.0;
                row[a] = Some(p);
                row[b] = Some(1.0 - p);
            }
            for s in Sentiment::ALL {
                for g in Group::ALL {
                    let r = framing_effect_row(&corpus, &row, s, g, ZeroHandling::Discard).unwrap();
                    prop_assert_eq!(r.delta_f, 0.0);
                }
            }
        }
    }
}
