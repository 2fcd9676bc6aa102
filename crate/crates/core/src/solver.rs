//! Convex quadratic minimization over the probability simplex:
//!
//! ```text
//! minimize  w'Gw - 2c'w   subject to  w >= 0, sum(w) = 1
//! ```
//!
//! Accelerated projected gradient with adaptive restart. Every few iterations
//! the current support is handed to an equality-constrained solve; if the
//! result satisfies the KKT conditions it is returned as the exact optimum.

pub(crate) const TOLERANCE: f64 = 1e-9;
pub(crate) const MAX_ITER: usize = 10_000;
const POLISH_EVERY: usize = 25;

/// Euclidean projection onto the simplex (sort-based).
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub(crate) struct SimplexQp<'a> {
    /// Row-major `m x m`, symmetric positive semidefinite.
    pub g: &'a [f64],
    pub c: &'a [f64],
}

impl SimplexQp<'_> {
    fn m(&self) -> usize {
        self.c.len()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .map(|i| {
                let gw: f64 = self.g[i * m..(i + 1) * m].iter().zip(w).map(|(a, b)| a * b).sum();
                2.0 * (gw - self.c[i])
            })
            .collect()
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let m = self.m();
        let mut quad = 0.0;
        for i in 0..m {
            let gw: f64 = self.g[i * m..(i + 1) * m].iter().zip(w).map(|(a, b)| a * b).sum();
            quad += w[i] * gw;
        }
        quad - 2.0 * self.c.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Gershgorin bound on the Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|i| self.g[i * m..(i + 1) * m].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            * 2.0
    }

    pub fn solve(&self) -> Vec<f64> {
        let m = self.m();
        let uniform = vec![1.0 / m as f64; m];
        if m == 1 {
            return vec![1.0];
        }
        let lip = self.lipschitz();
        if lip <= 0.0 {
            // linear objective: all mass on the best coordinate, uniform if flat
            let best = self.c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if self.c.iter().all(|&v| v == best) {
                return uniform;
            }
            let i = self.c.iter().position(|&v| v == best).expect("nonempty");
            let mut w = vec![0.0; m];
            w[i] = 1.0;
            return w;
        }
        let step = 1.0 / lip;

        let mut w = uniform.clone();
        let mut y = uniform;
        let mut t = 1.0f64;
        let mut f_w = self.objective(&w);
        for iter in 1..=MAX_ITER {
            let grad = self.gradient(&y);
            let shifted: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| yi - step * gi).collect();
            let w_next = project_simplex(&shifted);
            let f_next = self.objective(&w_next);

            let change = w_next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if f_next > f_w {
                // adaptive restart: drop momentum
                y = w.clone();
                t = 1.0;
                continue;
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let beta = (t - 1.0) / t_next;
            y = w_next.iter().zip(&w).map(|(a, b)| a + beta * (a - b)).collect();
            w = w_next;
            f_w = f_next;
            t = t_next;

            if iter % POLISH_EVERY == 0 || change < TOLERANCE {
                if let Some(exact) = self.polish_support(&w) {
                    if self.objective(&exact) <= f_w + 1e-15 * f_w.abs().max(1.0) {
                        return exact;
                    }
                }
            }
            if change < TOLERANCE {
                break;
            }
        }
        w
    }

    /// Solves the equality-constrained problem on the support of `w` and
    /// returns it if it is KKT-optimal for the full problem.
    fn polish_support(&self, w: &[f64]) -> Option<Vec<f64>> {
        let m = self.m();
        let support: Vec<usize> = (0..m).filter(|&i| w[i] > 1e-12).collect();
        let k = support.len();
        if k == 0 {
            return None;
        }
        // [G_SS  -1] [w_S]   [c_S]
        // [1'     0] [mu ] = [ 1 ]
        let n = k + 1;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (r, &i) in support.iter().enumerate() {
            for (s, &j) in support.iter().enumerate() {
                a[r * n + s] = self.g[i * m + j];
            }
            a[r * n + k] = -1.0;
            a[k * n + r] = 1.0;
            b[r] = self.c[i];
        }
        b[k] = 1.0;
        let x = solve_linear(&mut a, &mut b, n)?;
        if x[..k].iter().any(|&v| v < 0.0) {
            return None;
        }
        let mut out = vec![0.0; m];
        for (r, &i) in support.iter().enumerate() {
            out[i] = x[r];
        }
        // KKT: gradient equals 2*mu on the support and is at least 2*mu off it
        let grad = self.gradient(&out);
        let mu2 = 2.0 * x[k];
        let scale = grad.iter().map(|g| g.abs()).fold(1.0, f64::max);
        let ok = (0..m).all(|i| {
            if out[i] > 0.0 {
                (grad[i] - mu2).abs() <= 1e-9 * scale
            } else {
                grad[i] >= mu2 - 1e-9 * scale
            }
        });
        ok.then_some(out)
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_basics() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.0, 0.0, 0.0]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_problem_has_closed_form() {
        // minimize sum (w_i - a_i)^2 => projection of a
        let g = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let c = [0.9, 0.5, -0.3];
        let w = SimplexQp { g: &g, c: &c }.solve();
        let expected = project_simplex(&c);
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{w:?} vs {expected:?}");
        }
    }

    proptest! {
        #[test]
        fn solution_is_feasible_and_beats_vertices(
            cols in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 8), 2..6),
            target in proptest::collection::vec(0.0f64..1.0, 8),
        ) {
            let m = cols.len();
            let n = 8.0;
            let mut g = vec![0.0; m * m];
            let mut c = vec![0.0; m];
            for i in 0..m {
                for j in 0..m {
                    g[i * m + j] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>() / n;
                }
                c[i] = cols[i].iter().zip(&target).map(|(a, b)| a * b).sum::<f64>() / n;
            }
            let qp = SimplexQp { g: &g, c: &c };
            let w = qp.solve();
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let f = qp.objective(&w);
            for i in 0..m {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                prop_assert!(f <= qp.objective(&e) + 1e-9);
            }
            prop_assert!(f <= qp.objective(&vec![1.0 / m as f64; m]) + 1e-9);
        }
    }
}
