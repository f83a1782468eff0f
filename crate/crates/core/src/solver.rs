//! Nonnegative low-rank approximation by alternating projections.
//!
//! Starting from `X_0 = A`, each iteration projects onto the rank-`r` set and
//! then onto the nonnegative orthant:
//!
//! ```text
//! Y_{k+1} = best rank-r approximation of X_k
//! X_{k+1} = max(Y_{k+1}, 0)
//! ```
//!
//! and stops once `‖X_{k+1} − X_k‖_F <= tol · ‖A‖_F`.

use crate::error::{Error, Result};
use crate::matrix::{frobenius_distance, frobenius_norm, relative_residual, DenseMatrix};
use crate::project::{project_nonneg, project_rank_with_svd, RankConstraint};
use crate::svd::{svd_warm, warm_factor, SvdResult};

#[derive(Clone, Copy, Debug)]
pub struct NlrmConfig {
    pub rank: RankConstraint,
    /// Relative step tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl NlrmConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_ITER: usize = 1000;

    pub fn new(rank: usize) -> Result<Self> {
        Ok(Self {
            rank: RankConstraint::new(rank)?,
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            record_history: true,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_history(mut self, record: bool) -> Self {
        self.record_history = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::contract(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::contract("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NlrmResult {
    /// Final nonnegative iterate.
    pub x: DenseMatrix,
    /// Decomposition of `x`. Normally the `rank` leading triplets from the
    /// last rank projection; a full decomposition of `x` when the final
    /// clipping moved the iterate by more than the tolerance.
    pub svd_of_x: SvdResult,
    pub rank: usize,
    pub iterations: usize,
    /// `‖A − X_k‖_F / ‖A‖_F` after each iteration.
    pub residual_history: Vec<f64>,
    /// `‖X_k − X_{k−1}‖_F` for each iteration.
    pub step_history: Vec<f64>,
    pub converged: bool,
    /// The iterate became the zero matrix.
    pub collapsed: bool,
}

impl NlrmResult {
    pub fn relative_residual(&self, a: &DenseMatrix) -> Result<f64> {
        relative_residual(a, &self.x)
    }
}

pub fn nlrm_solve(a: &DenseMatrix, cfg: &NlrmConfig) -> Result<NlrmResult> {
    cfg.validate()?;
    cfg.rank.check_fits(a)?;
    let norm_a = frobenius_norm(a);
    if norm_a == 0.0 {
        return Err(Error::degenerate("cannot approximate the zero matrix"));
    }
    let r = cfg.rank.get();
    let threshold = cfg.tol * norm_a;

    let mut x = a.clone();
    let mut last_svd: Option<SvdResult> = None;
    let mut last_y = a.clone();
    let mut residual_history = Vec::new();
    let mut step_history = Vec::new();
    let mut converged = false;
    let mut collapsed = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let (y, svd) = project_rank_with_svd(&x, cfg.rank, last_svd.as_ref()).map_err(|e| {
            Error::AtIteration {
                iteration: iterations,
                source: Box::new(e),
            }
        })?;
        let next = project_nonneg(&y);
        let step = frobenius_distance(&next, &x)?;
        if cfg.record_history {
            residual_history.push(frobenius_distance(a, &next)? / norm_a);
            step_history.push(step);
        }
        x = next;
        last_y = y;
        last_svd = Some(svd);
        if frobenius_norm(&x) == 0.0 {
            collapsed = true;
            break;
        }
        if step <= threshold {
            converged = true;
            break;
        }
    }

    let full = last_svd.expect("at least one iteration runs");
    let clip_change = frobenius_distance(&x, &last_y)?;
    let svd_of_x = if clip_change > threshold {
        svd_warm(&x, Some(warm_factor(&full))).map_err(|e| Error::AtIteration {
            iteration: iterations,
            source: Box::new(e),
        })?
    } else {
        full.truncated(r)
    };

    Ok(NlrmResult {
        x,
        svd_of_x,
        rank: r,
        iterations,
        residual_history,
        step_history,
        converged,
        collapsed,
    })
}

/// Sum of the leading `j` singular triplets of `s`.
pub fn partial_reconstruction(s: &SvdResult, j: usize) -> Result<DenseMatrix> {
    if j == 0 || j > s.len() {
        return Err(Error::contract(format!(
            "component count {j} outside 1..={}",
            s.len()
        )));
    }
    Ok(s.reconstruct_leading(j))
}

/// `(j, ‖A − X(j)‖_F / ‖A‖_F)` for `j = 1..=rank`, where `X(j)` keeps the
/// leading `j` singular triplets of the solver output.
pub fn residual_curve(a: &DenseMatrix, result: &NlrmResult) -> Result<Vec<(usize, f64)>> {
    let s = &result.svd_of_x;
    let (m, n) = (s.u.rows(), s.v.rows());
    a.check_same_shape(&result.x, "residual_curve")?;
    let norm_a = frobenius_norm(a);
    if norm_a == 0.0 {
        return Err(Error::degenerate("residual curve against a zero matrix"));
    }
    let terms = result.rank.min(s.len());
    let mut acc = DenseMatrix::zeros(m, n);
    let mut curve = Vec::with_capacity(terms);
    for t in 0..terms {
        let sigma = s.sigma[t];
        let v_col = s.v.column(t);
        for i in 0..m {
            let coef = sigma * s.u.get(i, t);
            if coef != 0.0 {
                crate::matrix::axpy(coef, &v_col, acc.row_mut(i));
            }
        }
        curve.push((t + 1, frobenius_distance(a, &acc)? / norm_a));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::matmul;
    use crate::rng::{gaussian_matrix, uniform_matrix, RandomSource};
    use crate::svd::{numerical_rank, svd_full};

    fn exact_rank(seed: u64, m: usize, n: usize, k: usize) -> DenseMatrix {
        let mut rng = RandomSource::new(seed);
        let b = uniform_matrix(&mut rng, m, k);
        let c = uniform_matrix(&mut rng, k, n);
        matmul(&b, &c).unwrap()
    }

    #[test]
    fn exact_rank_input_is_a_fixed_point() {
        let a = exact_rank(1, 30, 20, 4);
        let res = nlrm_solve(&a, &NlrmConfig::new(4).unwrap()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert!(frobenius_distance(&res.x, &a).unwrap() <= 1e-12 * frobenius_norm(&a));
    }

    #[test]
    fn exact_recovery_table_one_scale() {
        let a = exact_rank(3, 100, 80, 10);
        let res = nlrm_solve(&a, &NlrmConfig::new(10).unwrap()).unwrap();
        assert!(res.relative_residual(&a).unwrap() <= 1e-10);
    }

    #[test]
    fn output_is_feasible_on_noisy_input() {
        let mut rng = RandomSource::new(5);
        let a = exact_rank(5, 40, 30, 5)
            .add(&gaussian_matrix(&mut rng, 40, 30, 0.25).unwrap())
            .unwrap();
        assert!(a.min_value() < 0.0, "noise should create negative entries");
        let res = nlrm_solve(&a, &NlrmConfig::new(5).unwrap()).unwrap();
        assert!(res.converged);
        assert!(res.x.min_value() >= 0.0);
        assert!(numerical_rank(&svd_full(&res.x).unwrap(), 1e-8) <= 5);
        assert!(numerical_rank(&res.svd_of_x, 1e-8) <= 5);
        assert_eq!(res.residual_history.len(), res.iterations);
        assert_eq!(res.step_history.len(), res.iterations);
    }

    #[test]
    fn history_can_be_skipped() {
        let a = uniform_matrix(&mut RandomSource::new(6), 12, 10);
        let res = nlrm_solve(&a, &NlrmConfig::new(3).unwrap().with_history(false)).unwrap();
        assert!(res.residual_history.is_empty() && res.step_history.is_empty());
    }

    #[test]
    fn max_iter_exit_is_reported() {
        let a = uniform_matrix(&mut RandomSource::new(7), 30, 25);
        let res = nlrm_solve(&a, &NlrmConfig::new(3).unwrap().with_max_iter(2)).unwrap();
        assert_eq!(res.iterations, 2);
        assert!(!res.converged);
        assert!(res.x.min_value() >= 0.0);
    }

    #[test]
    fn all_negative_input_collapses() {
        let a = uniform_matrix(&mut RandomSource::new(8), 6, 5).map(|v| -1.0 - v);
        let res = nlrm_solve(&a, &NlrmConfig::new(2).unwrap()).unwrap();
        assert!(res.collapsed);
        assert!(!res.converged);
        assert_eq!(res.x, DenseMatrix::zeros(6, 5));
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let z = DenseMatrix::zeros(3, 3);
        assert!(matches!(
            nlrm_solve(&z, &NlrmConfig::new(1).unwrap()),
            Err(Error::Degenerate(_))
        ));
        let a = DenseMatrix::identity(3);
        assert!(nlrm_solve(&a, &NlrmConfig::new(4).unwrap()).is_err());
        assert!(nlrm_solve(&a, &NlrmConfig::new(1).unwrap().with_tol(0.0)).is_err());
        assert!(nlrm_solve(&a, &NlrmConfig::new(1).unwrap().with_max_iter(0)).is_err());
    }

    #[test]
    fn partial_reconstruction_cases() {
        let s = svd_full(&DenseMatrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(
            partial_reconstruction(&s, 1).unwrap(),
            DenseMatrix::diag(&[3.0, 0.0])
        );
        assert!(partial_reconstruction(&s, 0).is_err());
        assert!(partial_reconstruction(&s, 3).is_err());

        let a = uniform_matrix(&mut RandomSource::new(4), 9, 7);
        let full = svd_full(&a).unwrap();
        let all = partial_reconstruction(&full, full.len()).unwrap();
        assert!(frobenius_distance(&all, &a).unwrap() <= 1e-10 * frobenius_norm(&a));
    }

    #[test]
    fn partial_residuals_follow_tail_energy() {
        let a = uniform_matrix(&mut RandomSource::new(13), 14, 10);
        let res = nlrm_solve(&a, &NlrmConfig::new(6).unwrap()).unwrap();
        let x = &res.x;
        let sx = svd_full(x).unwrap();
        let norm_x = frobenius_norm(x);
        for j in 1..=sx.len() {
            let direct = frobenius_distance(x, &partial_reconstruction(&sx, j).unwrap()).unwrap();
            let tail: f64 = sx.sigma[j..].iter().map(|s| s * s).sum::<f64>().sqrt();
            assert!(
                (direct - tail).abs() <= 1e-12 * norm_x,
                "j={j}: {direct} vs {tail}"
            );
        }
    }

    #[test]
    fn residual_curve_matches_recomputation() {
        let a = uniform_matrix(&mut RandomSource::new(21), 20, 16);
        let res = nlrm_solve(&a, &NlrmConfig::new(5).unwrap()).unwrap();
        let curve = residual_curve(&a, &res).unwrap();
        assert_eq!(curve.len(), 5);
        for (j, value) in &curve {
            let recomputed =
                relative_residual(&a, &partial_reconstruction(&res.svd_of_x, *j).unwrap()).unwrap();
            assert!((value - recomputed).abs() <= 1e-13);
        }
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        let last = curve.last().unwrap().1;
        assert!((last - res.relative_residual(&a).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn rank_one_curve_is_single_point() {
        let a = uniform_matrix(&mut RandomSource::new(22), 8, 6);
        let res = nlrm_solve(&a, &NlrmConfig::new(1).unwrap()).unwrap();
        let curve = residual_curve(&a, &res).unwrap();
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - res.relative_residual(&a).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn full_rank_curve_reaches_machine_precision() {
        let a = uniform_matrix(&mut RandomSource::new(23), 100, 80);
        let res = nlrm_solve(&a, &NlrmConfig::new(80).unwrap()).unwrap();
        let curve = residual_curve(&a, &res).unwrap();
        assert!(curve.last().unwrap().1 <= 1e-12);
    }

    #[test]
    fn steps_decay_geometrically_near_exact_rank() {
        use crate::datagen::{gen_synthetic, SyntheticSpec};
        // Clipping stays active on this instance, so the run has a long linear tail.
        let a = gen_synthetic(&SyntheticSpec::planted(100, 80, 3, 2).with_noise(0.01)).unwrap();
        let res = nlrm_solve(&a, &NlrmConfig::new(3).unwrap()).unwrap();
        assert!(res.converged);
        assert!(res.iterations >= 12, "only {} iterations", res.iterations);
        let tail = &res.step_history[res.step_history.len() - 10..];
        for w in tail.windows(2) {
            assert!(w[1] <= 1.05 * w[0], "{tail:?}");
        }
        let n = tail.len() as f64;
        let mean_k = (n - 1.0) / 2.0;
        let mean_log = tail.iter().map(|s| s.ln()).sum::<f64>() / n;
        let slope: f64 = tail
            .iter()
            .enumerate()
            .map(|(k, s)| (k as f64 - mean_k) * (s.ln() - mean_log))
            .sum();
        assert!(slope < 0.0);

        for (k, seed) in [(2, 2), (1, 1), (5, 1)] {
            let a =
                gen_synthetic(&SyntheticSpec::planted(100, 80, k, seed).with_noise(0.001)).unwrap();
            let res = nlrm_solve(&a, &NlrmConfig::new(k).unwrap()).unwrap();
            let s = &res.step_history;
            for w in s[s.len().saturating_sub(10)..].windows(2) {
                assert!(w[1] <= 1.05 * w[0], "k={k}: {s:?}");
            }
        }
    }
}
