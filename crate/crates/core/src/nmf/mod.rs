//! Classical NMF baselines: `min ‖A − BC‖_F` over `B, C >= 0`.
//!
//! Three update schemes are provided: Lee–Seung multiplicative updates,
//! hierarchical alternating least squares, and Lin's alternating projected
//! gradient. All share random restarts, the stopping rule, and the
//! component reordering used for residual-versus-components curves.

mod hals;
mod mu;
mod pg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{axpy, frobenius_distance, frobenius_norm, matmul, DenseMatrix};
use crate::rng::RandomSource;

/// Objective changes are measured over this many iterations.
pub const STOP_WINDOW: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmfAlgorithm {
    Mu,
    Hals,
    Pg,
}

impl NmfAlgorithm {
    pub const ALL: [NmfAlgorithm; 3] = [NmfAlgorithm::Mu, NmfAlgorithm::Hals, NmfAlgorithm::Pg];

    pub fn name(self) -> &'static str {
        match self {
            NmfAlgorithm::Mu => "MU",
            NmfAlgorithm::Hals => "HALS",
            NmfAlgorithm::Pg => "PG",
        }
    }
}

impl fmt::Display for NmfAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NmfAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(NmfAlgorithm::Mu),
            "hals" => Ok(NmfAlgorithm::Hals),
            "pg" => Ok(NmfAlgorithm::Pg),
            other => Err(Error::contract(format!("unknown NMF algorithm '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NmfConfig {
    pub rank: usize,
    pub max_iter: usize,
    /// Relative objective change over [`STOP_WINDOW`] iterations.
    pub tol: f64,
    pub restarts: usize,
    pub algorithm: NmfAlgorithm,
    pub seed: u64,
    /// Opt-in repeated inner MU updates per factor; ignored by HALS and PG.
    pub accelerate: bool,
}

impl NmfConfig {
    pub fn new(rank: usize, algorithm: NmfAlgorithm) -> Self {
        Self {
            rank,
            max_iter: 500,
            tol: 1e-9,
            restarts: 10,
            algorithm,
            seed: 0,
            accelerate: false,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_acceleration(mut self, accelerate: bool) -> Self {
        self.accelerate = accelerate;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, a: &DenseMatrix) -> Result<()> {
        let k = a.rows().min(a.cols());
        if self.rank == 0 || self.rank > k {
            return Err(Error::contract(format!(
                "NMF rank {} outside 1..={k} for a {}x{} matrix",
                self.rank,
                a.rows(),
                a.cols()
            )));
        }
        if self.restarts == 0 {
            return Err(Error::contract("restarts must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::contract("max_iter must be at least 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::contract("tolerance must be nonnegative"));
        }
        if self.algorithm == NmfAlgorithm::Mu && a.min_value() < 0.0 {
            return Err(Error::contract(
                "multiplicative updates require a nonnegative input matrix",
            ));
        }
        if frobenius_norm(a) == 0.0 {
            return Err(Error::degenerate("cannot factor the zero matrix"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NmfResult {
    /// `m x r`, entrywise nonnegative.
    pub b: DenseMatrix,
    /// `r x n`, entrywise nonnegative.
    pub c: DenseMatrix,
    /// `‖A − BC‖_F / ‖A‖_F` of the returned factors.
    pub residual: f64,
    /// Relative residual per iteration for each restart; entry 0 is the
    /// initial guess.
    pub residual_history: Vec<Vec<f64>>,
    pub per_restart_residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub best_restart: usize,
}

impl NmfResult {
    pub fn rank(&self) -> usize {
        self.b.cols()
    }

    pub fn mean_residual(&self) -> f64 {
        self.per_restart_residuals.iter().sum::<f64>() / self.per_restart_residuals.len() as f64
    }

    pub fn min_residual(&self) -> f64 {
        self.per_restart_residuals
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_residual(&self) -> f64 {
        self.per_restart_residuals
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One update sweep of a factorization scheme.
trait Updater {
    fn update(
        &mut self,
        a: &DenseMatrix,
        b: &mut DenseMatrix,
        c: &mut DenseMatrix,
        rng: &mut RandomSource,
    );
}

struct Run {
    b: DenseMatrix,
    c: DenseMatrix,
    history: Vec<f64>,
    iterations: usize,
}

/// Best of `cfg.restarts` randomly initialized runs.
pub fn nmf_solve(a: &DenseMatrix, cfg: &NmfConfig) -> Result<NmfResult> {
    cfg.validate(a)?;
    let root = RandomSource::new(cfg.seed);
    let scale = init_scale(a, cfg.rank);
    let runs: Vec<Run> = (0..cfg.restarts)
        .map(|restart| {
            let mut rng = root.derive(&[restart as u64]);
            let b = random_factor(&mut rng, a.rows(), cfg.rank, scale);
            let c = random_factor(&mut rng, cfg.rank, a.cols(), scale);
            run_from(a, b, c, cfg, &mut rng)
        })
        .collect();
    Ok(assemble(runs))
}

/// Single run from a caller-supplied initial guess.
pub fn nmf_solve_from(
    a: &DenseMatrix,
    b0: &DenseMatrix,
    c0: &DenseMatrix,
    cfg: &NmfConfig,
) -> Result<NmfResult> {
    cfg.validate(a)?;
    if b0.shape() != (a.rows(), cfg.rank) || c0.shape() != (cfg.rank, a.cols()) {
        return Err(Error::DimensionMismatch {
            op: "nmf_solve_from",
            left: b0.shape(),
            right: c0.shape(),
        });
    }
    if b0.min_value() < 0.0 || c0.min_value() < 0.0 {
        return Err(Error::contract("initial factors must be nonnegative"));
    }
    let mut rng = RandomSource::new(cfg.seed);
    Ok(assemble(vec![run_from(
        a,
        b0.clone(),
        c0.clone(),
        cfg,
        &mut rng,
    )]))
}

fn assemble(runs: Vec<Run>) -> NmfResult {
    let per_restart: Vec<f64> = runs.iter().map(|r| *r.history.last().unwrap()).collect();
    let best = per_restart.iter().enumerate().fold(
        0,
        |best, (i, &v)| if v < per_restart[best] { i } else { best },
    );
    let iterations = runs.iter().map(|r| r.iterations).collect();
    let mut histories = Vec::with_capacity(runs.len());
    let mut best_factors = None;
    for (i, run) in runs.into_iter().enumerate() {
        histories.push(run.history);
        if i == best {
            best_factors = Some((run.b, run.c));
        }
    }
    let (b, c) = best_factors.expect("at least one restart");
    NmfResult {
        b,
        c,
        residual: per_restart[best],
        residual_history: histories,
        per_restart_residuals: per_restart,
        iterations,
        best_restart: best,
    }
}

fn run_from(
    a: &DenseMatrix,
    mut b: DenseMatrix,
    mut c: DenseMatrix,
    cfg: &NmfConfig,
    rng: &mut RandomSource,
) -> Run {
    let norm_a = frobenius_norm(a);
    let objective = |b: &DenseMatrix, c: &DenseMatrix| {
        frobenius_distance(a, &matmul(b, c).expect("factor shapes agree")).expect("same shape")
            / norm_a
    };
    let mut updater: Box<dyn Updater> = match cfg.algorithm {
        NmfAlgorithm::Mu => Box::new(mu::MultiplicativeUpdate::new(
            a.rows(),
            a.cols(),
            cfg.rank,
            cfg.accelerate,
        )),
        NmfAlgorithm::Hals => Box::new(hals::Hals::new(init_scale(a, cfg.rank))),
        NmfAlgorithm::Pg => Box::new(pg::ProjectedGradient::new(a, &b, &c, cfg.tol)),
    };
    let mut history = Vec::with_capacity(cfg.max_iter + 1);
    history.push(objective(&b, &c));
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        updater.update(a, &mut b, &mut c, rng);
        iterations += 1;
        let f = objective(&b, &c);
        history.push(f);
        if f == 0.0 {
            break;
        }
        if history.len() > STOP_WINDOW {
            let before = history[history.len() - 1 - STOP_WINDOW];
            if (before - f) / before < cfg.tol {
                break;
            }
        }
    }
    Run {
        b,
        c,
        history,
        iterations,
    }
}

/// Entry scale making random factors commensurate with `A`.
fn init_scale(a: &DenseMatrix, rank: usize) -> f64 {
    let mean_abs = a.as_slice().iter().map(|v| v.abs()).sum::<f64>() / a.as_slice().len() as f64;
    (mean_abs / rank as f64).sqrt()
}

fn random_factor(rng: &mut RandomSource, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.uniform_open())
        .collect();
    DenseMatrix::from_raw(rows, cols, data)
}

/// Normalizes each row of `C` to unit sum of squares (absorbing the scale into
/// `B`) and orders components by descending column energy of `B`.
pub fn reorder_components(res: &NmfResult) -> NmfResult {
    let r = res.rank();
    let (m, n) = (res.b.rows(), res.c.cols());
    let mut b = res.b.clone();
    let mut c = res.c.clone();
    for k in 0..r {
        let row = c.row_mut(k);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            continue;
        }
        row.iter_mut().for_each(|v| *v /= norm);
        for i in 0..m {
            b.set(i, k, b.get(i, k) * norm);
        }
    }
    let energy: Vec<f64> = (0..r)
        .map(|k| (0..m).map(|i| b.get(i, k).powi(2)).sum())
        .collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| energy[y].total_cmp(&energy[x]));
    let b_sorted = DenseMatrix::from_fn(m, r, |i, k| b.get(i, order[k]));
    let c_sorted = DenseMatrix::from_fn(r, n, |k, j| c.get(order[k], j));
    NmfResult {
        b: b_sorted,
        c: c_sorted,
        ..res.clone()
    }
}

/// `sum_{i<j} B(:, i) C(i, :)`.
pub fn nmf_partial_reconstruction(res: &NmfResult, j: usize) -> Result<DenseMatrix> {
    let r = res.rank();
    if j == 0 || j > r {
        return Err(Error::contract(format!(
            "component count {j} outside 1..={r}"
        )));
    }
    let (m, n) = (res.b.rows(), res.c.cols());
    let mut out = DenseMatrix::zeros(m, n);
    for i in 0..m {
        let out_row = out.row_mut(i);
        for k in 0..j {
            axpy(res.b.get(i, k), res.c.row(k), out_row);
        }
    }
    Ok(out)
}

/// `(j, ‖A − X_nmf(j)‖_F / ‖A‖_F)` for `j = 1..=r`; pass reordered factors.
pub fn nmf_residual_curve(a: &DenseMatrix, res: &NmfResult) -> Result<Vec<(usize, f64)>> {
    let (m, n) = (res.b.rows(), res.c.cols());
    if (m, n) != a.shape() {
        return Err(Error::DimensionMismatch {
            op: "nmf_residual_curve",
            left: a.shape(),
            right: (m, n),
        });
    }
    let norm_a = frobenius_norm(a);
    if norm_a == 0.0 {
        return Err(Error::degenerate("residual curve against a zero matrix"));
    }
    let mut acc = DenseMatrix::zeros(m, n);
    let mut curve = Vec::with_capacity(res.rank());
    for k in 0..res.rank() {
        let c_row = res.c.row(k);
        for i in 0..m {
            let coef = res.b.get(i, k);
            if coef != 0.0 {
                axpy(coef, c_row, acc.row_mut(i));
            }
        }
        curve.push((k + 1, frobenius_distance(a, &acc)? / norm_a));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::relative_residual;
    use crate::rng::uniform_matrix;

    fn planted(seed: u64, m: usize, n: usize, k: usize) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
        let mut rng = RandomSource::new(seed);
        let b = uniform_matrix(&mut rng, m, k);
        let c = uniform_matrix(&mut rng, k, n);
        let a = matmul(&b, &c).unwrap();
        (a, b, c)
    }

    fn nonincreasing(h: &[f64]) -> bool {
        h.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }

    #[test]
    fn planted_factors_are_stationary() {
        let (a, b0, c0) = planted(1, 30, 20, 4);
        for algo in NmfAlgorithm::ALL {
            let cfg = NmfConfig::new(4, algo).with_max_iter(50);
            let res = nmf_solve_from(&a, &b0, &c0, &cfg).unwrap();
            assert!(res.residual <= 1e-12, "{algo}: {}", res.residual);
        }
    }

    #[test]
    fn objectives_are_monotone() {
        let a = uniform_matrix(&mut RandomSource::new(2), 25, 18);
        for algo in NmfAlgorithm::ALL {
            let res = nmf_solve(
                &a,
                &NmfConfig::new(5, algo).with_restarts(2).with_max_iter(200),
            )
            .unwrap();
            for h in &res.residual_history {
                assert!(nonincreasing(h), "{algo}");
            }
            assert!(res.b.min_value() >= 0.0 && res.c.min_value() >= 0.0);
            let direct = relative_residual(&a, &matmul(&res.b, &res.c).unwrap()).unwrap();
            assert!((direct - res.residual).abs() <= 1e-12);
        }
        let fast = NmfConfig::new(5, NmfAlgorithm::Mu)
            .with_restarts(2)
            .with_max_iter(200)
            .with_acceleration(true);
        for h in &nmf_solve(&a, &fast).unwrap().residual_history {
            assert!(nonincreasing(h), "accelerated MU");
        }
    }

    #[test]
    fn restarts_are_reproducible_and_best_is_returned() {
        let a = uniform_matrix(&mut RandomSource::new(3), 20, 15);
        let cfg = NmfConfig::new(3, NmfAlgorithm::Hals)
            .with_restarts(4)
            .with_seed(7)
            .with_max_iter(100);
        let r1 = nmf_solve(&a, &cfg).unwrap();
        let r2 = nmf_solve(&a, &cfg).unwrap();
        assert_eq!(r1.per_restart_residuals, r2.per_restart_residuals);
        assert_eq!(r1.b, r2.b);
        assert_eq!(r1.per_restart_residuals.len(), 4);
        assert_eq!(r1.residual, r1.min_residual());
        assert!(r1.mean_residual() >= r1.min_residual() && r1.mean_residual() <= r1.max_residual());
    }

    #[test]
    fn mu_rejects_negative_input() {
        let a = DenseMatrix::from_rows(&[[1.0, -1.0], [2.0, 3.0]]).unwrap();
        let err = nmf_solve(&a, &NmfConfig::new(1, NmfAlgorithm::Mu)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(nmf_solve(&a, &NmfConfig::new(1, NmfAlgorithm::Hals).with_restarts(1)).is_ok());
    }

    #[test]
    fn zero_input_and_bad_config() {
        let z = DenseMatrix::zeros(4, 4);
        assert!(matches!(
            nmf_solve(&z, &NmfConfig::new(2, NmfAlgorithm::Mu)),
            Err(Error::Degenerate(_))
        ));
        let a = DenseMatrix::identity(3);
        assert!(nmf_solve(&a, &NmfConfig::new(4, NmfAlgorithm::Mu)).is_err());
        assert!(nmf_solve(&a, &NmfConfig::new(2, NmfAlgorithm::Mu).with_restarts(0)).is_err());
    }

    #[test]
    fn planted_problem_is_not_recovered_exactly() {
        let (a, _, _) = planted(4, 100, 80, 10);
        let res = nmf_solve(&a, &NmfConfig::new(10, NmfAlgorithm::Mu).with_restarts(2)).unwrap();
        assert!(res.residual > 1e-6, "{}", res.residual);
    }

    #[test]
    fn algorithm_names_parse() {
        assert_eq!("hals".parse::<NmfAlgorithm>().unwrap(), NmfAlgorithm::Hals);
        assert_eq!("MU".parse::<NmfAlgorithm>().unwrap(), NmfAlgorithm::Mu);
        assert!("als".parse::<NmfAlgorithm>().is_err());
    }

    fn fake_result(b: DenseMatrix, c: DenseMatrix) -> NmfResult {
        NmfResult {
            b,
            c,
            residual: 0.0,
            residual_history: vec![],
            per_restart_residuals: vec![0.0],
            iterations: vec![0],
            best_restart: 0,
        }
    }

    #[test]
    fn reorder_preserves_product_and_sorts() {
        let mut rng = RandomSource::new(5);
        let b = uniform_matrix(&mut rng, 12, 5);
        let c = uniform_matrix(&mut rng, 5, 9);
        let res = fake_result(b.clone(), c.clone());
        let re = reorder_components(&res);
        let before = matmul(&b, &c).unwrap();
        let after = matmul(&re.b, &re.c).unwrap();
        assert!(relative_residual(&before, &after).unwrap() <= 1e-12);

        // independent oracle: energies of B(:,k)·‖C(k,:)‖, argsorted descending
        let mut energies: Vec<(usize, f64)> = (0..5)
            .map(|k| {
                let cn: f64 = c.row(k).iter().map(|v| v * v).sum::<f64>();
                let bn: f64 = (0..12).map(|i| b.get(i, k).powi(2)).sum::<f64>();
                (k, bn * cn)
            })
            .collect();
        energies.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
        for (pos, (k, _)) in energies.iter().enumerate() {
            let cn = c.row(*k).iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..9 {
                assert!((re.c.get(pos, j) - c.get(*k, j) / cn).abs() <= 1e-14);
            }
        }
        for k in 0..5 {
            let norm: f64 = re.c.row(k).iter().map(|v| v * v).sum::<f64>();
            assert!((norm - 1.0).abs() <= 1e-14);
        }

        let again = reorder_components(&re);
        assert_eq!(again.b, re.b);
        assert_eq!(again.c, re.c);
    }

    #[test]
    fn reorder_leaves_zero_rows() {
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let c = DenseMatrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 2.0, 2.0]]).unwrap();
        let re = reorder_components(&fake_result(b.clone(), c.clone()));
        assert_eq!(re.c.row(1), &[0.0, 0.0, 0.0]);
        let before = matmul(&b, &c).unwrap();
        assert!(relative_residual(&before, &matmul(&re.b, &re.c).unwrap()).unwrap() <= 1e-15);
    }

    #[test]
    fn partial_reconstruction_and_curve() {
        let a = uniform_matrix(&mut RandomSource::new(6), 15, 12);
        let res = reorder_components(
            &nmf_solve(&a, &NmfConfig::new(4, NmfAlgorithm::Hals).with_restarts(1)).unwrap(),
        );
        let full = nmf_partial_reconstruction(&res, 4).unwrap();
        assert!(relative_residual(&full, &matmul(&res.b, &res.c).unwrap()).unwrap() <= 1e-12);
        let one = nmf_partial_reconstruction(&res, 1).unwrap();
        let s = crate::svd::svd_full(&one).unwrap();
        assert_eq!(crate::svd::numerical_rank(&s, 1e-8), 1);
        assert!(nmf_partial_reconstruction(&res, 0).is_err());
        assert!(nmf_partial_reconstruction(&res, 5).is_err());

        let curve = nmf_residual_curve(&a, &res).unwrap();
        for (j, v) in &curve {
            let direct =
                relative_residual(&a, &nmf_partial_reconstruction(&res, *j).unwrap()).unwrap();
            assert!((v - direct).abs() <= 1e-13);
        }
        assert!((curve.last().unwrap().1 - res.residual).abs() <= 1e-12);
    }
}
