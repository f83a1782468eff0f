//! Seeded comparison suites.
//!
//! Every cell draws its data from a seed derived from the experiment seed and
//! the cell position, and every baseline from a second derived seed. Both are
//! stored in the report summary, so each residual can be recomputed.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::{detect_jump, gen_synthetic_parts, NoiseConvention, SyntheticSpec};
use crate::error::{Error, Result};
use crate::matio::{read_matrix, MatrixFormat};
use crate::matrix::{frobenius_norm, DenseMatrix};
use crate::nmf::{nmf_residual_curve, nmf_solve, reorder_components, NmfAlgorithm, NmfConfig};
use crate::report::{CurveEntry, ExperimentReport, MethodStats, SpectrumEntry};
use crate::rng::RandomSource;
use crate::solver::{nlrm_solve, residual_curve, NlrmConfig, NlrmResult};
use crate::svd::svd_full;

pub const NLRM: &str = "NLRM";

pub const NOISE_LEVELS: [f64; 4] = [0.0, 0.001, 0.005, 0.01];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Table1,
    Table4,
    FaceStyle,
    Figure1,
    Figure23,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Table1,
        Suite::Table4,
        Suite::FaceStyle,
        Suite::Figure1,
        Suite::Figure23,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table4 => "table4",
            Suite::FaceStyle => "face-style",
            Suite::Figure1 => "figure1",
            Suite::Figure23 => "figure23",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::contract(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        }
    }

    fn default_restarts(self) -> usize {
        match self {
            Scale::Desk => 5,
            Scale::Full => 10,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::contract(format!("unknown scale '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub suite: Suite,
    pub scale: Scale,
    pub seed: u64,
    pub convention: NoiseConvention,
    /// Input matrix of the face-style suite.
    pub input: Option<PathBuf>,
    /// Overrides the scale's restart count.
    pub restarts: Option<usize>,
    /// Overrides the table4 instance count (10).
    pub instances: Option<usize>,
    /// Restricts synthetic suites to these input sizes.
    pub dims: Option<Vec<(usize, usize)>>,
    pub algorithms: Vec<NmfAlgorithm>,
    pub nmf_max_iter: usize,
    /// Overrides `nmf_max_iter` for multiplicative updates, whose iterations
    /// are much cheaper and slower to converge than the others'.
    pub mu_max_iter: Option<usize>,
    pub nmf_tol: f64,
    pub nlrm_tol: f64,
    pub nlrm_max_iter: usize,
}

impl ExperimentOptions {
    pub fn new(suite: Suite, scale: Scale, seed: u64) -> Self {
        Self {
            suite,
            scale,
            seed,
            convention: NoiseConvention::Variance,
            input: None,
            restarts: None,
            instances: None,
            dims: None,
            algorithms: NmfAlgorithm::ALL.to_vec(),
            nmf_max_iter: 500,
            mu_max_iter: None,
            nmf_tol: 1e-9,
            nlrm_tol: NlrmConfig::DEFAULT_TOL,
            nlrm_max_iter: NlrmConfig::DEFAULT_MAX_ITER,
        }
    }

    pub fn restarts(&self) -> usize {
        let r = self
            .restarts
            .unwrap_or_else(|| self.scale.default_restarts());
        match self.scale {
            Scale::Desk => r.min(5),
            Scale::Full => r,
        }
    }

    pub fn mu_max_iter(&self) -> usize {
        self.mu_max_iter.unwrap_or(self.nmf_max_iter)
    }

    fn keeps(&self, m: usize, n: usize) -> bool {
        self.dims.as_ref().map_or(true, |d| d.contains(&(m, n)))
    }

    fn validate(&self) -> Result<()> {
        if self.restarts() == 0 {
            return Err(Error::contract("restarts must be at least 1"));
        }
        if self.nmf_max_iter == 0 || self.mu_max_iter() == 0 {
            return Err(Error::contract("NMF iteration budgets must be at least 1"));
        }
        if self.instances == Some(0) {
            return Err(Error::contract("instances must be at least 1"));
        }
        if self.suite == Suite::FaceStyle && self.input.is_none() {
            return Err(Error::contract(
                "the face-style suite needs an input matrix",
            ));
        }
        Ok(())
    }
}

pub fn run_experiment(opts: &ExperimentOptions) -> Result<ExperimentReport> {
    opts.validate()?;
    let mut h = Harness::new(opts);
    match opts.suite {
        Suite::Table1 => table1(&mut h)?,
        Suite::Table4 => table4(&mut h)?,
        Suite::FaceStyle => face_style(&mut h)?,
        Suite::Figure1 => figure1(&mut h)?,
        Suite::Figure23 => figure23(&mut h)?,
    }
    Ok(h.report)
}

struct Harness<'a> {
    opts: &'a ExperimentOptions,
    root: RandomSource,
    report: ExperimentReport,
}

impl<'a> Harness<'a> {
    fn new(opts: &'a ExperimentOptions) -> Self {
        let mut report = ExperimentReport::new(opts.suite.name(), opts.seed);
        report.echo("scale", opts.scale);
        report.echo("noise_convention", opts.convention);
        report.echo("restarts", opts.restarts());
        report.echo(
            "algorithms",
            opts.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>(),
        );
        report.echo("nmf_max_iter", opts.nmf_max_iter);
        report.echo("mu_max_iter", opts.mu_max_iter());
        report.echo("nmf_tol", opts.nmf_tol);
        report.echo("nlrm_tol", opts.nlrm_tol);
        report.echo("nlrm_max_iter", opts.nlrm_max_iter);
        if let Some(dims) = &opts.dims {
            report.echo("dims", dims);
        }
        Self {
            opts,
            root: RandomSource::new(opts.seed).derive(&[opts.suite.tag()]),
            report,
        }
    }

    fn seed_for(&self, path: &[u64]) -> u64 {
        self.root.derive(path).next_u64()
    }

    fn synthetic(&mut self, cell: &str, spec: SyntheticSpec) -> Result<DenseMatrix> {
        let parts = gen_synthetic_parts(&spec)?;
        let a = parts.combined();
        self.report.note(&format!("{cell}/data_seed"), spec.seed);
        if spec.noise_level > 0.0 {
            self.report.note(
                &format!("{cell}/noise_floor"),
                frobenius_norm(&parts.noise) / frobenius_norm(&a),
            );
        }
        Ok(a)
    }

    fn nlrm(&mut self, cell: &str, a: &DenseMatrix, rank: usize) -> Result<NlrmResult> {
        let cfg = NlrmConfig::new(rank)?
            .with_tol(self.opts.nlrm_tol)
            .with_max_iter(self.opts.nlrm_max_iter)
            .with_history(false);
        let res = nlrm_solve(a, &cfg)?;
        let residual = res.relative_residual(a)?;
        self.report.methods.push(MethodStats::from_residuals(
            cell,
            NLRM,
            vec![residual],
            vec![res.iterations],
        ));
        if !res.converged {
            self.report.note(&format!("{cell}/{NLRM}/converged"), false);
        }
        Ok(res)
    }

    /// Runs every baseline; returns the best-restart residual of each one that
    /// could run, and optionally its reordered residual curve.
    fn baselines(
        &mut self,
        cell: &str,
        a: &DenseMatrix,
        rank: usize,
        seed_path: &[u64],
        with_curves: bool,
    ) -> Result<Vec<(NmfAlgorithm, f64)>> {
        let mut best = Vec::new();
        for (idx, &algo) in self.opts.algorithms.clone().iter().enumerate() {
            let mut path = seed_path.to_vec();
            path.push(1000 + idx as u64);
            let seed = self.seed_for(&path);
            let key = format!("{cell}/{}", algo.name());
            if algo == NmfAlgorithm::Mu && a.min_value() < 0.0 {
                self.report
                    .note(&format!("{key}/skipped"), "negative input entries");
                continue;
            }
            let cfg = NmfConfig::new(rank, algo)
                .with_restarts(self.opts.restarts())
                .with_max_iter(match algo {
                    NmfAlgorithm::Mu => self.opts.mu_max_iter(),
                    _ => self.opts.nmf_max_iter,
                })
                .with_tol(self.opts.nmf_tol)
                .with_seed(seed);
            let res = nmf_solve(a, &cfg)?;
            self.report.note(&format!("{key}/nmf_seed"), seed);
            self.report.methods.push(MethodStats::from_residuals(
                cell,
                algo.name(),
                res.per_restart_residuals.clone(),
                res.iterations.clone(),
            ));
            if with_curves {
                let points = nmf_residual_curve(a, &reorder_components(&res))?;
                self.report.curves.push(CurveEntry {
                    cell: cell.into(),
                    method: algo.name().into(),
                    points,
                });
            }
            best.push((algo, res.min_residual()));
        }
        Ok(best)
    }

    fn nlrm_curve(&mut self, cell: &str, a: &DenseMatrix, res: &NlrmResult) -> Result<()> {
        let points = residual_curve(a, res)?;
        self.report.curves.push(CurveEntry {
            cell: cell.into(),
            method: NLRM.into(),
            points,
        });
        Ok(())
    }
}

fn dims_label(m: usize, n: usize) -> String {
    format!("{m}x{n}")
}

fn noise_label(v: f64) -> String {
    format!("v={v}")
}

fn table1_plan(scale: Scale) -> Vec<(usize, usize, Vec<usize>)> {
    match scale {
        Scale::Desk => vec![(100, 80, vec![10, 20, 40]), (200, 160, vec![20])],
        Scale::Full => vec![
            (100, 80, vec![10, 20, 40]),
            (200, 160, vec![10, 20, 40]),
            (500, 400, vec![10, 20, 40]),
        ],
    }
}

/// Planted-rank inputs at each noise level, approximated at the planted rank.
fn table1(h: &mut Harness) -> Result<()> {
    let plan = table1_plan(h.opts.scale);
    h.report.echo("plan", &plan);
    h.report.echo("noise_levels", NOISE_LEVELS);
    for (d, (m, n, ranks)) in plan.into_iter().enumerate() {
        if !h.opts.keeps(m, n) {
            continue;
        }
        for (ri, r) in ranks.into_iter().enumerate() {
            let data_seed = h.seed_for(&[d as u64, ri as u64]);
            for (vi, v) in NOISE_LEVELS.into_iter().enumerate() {
                let cell = format!("{}/r={r}/{}", dims_label(m, n), noise_label(v));
                let spec = SyntheticSpec::planted(m, n, r, data_seed)
                    .with_noise(v)
                    .with_convention(h.opts.convention);
                let a = h.synthetic(&cell, spec)?;
                h.nlrm(&cell, &a, r)?;
                h.baselines(&cell, &a, r, &[d as u64, ri as u64, vi as u64], false)?;
            }
        }
    }
    Ok(())
}

fn table4_plan(scale: Scale) -> Vec<(usize, usize)> {
    match scale {
        Scale::Desk => vec![(100, 80)],
        Scale::Full => vec![(100, 80), (200, 160), (500, 400)],
    }
}

pub const TABLE4_RANKS: [usize; 3] = [10, 20, 40];

/// Uniform full-rank inputs. Per-instance cells hold every restart; the
/// aggregate cell `MxN/r=R` holds one value per instance (best restart for
/// baselines).
fn table4(h: &mut Harness) -> Result<()> {
    let plan = table4_plan(h.opts.scale);
    let instances = h.opts.instances.unwrap_or(10);
    h.report.echo("plan", &plan);
    h.report.echo("ranks", TABLE4_RANKS);
    h.report.echo("instances", instances);
    for (d, (m, n)) in plan.into_iter().enumerate() {
        if !h.opts.keeps(m, n) {
            continue;
        }
        for (ri, r) in TABLE4_RANKS.into_iter().enumerate() {
            let agg = format!("{}/r={r}", dims_label(m, n));
            let mut nlrm_vals = Vec::new();
            let mut nlrm_iters = Vec::new();
            let mut best: Vec<(NmfAlgorithm, Vec<f64>)> = Vec::new();
            for inst in 0..instances {
                let cell = format!("{agg}/instance={inst}");
                let data_seed = h.seed_for(&[d as u64, inst as u64]);
                let a = h.synthetic(&cell, SyntheticSpec::uniform(m, n, data_seed))?;
                let res = h.nlrm(&cell, &a, r)?;
                nlrm_vals.push(res.relative_residual(&a)?);
                nlrm_iters.push(res.iterations);
                for (algo, v) in
                    h.baselines(&cell, &a, r, &[d as u64, ri as u64, inst as u64], false)?
                {
                    match best.iter_mut().find(|(x, _)| *x == algo) {
                        Some((_, vals)) => vals.push(v),
                        None => best.push((algo, vec![v])),
                    }
                }
            }
            h.report.methods.push(MethodStats::from_residuals(
                &agg, NLRM, nlrm_vals, nlrm_iters,
            ));
            for (algo, vals) in best {
                h.report.methods.push(MethodStats::from_residuals(
                    &agg,
                    algo.name(),
                    vals,
                    Vec::new(),
                ));
            }
        }
    }
    Ok(())
}

fn face_ranks(scale: Scale) -> Vec<usize> {
    match scale {
        Scale::Desk => vec![20, 40],
        Scale::Full => vec![20, 40, 60, 80],
    }
}

/// A caller-supplied nonnegative matrix at several ranks, with curves.
fn face_style(h: &mut Harness) -> Result<()> {
    let path = h.opts.input.clone().expect("validated");
    let a = read_matrix(&path, MatrixFormat::from_path(&path))?;
    let k = a.rows().min(a.cols());
    let mut ranks: Vec<usize> = face_ranks(h.opts.scale)
        .into_iter()
        .filter(|&r| r <= k)
        .collect();
    if h.opts.scale == Scale::Full {
        ranks.push(k);
    }
    if ranks.is_empty() {
        return Err(Error::contract(format!(
            "input has min dimension {k}, below every suite rank"
        )));
    }
    ranks.dedup();
    h.report.echo("input", path.display().to_string());
    h.report.echo("dims", [a.rows(), a.cols()]);
    h.report.echo("ranks", &ranks);
    for (ri, r) in ranks.into_iter().enumerate() {
        let cell = format!("{}/r={r}", dims_label(a.rows(), a.cols()));
        let res = h.nlrm(&cell, &a, r)?;
        h.nlrm_curve(&cell, &a, &res)?;
        h.baselines(&cell, &a, r, &[ri as u64], true)?;
    }
    Ok(())
}

fn figure1_plan(scale: Scale) -> Vec<(usize, usize, usize, usize)> {
    let mut plan = vec![(100, 80, 10, 20), (200, 160, 20, 30)];
    if scale == Scale::Full {
        plan.push((500, 400, 40, 50));
    }
    plan
}

/// Spectra of planted-rank inputs and of their over-ranked approximations.
fn figure1(h: &mut Harness) -> Result<()> {
    let plan = figure1_plan(h.opts.scale);
    h.report.echo("plan", &plan);
    h.report.echo("noise_levels", NOISE_LEVELS);
    for (d, (m, n, k, r)) in plan.into_iter().enumerate() {
        if !h.opts.keeps(m, n) {
            continue;
        }
        let data_seed = h.seed_for(&[d as u64]);
        for v in NOISE_LEVELS {
            let cell = format!("{}/k={k}/r={r}/{}", dims_label(m, n), noise_label(v));
            let spec = SyntheticSpec::planted(m, n, k, data_seed)
                .with_noise(v)
                .with_convention(h.opts.convention);
            let a = h.synthetic(&cell, spec)?;
            let res = h.nlrm(&cell, &a, r)?;
            let input_sigma = svd_full(&a)?.sigma;
            for (source, sigma) in [("A", input_sigma), ("X", res.svd_of_x.sigma.clone())] {
                h.report.spectra.push(SpectrumEntry {
                    cell: cell.clone(),
                    source: source.into(),
                    spectrum: detect_jump(&sigma)?,
                });
            }
        }
    }
    Ok(())
}

fn figure23_plan(scale: Scale) -> Vec<(usize, usize, Vec<usize>)> {
    match scale {
        Scale::Desk => vec![(100, 80, vec![20, 80]), (200, 160, vec![50])],
        Scale::Full => vec![
            (100, 80, vec![20, 80]),
            (200, 160, vec![50, 160]),
            (500, 400, vec![100, 400]),
        ],
    }
}

/// Partial-sum residual curves on uniform inputs, NLRM against reordered
/// baselines.
fn figure23(h: &mut Harness) -> Result<()> {
    let plan = figure23_plan(h.opts.scale);
    h.report.echo("plan", &plan);
    for (d, (m, n, ranks)) in plan.into_iter().enumerate() {
        if !h.opts.keeps(m, n) {
            continue;
        }
        let data_seed = h.seed_for(&[d as u64]);
        let a = gen_synthetic_parts(&SyntheticSpec::uniform(m, n, data_seed))?.clean;
        for (ri, r) in ranks.into_iter().enumerate() {
            let cell = format!("{}/r={r}", dims_label(m, n));
            h.report.note(&format!("{cell}/data_seed"), data_seed);
            let res = h.nlrm(&cell, &a, r)?;
            h.nlrm_curve(&cell, &a, &res)?;
            h.baselines(&cell, &a, r, &[d as u64, ri as u64], true)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(suite: Suite) -> ExperimentOptions {
        let mut o = ExperimentOptions::new(suite, Scale::Desk, 3);
        o.restarts = Some(1);
        o.nmf_max_iter = 5;
        o
    }

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("table9".parse::<Suite>().is_err());
        assert_eq!("full".parse::<Scale>().unwrap(), Scale::Full);
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn desk_caps_restarts() {
        let mut o = ExperimentOptions::new(Suite::Table1, Scale::Desk, 0);
        assert_eq!(o.restarts(), 5);
        o.restarts = Some(10);
        assert_eq!(o.restarts(), 5);
        o.scale = Scale::Full;
        assert_eq!(o.restarts(), 10);
    }

    #[test]
    fn face_style_needs_input() {
        assert!(run_experiment(&quick(Suite::FaceStyle)).is_err());
    }

    #[test]
    fn table4_schema_has_one_triple_per_method_and_rank() {
        let mut o = quick(Suite::Table4);
        o.instances = Some(2);
        let report = run_experiment(&o).unwrap();
        for r in TABLE4_RANKS {
            let cell = format!("100x80/r={r}");
            for method in ["NLRM", "MU", "HALS", "PG"] {
                let stats = report.method(&cell, method).unwrap();
                assert_eq!(stats.residuals.len(), 2);
                assert!(stats.min <= stats.mean && stats.mean <= stats.max);
            }
        }
    }

    #[test]
    fn residuals_are_recomputable_from_seeds() {
        let mut o = quick(Suite::Table4);
        o.instances = Some(1);
        let report = run_experiment(&o).unwrap();
        let cell = "100x80/r=10/instance=0";
        let data_seed = report.summary[&format!("{cell}/data_seed")]
            .as_u64()
            .unwrap();
        let a = gen_synthetic_parts(&SyntheticSpec::uniform(100, 80, data_seed))
            .unwrap()
            .clean;
        let nlrm = nlrm_solve(&a, &NlrmConfig::new(10).unwrap()).unwrap();
        assert_eq!(
            report.method(cell, NLRM).unwrap().residuals,
            [nlrm.relative_residual(&a).unwrap()]
        );
        let seed = report.summary[&format!("{cell}/HALS/nmf_seed")]
            .as_u64()
            .unwrap();
        let cfg = NmfConfig::new(10, NmfAlgorithm::Hals)
            .with_restarts(1)
            .with_max_iter(5)
            .with_seed(seed);
        assert_eq!(
            report.method(cell, "HALS").unwrap().residuals,
            nmf_solve(&a, &cfg).unwrap().per_restart_residuals
        );
    }
}
