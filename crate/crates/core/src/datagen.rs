//! Synthetic test matrices and singular-value jump detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{matmul, DenseMatrix};
use crate::rng::{gaussian_matrix, uniform_matrix, RandomSource};

/// How the noise level of a [`SyntheticSpec`] is interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseConvention {
    /// The level is the variance of each noise entry.
    #[default]
    Variance,
    /// The level is the standard deviation of each noise entry.
    StdDev,
}

impl NoiseConvention {
    pub fn variance_of(self, level: f64) -> f64 {
        match self {
            NoiseConvention::Variance => level,
            NoiseConvention::StdDev => level * level,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    /// Planted rank; `None` gives a full-rank uniform matrix.
    pub actual_rank: Option<usize>,
    pub noise_level: f64,
    pub noise_convention: NoiseConvention,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn planted(m: usize, n: usize, rank: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            actual_rank: Some(rank),
            noise_level: 0.0,
            noise_convention: NoiseConvention::Variance,
            seed,
        }
    }

    pub fn uniform(m: usize, n: usize, seed: u64) -> Self {
        Self {
            actual_rank: None,
            ..Self::planted(m, n, 1, seed)
        }
    }

    pub fn with_noise(mut self, level: f64) -> Self {
        self.noise_level = level;
        self
    }

    pub fn with_convention(mut self, convention: NoiseConvention) -> Self {
        self.noise_convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::contract("dimensions must be positive"));
        }
        if let Some(k) = self.actual_rank {
            if k == 0 || k > self.m.min(self.n) {
                return Err(Error::contract(format!(
                    "planted rank {k} outside 1..={}",
                    self.m.min(self.n)
                )));
            }
        }
        if !self.noise_level.is_finite() || self.noise_level < 0.0 {
            return Err(Error::contract(
                "noise level must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

/// The clean part and the noise of a generated matrix.
#[derive(Clone, Debug)]
pub struct SyntheticParts {
    pub clean: DenseMatrix,
    pub noise: DenseMatrix,
}

impl SyntheticParts {
    pub fn combined(&self) -> DenseMatrix {
        self.clean.add(&self.noise).expect("same shape")
    }
}

/// `A = B C + E` with `B, C` uniform on `[0, 1)` (or `A` uniform when no rank
/// is planted) and Gaussian `E`. Noise may make entries negative; they are kept.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    Ok(gen_synthetic_parts(spec)?.combined())
}

/// Same draws as [`gen_synthetic`], with the noise kept separate.
///
/// The clean factors are drawn before the noise from one stream, so specs
/// differing only in noise level share the clean part and scaled copies of
/// the same noise pattern.
pub fn gen_synthetic_parts(spec: &SyntheticSpec) -> Result<SyntheticParts> {
    spec.validate()?;
    let mut rng = RandomSource::new(spec.seed);
    let clean = match spec.actual_rank {
        Some(k) => {
            let b = uniform_matrix(&mut rng, spec.m, k);
            let c = uniform_matrix(&mut rng, k, spec.n);
            matmul(&b, &c)?
        }
        None => uniform_matrix(&mut rng, spec.m, spec.n),
    };
    let variance = spec.noise_convention.variance_of(spec.noise_level);
    let noise = gaussian_matrix(&mut rng, spec.m, spec.n, variance)?;
    Ok(SyntheticParts { clean, noise })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sigma: Vec<f64>,
    /// Number of singular values before the largest consecutive drop.
    pub jump_index: usize,
    /// `sigma[jump_index − 1] / max(sigma[jump_index], floor)`.
    pub jump_ratio: f64,
}

/// Relative floor below which singular values count as zero in ratios.
pub const JUMP_FLOOR: f64 = 1e-15;

/// Locates the largest consecutive ratio `sigma[i−1] / sigma[i]` in a
/// descending spectrum (smallest `i` on ties).
pub fn detect_jump(sigma: &[f64]) -> Result<SpectrumReport> {
    if sigma.len() < 2 {
        return Err(Error::contract(
            "jump detection needs at least two singular values",
        ));
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::contract(
            "singular values must be finite and nonnegative",
        ));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::contract("singular values must be sorted descending"));
    }
    if sigma[0] == 0.0 {
        return Err(Error::degenerate("all-zero spectrum has no jump"));
    }
    let floor = JUMP_FLOOR * sigma[0];
    let mut jump_index = 1;
    let mut jump_ratio = f64::NEG_INFINITY;
    for i in 1..sigma.len() {
        let ratio = sigma[i - 1] / sigma[i].max(floor);
        if ratio > jump_ratio {
            jump_ratio = ratio;
            jump_index = i;
        }
    }
    Ok(SpectrumReport {
        sigma: sigma.to_vec(),
        jump_index,
        jump_ratio,
    })
}
