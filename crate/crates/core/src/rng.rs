//! Seeded random source.
//!
//! Streams come from ChaCha8 keyed by the seed, with the 64-bit ChaCha stream
//! id selecting independent substreams. Uniform and Gaussian draws are built
//! on raw 64-bit words here so the value stream does not depend on any
//! distribution code outside this crate.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Deterministic generator identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            spare_normal: None,
        }
    }

    /// Independent source for a labelled sub-task (restart, trial, cell...).
    ///
    /// The stream id is a splitmix64 fold of the current stream and `path`,
    /// so derivation is reproducible and independent of draw history.
    pub fn derive(&self, path: &[u64]) -> Self {
        let stream = path
            .iter()
            .fold(self.stream, |acc, &p| splitmix64(acc ^ splitmix64(p)));
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Standard normal draw (Marsaglia polar method).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let x = 2.0 * self.uniform() - 1.0;
            let y = 2.0 * self.uniform() - 1.0;
            let s = x * x + y * y;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(y * f);
                return x * f;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with i.i.d. entries uniform on `[0, 1)`, filled row-major.
pub fn uniform_matrix(rng: &mut RandomSource, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.uniform()).collect();
    DenseMatrix::from_raw(rows, cols, data)
}

/// Matrix with i.i.d. `N(0, variance)` entries. Zero variance draws nothing.
pub fn gaussian_matrix(
    rng: &mut RandomSource,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<DenseMatrix> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::contract(format!(
            "variance must be finite and nonnegative, got {variance}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::contract("matrix dimensions must be positive"));
    }
    if variance == 0.0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    let std = variance.sqrt();
    let data = (0..rows * cols)
        .map(|_| std * rng.standard_normal())
        .collect();
    Ok(DenseMatrix::from_raw(rows, cols, data))
}
