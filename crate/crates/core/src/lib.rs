//! Nonnegative low-rank matrix approximation.
//!
//! [`nlrm_solve`] alternates between the nearest rank-`r` matrix (truncated
//! SVD) and the nearest nonnegative matrix (clipping), starting from the input.
//! The [`nmf`] module provides factorization baselines for comparison, and
//! [`experiment`] runs the seeded comparison suites behind the `nlrm` binary.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod matio;
pub mod matrix;
pub mod nmf;
pub mod project;
pub mod report;
pub mod rng;
pub mod solver;
pub mod svd;

pub use datagen::{detect_jump, gen_synthetic, NoiseConvention, SpectrumReport, SyntheticSpec};
pub use error::{Error, Result};
pub use matio::{read_matrix, write_matrix, MatrixFormat};
pub use matrix::{frobenius_distance, frobenius_norm, matmul, relative_residual, DenseMatrix};
pub use nmf::{nmf_solve, NmfAlgorithm, NmfConfig, NmfResult};
pub use project::{project_nonneg, project_rank, RankConstraint};
pub use report::{parse_report, write_report, ExperimentReport};
pub use rng::RandomSource;
pub use solver::{nlrm_solve, partial_reconstruction, residual_curve, NlrmConfig, NlrmResult};
pub use svd::{numerical_rank, svd_full, svd_truncated, SvdResult};
