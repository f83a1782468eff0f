//! Projections onto the fixed-rank set and the nonnegative orthant.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::svd::{svd_truncated, svd_warm, warm_factor, SvdResult};

/// Clipped values smaller than this in magnitude are flushed to zero.
const FLUSH_BELOW: f64 = 1e-300;

/// Target rank `r` of a fixed-rank projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankConstraint(usize);

impl RankConstraint {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::contract("target rank must be at least 1"));
        }
        Ok(Self(r))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn check_fits(self, a: &DenseMatrix) -> Result<()> {
        let k = a.rows().min(a.cols());
        if self.0 > k {
            return Err(Error::contract(format!(
                "target rank {} exceeds min dimension {k} of a {}x{} matrix",
                self.0,
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }
}

/// Nearest matrix of rank at most `r`: the truncated SVD sum.
///
/// When `sigma_r == sigma_{r+1}` the nearest point is not unique; the member
/// picked is the one selected by the SVD tie-break.
pub fn project_rank(a: &DenseMatrix, c: RankConstraint) -> Result<DenseMatrix> {
    c.check_fits(a)?;
    Ok(svd_truncated(a, c.get())?.reconstruct())
}

/// Rank projection that also returns the full SVD it was built from,
/// optionally warm-started from the decomposition of a nearby matrix.
pub(crate) fn project_rank_with_svd(
    a: &DenseMatrix,
    c: RankConstraint,
    previous: Option<&SvdResult>,
) -> Result<(DenseMatrix, SvdResult)> {
    c.check_fits(a)?;
    let full = svd_warm(a, previous.map(warm_factor))?;
    let projected = full.reconstruct_leading(c.get());
    Ok((projected, full))
}

/// Entrywise `max(a_ij, 0)`.
pub fn project_nonneg(a: &DenseMatrix) -> DenseMatrix {
    a.map(|v| if v < FLUSH_BELOW { 0.0 } else { v })
}
