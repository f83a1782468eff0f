//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The decomposition always runs on the taller orientation; wide inputs are
//! transposed and the factors swapped back. Inputs with at least twice as many
//! rows as columns are first reduced by a Householder QR so the rotations act
//! on the small triangular factor.

use crate::error::{Error, Result};
use crate::matrix::{dot, matmul, DenseMatrix};

/// Sweep until every column pair has cosine at most this.
pub const ORTHOGONALITY_TOL: f64 = 1e-14;
pub const MAX_SWEEPS: usize = 60;

/// Columns with norm below this are treated as exactly zero: their squared
/// norms would underflow and hide them from the rotations.
const ZERO_COLUMN_NORM: f64 = 1e-150;

/// `A = U diag(sigma) Vᵀ` with `sigma` descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    /// `m x k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative, length `k`.
    pub sigma: Vec<f64>,
    /// `n x k`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Sum of the leading `j` rank-one terms `sigma_i u_i v_iᵀ`.
    pub fn reconstruct_leading(&self, j: usize) -> DenseMatrix {
        assert!(
            j >= 1 && j <= self.len(),
            "component count {j} out of range"
        );
        let (m, n) = (self.u.rows(), self.v.rows());
        // (U_j diag(sigma_j)) * V_jᵀ, row by row
        let mut out = DenseMatrix::zeros(m, n);
        let mut scaled = vec![0.0; j];
        for i in 0..m {
            let u_row = self.u.row(i);
            for t in 0..j {
                scaled[t] = u_row[t] * self.sigma[t];
            }
            let out_row = out.row_mut(i);
            for (c, o) in out_row.iter_mut().enumerate() {
                *o = dot(&scaled, &self.v.row(c)[..j]);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_leading(self.len())
    }

    /// Keeps the leading `r` triplets.
    pub fn truncated(&self, r: usize) -> SvdResult {
        assert!(r >= 1 && r <= self.len());
        SvdResult {
            u: self.u.leading_columns(r),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.leading_columns(r),
        }
    }
}

/// Full thin SVD: `k = min(rows, cols)` triplets.
///
/// Signs are fixed so the largest-magnitude entry of each left singular
/// vector is positive (lowest index on ties). Equal singular values keep the
/// order of the working columns they came from.
pub fn svd_full(a: &DenseMatrix) -> Result<SvdResult> {
    svd_warm(a, None)
}

/// Leading `r` triplets of [`svd_full`].
pub fn svd_truncated(a: &DenseMatrix, r: usize) -> Result<SvdResult> {
    let k = a.rows().min(a.cols());
    if r == 0 || r > k {
        return Err(Error::contract(format!(
            "truncation rank {r} outside 1..={k} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    Ok(svd_full(a)?.truncated(r))
}

/// Number of singular values strictly above `tol * sigma[0]`.
pub fn numerical_rank(s: &SvdResult, tol: f64) -> usize {
    match s.sigma.first() {
        Some(&top) if top > 0.0 => s.sigma.iter().filter(|&&x| x > tol * top).count(),
        _ => 0,
    }
}

/// Orthogonal factor from a previous decomposition of a nearby matrix that
/// seeds the rotations: the right factor for tall inputs, the left for wide.
pub(crate) fn warm_factor(prev: &SvdResult) -> &DenseMatrix {
    if prev.u.rows() >= prev.v.rows() {
        &prev.v
    } else {
        &prev.u
    }
}

/// SVD optionally seeded with a square orthogonal factor (see [`warm_factor`]).
///
/// For any orthogonal `W`, `A W` has the same singular values as `A`; when `W`
/// comes from a nearby matrix the columns of `A W` are nearly orthogonal and
/// the sweeps converge almost immediately.
pub(crate) fn svd_warm(a: &DenseMatrix, start: Option<&DenseMatrix>) -> Result<SvdResult> {
    let tall = a.rows() >= a.cols();
    let oriented;
    let work = if tall {
        a
    } else {
        oriented = a.transpose();
        &oriented
    };
    let start = start.filter(|w| w.rows() == work.cols() && w.cols() == work.cols());
    let TallFactors {
        u_cols,
        sigma,
        v_cols,
    } = tall_svd(work, start)?;

    let (m, n) = work.shape();
    let k = n;
    let u = columns_to_matrix(&u_cols, m, k);
    let v = columns_to_matrix(&v_cols, n, k);
    let (mut u, mut v) = if tall { (u, v) } else { (v, u) };
    fix_signs(&mut u, &mut v);
    Ok(SvdResult { u, sigma, v })
}

struct TallFactors {
    u_cols: Vec<f64>,
    sigma: Vec<f64>,
    v_cols: Vec<f64>,
}

/// `m >= n`. Returns column-major `U` (m x n), `sigma`, column-major `V` (n x n).
fn tall_svd(a: &DenseMatrix, start: Option<&DenseMatrix>) -> Result<TallFactors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);

    let seeded;
    let w = match start {
        Some(s) => {
            seeded = matmul(a, s)?;
            &seeded
        }
        None => a,
    };
    let mut v_cols = match start {
        Some(s) => to_column_major(s),
        None => to_column_major(&DenseMatrix::identity(n)),
    };
    let mut cols = to_column_major(w);

    let qr = if m >= 2 * n {
        let qr = HouseholderQr::factor(&mut cols, m, n);
        cols = qr.r_column_major();
        Some(qr)
    } else {
        None
    };
    let p = if qr.is_some() { n } else { m };

    jacobi_sweeps(&mut cols, p, n, &mut v_cols)?;

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| {
            let c = &cols[j * p..(j + 1) * p];
            dot(c, c).sqrt()
        })
        .collect();
    for s in sigma.iter_mut() {
        if *s < ZERO_COLUMN_NORM {
            *s = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep ascending column index
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u_small = vec![0.0; p * n];
    let mut v_sorted = vec![0.0; n * n];
    let mut sigma_sorted = vec![0.0; n];
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        sigma_sorted[dst] = sigma[src];
        v_sorted[dst * n..(dst + 1) * n].copy_from_slice(&v_cols[src * n..(src + 1) * n]);
        if sigma[src] > 0.0 {
            let inv = 1.0 / sigma[src];
            for (d, s) in u_small[dst * p..(dst + 1) * p]
                .iter_mut()
                .zip(&cols[src * p..(src + 1) * p])
            {
                *d = s * inv;
            }
            filled += 1;
        }
    }
    complete_orthonormal(&mut u_small, p, filled, n);

    let u_cols = match &qr {
        Some(qr) => qr.apply_q(&u_small, n),
        None => u_small,
    };
    Ok(TallFactors {
        u_cols,
        sigma: sigma_sorted,
        v_cols: v_sorted,
    })
}

/// Cyclic one-sided Jacobi on `n` columns of length `p`, accumulating the
/// rotations into the `n` columns of `v` (each of length `n`).
fn jacobi_sweeps(cols: &mut [f64], p: usize, n: usize, v: &mut [f64]) -> Result<()> {
    let nv = v.len() / n.max(1);
    let mut last_off = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        let mut max_off: f64 = 0.0;
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let (head, tail) = cols.split_at_mut(j * p);
                let x = &mut head[i * p..(i + 1) * p];
                let y = &mut tail[..p];
                let (alpha, beta, gamma) = gram3(x, y);
                if alpha == 0.0 || beta == 0.0 || gamma == 0.0 {
                    continue;
                }
                let cosine = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                max_off = max_off.max(cosine);
                if cosine <= ORTHOGONALITY_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(x, y, c, s);
                let (vh, vt) = v.split_at_mut(j * nv);
                rotate(&mut vh[i * nv..(i + 1) * nv], &mut vt[..nv], c, s);
            }
        }
        last_off = max_off;
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_diagonal: last_off,
    })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// `(‖x‖², ‖y‖², x·y)` in one pass.
#[inline]
fn gram3(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut xx = [0.0f64; 4];
    let mut yy = [0.0f64; 4];
    let mut xy = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let (a, b) = (x[4 * c + l], y[4 * c + l]);
            xx[l] += a * a;
            yy[l] += b * b;
            xy[l] += a * b;
        }
    }
    let sum = |v: [f64; 4]| (v[0] + v[1]) + (v[2] + v[3]);
    let (mut sxx, mut syy, mut sxy) = (sum(xx), sum(yy), sum(xy));
    for i in 4 * chunks..x.len() {
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    (sxx, syy, sxy)
}

/// Fills columns `filled..total` of the column-major `p`-row block `q` with
/// unit vectors orthogonal to all previous columns.
fn complete_orthonormal(q: &mut [f64], p: usize, filled: usize, total: usize) {
    for col in filled..total {
        // Standard basis vector with the largest component outside span(q[..col]).
        let mut best = 0;
        let mut best_norm = f64::NEG_INFINITY;
        for t in 0..p {
            let inside: f64 = (0..col).map(|c| q[c * p + t].powi(2)).sum();
            let outside = 1.0 - inside;
            if outside > best_norm {
                best_norm = outside;
                best = t;
            }
        }
        let mut w = vec![0.0; p];
        w[best] = 1.0;
        for _ in 0..2 {
            for c in 0..col {
                let qc = &q[c * p..(c + 1) * p];
                let proj = dot(qc, &w);
                for (wi, &qi) in w.iter_mut().zip(qc) {
                    *wi -= proj * qi;
                }
            }
        }
        let norm = dot(&w, &w).sqrt();
        for (d, wi) in q[col * p..(col + 1) * p].iter_mut().zip(&w) {
            *d = wi / norm;
        }
    }
}

/// Flips singular pairs so the largest-magnitude entry of each `u_i` is positive.
fn fix_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    let k = u.cols();
    for j in 0..k {
        let mut idx = 0;
        let mut best = -1.0;
        for i in 0..u.rows() {
            let a = u.get(i, j).abs();
            if a > best {
                best = a;
                idx = i;
            }
        }
        if u.get(idx, j) < 0.0 {
            for i in 0..u.rows() {
                u.set(i, j, -u.get(i, j));
            }
            for i in 0..v.rows() {
                v.set(i, j, -v.get(i, j));
            }
        }
    }
}

fn to_column_major(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for (j, &x) in a.row(i).iter().enumerate() {
            out[j * m + i] = x;
        }
    }
    out
}

fn columns_to_matrix(cols: &[f64], rows: usize, ncols: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, ncols);
    for j in 0..ncols {
        for i in 0..rows {
            out.set(i, j, cols[j * rows + i]);
        }
    }
    out
}

/// Householder QR of a column-major `m x n` block, `m >= n`.
struct HouseholderQr {
    m: usize,
    n: usize,
    /// Column-major factored block: R on and above the diagonal.
    packed: Vec<f64>,
    /// Reflector `j` acts on rows `j..m`; stored unnormalized with its `beta`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl HouseholderQr {
    fn factor(cols: &mut [f64], m: usize, n: usize) -> Self {
        let mut reflectors = Vec::with_capacity(n);
        for j in 0..n {
            let x = &cols[j * m + j..(j + 1) * m];
            let norm = dot(x, x).sqrt();
            if norm == 0.0 {
                reflectors.push((vec![0.0; m - j], 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut w = x.to_vec();
            w[0] -= alpha;
            let wnorm2 = dot(&w, &w);
            let beta = if wnorm2 == 0.0 { 0.0 } else { 2.0 / wnorm2 };
            cols[j * m + j] = alpha;
            for r in (j + 1)..m {
                cols[j * m + r] = 0.0;
            }
            for c in (j + 1)..n {
                let col = &mut cols[c * m + j..(c + 1) * m];
                let proj = beta * dot(&w, col);
                for (ci, wi) in col.iter_mut().zip(&w) {
                    *ci -= proj * wi;
                }
            }
            reflectors.push((w, beta));
        }
        Self {
            m,
            n,
            packed: cols.to_vec(),
            reflectors,
        }
    }

    fn r_column_major(&self) -> Vec<f64> {
        let n = self.n;
        let mut r = vec![0.0; n * n];
        for c in 0..n {
            for row in 0..=c {
                r[c * n + row] = self.packed[c * self.m + row];
            }
        }
        r
    }

    /// `Q * [small; 0]` for a column-major `n x k` block, returning `m x k`.
    fn apply_q(&self, small: &[f64], k: usize) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0.0; m * k];
        for c in 0..k {
            out[c * m..c * m + n].copy_from_slice(&small[c * n..(c + 1) * n]);
        }
        for (j, (w, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            for c in 0..k {
                let col = &mut out[c * m + j..(c + 1) * m];
                let proj = beta * dot(w, col);
                for (ci, wi) in col.iter_mut().zip(w) {
                    *ci -= proj * wi;
                }
            }
        }
        out
    }
}
