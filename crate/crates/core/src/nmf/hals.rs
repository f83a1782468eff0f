use super::{random_factor, Updater};
use crate::matrix::{axpy, dot, matmul_nt, matmul_tn, DenseMatrix};
use crate::rng::RandomSource;

/// A component whose update denominator falls to this is reseeded.
const DEAD_COMPONENT: f64 = 1e-16;

/// Hierarchical ALS: exact nonnegative minimization over one row of `C`
/// (then one column of `B`) at a time.
pub(super) struct Hals {
    reseed_scale: f64,
}

impl Hals {
    pub(super) fn new(reseed_scale: f64) -> Self {
        Self { reseed_scale }
    }
}

impl Updater for Hals {
    fn update(
        &mut self,
        a: &DenseMatrix,
        b: &mut DenseMatrix,
        c: &mut DenseMatrix,
        rng: &mut RandomSource,
    ) {
        let r = b.cols();
        let (m, n) = a.shape();

        let mut bta = matmul_tn(b, a);
        let mut btb = matmul_tn(b, b);
        for k in 0..r {
            if btb.get(k, k) <= DEAD_COMPONENT {
                // Drop the component's contribution, then give B(:, k) fresh support.
                c.row_mut(k).iter_mut().for_each(|v| *v = 0.0);
                let fresh = random_factor(rng, m, 1, self.reseed_scale);
                for i in 0..m {
                    b.set(i, k, fresh.get(i, 0));
                }
                refresh_gram_column(b, a, k, &mut bta, &mut btb);
            }
            let denom = btb.get(k, k);
            // C(k, :) + (BᵀA(k, :) − BᵀB(k, :) C) / BᵀB(k, k), clipped
            let mut row = bta.row(k).to_vec();
            for t in 0..r {
                axpy(-btb.get(k, t), c.row(t), &mut row);
            }
            for (v, &old) in row.iter_mut().zip(c.row(k)) {
                *v = (old + *v / denom).max(0.0);
            }
            c.row_mut(k).copy_from_slice(&row);
        }

        let mut act = matmul_nt(a, c);
        let mut cct = matmul_nt(c, c);
        for k in 0..r {
            if cct.get(k, k) <= DEAD_COMPONENT {
                for i in 0..m {
                    b.set(i, k, 0.0);
                }
                let fresh = random_factor(rng, 1, n, self.reseed_scale);
                c.row_mut(k).copy_from_slice(fresh.row(0));
                refresh_row_gram(c, a, k, &mut act, &mut cct);
            }
            let denom = cct.get(k, k);
            let cct_k = cct.column(k);
            for i in 0..m {
                let s = act.get(i, k) - dot(b.row(i), &cct_k);
                let v = (b.get(i, k) + s / denom).max(0.0);
                b.set(i, k, v);
            }
        }
    }
}

/// Recomputes row `k` of `BᵀA` and row/column `k` of `BᵀB` after `B(:, k)` changed.
fn refresh_gram_column(
    b: &DenseMatrix,
    a: &DenseMatrix,
    k: usize,
    bta: &mut DenseMatrix,
    btb: &mut DenseMatrix,
) {
    let bk = b.column(k);
    for j in 0..a.cols() {
        let s: f64 = (0..a.rows()).map(|i| bk[i] * a.get(i, j)).sum();
        bta.set(k, j, s);
    }
    for t in 0..b.cols() {
        let s: f64 = (0..b.rows()).map(|i| bk[i] * b.get(i, t)).sum();
        btb.set(k, t, s);
        btb.set(t, k, s);
    }
}

/// Recomputes column `k` of `ACᵀ` and row/column `k` of `CCᵀ` after `C(k, :)` changed.
fn refresh_row_gram(
    c: &DenseMatrix,
    a: &DenseMatrix,
    k: usize,
    act: &mut DenseMatrix,
    cct: &mut DenseMatrix,
) {
    let ck = c.row(k);
    for i in 0..a.rows() {
        act.set(i, k, dot(a.row(i), ck));
    }
    for t in 0..c.rows() {
        let s = dot(c.row(t), ck);
        cct.set(k, t, s);
        cct.set(t, k, s);
    }
}
