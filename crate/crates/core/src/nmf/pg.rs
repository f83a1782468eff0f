use super::Updater;
use crate::matrix::{frobenius_norm, matmul, matmul_nt, matmul_tn, DenseMatrix};
use crate::rng::RandomSource;

const MAX_INNER: usize = 100;
const MAX_STEP_TRIALS: usize = 20;
/// Step shrink/grow factor.
const BETA: f64 = 0.1;
/// Armijo sufficient-decrease parameter.
const SIGMA: f64 = 0.01;

/// Lin's alternating nonnegative least squares with projected-gradient
/// subproblem solves and Armijo step search.
pub(super) struct ProjectedGradient {
    a_t: DenseMatrix,
    tol_b: f64,
    tol_c: f64,
}

impl ProjectedGradient {
    pub(super) fn new(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, tol: f64) -> Self {
        // gradients of ½‖A − BC‖² at the initial guess
        let grad_b = matmul(b, &matmul_nt(c, c))
            .and_then(|x| x.sub(&matmul_nt(a, c)))
            .expect("factor shapes agree");
        let grad_c = matmul(&matmul_tn(b, b), c)
            .and_then(|x| x.sub(&matmul_tn(b, a)))
            .expect("factor shapes agree");
        let init = frobenius_norm(&grad_b).hypot(frobenius_norm(&grad_c));
        let start = tol.max(1e-3) * init;
        Self {
            a_t: a.transpose(),
            tol_b: start,
            tol_c: start,
        }
    }
}

impl Updater for ProjectedGradient {
    fn update(
        &mut self,
        a: &DenseMatrix,
        b: &mut DenseMatrix,
        c: &mut DenseMatrix,
        _rng: &mut RandomSource,
    ) {
        let mut b_t = b.transpose();
        let used = solve_subproblem(&self.a_t, &c.transpose(), &mut b_t, self.tol_b);
        *b = b_t.transpose();
        if used == 1 {
            self.tol_b *= 0.1;
        }
        let used = solve_subproblem(a, b, c, self.tol_c);
        if used == 1 {
            self.tol_c *= 0.1;
        }
    }
}

/// Approximately minimizes `½‖V − W H‖²` over `H >= 0`, starting from `h`.
///
/// Only steps meeting the sufficient-decrease test are accepted, so the
/// subproblem objective never increases. Returns the number of outer
/// iterations used (1 means `h` already met the tolerance).
fn solve_subproblem(v: &DenseMatrix, w: &DenseMatrix, h: &mut DenseMatrix, tol: f64) -> usize {
    let wtv = matmul_tn(w, v);
    let wtw = matmul_tn(w, w);
    let mut alpha = 1.0;
    for iter in 1..=MAX_INNER {
        let grad = matmul(&wtw, h)
            .expect("shapes agree")
            .sub(&wtv)
            .expect("shapes agree");
        if projected_gradient_norm(&grad, h) < tol {
            return iter;
        }
        let mut decreasing = false;
        let mut last_good: Option<DenseMatrix> = None;
        for trial in 0..MAX_STEP_TRIALS {
            let candidate = h
                .sub(&grad.scaled(alpha))
                .expect("shapes agree")
                .map(|x| x.max(0.0));
            let d = candidate.sub(h).expect("shapes agree");
            let grad_d: f64 = grad
                .as_slice()
                .iter()
                .zip(d.as_slice())
                .map(|(g, x)| g * x)
                .sum();
            let wd = matmul(&wtw, &d).expect("shapes agree");
            let d_q_d: f64 = wd
                .as_slice()
                .iter()
                .zip(d.as_slice())
                .map(|(a, b)| a * b)
                .sum();
            let sufficient = (1.0 - SIGMA) * grad_d + 0.5 * d_q_d < 0.0;
            if trial == 0 {
                decreasing = !sufficient;
            }
            if decreasing {
                if sufficient {
                    *h = candidate;
                    break;
                }
                alpha *= BETA;
            } else {
                let stalled = last_good.as_ref() == Some(&candidate);
                if !sufficient || stalled {
                    break;
                }
                alpha /= BETA;
                last_good = Some(candidate);
            }
        }
        if let Some(good) = last_good {
            *h = good;
        }
    }
    MAX_INNER
}

fn projected_gradient_norm(grad: &DenseMatrix, h: &DenseMatrix) -> f64 {
    grad.as_slice()
        .iter()
        .zip(h.as_slice())
        .filter(|(&g, &x)| g < 0.0 || x > 0.0)
        .map(|(g, _)| g * g)
        .sum::<f64>()
        .sqrt()
}
