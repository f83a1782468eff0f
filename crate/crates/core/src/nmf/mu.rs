use super::Updater;
use crate::matrix::{matmul, matmul_nt, matmul_tn, DenseMatrix};
use crate::rng::RandomSource;

/// Denominators are floored here to avoid division by zero.
const DENOMINATOR_FLOOR: f64 = 1e-16;
/// Entries driven below this are flushed to zero. Multiplicative updates
/// otherwise creep into subnormal range, where arithmetic is very slow.
const FLUSH_BELOW: f64 = 1e-150;
/// Inner repetitions allowed per unit of relative product cost.
const REPEAT_FACTOR: f64 = 2.0;
/// Inner repetitions stop once a step is this small relative to the first.
const REPEAT_SHRINK: f64 = 0.1;

/// Lee–Seung multiplicative updates for the Frobenius objective.
///
/// With acceleration each factor is updated several times against the same
/// precomputed products (Gillis–Glineur), which is cheap because forming
/// `Bᵀ A` dominates the cost of an update. Every inner step is an ordinary
/// multiplicative update, so the objective stays monotone.
pub(super) struct MultiplicativeUpdate {
    repeats_b: usize,
    repeats_c: usize,
}

impl MultiplicativeUpdate {
    pub(super) fn new(m: usize, n: usize, r: usize, accelerate: bool) -> Self {
        if !accelerate {
            return Self {
                repeats_b: 1,
                repeats_c: 1,
            };
        }
        let repeats = |own: usize| {
            let rho = 1.0 + ((m + n) * r) as f64 / (own * (r + 1)) as f64;
            (1.0 + REPEAT_FACTOR * rho).floor() as usize
        };
        Self {
            repeats_b: repeats(m),
            repeats_c: repeats(n),
        }
    }
}

impl Updater for MultiplicativeUpdate {
    fn update(
        &mut self,
        a: &DenseMatrix,
        b: &mut DenseMatrix,
        c: &mut DenseMatrix,
        _rng: &mut RandomSource,
    ) {
        // C <- C .* (Bᵀ A) ./ (Bᵀ B C)
        let numer = matmul_tn(b, a);
        let gram = matmul_tn(b, b);
        repeat(self.repeats_c, c, |c| {
            let denom = matmul(&gram, c).expect("factor shapes agree");
            scale_by_ratio(c, &numer, &denom)
        });

        // B <- B .* (A Cᵀ) ./ (B C Cᵀ)
        let numer = matmul_nt(a, c);
        let gram = matmul_nt(c, c);
        repeat(self.repeats_b, b, |b| {
            let denom = matmul(b, &gram).expect("factor shapes agree");
            scale_by_ratio(b, &numer, &denom)
        });
    }
}

fn repeat(max: usize, x: &mut DenseMatrix, mut step: impl FnMut(&mut DenseMatrix) -> f64) {
    let first = step(x);
    for _ in 1..max {
        // steps report squared norms
        if step(x) <= REPEAT_SHRINK * REPEAT_SHRINK * first {
            break;
        }
    }
}

/// Applies the update and returns the squared Frobenius norm of the change.
fn scale_by_ratio(x: &mut DenseMatrix, numer: &DenseMatrix, denom: &DenseMatrix) -> f64 {
    let mut change = 0.0;
    for ((v, &n), &d) in x
        .as_mut_slice()
        .iter_mut()
        .zip(numer.as_slice())
        .zip(denom.as_slice())
    {
        let mut next = *v * (n / d.max(DENOMINATOR_FLOOR));
        if next < FLUSH_BELOW {
            next = 0.0;
        }
        change += (next - *v) * (next - *v);
        *v = next;
    }
    change
}
