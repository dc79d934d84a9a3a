use super::config::LossKind;
use crate::scalar::Scalar;

const CLAMP_LO: f64 = 1e-12;
const CLAMP_HI: f64 = 1.0 - 1e-12;

fn clamp<S: Scalar>(p: S) -> (S, bool) {
    let (lo, hi) = (S::of(CLAMP_LO), S::of(CLAMP_HI));
    if p < lo {
        (lo, true)
    } else if p > hi {
        (hi, true)
    } else {
        (p, false)
    }
}

/// Loss of one prediction; predictions are clamped to `[1e-12, 1 - 1e-12]`.
///
/// Categorical: `-sum t log p`. Binary: `-(1/n) sum [t log p + (1-t) log(1-p)]`.
pub fn loss<S: Scalar>(pred: &[S], target: &[S], kind: LossKind) -> S {
    assert_eq!(pred.len(), target.len(), "loss: length mismatch");
    let one = S::one();
    match kind {
        LossKind::Categorical => pred
            .iter()
            .zip(target)
            .filter(|(_, &t)| t != S::zero())
            .map(|(&p, &t)| -t * clamp(p).0.ln())
            .sum(),
        LossKind::Binary => {
            let s: S = pred
                .iter()
                .zip(target)
                .map(|(&p, &t)| {
                    let p = clamp(p).0;
                    t * p.ln() + (one - t) * (one - p).ln()
                })
                .sum();
            -s / S::of(pred.len() as f64)
        }
    }
}

/// `d loss / d pred`, scaled by `scale`, written into `out`. Zero where the
/// clamp is active.
pub fn loss_grad<S: Scalar>(pred: &[S], target: &[S], kind: LossKind, scale: S, out: &mut [S]) {
    let one = S::one();
    let n = S::of(pred.len() as f64);
    for ((o, &p), &t) in out.iter_mut().zip(pred).zip(target) {
        let (p, clamped) = clamp(p);
        *o = if clamped {
            S::zero()
        } else {
            match kind {
                LossKind::Categorical => -t / p,
                LossKind::Binary => -(t / p - (one - t) / (one - p)) / n,
            }
        } * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let t = [0.0, 1.0, 0.0, 0.0];
        assert!(loss(&t, &t, LossKind::Categorical) <= 1e-11);
        assert!(loss(&t, &t, LossKind::Binary) <= 1e-11);
    }

    #[test]
    fn uniform_prediction_values() {
        let p = [0.25f64; 4];
        let t = [1.0, 0.0, 0.0, 0.0];
        assert!((loss(&p, &t, LossKind::Categorical) - 4f64.ln()).abs() < 1e-12);
        let expected = 0.25 * (4f64.ln() + 3.0 * (4.0f64 / 3.0).ln());
        assert!((loss(&p, &t, LossKind::Binary) - expected).abs() < 1e-12);
        assert!((expected - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let p = [0.1f64, 0.6, 0.3];
        let t = [0.0, 1.0, 0.0];
        for kind in [LossKind::Categorical, LossKind::Binary] {
            let mut g = [0.0; 3];
            loss_grad(&p, &t, kind, 1.0, &mut g);
            for i in 0..3 {
                let (mut a, mut b) = (p, p);
                a[i] += 1e-6;
                b[i] -= 1e-6;
                let num = (loss(&a, &t, kind) - loss(&b, &t, kind)) / 2e-6;
                assert!((num - g[i]).abs() < 1e-6, "{kind:?} {i}: {num} vs {}", g[i]);
            }
        }
    }
}
