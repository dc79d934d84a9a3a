//! Matrix exponentials of generator-like matrices (nonnegative off-diagonal).

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("uniformization did not converge within {terms} terms")]
pub struct NonConvergence {
    pub terms: usize,
}

/// Poisson-parameter cap per chunk, keeping `exp(-lambda)` far from underflow.
const MAX_CHUNK: f64 = 30.0;
const TERM_BUDGET: usize = 10_000;

/// Uniformization rate and the stochastic-like matrix `I + q / rate`.
fn uniformize<S: Scalar>(q: &Matrix<S>) -> Option<(f64, Matrix<S>)> {
    let n = q.dim();
    let rate = (0..n)
        .map(|i| (-q.get(i, i)).to_f64_lossy())
        .fold(0.0, f64::max);
    if rate <= 0.0 {
        return None;
    }
    let mut p = q.scaled(S::of(1.0 / rate));
    for i in 0..n {
        p.add_at(i, i, S::one());
    }
    Some((rate, p))
}

/// Runs the Poisson-weighted series for one chunk of length `lambda`.
fn series<T: Clone>(
    start: T,
    lambda: f64,
    tol: f64,
    mut step: impl FnMut(&T) -> T,
    mut axpy: impl FnMut(&mut T, f64, &T),
    zero: T,
) -> Result<T, NonConvergence> {
    let mut term = start;
    let mut weight = (-lambda).exp();
    let mut acc = zero;
    axpy(&mut acc, weight, &term);
    let mut cum = weight;
    let mut k = 0usize;
    while 1.0 - cum > tol {
        k += 1;
        if k > TERM_BUDGET {
            return Err(NonConvergence { terms: TERM_BUDGET });
        }
        term = step(&term);
        weight *= lambda / k as f64;
        axpy(&mut acc, weight, &term);
        cum += weight;
    }
    Ok(acc)
}

fn chunks(lambda_total: f64) -> (usize, f64) {
    let n = (lambda_total / MAX_CHUNK).ceil().max(1.0) as usize;
    (n, lambda_total / n as f64)
}

/// `v * exp(q * tau)` by uniformization. Each chunk's Poisson series is
/// truncated once its tail mass is below its share of
/// [`Scalar::SERIES_TAIL_TOL`]. With
/// `renormalize`, the vector is rescaled to unit mass between chunks (only
/// the direction is kept).
pub fn expm_action<S: Scalar>(
    q: &Matrix<S>,
    v: &[S],
    tau: f64,
    renormalize: bool,
) -> Result<Vec<S>, NonConvergence> {
    assert!(tau >= 0.0, "negative time step");
    let Some((rate, p)) = uniformize(q) else {
        return Ok(v.to_vec());
    };
    if tau == 0.0 {
        return Ok(v.to_vec());
    }
    let (n_chunks, lambda) = chunks(rate * tau);
    let tol = S::SERIES_TAIL_TOL / n_chunks as f64;
    let mut cur = v.to_vec();
    for _ in 0..n_chunks {
        cur = series(
            cur,
            lambda,
            tol,
            |w| p.left_mul(w),
            |acc: &mut Vec<S>, c, w: &Vec<S>| {
                acc.iter_mut().zip(w).for_each(|(a, &x)| *a += S::of(c) * x)
            },
            vec![S::zero(); v.len()],
        )?;
        if renormalize {
            let s: S = cur.iter().copied().sum();
            if s > S::zero() {
                cur.iter_mut().for_each(|x| *x /= s);
            }
        }
    }
    Ok(cur)
}

/// Dense `exp(q * tau)` by uniformization.
pub fn expm_uniformized<S: Scalar>(q: &Matrix<S>, tau: f64) -> Result<Matrix<S>, NonConvergence> {
    assert!(tau >= 0.0, "negative time step");
    let n = q.dim();
    let Some((rate, p)) = uniformize(q) else {
        return Ok(Matrix::identity(n));
    };
    if tau == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let (n_chunks, lambda) = chunks(rate * tau);
    let chunk = series(
        Matrix::identity(n),
        lambda,
        S::SERIES_TAIL_TOL / n_chunks as f64,
        |m| m.matmul(&p),
        |acc: &mut Matrix<S>, c, m: &Matrix<S>| *acc = acc.add(&m.scaled(S::of(c))),
        Matrix::zeros(n),
    )?;
    let mut out = chunk.clone();
    for _ in 1..n_chunks {
        out = out.matmul(&chunk);
    }
    Ok(out)
}

/// Dense `exp(a)` by [6/6] Padé approximation with scaling and squaring.
pub fn expm_pade<S: Scalar>(a: &Matrix<S>) -> Matrix<S> {
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let n = a.dim();
    let norm = a.norm_inf().to_f64_lossy();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scaled(S::of(0.5f64.powi(s)));
    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, &c) in C.iter().enumerate().skip(1) {
        power = power.matmul(&a);
        let term = power.scaled(S::of(c));
        num = num.add(&term);
        den = if k % 2 == 0 {
            den.add(&term)
        } else {
            den.sub(&term)
        };
    }
    let mut r = den
        .solve(&num)
        .expect("Padé denominator is nonsingular for a scaled matrix");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(l: f64) -> Matrix<f64> {
        Matrix::from_rows(&[vec![-l, l], vec![0.0, 0.0]])
    }

    #[test]
    fn zero_time_is_identity() {
        let q = chain(2.0);
        assert_eq!(
            expm_action(&q, &[0.3, 0.7], 0.0, false).unwrap(),
            vec![0.3, 0.7]
        );
        assert_eq!(expm_uniformized(&q, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn two_state_chain_closed_form() {
        for (l, tau) in [(0.7, 1.0 / 0.7), (3.0, 0.25), (5.0, 40.0)] {
            let v = expm_action(&chain(l), &[1.0, 0.0], tau, false).unwrap();
            let e = (-l * tau).exp();
            assert!(
                (v[0] - e).abs() < 1e-12 && (v[1] - (1.0 - e)).abs() < 1e-12,
                "{v:?}"
            );
            let m = expm_pade(&chain(l).scaled(tau));
            assert!((m.get(0, 0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn methods_agree_on_a_four_state_generator() {
        let q = Matrix::from_rows(&[
            vec![-3.6, 0.0, 0.2, 0.0],
            vec![0.0, -2.8, 0.3, 0.0],
            vec![0.3, 0.0, -4.9, 0.0],
            vec![0.0, 0.0, 0.0, -1.8],
        ]);
        for tau in [0.1, 1.0, 7.5] {
            let u = expm_uniformized(&q, tau).unwrap();
            let p = expm_pade(&q.scaled(tau));
            assert!(
                u.max_abs_diff(&p) < 1e-12,
                "tau {tau}: {}",
                u.max_abs_diff(&p)
            );
        }
    }

    #[test]
    fn semigroup_property() {
        let q = Matrix::from_rows(&[
            vec![-2.0, 1.5, 0.0],
            vec![0.5, -1.0, 0.2],
            vec![0.0, 0.3, -0.3],
        ]);
        let v = [0.2f64, 0.5, 0.3];
        let once = expm_action(&q, &v, 1.7, false).unwrap();
        let twice = expm_action(&q, &expm_action(&q, &v, 0.6, false).unwrap(), 1.1, false).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
