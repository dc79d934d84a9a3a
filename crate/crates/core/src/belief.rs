//! Normalized probability vectors over the model's states.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("entry {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("entries sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("vector has no probability mass")]
    ZeroMass,
    #[error("belief is empty")]
    Empty,
}

/// Probability vector indexed by the model's state order.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<S> {
    probs: Vec<S>,
}

impl<S: Scalar> Belief<S> {
    /// Accepts `probs` iff every entry is in `[0, 1]` and the sum is 1 within
    /// [`Scalar::NORMALIZATION_TOL`].
    pub fn new(probs: Vec<S>) -> Result<Self, BeliefError> {
        if probs.is_empty() {
            return Err(BeliefError::Empty);
        }
        for (index, &p) in probs.iter().enumerate() {
            if !(p >= S::zero() && p <= S::one()) {
                return Err(BeliefError::OutOfRange {
                    index,
                    value: p.to_f64_lossy(),
                });
            }
        }
        let sum: S = probs.iter().copied().sum();
        if (sum.to_f64_lossy() - 1.0).abs() > S::NORMALIZATION_TOL {
            return Err(BeliefError::NotNormalized(sum.to_f64_lossy()));
        }
        Ok(Belief { probs })
    }

    /// Scales a nonnegative vector to unit mass.
    pub fn normalize(mut v: Vec<S>) -> Result<Self, BeliefError> {
        if v.is_empty() {
            return Err(BeliefError::Empty);
        }
        for (index, &p) in v.iter().enumerate() {
            if !p.is_finite() || p < S::zero() {
                return Err(BeliefError::OutOfRange {
                    index,
                    value: p.to_f64_lossy(),
                });
            }
        }
        let sum: S = v.iter().copied().sum();
        if !sum.is_finite() || sum <= S::zero() {
            return Err(BeliefError::ZeroMass);
        }
        for p in v.iter_mut() {
            *p /= sum;
        }
        Ok(Belief { probs: v })
    }

    pub fn delta(n: usize, index: usize) -> Self {
        let mut probs = vec![S::zero(); n];
        probs[index] = S::one();
        Belief { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Belief {
            probs: vec![S::one() / S::of(n as f64); n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<S> {
        self.probs
    }

    pub fn sum(&self) -> S {
        self.probs.iter().copied().sum()
    }

    /// Most probable state; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn l1_distance(&self, other: &Self) -> S {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| (a - b).abs())
            .sum()
    }

    pub fn to_f64(&self) -> Belief<f64> {
        Belief {
            probs: self.probs.iter().map(|p| p.to_f64_lossy()).collect(),
        }
    }
}

/// Index of the largest entry, lowest index on ties. Panics on empty input.
pub fn argmax<S: PartialOrd + Copy>(v: &[S]) -> usize {
    assert!(!v.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
