use thiserror::Error;

use super::expm::{expm_action, expm_uniformized, NonConvergence};
use super::generators::GeneratorSet;
use crate::belief::Belief;
use crate::linalg::Matrix;
use crate::model::LabelId;
use crate::run::TimedObservationSeq;
use crate::scalar::Scalar;
use crate::ticks::TickGrid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("observation {index} has zero likelihood under the model")]
    ImpossibleObservation { index: usize },
    #[error("observation {index}: delay {tau} must be positive")]
    NonPositiveDelay { index: usize, tau: f64 },
    #[error("observation {index}: reading {clock} is not on the {tick} grid")]
    NonTickAligned { index: usize, clock: f64, tick: f64 },
    #[error("prior has {found} entries, model has {expected} states")]
    PriorMismatch { expected: usize, found: usize },
    #[error(transparent)]
    NonConvergence(#[from] NonConvergence),
}

/// `belief * exp(q_u * tau)`: the unnormalized mass still silent after `tau`.
pub fn silent_propagate<S: Scalar>(
    gen: &GeneratorSet<S>,
    belief: &[S],
    tau: f64,
) -> Result<Vec<S>, FilterError> {
    Ok(expm_action(&gen.q_u, belief, tau, false)?)
}

fn update_from_silent<S: Scalar>(
    gen: &GeneratorSet<S>,
    silent: &[S],
    label: LabelId,
    index: usize,
) -> Result<Belief<S>, FilterError> {
    let post = gen.r[label.0].left_mul(silent);
    Belief::normalize(post).map_err(|_| FilterError::ImpossibleObservation { index })
}

/// Bayes update for observing `label` after `tau` time units of silence:
/// `normalize(belief * exp(q_u * tau) * r_label)`.
pub fn observation_update<S: Scalar>(
    gen: &GeneratorSet<S>,
    belief: &Belief<S>,
    tau: f64,
    label: LabelId,
) -> Result<Belief<S>, FilterError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(FilterError::NonPositiveDelay { index: 0, tau });
    }
    let silent = expm_action(&gen.q_u, belief.as_slice(), tau, true)?;
    update_from_silent(gen, &silent, label, 0)
}

fn check_prior<S: Scalar>(gen: &GeneratorSet<S>, prior: &Belief<S>) -> Result<(), FilterError> {
    if prior.len() != gen.num_states() {
        return Err(FilterError::PriorMismatch {
            expected: gen.num_states(),
            found: prior.len(),
        });
    }
    Ok(())
}

/// Beliefs at `t = 0` and right after each observation.
pub fn filter_observations<S: Scalar>(
    gen: &GeneratorSet<S>,
    prior: &Belief<S>,
    obs: &TimedObservationSeq,
) -> Result<Vec<Belief<S>>, FilterError> {
    check_prior(gen, prior)?;
    let mut out = Vec::with_capacity(obs.len() + 1);
    out.push(prior.clone());
    for (index, o) in obs.iter().enumerate() {
        let last = out.last().expect("prior pushed");
        let b = observation_update(gen, last, o.clock, o.label).map_err(|e| match e {
            FilterError::ImpossibleObservation { .. } => {
                FilterError::ImpossibleObservation { index }
            }
            FilterError::NonPositiveDelay { tau, .. } => {
                FilterError::NonPositiveDelay { index, tau }
            }
            e => e,
        })?;
        out.push(b);
    }
    Ok(out)
}

/// Propagates silent mass one tick at a time with a cached `exp(q_u * TI)`.
#[derive(Debug, Clone)]
pub struct TickFilter<'g, S> {
    gen: &'g GeneratorSet<S>,
    step: Matrix<S>,
    tick: TickGrid,
}

impl<'g, S: Scalar> TickFilter<'g, S> {
    pub fn new(gen: &'g GeneratorSet<S>, tick: TickGrid) -> Result<Self, FilterError> {
        Ok(TickFilter {
            gen,
            step: expm_uniformized(&gen.q_u, tick.size())?,
            tick,
        })
    }

    /// Beliefs at ticks `0..=horizon_ticks`. Between observations the belief
    /// is the normalized silent mass; at an observation tick it is the
    /// updated belief, and elapsed time restarts.
    pub fn run(
        &self,
        prior: &Belief<S>,
        obs: &TimedObservationSeq,
        horizon_ticks: u64,
    ) -> Result<Vec<Belief<S>>, FilterError> {
        check_prior(self.gen, prior)?;
        let mut due = Vec::with_capacity(obs.len());
        let mut at = 0u64;
        for (index, o) in obs.iter().enumerate() {
            let k = self.tick.to_ticks(o.clock).filter(|&k| k > 0).ok_or(
                FilterError::NonTickAligned {
                    index,
                    clock: o.clock,
                    tick: self.tick.size(),
                },
            )?;
            at += k;
            due.push((at, o.label, index));
        }
        let mut out = Vec::with_capacity(horizon_ticks as usize + 1);
        out.push(prior.clone());
        let mut silent = prior.as_slice().to_vec();
        let mut next = due.iter().peekable();
        for n in 1..=horizon_ticks {
            silent = self.step.left_mul(&silent);
            let b = match next.peek() {
                Some(&&(t, label, index)) if t == n => {
                    next.next();
                    update_from_silent(self.gen, &silent, label, index)?
                }
                _ => Belief::normalize(silent.clone())
                    .map_err(|_| FilterError::ImpossibleObservation { index: n as usize })?,
            };
            silent = b.as_slice().to_vec();
            out.push(b);
        }
        Ok(out)
    }
}

/// Beliefs at every tick up to `horizon_ticks`; see [`TickFilter::run`].
pub fn filter_ticks<S: Scalar>(
    gen: &GeneratorSet<S>,
    prior: &Belief<S>,
    obs: &TimedObservationSeq,
    tick: TickGrid,
    horizon_ticks: u64,
) -> Result<Vec<Belief<S>>, FilterError> {
    TickFilter::new(gen, tick)?.run(prior, obs, horizon_ticks)
}
