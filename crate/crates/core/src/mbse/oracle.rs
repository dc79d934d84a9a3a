//! Monte Carlo estimate of the state posterior given a timed observation
//! sequence, used as an independent check of the analytical filter.
//!
//! Conditioning on exact readings has probability zero, so a simulated
//! observation matches when its label is equal and its reading lies within
//! `delta / 2` of the target. Stages are processed one observation at a time:
//! particles that match are kept, the survivors are resampled back to `n`,
//! and simulation continues from their states. By the Markov property this
//! targets the same posterior as rejecting whole runs, without the
//! exponentially small acceptance rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::Belief;
use crate::model::{LtpaModel, StateId};
use crate::run::TimedObservationSeq;
use crate::simulator::{child_seed, sample_step};

/// Default minimum number of matching particles per stage.
pub const MIN_MATCHES: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("stage {stage}: only {kept} of {n} particles matched (need {floor})")]
    InsufficientMatches {
        stage: usize,
        kept: usize,
        n: usize,
        floor: usize,
    },
    #[error("invalid oracle parameters: {0}")]
    BadParameters(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Bin width around each observed reading.
    pub delta: f64,
    /// Particles per stage.
    pub n: usize,
    pub seed: u64,
    pub min_matches: usize,
}

impl OracleConfig {
    pub fn new(delta: f64, n: usize, seed: u64) -> Self {
        OracleConfig {
            delta,
            n,
            seed,
            min_matches: MIN_MATCHES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub belief: Belief<f64>,
    /// Matching particles per stage (observations, then the silent query if any).
    pub kept: Vec<usize>,
}

enum Outcome {
    /// The first observable event: label and post state, at clock `t`.
    Observed {
        label: usize,
        t: f64,
        state: StateId,
    },
    /// No observable event before the time limit; state at the limit.
    Silent(StateId),
}

/// Simulates from `state` until the first observable event or `limit`.
fn advance<R: Rng>(model: &LtpaModel, mut state: StateId, limit: f64, rng: &mut R) -> Outcome {
    let mut clock = 0.0;
    loop {
        if model.exit_rate(state) <= 0.0 {
            return Outcome::Silent(state);
        }
        let (event, d, next) = sample_step(model, state, rng).expect("state is live");
        clock += d;
        if clock > limit {
            return Outcome::Silent(state);
        }
        if let Some(l) = model.obs(event) {
            return Outcome::Observed {
                label: l.0,
                t: clock,
                state: next,
            };
        }
        state = next;
    }
}

/// Empirical posterior over states after `obs`, then `query_elapsed` further
/// time units without an observation, starting from the model's initial state.
pub fn monte_carlo_posterior(
    model: &LtpaModel,
    obs: &TimedObservationSeq,
    query_elapsed: f64,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    if cfg.delta.is_nan()
        || cfg.delta <= 0.0
        || cfg.n == 0
        || query_elapsed.is_nan()
        || query_elapsed < 0.0
    {
        return Err(OracleError::BadParameters(format!(
            "delta {} n {} elapsed {query_elapsed}",
            cfg.delta, cfg.n
        )));
    }
    let half = cfg.delta / 2.0;
    let mut particles = vec![model.initial(); cfg.n];
    let mut kept = Vec::with_capacity(obs.len() + 1);
    let mut survivors = Vec::with_capacity(cfg.n);
    let stages = obs.len() + usize::from(query_elapsed > 0.0);
    for stage in 0..stages {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, stage as u64));
        survivors.clear();
        let target = obs.0.get(stage);
        for &p in &particles {
            match (
                target,
                advance(
                    model,
                    p,
                    target.map_or(query_elapsed, |o| o.clock + half),
                    &mut rng,
                ),
            ) {
                (Some(o), Outcome::Observed { label, t, state })
                    if label == o.label.0 && (t - o.clock).abs() <= half =>
                {
                    survivors.push(state)
                }
                (None, Outcome::Silent(state)) => survivors.push(state),
                _ => {}
            }
        }
        kept.push(survivors.len());
        if survivors.len() < cfg.min_matches {
            return Err(OracleError::InsufficientMatches {
                stage,
                kept: survivors.len(),
                n: cfg.n,
                floor: cfg.min_matches,
            });
        }
        if stage + 1 < stages {
            particles = (0..cfg.n)
                .map(|_| survivors[rng.random_range(0..survivors.len())])
                .collect();
        } else {
            particles = std::mem::take(&mut survivors);
        }
    }
    let mut counts = vec![0.0; model.num_states()];
    for p in &particles {
        counts[p.0] += 1.0;
    }
    let belief = Belief::normalize(counts).expect("particles are non-empty");
    Ok(OracleResult { belief, kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{silent_chain, system2};

    #[test]
    fn empty_pattern_is_the_prior() {
        let m = system2();
        let r = monte_carlo_posterior(
            &m,
            &TimedObservationSeq::default(),
            0.0,
            &OracleConfig::new(0.05, 10_000, 1),
        )
        .unwrap();
        assert_eq!(r.belief, Belief::delta(4, 0));
    }

    #[test]
    fn silent_chain_matches_closed_form() {
        let m = silent_chain(0.7);
        let r = monte_carlo_posterior(
            &m,
            &TimedObservationSeq::default(),
            1.0 / 0.7,
            &OracleConfig::new(0.05, 100_000, 2),
        )
        .unwrap();
        let e = (-1.0f64).exp();
        assert!((r.belief.as_slice()[0] - e).abs() < 0.02, "{:?}", r.belief);
    }

    #[test]
    fn agrees_with_filter() {
        use crate::mbse::{filter_observations, filter_ticks, GeneratorSet};
        use crate::ticks::TickGrid;
        let m = system2();
        let g = GeneratorSet::<f64>::build(&m);
        let cfg = OracleConfig::new(0.05, 100_000, 4);
        for prefix in [
            &[("a", 0.2)][..],
            &[("a", 0.2), ("b", 0.3)],
            &[("a", 0.2), ("b", 0.3), ("a", 0.4)],
        ] {
            let obs = TimedObservationSeq::from_names(&m, prefix).unwrap();
            let exact = filter_observations(&g, &Belief::delta(4, 0), &obs).unwrap();
            let mc = monte_carlo_posterior(&m, &obs, 0.0, &cfg).unwrap();
            let d = mc.belief.l1_distance(exact.last().unwrap());
            assert!(d <= 0.03, "{prefix:?}: {d}");
            let tick = TickGrid::new(0.1).unwrap();
            let horizon = obs
                .iter()
                .map(|o| tick.to_ticks(o.clock).unwrap())
                .sum::<u64>()
                + 3;
            let ticks = filter_ticks(&g, &Belief::delta(4, 0), &obs, tick, horizon).unwrap();
            let mc = monte_carlo_posterior(&m, &obs, 0.3, &cfg).unwrap();
            let d = mc.belief.l1_distance(ticks.last().unwrap());
            assert!(d <= 0.03, "{prefix:?}: {d}");
        }
    }

    #[test]
    fn unlikely_pattern_reports_insufficient_matches() {
        let m = system2();
        let obs = TimedObservationSeq::from_names(&m, &[("b", 40.0)]).unwrap();
        assert!(matches!(
            monte_carlo_posterior(&m, &obs, 0.0, &OracleConfig::new(0.05, 10_000, 3)),
            Err(OracleError::InsufficientMatches { stage: 0, .. })
        ));
    }
}
