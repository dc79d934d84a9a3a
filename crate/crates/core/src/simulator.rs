//! Run generation by exponential races, with seed-derived per-run streams.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EventId, LtpaModel, StateId};
use crate::run::{validate_run, RunError, Step, TimedRun};
use crate::ticks::TickGrid;

/// Default run length when no stop criterion is given.
pub const DEFAULT_MAX_EVENTS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    MaxEvents(u32),
    /// Stop before the first event whose absolute time exceeds the horizon.
    Horizon(f64),
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::MaxEvents(DEFAULT_MAX_EVENTS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default)]
    pub stop: StopRule,
    /// Round every sojourn to this grid (at least one tick).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<TickGrid>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state `{0}` has no outgoing transition")]
    DeadlockState(String),
    #[error("invalid stop rule: {0}")]
    BadStop(String),
    #[error("dataset count must be at least 1")]
    EmptyDataset,
    #[error("dataset was generated from model {found}, expected {expected}")]
    ModelMismatch { expected: String, found: String },
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dataset line {line}: {source}")]
    InvalidRun { line: usize, source: RunError },
    #[error("i/o: {0}")]
    Io(String),
}

/// Draws the next transition out of `state`: sojourn ~ Exp(Λ), transition `i`
/// with probability `rate_i / Λ`.
pub fn sample_step<R: Rng + ?Sized>(
    model: &LtpaModel,
    state: StateId,
    rng: &mut R,
) -> Result<(EventId, f64, StateId), SimError> {
    let total = model.exit_rate(state);
    if total <= 0.0 {
        return Err(SimError::DeadlockState(model.state_name(state).to_string()));
    }
    let sojourn = Exp::new(total)
        .expect("exit rate is positive and finite")
        .sample(rng);
    let mut u = rng.random::<f64>() * total;
    let mut chosen = None;
    for t in model.outgoing(state) {
        chosen = Some(t);
        if u < t.rate {
            break;
        }
        u -= t.rate;
    }
    let t = chosen.expect("non-deadlock state has a transition");
    Ok((t.event, sojourn, t.dst))
}

/// Simulates one run from the model's initial state.
pub fn generate_run<R: Rng + ?Sized>(
    model: &LtpaModel,
    config: &SimConfig,
    rng: &mut R,
) -> Result<TimedRun, SimError> {
    let (max_events, horizon) = match config.stop {
        StopRule::MaxEvents(n) => (n as usize, f64::INFINITY),
        StopRule::Horizon(h) if h > 0.0 && h.is_finite() => (usize::MAX, h),
        StopRule::Horizon(h) => return Err(SimError::BadStop(format!("horizon {h}"))),
    };
    let mut run = TimedRun::empty(model.initial());
    let mut state = model.initial();
    let mut now = 0.0;
    let mut clock = 0.0;
    let mut stretch_ticks = 0u64;
    while run.steps.len() < max_events {
        let (event, sojourn, next) = sample_step(model, state, rng)?;
        let reading = match config.tick {
            Some(grid) => {
                stretch_ticks += grid.round_up_to_one(sojourn);
                grid.to_time(stretch_ticks)
            }
            None => {
                let r = clock + sojourn;
                if r > clock {
                    r
                } else {
                    clock.next_up()
                }
            }
        };
        now += reading - clock;
        if now > horizon {
            break;
        }
        run.steps.push(Step {
            event,
            clock: reading,
            next,
        });
        if model.obs(event).is_some() {
            clock = 0.0;
            stretch_ticks = 0;
        } else {
            clock = reading;
        }
        state = next;
    }
    Ok(run)
}

/// Child seed for run `index`: two rounds of splitmix64 over the root seed and
/// the index, so runs can be generated in any order.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for run `index` of a dataset.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub runs: Vec<TimedRun>,
    pub model_fingerprint: String,
    pub config: SimConfig,
}

pub fn generate_dataset(
    model: &LtpaModel,
    count: usize,
    config: &SimConfig,
) -> Result<RawDataset, SimError> {
    if count == 0 {
        return Err(SimError::EmptyDataset);
    }
    let runs = (0..count)
        .map(|i| generate_run(model, config, &mut run_rng(config.seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RawDataset {
        runs,
        model_fingerprint: model.fingerprint().to_string(),
        config: *config,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    model: String,
    count: usize,
    #[serde(flatten)]
    config: SimConfig,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_ticks: Option<u64>,
    state: String,
}

#[derive(Serialize, Deserialize)]
struct RunRecord {
    initial: String,
    steps: Vec<StepRecord>,
}

const FORMAT_TAG: &str = "tpdes-runs/1";

impl RawDataset {
    /// Line-delimited JSON: one header record, then one run per line. On a
    /// tick grid readings are written as integer tick counts.
    pub fn write_jsonl<W: Write>(&self, model: &LtpaModel, mut out: W) -> Result<(), SimError> {
        let io = |e: std::io::Error| SimError::Io(e.to_string());
        let header = Header {
            format: FORMAT_TAG.into(),
            model: self.model_fingerprint.clone(),
            count: self.runs.len(),
            config: self.config,
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&header).expect("header serializes")
        )
        .map_err(io)?;
        for run in &self.runs {
            let steps = run
                .steps
                .iter()
                .map(|s| {
                    let (t, t_ticks) = match self.config.tick {
                        Some(g) => (None, Some(g.to_ticks(s.clock).expect("tick-aligned run"))),
                        None => (Some(s.clock), None),
                    };
                    StepRecord {
                        event: model.event_name(s.event).to_string(),
                        t,
                        t_ticks,
                        state: model.state_name(s.next).to_string(),
                    }
                })
                .collect();
            let rec = RunRecord {
                initial: model.state_name(run.initial).to_string(),
                steps,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&rec).expect("run serializes")
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`RawDataset::write_jsonl`], validating every
    /// run against `model`.
    pub fn read_jsonl<R: BufRead>(model: &LtpaModel, input: R) -> Result<Self, SimError> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
        let fmt = |line: usize, message: String| SimError::Format {
            line: line + 1,
            message,
        };
        let (n, first) = lines
            .next()
            .ok_or_else(|| fmt(0, "missing header".into()))?;
        let first = first.map_err(|e| SimError::Io(e.to_string()))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| fmt(n, e.to_string()))?;
        if header.format != FORMAT_TAG {
            return Err(fmt(n, format!("unknown format `{}`", header.format)));
        }
        if header.model != model.fingerprint() {
            return Err(SimError::ModelMismatch {
                expected: model.fingerprint().into(),
                found: header.model,
            });
        }
        let mut runs = Vec::with_capacity(header.count);
        for (n, line) in lines {
            let line = line.map_err(|e| SimError::Io(e.to_string()))?;
            let rec: RunRecord = serde_json::from_str(&line).map_err(|e| fmt(n, e.to_string()))?;
            let state = |s: &str| {
                model
                    .state_id(s)
                    .ok_or_else(|| fmt(n, format!("unknown state `{s}`")))
            };
            let mut run = TimedRun::empty(state(&rec.initial)?);
            for s in &rec.steps {
                let event = model
                    .event_id(&s.event)
                    .ok_or_else(|| fmt(n, format!("unknown event `{}`", s.event)))?;
                let clock = match (s.t, s.t_ticks, header.config.tick) {
                    (None, Some(k), Some(g)) => g.to_time(k),
                    (Some(t), None, None) => t,
                    _ => {
                        return Err(fmt(
                            n,
                            "step needs `t_ticks` on a tick grid and `t` otherwise".into(),
                        ))
                    }
                };
                run.steps.push(Step {
                    event,
                    clock,
                    next: state(&s.state)?,
                });
            }
            validate_run(model, &run).map_err(|source| SimError::InvalidRun {
                line: n + 1,
                source,
            })?;
            runs.push(run);
        }
        if runs.len() != header.count {
            return Err(fmt(
                0,
                format!(
                    "header announces {} runs, found {}",
                    header.count,
                    runs.len()
                ),
            ));
        }
        Ok(RawDataset {
            runs,
            model_fingerprint: header.model,
            config: header.config,
        })
    }
}
