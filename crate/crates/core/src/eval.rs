//! Metrics and the network-vs-filter comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{argmax, Belief};
use crate::deploy::{LiveFormatter, Rejection};
use crate::fnn::{FnnError, Network};
use crate::mbse::{filter_observations, FilterError, GeneratorSet, TickFilter};
use crate::model::LtpaModel;
use crate::preprocess::{
    format_over_observations, format_over_time, CaseSpec, MinMaxScaler, PreprocessError,
};
use crate::run::{project_run, RunError, TimedObservationSeq, TimedRun};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("series lengths differ or are empty ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("network expects {expected} inputs but the case produces {found}")]
    CaseMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Network(#[from] FnnError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("input rejected: {0}")]
    Rejected(#[from] Rejection),
    #[error("trajectory file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl<S> AsRef<[S]> for Belief<S>
where
    S: Scalar,
{
    fn as_ref(&self) -> &[S] {
        self.as_slice()
    }
}

fn check_lengths(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b || a == 0 {
        return Err(EvalError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Fraction of points whose prediction argmax equals the target argmax (ties
/// go to the lowest index).
pub fn argmax_accuracy<A, B, S, T>(predictions: &[A], targets: &[B]) -> Result<f64, EvalError>
where
    A: AsRef<[S]>,
    B: AsRef<[T]>,
    S: PartialOrd + Copy,
    T: PartialOrd + Copy,
{
    check_lengths(predictions.len(), targets.len())?;
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| argmax(p.as_ref()) == argmax(t.as_ref()))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Mean absolute difference over states.
pub fn point_mae(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    check_lengths(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Per-point MAE averaged over points.
pub fn mae<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B]) -> Result<f64, EvalError> {
    check_lengths(a.len(), b.len())?;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += point_mae(x.as_ref(), y.as_ref())?;
    }
    Ok(total / a.len() as f64)
}

/// Network and filter beliefs at the same instants of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    /// Absolute time of each point.
    pub times: Vec<f64>,
    pub fnn: Vec<Vec<f64>>,
    pub mbse: Vec<Vec<f64>>,
}

/// Everything needed to run both estimators on a sequence.
pub struct Estimators<'a, S> {
    pub model: &'a LtpaModel,
    pub gen: &'a GeneratorSet<S>,
    pub net: &'a Network<S>,
    pub scaler: Option<&'a MinMaxScaler>,
    pub case: CaseSpec,
}

impl<'a, S: Scalar> Estimators<'a, S> {
    pub fn new(
        model: &'a LtpaModel,
        gen: &'a GeneratorSet<S>,
        net: &'a Network<S>,
        scaler: Option<&'a MinMaxScaler>,
        case: CaseSpec,
    ) -> Result<Self, EvalError> {
        if net.input_len() != case.input_len() || net.output_len() != model.num_states() {
            return Err(EvalError::CaseMismatch {
                expected: net.input_len(),
                found: case.input_len(),
            });
        }
        Ok(Estimators {
            model,
            gen,
            net,
            scaler,
            case,
        })
    }

    fn predict(&self, inputs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, EvalError> {
        let n = inputs.len();
        let flat: Vec<S> = inputs
            .into_iter()
            .flat_map(|mut v| {
                if let Some(s) = self.scaler {
                    s.transform(&mut v);
                }
                v.into_iter().map(S::of)
            })
            .collect();
        let out = self.net.predict_batch(&flat, n)?;
        Ok(out
            .chunks(self.net.output_len())
            .map(|c| c.iter().map(|x| x.to_f64_lossy()).collect())
            .collect())
    }

    /// Both estimators from `prior` over `obs`: at `t = 0` and each
    /// observation when estimating over observations; at every tick up to
    /// `horizon_ticks` (default: the last observation) over time.
    pub fn estimate(
        &self,
        prior: &Belief<S>,
        obs: &TimedObservationSeq,
        horizon_ticks: Option<u64>,
    ) -> Result<Trajectories, EvalError> {
        let mut live = LiveFormatter::new(self.model, self.case);
        let mut inputs = vec![live.current()];
        let names = obs.to_names(self.model);
        let (times, mbse) = match self.case.tick() {
            None => {
                let mut t = 0.0;
                let mut times = vec![0.0];
                for &(l, c) in &names {
                    inputs.push(live.observe(l, c)?);
                    t += c;
                    times.push(t);
                }
                (times, filter_observations(self.gen, prior, obs)?)
            }
            Some(tick) => {
                let filter = TickFilter::new(self.gen, tick)?;
                let mut total = 0u64;
                for &(l, c) in &names {
                    let k = tick.to_ticks(c).ok_or(Rejection::NonTickAligned {
                        clock: c,
                        tick: tick.size(),
                    })?;
                    for _ in 1..k {
                        inputs.push(live.tick()?);
                    }
                    inputs.push(live.observe(l, c)?);
                    total += k;
                }
                let horizon = horizon_ticks.unwrap_or(total);
                while (inputs.len() as u64) <= horizon {
                    inputs.push(live.tick()?);
                }
                inputs.truncate(horizon as usize + 1);
                let times = (0..=horizon).map(|n| tick.to_time(n)).collect();
                (times, filter.run(prior, obs, horizon)?)
            }
        };
        let fnn = self.predict(inputs)?;
        let mbse = mbse
            .into_iter()
            .map(|b| b.as_slice().iter().map(|x| x.to_f64_lossy()).collect())
            .collect();
        Ok(Trajectories { times, fnn, mbse })
    }

    /// Both estimators along a test run, with the true state at each point.
    pub fn compare_run(&self, run: &TimedRun) -> Result<(Trajectories, Vec<usize>), EvalError> {
        let obs = project_run(self.model, run)?;
        let samples = match self.case {
            CaseSpec::OverObservations { k } => format_over_observations(self.model, run, k)?,
            CaseSpec::OverTime { k, tick } => format_over_time(self.model, run, k, tick)?,
        };
        let horizon = (samples.len() - 1) as u64;
        let prior = Belief::delta(self.model.num_states(), run.initial.0);
        let traj = self.estimate(&prior, &obs, Some(horizon))?;
        let truth = samples.iter().map(|s| argmax(&s.target)).collect();
        Ok((traj, truth))
    }
}

/// Aggregate network-vs-filter comparison over a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    #[serde(flatten)]
    pub case: CaseSpec,
    pub runs: usize,
    pub points: usize,
    pub overall_mae: f64,
    /// Network argmax accuracy against the true state.
    pub accuracy: f64,
    /// Filter argmax accuracy against the true state.
    pub mbse_accuracy: f64,
    /// Largest `|sum - 1|` over every emitted belief.
    pub max_normalization_error: f64,
    pub per_point_mae: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub weights: String,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
}

/// Runs both estimators along every run; each emitted point counts once.
pub fn compare<S: Scalar>(
    est: &Estimators<'_, S>,
    runs: &[TimedRun],
    provenance: Provenance,
) -> Result<ComparisonReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::LengthMismatch { left: 0, right: 0 });
    }
    let mut per_point_mae = Vec::new();
    let (mut fnn_hits, mut mbse_hits) = (0usize, 0usize);
    let mut norm_err: f64 = 0.0;
    for run in runs {
        let (traj, truth) = est.compare_run(run)?;
        for ((f, m), &t) in traj.fnn.iter().zip(&traj.mbse).zip(&truth) {
            per_point_mae.push(point_mae(f, m)?);
            fnn_hits += (argmax(f) == t) as usize;
            mbse_hits += (argmax(m) == t) as usize;
            for b in [f, m] {
                norm_err = norm_err.max((b.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    let points = per_point_mae.len();
    Ok(ComparisonReport {
        case: est.case,
        runs: runs.len(),
        points,
        overall_mae: per_point_mae.iter().sum::<f64>() / points as f64,
        accuracy: fnn_hits as f64 / points as f64,
        mbse_accuracy: mbse_hits as f64 / points as f64,
        max_normalization_error: norm_err,
        per_point_mae,
        provenance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Fnn,
    Mbse,
}

impl Source {
    fn tag(self) -> &'static str {
        match self {
            Source::Fnn => "fnn",
            Source::Mbse => "mbse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub probs: Vec<f64>,
    pub source: Source,
}

impl Trajectories {
    /// Network rows first, then filter rows.
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        [(&self.fnn, Source::Fnn), (&self.mbse, Source::Mbse)]
            .into_iter()
            .flat_map(|(series, source)| {
                self.times
                    .iter()
                    .zip(series)
                    .map(move |(&time, p)| TrajectoryRow {
                        time,
                        probs: p.clone(),
                        source,
                    })
            })
            .collect()
    }
}

/// CSV with columns `time, P(s...), source`.
pub fn format_trajectories(states: &[String], rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("time");
    for s in states {
        let _ = write!(out, ",P({s})");
    }
    out.push_str(",source\n");
    for r in rows {
        let _ = write!(out, "{}", r.time);
        for p in &r.probs {
            let _ = write!(out, ",{p}");
        }
        let _ = writeln!(out, ",{}", r.source.tag());
    }
    out
}

pub fn export_trajectories(
    path: impl AsRef<Path>,
    states: &[String],
    rows: &[TrajectoryRow],
) -> Result<(), EvalError> {
    let path = path.as_ref();
    std::fs::write(path, format_trajectories(states, rows))
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

/// Parses [`format_trajectories`] output back into state names and rows.
pub fn parse_trajectories(text: &str) -> Result<(Vec<String>, Vec<TrajectoryRow>), EvalError> {
    let err = |line: usize, message: String| EvalError::Parse { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "time" || cols[cols.len() - 1] != "source" {
        return Err(err(1, "expected `time,P(..),...,source`".into()));
    }
    let states = cols[1..cols.len() - 1]
        .iter()
        .map(|c| {
            c.strip_prefix("P(")
                .and_then(|c| c.strip_suffix(')'))
                .map(str::to_string)
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| err(1, "state columns must look like P(name)".into()))?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(err(
                i + 1,
                format!("expected {} fields, got {}", cols.len(), fields.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(i + 1, format!("`{s}`: {e}")))
        };
        let source = match fields[fields.len() - 1] {
            "fnn" => Source::Fnn,
            "mbse" => Source::Mbse,
            other => return Err(err(i + 1, format!("unknown source `{other}`"))),
        };
        rows.push(TrajectoryRow {
            time: num(fields[0])?,
            probs: fields[1..fields.len() - 1]
                .iter()
                .map(|s| num(s))
                .collect::<Result<_, _>>()?,
            source,
        });
    }
    Ok((states, rows))
}
