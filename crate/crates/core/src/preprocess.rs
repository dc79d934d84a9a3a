//! Turning timed runs into supervised samples.
//!
//! Two formatters share a window of the `K` most recent observations, stored
//! as `K` (encoded label, clock reading) pairs and left-padded with zeros:
//!
//! * [`format_over_observations`]: one sample at the start of the run and one
//!   per (observable) event, input length `2K`.
//! * [`format_over_time`]: one sample per clock tick, carrying the window plus
//!   the time elapsed since the last observation, input length `2K + 1`.
//!
//! Labels are encoded by position in the model's label list starting at 1;
//! 0 is padding.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{class_of, LabelId, LtpaModel};
use crate::run::TimedRun;
use crate::ticks::TickGrid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error(
        "event `{0}` is silent but formatting over observations needs a fully observable model"
    )]
    SilentEventUnderA5(String),
    #[error("window length K must be at least 1")]
    NonPositiveK,
    #[error("run {run}, step {step}: reading {clock} is not a positive multiple of the tick {tick} past the previous one")]
    NonTickAlignedRun {
        run: usize,
        step: usize,
        clock: f64,
        tick: f64,
    },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("invalid split fractions: {0}")]
    BadFractions(String),
    #[error("split leaves the {0} set empty")]
    EmptySplit(&'static str),
    #[error("sample file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Which formatter produced a sample set, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CaseSpec {
    #[serde(rename = "obs")]
    OverObservations { k: usize },
    #[serde(rename = "time")]
    OverTime { k: usize, tick: TickGrid },
}

impl CaseSpec {
    pub fn k(&self) -> usize {
        match *self {
            CaseSpec::OverObservations { k } | CaseSpec::OverTime { k, .. } => k,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            CaseSpec::OverObservations { k } => 2 * k,
            CaseSpec::OverTime { k, .. } => 2 * k + 1,
        }
    }

    pub fn tick(&self) -> Option<TickGrid> {
        match *self {
            CaseSpec::OverObservations { .. } => None,
            CaseSpec::OverTime { tick, .. } => Some(tick),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CaseSpec::OverObservations { .. } => "obs",
            CaseSpec::OverTime { .. } => "time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    /// Index of the source run in its dataset.
    pub run: usize,
    /// Position of the sample within its run.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub case: CaseSpec,
    pub num_states: usize,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(case: CaseSpec, num_states: usize) -> Self {
        SampleSet {
            case,
            num_states,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.case.input_len()
    }

    /// Samples whose run id is in `runs`, in the original order.
    pub fn subset(&self, runs: &[usize]) -> SampleSet {
        let keep: std::collections::BTreeSet<usize> = runs.iter().copied().collect();
        SampleSet {
            case: self.case,
            num_states: self.num_states,
            samples: self
                .samples
                .iter()
                .filter(|s| keep.contains(&s.run))
                .cloned()
                .collect(),
        }
    }

    /// Distinct run ids, ascending.
    pub fn run_ids(&self) -> Vec<usize> {
        let ids: std::collections::BTreeSet<usize> = self.samples.iter().map(|s| s.run).collect();
        ids.into_iter().collect()
    }
}

/// `None` is padding (0); a label at position `k` encodes as `k + 1`.
pub fn encode_label(model: &LtpaModel, label: Option<&str>) -> Result<f64, PreprocessError> {
    match label {
        None => Ok(0.0),
        Some(name) => model
            .label_id(name)
            .map(encode_id)
            .ok_or_else(|| PreprocessError::UnknownLabel(name.to_string())),
    }
}

pub fn encode_id(label: LabelId) -> f64 {
    (label.0 + 1) as f64
}

/// Inverse of [`encode_label`]: `Some(None)` is padding, `None` is not a code.
pub fn decode_label(model: &LtpaModel, code: f64) -> Option<Option<LabelId>> {
    if code == 0.0 {
        return Some(None);
    }
    let k = code as usize;
    (k as f64 == code && k >= 1 && k <= model.num_labels()).then(|| Some(LabelId(k - 1)))
}

/// Fixed-length window of the most recent (label, reading) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    buf: Vec<f64>,
}

impl ObservationWindow {
    pub fn new(k: usize) -> Self {
        ObservationWindow {
            buf: vec![0.0; 2 * k],
        }
    }

    /// Drops the oldest pair and appends `(code, reading)`.
    pub fn push(&mut self, code: f64, reading: f64) {
        self.buf.rotate_left(2);
        let n = self.buf.len();
        self.buf[n - 2] = code;
        self.buf[n - 1] = reading;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.buf
    }
}

/// Samples for one run, one per observation plus the initial one.
pub fn format_over_observations(
    model: &LtpaModel,
    run: &TimedRun,
    k: usize,
) -> Result<Vec<Sample>, PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::NonPositiveK);
    }
    let n = model.num_states();
    let mut window = ObservationWindow::new(k);
    let mut out = Vec::with_capacity(run.len() + 1);
    out.push(Sample {
        input: window.as_slice().to_vec(),
        target: class_of(n, run.initial),
        run: 0,
        position: 0,
    });
    for (j, step) in run.steps.iter().enumerate() {
        let label = model.obs(step.event).ok_or_else(|| {
            PreprocessError::SilentEventUnderA5(model.event_name(step.event).to_string())
        })?;
        window.push(encode_id(label), step.clock);
        out.push(Sample {
            input: window.as_slice().to_vec(),
            target: class_of(n, step.next),
            run: 0,
            position: j + 1,
        });
    }
    Ok(out)
}

/// Samples for one run, one per tick of `tick`.
///
/// For each event, the ticks strictly between the previous event and this one
/// carry the previous state as target; the tick of the event itself carries
/// the new state. An observable event enters the window and resets the
/// elapsed time to 0.
pub fn format_over_time(
    model: &LtpaModel,
    run: &TimedRun,
    k: usize,
    tick: TickGrid,
) -> Result<Vec<Sample>, PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::NonPositiveK);
    }
    let n = model.num_states();
    let mut window = ObservationWindow::new(k);
    let mut elapsed = 0u64;
    let mut out = Vec::new();
    let mut push = |window: &ObservationWindow, elapsed: u64, target| {
        let mut input = Vec::with_capacity(2 * k + 1);
        input.extend_from_slice(window.as_slice());
        input.push(tick.to_time(elapsed));
        let position = out.len();
        out.push(Sample {
            input,
            target: class_of(n, target),
            run: 0,
            position,
        });
    };
    push(&window, 0, run.initial);
    let mut state = run.initial;
    for (j, step) in run.steps.iter().enumerate() {
        let misaligned = || PreprocessError::NonTickAlignedRun {
            run: 0,
            step: j,
            clock: step.clock,
            tick: tick.size(),
        };
        let reading = tick.to_ticks(step.clock).ok_or_else(misaligned)?;
        if reading <= elapsed {
            return Err(misaligned());
        }
        for _ in 1..reading - elapsed {
            elapsed += 1;
            push(&window, elapsed, state);
        }
        match model.obs(step.event) {
            Some(label) => {
                window.push(encode_id(label), step.clock);
                elapsed = 0;
            }
            None => elapsed += 1,
        }
        state = step.next;
        push(&window, elapsed, state);
    }
    Ok(out)
}

/// Formats every run, tagging samples with their run index.
pub fn format_runs(
    model: &LtpaModel,
    runs: &[TimedRun],
    case: CaseSpec,
) -> Result<SampleSet, PreprocessError> {
    if let CaseSpec::OverObservations { .. } = case {
        if let Some(t) = model
            .transitions()
            .iter()
            .find(|t| model.obs(t.event).is_none())
        {
            return Err(PreprocessError::SilentEventUnderA5(
                model.event_name(t.event).to_string(),
            ));
        }
    }
    let mut set = SampleSet::new(case, model.num_states());
    for (i, run) in runs.iter().enumerate() {
        let samples = match case {
            CaseSpec::OverObservations { k } => format_over_observations(model, run, k),
            CaseSpec::OverTime { k, tick } => format_over_time(model, run, k, tick),
        }
        .map_err(|e| match e {
            PreprocessError::NonTickAlignedRun {
                step, clock, tick, ..
            } => PreprocessError::NonTickAlignedRun {
                run: i,
                step,
                clock,
                tick,
            },
            e => e,
        })?;
        set.samples
            .extend(samples.into_iter().map(|s| Sample { run: i, ..s }));
    }
    Ok(set)
}

/// Run indices of a train/validation/test partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions `0..num_runs` by whole runs. Train and validation get
/// `round(n * f)` runs each, test the remainder.
pub fn split_by_runs(
    num_runs: usize,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<RunSplit, PreprocessError> {
    let (ft, fv, fs) = fractions;
    if ![ft, fv, fs].iter().all(|f| *f > 0.0 && f.is_finite())
        || ((ft + fv + fs) - 1.0).abs() > 1e-9
    {
        return Err(PreprocessError::BadFractions(format!(
            "{ft}, {fv}, {fs} must be positive and sum to 1"
        )));
    }
    let n_train = (num_runs as f64 * ft).round() as usize;
    let n_val = (num_runs as f64 * fv).round() as usize;
    if n_train == 0 {
        return Err(PreprocessError::EmptySplit("training"));
    }
    if n_val == 0 {
        return Err(PreprocessError::EmptySplit("validation"));
    }
    if n_train + n_val >= num_runs {
        return Err(PreprocessError::EmptySplit("test"));
    }
    let mut order: Vec<usize> = (0..num_runs).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |range: std::ops::Range<usize>| {
        let mut v = order[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(RunSplit {
        train: part(0..n_train),
        val: part(n_train..n_train + n_val),
        test: part(n_train + n_val..num_runs),
    })
}

/// Per-feature min-max scaling, fitted on training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(set: &SampleSet) -> Self {
        let d = set.input_len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for s in &set.samples {
            for (i, &x) in s.input.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        for i in 0..d {
            if !min[i].is_finite() {
                min[i] = 0.0;
                max[i] = 1.0;
            }
        }
        MinMaxScaler { min, max }
    }

    /// Constant features map to 0.
    pub fn transform(&self, input: &mut [f64]) {
        for ((x, &lo), &hi) in input.iter_mut().zip(&self.min).zip(&self.max) {
            *x = if hi > lo { (*x - lo) / (hi - lo) } else { 0.0 };
        }
    }

    pub fn transform_set(&self, set: &mut SampleSet) {
        for s in &mut set.samples {
            self.transform(&mut s.input);
        }
    }
}

/// Text form: `#` header lines, then `inputs | target | run position part`.
pub fn write_samples(model: &LtpaModel, set: &SampleSet, split: Option<&RunSplit>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# case {}", set.case.tag());
    let _ = writeln!(out, "# k {}", set.case.k());
    if let Some(t) = set.case.tick() {
        let _ = writeln!(out, "# ti {}", t.size());
    }
    let labels: Vec<String> = model
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{l}={}", i + 1))
        .collect();
    let _ = writeln!(out, "# labels {}", labels.join(" "));
    let _ = writeln!(out, "# states {}", model.states().join(" "));
    let _ = writeln!(out, "# model {}", model.fingerprint());
    let part_of = |run: usize| match split {
        Some(s) if s.train.binary_search(&run).is_ok() => "train",
        Some(s) if s.val.binary_search(&run).is_ok() => "val",
        Some(s) if s.test.binary_search(&run).is_ok() => "test",
        _ => "-",
    };
    for s in &set.samples {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            out,
            "{} | {} | {} {} {}",
            join(&s.input),
            join(&s.target),
            s.run,
            s.position,
            part_of(s.run)
        );
    }
    out
}

/// Parses [`write_samples`] output. The split is returned only if every run
/// carries a part tag.
pub fn read_samples<R: BufRead>(
    model: &LtpaModel,
    input: R,
) -> Result<(SampleSet, Option<RunSplit>), PreprocessError> {
    let err = |line: usize, message: String| PreprocessError::Format { line, message };
    let (mut case, mut k, mut ti) = (None, None, None);
    let mut samples = Vec::new();
    let mut parts: std::collections::BTreeMap<usize, String> = Default::default();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let mut it = h.split_whitespace();
            match (it.next(), it.next()) {
                (Some("case"), Some(c)) => case = Some(c.to_string()),
                (Some("k"), Some(v)) => {
                    k = Some(v.parse::<usize>().map_err(|e| err(n, e.to_string()))?)
                }
                (Some("ti"), Some(v)) => {
                    ti = Some(v.parse::<f64>().map_err(|e| err(n, e.to_string()))?)
                }
                (Some("model"), Some(fp)) if fp != model.fingerprint() => {
                    return Err(err(
                        n,
                        format!(
                            "samples were made from model {fp}, not {}",
                            model.fingerprint()
                        ),
                    ))
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 {
            return Err(err(
                n,
                "expected `inputs | target | run position part`".into(),
            ));
        }
        let nums = |s: &str| {
            s.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| err(n, format!("`{x}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()
        };
        let input = nums(fields[0])?;
        let target = nums(fields[1])?;
        let meta: Vec<&str> = fields[2].split_whitespace().collect();
        let [run, position, part] = meta[..] else {
            return Err(err(n, "expected `run position part`".into()));
        };
        let run: usize = run
            .parse()
            .map_err(|_| err(n, format!("bad run id `{run}`")))?;
        let position: usize = position
            .parse()
            .map_err(|_| err(n, format!("bad position `{position}`")))?;
        if target.len() != model.num_states() {
            return Err(err(
                n,
                format!(
                    "target has {} entries, model has {} states",
                    target.len(),
                    model.num_states()
                ),
            ));
        }
        parts.insert(run, part.to_string());
        samples.push(Sample {
            input,
            target,
            run,
            position,
        });
    }
    let k = k.ok_or_else(|| err(0, "missing `# k` header".into()))?;
    let case = match case.as_deref() {
        Some("obs") => CaseSpec::OverObservations { k },
        Some("time") => {
            let ti = ti.ok_or_else(|| err(0, "missing `# ti` header".into()))?;
            CaseSpec::OverTime {
                k,
                tick: TickGrid::new(ti).map_err(|e| err(0, e.to_string()))?,
            }
        }
        other => return Err(err(0, format!("unknown case {other:?}"))),
    };
    if let Some(s) = samples.iter().find(|s| s.input.len() != case.input_len()) {
        return Err(err(
            0,
            format!(
                "run {} has an input of length {}, expected {}",
                s.run,
                s.input.len(),
                case.input_len()
            ),
        ));
    }
    let mut split = RunSplit::default();
    for (run, part) in &parts {
        match part.as_str() {
            "train" => split.train.push(*run),
            "val" => split.val.push(*run),
            "test" => split.test.push(*run),
            _ => {}
        }
    }
    let complete =
        split.train.len() + split.val.len() + split.test.len() == parts.len() && !parts.is_empty();
    Ok((
        SampleSet {
            case,
            num_states: model.num_states(),
            samples,
        },
        complete.then_some(split),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rho1, rho1_eps, system1, system2};

    fn inputs(s: &[Sample]) -> Vec<Vec<f64>> {
        s.iter().map(|s| s.input.clone()).collect()
    }

    fn argmaxes(s: &[Sample]) -> Vec<usize> {
        s.iter().map(|s| crate::belief::argmax(&s.target)).collect()
    }

    #[test]
    fn label_codes() {
        let m = system2();
        assert_eq!(encode_label(&m, None).unwrap(), 0.0);
        assert_eq!(encode_label(&m, Some("a")).unwrap(), 1.0);
        assert_eq!(encode_label(&m, Some("b")).unwrap(), 2.0);
        assert_eq!(encode_label(&m, Some("c")).unwrap(), 3.0);
        assert_eq!(
            encode_label(&m, Some("d")),
            Err(PreprocessError::UnknownLabel("d".into()))
        );
        assert_eq!(decode_label(&m, 3.0), Some(Some(LabelId(2))));
        assert_eq!(decode_label(&m, 0.0), Some(None));
        assert_eq!(decode_label(&m, 4.0), None);
    }

    #[test]
    fn observations_k3_on_rho1() {
        let m = system1();
        let s = format_over_observations(&m, &rho1(&m), 3).unwrap();
        let (a, b, c) = (1.0, 2.0, 3.0);
        assert_eq!(
            inputs(&s),
            vec![
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, a, 0.4747],
                vec![0.0, 0.0, a, 0.4747, a, 0.155],
                vec![a, 0.4747, a, 0.155, b, 1.1232],
                vec![a, 0.155, b, 1.1232, a, 0.3627],
                vec![b, 1.1232, a, 0.3627, c, 2.56],
                vec![a, 0.3627, c, 2.56, a, 0.0978],
            ]
        );
        assert_eq!(argmaxes(&s), vec![0, 1, 2, 3, 2, 1, 2]);
    }

    #[test]
    fn observations_edge_cases() {
        let m = system1();
        let empty = TimedRun::empty(m.initial());
        let s = format_over_observations(&m, &empty, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].input, vec![0.0; 6]);
        assert_eq!(s[0].target, vec![1.0, 0.0, 0.0, 0.0]);

        let s = format_over_observations(&m, &rho1(&m), 1).unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s[3].input, vec![2.0, 1.1232]);
        assert_eq!(
            format_over_observations(&m, &rho1(&m), 0),
            Err(PreprocessError::NonPositiveK)
        );

        let m2 = system2();
        assert!(matches!(
            format_runs(&m2, &[rho1_eps(&m2)], CaseSpec::OverObservations { k: 3 }),
            Err(PreprocessError::SilentEventUnderA5(_))
        ));
    }

    #[test]
    fn time_k5_on_rho1_eps() {
        let m = system2();
        let tick = TickGrid::new(0.1).unwrap();
        let s = format_over_time(&m, &rho1_eps(&m), 5, tick).unwrap();
        let z = [0.0; 10];
        let win = |pairs: &[f64]| [&z[..10 - pairs.len()], pairs].concat();
        let a1 = [1.0, 0.1];
        let a1c5 = [1.0, 0.1, 3.0, 0.5];
        let a1c5b4 = [1.0, 0.1, 3.0, 0.5, 2.0, 0.4];
        let a1c5b4a1 = [1.0, 0.1, 3.0, 0.5, 2.0, 0.4, 1.0, 0.1];
        let expected: Vec<(Vec<f64>, f64, usize)> = vec![
            (win(&[]), 0.0, 0),
            (win(&a1), 0.0, 1),
            (win(&a1), 0.1, 1),
            (win(&a1), 0.2, 1),
            (win(&a1), 0.3, 2),
            (win(&a1), 0.4, 2),
            (win(&a1c5), 0.0, 1),
            (win(&a1c5), 0.1, 1),
            (win(&a1c5), 0.2, 1),
            (win(&a1c5), 0.3, 2),
            (win(&a1c5b4), 0.0, 3),
            (win(&a1c5b4a1), 0.0, 0),
            (win(&a1c5b4a1), 0.1, 0),
            ([&a1c5b4a1[..], &[1.0, 0.2]].concat(), 0.0, 0),
        ];
        assert_eq!(s.len(), expected.len());
        for (i, (sample, (w, e, target))) in s.iter().zip(&expected).enumerate() {
            assert_eq!(&sample.input[..10], &w[..], "window of V{}", i + 1);
            assert_eq!(sample.input[10], *e, "elapsed of V{}", i + 1);
            assert_eq!(
                crate::belief::argmax(&sample.target),
                *target,
                "target of V{}",
                i + 1
            );
        }
    }

    #[test]
    fn time_rejects_misaligned_runs() {
        let m = system2();
        let tick = TickGrid::new(0.1).unwrap();
        let run = TimedRun::from_names(&m, "s1", &[("e1", 0.25, "s2")]).unwrap();
        assert!(matches!(
            format_runs(
                &m,
                &[TimedRun::empty(m.initial()), run],
                CaseSpec::OverTime { k: 2, tick }
            ),
            Err(PreprocessError::NonTickAlignedRun {
                run: 1,
                step: 0,
                ..
            })
        ));
        let s = format_over_time(&m, &TimedRun::empty(m.initial()), 5, tick).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].input, vec![0.0; 11]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = split_by_runs(400, (0.75, 0.125, 0.125), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (300, 50, 50));
        let s2 = split_by_runs(250, (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!((s2.train.len(), s2.val.len(), s2.test.len()), (200, 25, 25));
        assert_eq!(split_by_runs(400, (0.75, 0.125, 0.125), 1).unwrap(), s);
        assert_ne!(split_by_runs(400, (0.75, 0.125, 0.125), 2).unwrap(), s);
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..400).collect::<Vec<_>>());
        assert!(matches!(
            split_by_runs(2, (0.8, 0.1, 0.1), 0),
            Err(PreprocessError::EmptySplit(_))
        ));
        assert!(matches!(
            split_by_runs(10, (0.8, 0.1, 0.2), 0),
            Err(PreprocessError::BadFractions(_))
        ));
    }

    #[test]
    fn scaler_maps_to_unit_range() {
        let m = system1();
        let set = format_runs(&m, &[rho1(&m)], CaseSpec::OverObservations { k: 3 }).unwrap();
        let sc = MinMaxScaler::fit(&set);
        let mut t = set.clone();
        sc.transform_set(&mut t);
        for s in &t.samples {
            assert!(s.input.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn sample_file_round_trip() {
        let m = system2();
        let tick = TickGrid::new(0.1).unwrap();
        let runs = vec![rho1_eps(&m), TimedRun::empty(m.initial()), rho1_eps(&m)];
        let set = format_runs(&m, &runs, CaseSpec::OverTime { k: 5, tick }).unwrap();
        let split = RunSplit {
            train: vec![0],
            val: vec![1],
            test: vec![2],
        };
        let text = write_samples(&m, &set, Some(&split));
        let (back, sp) = read_samples(&m, text.as_bytes()).unwrap();
        assert_eq!(back, set);
        assert_eq!(sp, Some(split));
        assert_eq!(write_samples(&m, &back, sp.as_ref()), text);
    }
}
