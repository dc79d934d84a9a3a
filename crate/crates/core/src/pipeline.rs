//! Configuration-driven pipeline: simulate, format, split, train, compare.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::Belief;
use crate::eval::{
    compare, format_trajectories, ComparisonReport, Estimators, EvalError, Provenance, Trajectories,
};
use crate::fnn::{
    Batchable, FnnError, Network, NetworkConfig, TrainHistory, WeightsFile, WeightsMeta,
};
use crate::mbse::GeneratorSet;
use crate::model::{LtpaModel, ModelError};
use crate::preprocess::{
    format_runs, split_by_runs, write_samples, CaseSpec, MinMaxScaler, PreprocessError, RunSplit,
    SampleSet,
};
use crate::provenance::fingerprint_bytes;
use crate::run::{ObservationError, TimedObservationSeq, TimedRun};
use crate::simulator::{
    generate_dataset, RawDataset, SimConfig, SimError, StopRule, DEFAULT_MAX_EVENTS,
};
use crate::ticks::TickGrid;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Network(#[from] FnnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("scenario: {0}")]
    Scenario(#[from] ObservationError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl PipelineError {
    /// True for problems with the inputs rather than with the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_) | PipelineError::Model(_) | PipelineError::Scenario(_)
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Obs,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_max_events")]
    pub max_events: u32,
}

fn default_max_events() -> u32 {
    DEFAULT_MAX_EVENTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Train, validation and test fractions of the runs.
    pub fractions: [f64; 3],
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Compact,
    Deep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub preset: Preset,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// Min-max scale inputs using the training split.
    #[serde(default = "yes")]
    pub scale: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Model file, relative to the config file.
    pub model: PathBuf,
    pub case: CaseKind,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ti: Option<f64>,
    /// Optional observation sequence whose trajectories are exported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
    /// Output directory, relative to the config file.
    pub out_dir: PathBuf,
    pub simulation: SimulationConfig,
    pub split: SplitConfig,
    pub network: NetworkSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config and resolves its relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.model = base.join(&cfg.model);
        cfg.out_dir = base.join(&cfg.out_dir);
        if let Some(s) = &cfg.scenario {
            cfg.scenario = Some(base.join(s));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        match (self.case, self.ti) {
            (CaseKind::Time, None) => return bad("case = \"time\" requires ti (the tick size)"),
            (CaseKind::Obs, Some(_)) => return bad("ti is only valid with case = \"time\""),
            _ => {}
        }
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.simulation.count == 0 {
            return bad("simulation.count must be positive");
        }
        if self.simulation.max_events == 0 {
            return bad("simulation.max_events must be positive");
        }
        self.case_spec()?;
        Ok(())
    }

    pub fn case_spec(&self) -> Result<CaseSpec, PipelineError> {
        Ok(match (self.case, self.ti) {
            (CaseKind::Obs, _) => CaseSpec::OverObservations { k: self.k },
            (CaseKind::Time, Some(ti)) => CaseSpec::OverTime {
                k: self.k,
                tick: TickGrid::new(ti).map_err(|e| PipelineError::Config(format!("ti: {e}")))?,
            },
            (CaseKind::Time, None) => {
                return Err(PipelineError::Config("case = \"time\" requires ti".into()))
            }
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig, PipelineError> {
        Ok(SimConfig {
            seed: self.simulation.seed,
            stop: StopRule::MaxEvents(self.simulation.max_events),
            tick: self.case_spec()?.tick(),
        })
    }

    /// Preset with overrides, sized for the case and the model.
    pub fn network_config(&self, num_states: usize) -> Result<NetworkConfig, PipelineError> {
        let input = self.case_spec()?.input_len();
        let n = &self.network;
        let mut cfg = match n.preset {
            Preset::Compact => NetworkConfig::compact(input, num_states, n.seed),
            Preset::Deep => NetworkConfig::deep(input, num_states, n.seed),
        };
        if let Some(e) = n.epochs {
            cfg.epochs = e;
        }
        if let Some(b) = n.batch_size {
            cfg.batch_size = b;
        }
        if let Some(lr) = n.learning_rate {
            cfg.optimizer.learning_rate = lr;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("simulation".to_string(), self.simulation.seed),
            ("split".to_string(), self.split.seed),
            ("network".to_string(), self.network.seed),
        ])
    }
}

/// Formats all runs and partitions them.
pub fn prepare_samples(
    model: &LtpaModel,
    runs: &[TimedRun],
    case: CaseSpec,
    split: &SplitConfig,
) -> Result<(SampleSet, RunSplit), PipelineError> {
    let set = format_runs(model, runs, case)?;
    let [a, b, c] = split.fractions;
    let split = split_by_runs(runs.len(), (a, b, c), split.seed)?;
    Ok((set, split))
}

/// A trained network with what is needed to deploy it.
pub struct Trained {
    pub network: Network<f64>,
    pub scaler: Option<MinMaxScaler>,
    pub history: TrainHistory,
}

/// Trains on the training split, validating on the validation split. The
/// scaler, if requested, is fitted on training inputs only.
pub fn train_network(
    set: &SampleSet,
    split: &RunSplit,
    config: &NetworkConfig,
    scale: bool,
) -> Result<Trained, PipelineError> {
    let mut train = set.subset(&split.train);
    let mut val = set.subset(&split.val);
    let scaler = scale.then(|| MinMaxScaler::fit(&train));
    if let Some(s) = &scaler {
        s.transform_set(&mut train);
        s.transform_set(&mut val);
    }
    let mut network = Network::<f64>::new(config)?;
    let history = network.train(
        &Batchable::from_set(&train),
        Some(&Batchable::from_set(&val)),
    )?;
    Ok(Trained {
        network,
        scaler,
        history,
    })
}

/// Paths of everything a pipeline run writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub runs: PathBuf,
    pub samples: PathBuf,
    pub weights: PathBuf,
    pub report: PathBuf,
    pub trajectories: PathBuf,
    pub scenario: Option<PathBuf>,
}

impl Artifacts {
    pub fn in_dir(dir: &Path, scenario: bool) -> Self {
        Artifacts {
            runs: dir.join("runs.jsonl"),
            samples: dir.join("samples.txt"),
            weights: dir.join("weights.json"),
            report: dir.join("report.json"),
            trajectories: dir.join("trajectories.csv"),
            scenario: scenario.then(|| dir.join("scenario.csv")),
        }
    }

    pub fn all(&self) -> Vec<&Path> {
        let mut v = vec![
            &*self.runs,
            &self.samples,
            &self.weights,
            &self.report,
            &self.trajectories,
        ];
        v.extend(self.scenario.as_deref());
        v
    }
}

pub struct PipelineOutcome {
    pub report: ComparisonReport,
    pub history: TrainHistory,
    pub artifacts: Artifacts,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

pub fn report_json(report: &ComparisonReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Runs every stage, writing artifacts to `out_dir` (the config's directory
/// when `None`).
pub fn run_pipeline(
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate()?;
    let case = cfg.case_spec()?;
    let model = LtpaModel::load(&cfg.model, case.tick().is_none())?;
    let out_dir = out_dir.unwrap_or(&cfg.out_dir);
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let artifacts = Artifacts::in_dir(out_dir, cfg.scenario.is_some());

    let dataset = generate_dataset(&model, cfg.simulation.count, &cfg.sim_config()?)?;
    let mut buf = Vec::new();
    dataset.write_jsonl(&model, &mut buf)?;
    write(&artifacts.runs, &buf)?;

    let (set, split) = prepare_samples(&model, &dataset.runs, case, &cfg.split)?;
    let samples_text = write_samples(&model, &set, Some(&split));
    write(&artifacts.samples, &samples_text)?;

    let net_cfg = cfg.network_config(model.num_states())?;
    let trained = train_network(&set, &split, &net_cfg, cfg.network.scale)?;
    let meta = WeightsMeta {
        case: Some(case),
        model: Some(model.fingerprint().to_string()),
        samples: Some(fingerprint_bytes(samples_text.as_bytes())),
        scaler: trained.scaler.clone(),
        history: Some(trained.history.clone()),
    };
    let weights = WeightsFile::from_network(&trained.network, meta);
    write(&artifacts.weights, weights.to_json())?;

    let gen = GeneratorSet::<f64>::build(&model);
    let est = Estimators::new(
        &model,
        &gen,
        &trained.network,
        trained.scaler.as_ref(),
        case,
    )?;
    let test_runs: Vec<TimedRun> = split
        .test
        .iter()
        .map(|&i| dataset.runs[i].clone())
        .collect();
    let provenance = Provenance {
        model: model.fingerprint().to_string(),
        weights: weights.fingerprint(),
        seeds: cfg.seeds(),
    };
    let report = compare(&est, &test_runs, provenance)?;
    write(&artifacts.report, report_json(&report))?;

    let (traj, _) = est.compare_run(&test_runs[0])?;
    write(
        &artifacts.trajectories,
        format_trajectories(model.states(), &traj.rows()),
    )?;

    if let (Some(src), Some(dst)) = (&cfg.scenario, &artifacts.scenario) {
        let traj = scenario_trajectories(&est, src)?;
        write(dst, format_trajectories(model.states(), &traj.rows()))?;
    }
    Ok(PipelineOutcome {
        report,
        history: trained.history,
        artifacts,
    })
}

/// Both estimators along an observation sequence read from `path`, starting
/// from the model's initial state.
pub fn scenario_trajectories(
    est: &Estimators<'_, f64>,
    path: &Path,
) -> Result<Trajectories, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let obs = TimedObservationSeq::parse(est.model, &text)?;
    let prior = Belief::delta(est.model.num_states(), est.model.initial().0);
    Ok(est.estimate(&prior, &obs, None)?)
}

/// Reads a dataset file written by the simulate stage.
pub fn load_dataset(model: &LtpaModel, path: &Path) -> Result<RawDataset, PipelineError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    Ok(RawDataset::read_jsonl(
        model,
        std::io::BufReader::new(file),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
model = "m.json"
case = "obs"
k = 3
out_dir = "out"

[simulation]
count = 10
seed = 1

[split]
fractions = [0.6, 0.2, 0.2]
seed = 2

[network]
preset = "compact"
seed = 3
epochs = 2
"#;

    #[test]
    fn parses_and_applies_overrides() {
        let cfg = PipelineConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.simulation.max_events, DEFAULT_MAX_EVENTS);
        assert!(cfg.network.scale);
        let net = cfg.network_config(4).unwrap();
        assert_eq!(net.sizes(), vec![6, 64, 32, 4]);
        assert_eq!(net.epochs, 2);
        assert_eq!(net.batch_size, 500);
        assert_eq!(cfg.sim_config().unwrap().tick, None);
    }

    #[test]
    fn time_case_requires_ti() {
        let text = BASE.replace("case = \"obs\"", "case = \"time\"");
        let err = PipelineConfig::from_toml(&text).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("ti"), "{err}");
        let ok = PipelineConfig::from_toml(&text.replace("k = 3", "k = 5\nti = 0.1")).unwrap();
        assert_eq!(ok.network_config(4).unwrap().input, 11);
        assert!(PipelineConfig::from_toml(&BASE.replace("k = 3", "k = 3\nti = 0.1")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(
            PipelineConfig::from_toml(&BASE.replace("seed = 3", "seed = 3\nwidth = 9")).is_err()
        );
        assert!(PipelineConfig::from_toml(&BASE.replace("k = 3", "k = 0")).is_err());
    }
}
