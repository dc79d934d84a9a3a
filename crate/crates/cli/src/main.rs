//! `tpdes`: simulate, format, train and evaluate state estimators.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpdes_core::eval::{compare, format_trajectories, Estimators, Provenance};
use tpdes_core::fnn::{gradient_check, GradCheckOptions, NetworkConfig, WeightsFile, WeightsMeta};
use tpdes_core::mbse::{
    filter_observations, monte_carlo_posterior, silent_propagate, OracleConfig,
};
use tpdes_core::pipeline::{
    load_dataset, report_json, run_pipeline, train_network, PipelineConfig, PipelineError,
};
use tpdes_core::preprocess::{format_runs, read_samples, split_by_runs, write_samples, CaseSpec};
use tpdes_core::provenance::fingerprint_bytes;
use tpdes_core::simulator::{generate_dataset, SimConfig, StopRule, DEFAULT_MAX_EVENTS};
use tpdes_core::{Belief64, GeneratorSet64, LtpaModel, Network64, TickGrid, TimedObservationSeq};

const OUT_DIR_ENV: &str = "TPDES_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "tpdes",
    version,
    about = "State estimation for timed probabilistic discrete event systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate timed runs from a model.
    Simulate(SimulateArgs),
    /// Format runs into samples and split them by run.
    Preprocess(PreprocessArgs),
    /// Train a network on a sample file.
    Train(TrainArgs),
    /// Compare backpropagation with finite differences.
    Gradcheck(GradcheckArgs),
    /// Estimate the state along an observation sequence.
    Estimate(EstimateArgs),
    /// Filter posterior next to a Monte Carlo posterior.
    Oracle(OracleArgs),
    /// Compare network and filter over a set of runs.
    Compare(CompareArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Obs,
    Time,
}

#[derive(Args)]
struct CaseOpts {
    #[arg(long, value_enum)]
    case: CaseArg,
    /// Window length.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Tick size, required with `--case time`.
    #[arg(long)]
    ti: Option<f64>,
}

impl CaseOpts {
    fn spec(&self) -> Result<CaseSpec, Failure> {
        match (self.case, self.ti) {
            (CaseArg::Obs, None) => Ok(CaseSpec::OverObservations { k: self.k }),
            (CaseArg::Obs, Some(_)) => Err(Failure::usage("--ti is only valid with --case time")),
            (CaseArg::Time, None) => Err(Failure::usage("--case time requires --ti")),
            (CaseArg::Time, Some(ti)) => Ok(CaseSpec::OverTime {
                k: self.k,
                tick: TickGrid::new(ti).map_err(|e| Failure::usage(format!("--ti: {e}")))?,
            }),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "horizon")]
    max_events: Option<u32>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Round sojourns to this tick grid.
    #[arg(long)]
    ti: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    runs: PathBuf,
    #[command(flatten)]
    case: CaseOpts,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = [0.75, 0.125, 0.125])]
    split: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Compact,
    Deep,
}

fn preset_config(preset: PresetArg, input: usize, outputs: usize, seed: u64) -> NetworkConfig {
    match preset {
        PresetArg::Compact => NetworkConfig::compact(input, outputs, seed),
        PresetArg::Deep => NetworkConfig::deep(input, outputs, seed),
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Feed raw inputs instead of min-max scaled ones.
    #[arg(long)]
    no_scale: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long)]
    input: usize,
    #[arg(long, default_value_t = 4)]
    outputs: usize,
    /// Samples in the checked batch.
    #[arg(long, default_value_t = 10)]
    batch: usize,
    #[arg(long, default_value_t = 200)]
    params: usize,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// Observation sequence, `(a,0.1)(c,0.5)` or one `label reading` per line.
    #[arg(long)]
    obs: PathBuf,
    /// Extra silent ticks after the last observation (time case).
    #[arg(long, default_value_t = 0)]
    extra_ticks: u64,
    /// Trajectory CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    obs: PathBuf,
    /// Silent time after the last observation.
    #[arg(long, default_value_t = 0.0)]
    elapsed: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    runs: PathBuf,
    #[command(flatten)]
    case: CaseOpts,
    /// Restrict to the test split recorded in this sample file.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Trajectories of the first compared run.
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory (as does TPDES_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Exit status with its diagnostic: 1 usage, 2 validation, 3 runtime.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            error: anyhow!(msg.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 3, error }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            error: e.into(),
        }
    }
}

trait Invalid<T> {
    fn invalid(self, what: impl std::fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Invalid<T> for Result<T, E> {
    fn invalid(self, what: impl std::fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into().context(what.to_string()),
        })
    }
}

fn load_model(path: &Path, fully_observable: bool) -> Result<LtpaModel, Failure> {
    LtpaModel::load(path, fully_observable).invalid(format!("model {}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?)
}

fn load_weights(path: &Path) -> Result<(WeightsFile, Network64), Failure> {
    let file = WeightsFile::load(path).invalid(format!("weights {}", path.display()))?;
    let net = file
        .to_network::<f64>()
        .invalid(format!("weights {}", path.display()))?;
    Ok((file, net))
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let model = load_model(&a.model, false)?;
    let stop = match (a.max_events, a.horizon) {
        (_, Some(h)) => StopRule::Horizon(h),
        (m, None) => StopRule::MaxEvents(m.unwrap_or(DEFAULT_MAX_EVENTS)),
    };
    let tick =
        a.ti.map(TickGrid::new)
            .transpose()
            .map_err(|e| Failure::usage(format!("--ti: {e}")))?;
    let data = generate_dataset(
        &model,
        a.count,
        &SimConfig {
            seed: a.seed,
            stop,
            tick,
        },
    )
    .invalid("simulation")?;
    let mut buf = Vec::new();
    data.write_jsonl(&model, &mut buf)
        .map_err(anyhow::Error::from)?;
    write(&a.out, buf)?;
    eprintln!("wrote {} runs to {}", data.runs.len(), a.out.display());
    Ok(())
}

fn preprocess(a: PreprocessArgs) -> Result<(), Failure> {
    let case = a.case.spec()?;
    let model = load_model(&a.model, case.tick().is_none())?;
    let data = load_dataset(&model, &a.runs)?;
    let set = format_runs(&model, &data.runs, case).invalid("formatting runs")?;
    let [ft, fv, fs] = a.split[..] else {
        return Err(Failure::usage(
            "--split takes three comma-separated fractions",
        ));
    };
    let split = split_by_runs(data.runs.len(), (ft, fv, fs), a.split_seed).invalid("--split")?;
    write(&a.out, write_samples(&model, &set, Some(&split)))?;
    eprintln!("wrote {} samples to {}", set.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let model = load_model(&a.model, false)?;
    let text = read(&a.samples)?;
    let (set, split) = read_samples(&model, BufReader::new(text.as_bytes()))
        .invalid(format!("samples {}", a.samples.display()))?;
    let split = split.ok_or_else(|| Failure {
        code: 2,
        error: anyhow!("sample file has no train/val/test split"),
    })?;
    let mut cfg = preset_config(a.preset, set.input_len(), model.num_states(), a.seed);
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(lr) = a.lr {
        cfg.optimizer.learning_rate = lr;
    }
    let trained = train_network(&set, &split, &cfg, !a.no_scale)?;
    let meta = WeightsMeta {
        case: Some(set.case),
        model: Some(model.fingerprint().to_string()),
        samples: Some(fingerprint_bytes(text.as_bytes())),
        scaler: trained.scaler,
        history: Some(trained.history.clone()),
    };
    write(
        &a.out,
        WeightsFile::from_network(&trained.network, meta).to_json(),
    )?;
    let h = &trained.history;
    if let (Some(ta), Some(va)) = (h.train_accuracy.last(), h.val_accuracy.last()) {
        eprintln!("final train accuracy {ta:.4}, validation accuracy {va:.4}");
    }
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<(), Failure> {
    let cfg = preset_config(a.preset, a.input, a.outputs, a.seed);
    let mut net = Network64::new(&cfg).invalid("network")?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x5eed);
    let x: Vec<f64> = (0..a.batch * a.input)
        .map(|_| rng.random_range(0.0..3.0))
        .collect();
    let mut t = vec![0.0; a.batch * a.outputs];
    for r in 0..a.batch {
        t[r * a.outputs + rng.random_range(0..a.outputs)] = 1.0;
    }
    let opts = GradCheckOptions {
        h: a.h,
        params: a.params,
        seed: a.seed,
        ..GradCheckOptions::default()
    };
    let r =
        gradient_check(&mut net, &x, &t, a.batch, cfg.loss, opts).map_err(anyhow::Error::from)?;
    println!(
        "checked {} parameters, max relative error {:.3e} (parameter {})",
        r.checked, r.max_rel_error, r.worst_param
    );
    if r.max_rel_error > a.tolerance {
        return Err(anyhow!(
            "relative error {:.3e} exceeds {:.1e}",
            r.max_rel_error,
            a.tolerance
        )
        .into());
    }
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let (file, net) = load_weights(&a.weights)?;
    let case = file.meta.case.ok_or_else(|| Failure {
        code: 2,
        error: anyhow!("weights file records no case"),
    })?;
    let model = load_model(&a.model, case.tick().is_none())?;
    let obs = TimedObservationSeq::parse(&model, &read(&a.obs)?)
        .invalid(format!("observations {}", a.obs.display()))?;
    let gen = GeneratorSet64::build(&model);
    let est =
        Estimators::new(&model, &gen, &net, file.meta.scaler.as_ref(), case).invalid("weights")?;
    let prior = Belief64::delta(model.num_states(), model.initial().0);
    let horizon = case.tick().map(|tick| {
        obs.iter()
            .map(|o| tick.to_ticks(o.clock).unwrap_or(0))
            .sum::<u64>()
            + a.extra_ticks
    });
    let traj = est
        .estimate(&prior, &obs, horizon)
        .invalid("observations")?;
    let csv = format_trajectories(model.states(), &traj.rows());
    match a.out {
        Some(path) => write(&path, csv),
        None => Ok(std::io::stdout()
            .write_all(csv.as_bytes())
            .context("stdout")?),
    }
}

fn oracle(a: OracleArgs) -> Result<(), Failure> {
    let model = load_model(&a.model, false)?;
    let obs = TimedObservationSeq::parse(&model, &read(&a.obs)?)
        .invalid(format!("observations {}", a.obs.display()))?;
    let gen = GeneratorSet64::build(&model);
    let prior = Belief64::delta(model.num_states(), model.initial().0);
    let filtered = filter_observations(&gen, &prior, &obs).invalid("filter")?;
    let last = filtered.last().expect("prior is always present");
    let filter = if a.elapsed > 0.0 {
        let v = silent_propagate(&gen, last.as_slice(), a.elapsed).invalid("filter")?;
        Belief64::normalize(v)
            .context("no mass survives the silent interval")?
            .into_vec()
    } else {
        last.as_slice().to_vec()
    };
    let mc = monte_carlo_posterior(
        &model,
        &obs,
        a.elapsed,
        &OracleConfig::new(a.delta, a.n, a.seed),
    )
    .context("monte carlo")?;
    let l1: f64 = filter
        .iter()
        .zip(mc.belief.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    let out = serde_json::json!({
        "states": model.states(),
        "filter": filter,
        "monte_carlo": mc.belief.as_slice(),
        "kept": mc.kept,
        "l1": l1,
    });
    println!("{}", serde_json::to_string_pretty(&out).context("json")?);
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<(), Failure> {
    let case = a.case.spec()?;
    let (file, net) = load_weights(&a.weights)?;
    if let Some(trained) = file.meta.case.filter(|c| *c != case) {
        return Err(Failure {
            code: 2,
            error: anyhow!("weights were trained for {trained:?}, not {case:?}"),
        });
    }
    let model = load_model(&a.model, case.tick().is_none())?;
    let data = load_dataset(&model, &a.runs)?;
    let runs = match &a.samples {
        Some(path) => {
            let (_, split) = read_samples(&model, BufReader::new(read(path)?.as_bytes()))
                .invalid(format!("samples {}", path.display()))?;
            let split = split.ok_or_else(|| Failure {
                code: 2,
                error: anyhow!("sample file has no split"),
            })?;
            split.test.iter().map(|&i| data.runs[i].clone()).collect()
        }
        None => data.runs,
    };
    let gen = GeneratorSet64::build(&model);
    let est =
        Estimators::new(&model, &gen, &net, file.meta.scaler.as_ref(), case).invalid("weights")?;
    let provenance = Provenance {
        model: model.fingerprint().to_string(),
        weights: file.fingerprint(),
        ..Provenance::default()
    };
    let report = compare(&est, &runs, provenance).invalid("comparison")?;
    write(&a.out, report_json(&report))?;
    if let Some(path) = &a.trajectories {
        let (traj, _) = est.compare_run(&runs[0]).invalid("comparison")?;
        write(path, format_trajectories(model.states(), &traj.rows()))?;
    }
    println!(
        "points {}  accuracy {:.4}  filter accuracy {:.4}  MAE {:.4}",
        report.points, report.accuracy, report.mbse_accuracy, report.overall_mae
    );
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<(), Failure> {
    let cfg = PipelineConfig::load(&a.config)?;
    let out_dir = a
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    let outcome = run_pipeline(&cfg, out_dir.as_deref())?;
    let r = &outcome.report;
    for p in outcome.artifacts.all() {
        eprintln!("wrote {}", p.display());
    }
    println!(
        "points {}  accuracy {:.4}  filter accuracy {:.4}  MAE {:.4}",
        r.points, r.accuracy, r.mbse_accuracy, r.overall_mae
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Train(a) => train(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Estimate(a) => estimate(a),
        Command::Oracle(a) => oracle(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
