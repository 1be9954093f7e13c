//! Argument parsing and experiment dispatch for the `plateau` binary.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use plateau_core::experiments::{
    self, entanglement_sweep, per_param_distribution, sweep_depth, sweep_pde, sweep_qubits, train,
};
use plateau_core::losses::{LossConfig, PdeKind, DEFAULT_PHYSICS_WEIGHT};
use plateau_core::report::{self, Table};
use plateau_core::Topology;

/// Environment variable consulted for the default `--seed`.
pub const SEED_ENV: &str = "PLATEAU_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "plateau",
    version,
    about = "Gradient-variance, entanglement and convergence experiments on layered variational circuits",
    after_help = "The default seed can be set with the PLATEAU_SEED environment variable."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean gradient variance against qubit count for the four loss configurations.
    SweepQubits(SweepQubitsArgs),
    /// Mean gradient variance against circuit depth.
    SweepDepth(SweepDepthArgs),
    /// PDE-constrained gradient variance with heat, Burgers and Saint-Venant residuals.
    SweepPde(SweepPdeArgs),
    /// Mean half-cut entanglement entropy for both entangler topologies.
    Entanglement(EntanglementArgs),
    /// Gradient-descent training traces for the four loss configurations.
    Converge(ConvergeArgs),
    /// Full per-parameter gradient variance vectors.
    PerParam(PerParamArgs),
    /// Run every experiment with default settings into one directory.
    All(AllArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Master seed for parameter draws.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file [default: <experiment>.<format> in the working directory]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SweepQubitsArgs {
    /// Qubit counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
    pub qubits: Vec<usize>,
    /// Circuit depth.
    #[arg(long, default_value_t = experiments::SWEEP_LAYERS)]
    pub layers: usize,
    /// Random parameter draws per cell (K).
    #[arg(long, short = 'k', default_value_t = experiments::DEFAULT_VARIANCE_SAMPLES)]
    pub samples: usize,
    /// Weight of the physics term.
    #[arg(long, default_value_t = DEFAULT_PHYSICS_WEIGHT)]
    pub physics_weight: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepDepthArgs {
    /// Qubit count.
    #[arg(long, default_value_t = experiments::DEPTH_QUBITS)]
    pub qubits: usize,
    /// Circuit depths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub layers: Vec<usize>,
    /// Random parameter draws per cell (K).
    #[arg(long, short = 'k', default_value_t = experiments::DEFAULT_VARIANCE_SAMPLES)]
    pub samples: usize,
    /// Weight of the physics term.
    #[arg(long, default_value_t = DEFAULT_PHYSICS_WEIGHT)]
    pub physics_weight: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PdeName {
    Heat,
    Burgers,
    SaintVenant,
}

impl PdeName {
    fn kind(self) -> PdeKind {
        match self {
            PdeName::Heat => PdeKind::heat(),
            PdeName::Burgers => PdeKind::burgers(),
            PdeName::SaintVenant => PdeKind::saint_venant(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepPdeArgs {
    /// Qubit count.
    #[arg(long, default_value_t = experiments::DEPTH_QUBITS)]
    pub qubits: usize,
    /// Circuit depth.
    #[arg(long, default_value_t = experiments::SWEEP_LAYERS)]
    pub layers: usize,
    /// PDE residuals to compare, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "heat,burgers,saint_venant")]
    pub pdes: Vec<PdeName>,
    /// Random parameter draws per cell (K).
    #[arg(long, short = 'k', default_value_t = experiments::DEFAULT_VARIANCE_SAMPLES)]
    pub samples: usize,
    /// Weight of the physics term.
    #[arg(long, default_value_t = DEFAULT_PHYSICS_WEIGHT)]
    pub physics_weight: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EntanglementArgs {
    /// Qubit counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
    pub qubits: Vec<usize>,
    /// Circuit depths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub layers: Vec<usize>,
    /// Random parameter draws per cell (K).
    #[arg(long, short = 'k', default_value_t = experiments::DEFAULT_ENTROPY_SAMPLES)]
    pub samples: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    /// Qubit count.
    #[arg(long, default_value_t = experiments::TRAIN_QUBITS)]
    pub qubits: usize,
    /// Circuit depth.
    #[arg(long, default_value_t = experiments::SWEEP_LAYERS)]
    pub layers: usize,
    /// Gradient-descent updates.
    #[arg(long, default_value_t = experiments::TRAIN_EPOCHS)]
    pub epochs: usize,
    /// Learning rate.
    #[arg(long, default_value_t = experiments::TRAIN_LEARNING_RATE)]
    pub lr: f64,
    /// Weight of the physics term.
    #[arg(long, default_value_t = DEFAULT_PHYSICS_WEIGHT)]
    pub physics_weight: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PerParamArgs {
    /// Qubit count.
    #[arg(long, default_value_t = experiments::PER_PARAM_QUBITS)]
    pub qubits: usize,
    /// Circuit depth.
    #[arg(long, default_value_t = experiments::SWEEP_LAYERS)]
    pub layers: usize,
    /// Random parameter draws per cell (K).
    #[arg(long, short = 'k', default_value_t = experiments::DEFAULT_VARIANCE_SAMPLES)]
    pub samples: usize,
    /// Weight of the physics term.
    #[arg(long, default_value_t = DEFAULT_PHYSICS_WEIGHT)]
    pub physics_weight: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AllArgs {
    /// Output directory [default: runs/run-<unix seconds>]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Master seed for parameter draws.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Fully resolved settings for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub qubits: Vec<usize>,
    pub layers: Vec<usize>,
    #[serde(rename = "K")]
    pub samples: usize,
    pub seed: u64,
    pub physics_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pdes: Vec<String>,
    pub output: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SweepQubits,
    SweepDepth,
    SweepPde,
    Entanglement,
    Converge,
    PerParam,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SweepQubits,
        Experiment::SweepDepth,
        Experiment::SweepPde,
        Experiment::Entanglement,
        Experiment::Converge,
        Experiment::PerParam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepQubits => "sweep_qubits",
            Experiment::SweepDepth => "sweep_depth",
            Experiment::SweepPde => "sweep_pde",
            Experiment::Entanglement => "entanglement",
            Experiment::Converge => "converge",
            Experiment::PerParam => "per_param",
        }
    }

    fn subcommand(self) -> &'static str {
        match self {
            Experiment::SweepQubits => "sweep-qubits",
            Experiment::SweepDepth => "sweep-depth",
            Experiment::SweepPde => "sweep-pde",
            Experiment::Entanglement => "entanglement",
            Experiment::Converge => "converge",
            Experiment::PerParam => "per-param",
        }
    }
}

/// What the binary was asked to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Single(RunConfig),
    All { dir: PathBuf, runs: Vec<RunConfig> },
}

fn default_path(experiment: Experiment, format: Format) -> PathBuf {
    PathBuf::from(format!("{}.{}", experiment.name(), format.extension()))
}

fn resolve(
    experiment: Experiment,
    qubits: Vec<usize>,
    layers: Vec<usize>,
    samples: usize,
    physics_weight: f64,
    out: OutputArgs,
) -> RunConfig {
    RunConfig {
        experiment,
        qubits,
        layers,
        samples,
        seed: out.seed,
        physics_weight,
        epochs: None,
        learning_rate: None,
        pdes: Vec::new(),
        output: out
            .output
            .unwrap_or_else(|| default_path(experiment, out.format)),
        format: out.format,
    }
}

impl From<Command> for Invocation {
    fn from(cmd: Command) -> Self {
        match cmd {
            Command::SweepQubits(a) => Invocation::Single(resolve(
                Experiment::SweepQubits,
                a.qubits,
                vec![a.layers],
                a.samples,
                a.physics_weight,
                a.out,
            )),
            Command::SweepDepth(a) => Invocation::Single(resolve(
                Experiment::SweepDepth,
                vec![a.qubits],
                a.layers,
                a.samples,
                a.physics_weight,
                a.out,
            )),
            Command::SweepPde(a) => {
                let mut rc = resolve(
                    Experiment::SweepPde,
                    vec![a.qubits],
                    vec![a.layers],
                    a.samples,
                    a.physics_weight,
                    a.out,
                );
                rc.pdes = a.pdes.iter().map(|p| p.kind().name().to_string()).collect();
                Invocation::Single(rc)
            }
            Command::Entanglement(a) => Invocation::Single(resolve(
                Experiment::Entanglement,
                a.qubits,
                a.layers,
                a.samples,
                DEFAULT_PHYSICS_WEIGHT,
                a.out,
            )),
            Command::Converge(a) => {
                let mut rc = resolve(
                    Experiment::Converge,
                    vec![a.qubits],
                    vec![a.layers],
                    1,
                    a.physics_weight,
                    a.out,
                );
                rc.epochs = Some(a.epochs);
                rc.learning_rate = Some(a.lr);
                Invocation::Single(rc)
            }
            Command::PerParam(a) => Invocation::Single(resolve(
                Experiment::PerParam,
                vec![a.qubits],
                vec![a.layers],
                a.samples,
                a.physics_weight,
                a.out,
            )),
            Command::All(a) => {
                let dir = a.out_dir.unwrap_or_else(|| {
                    let secs = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0);
                    PathBuf::from("runs").join(format!("run-{secs}"))
                });
                let seed = a.seed.to_string();
                let format = match a.format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let runs = Experiment::ALL
                    .iter()
                    .map(|e| {
                        let path = dir.join(default_path(*e, a.format));
                        let argv = [
                            "plateau",
                            e.subcommand(),
                            "--seed",
                            &seed,
                            "--format",
                            format,
                            "--output",
                            path.to_str().unwrap_or_default(),
                        ];
                        match parse_args(argv).expect("default arguments always parse") {
                            Invocation::Single(rc) => rc,
                            Invocation::All { .. } => unreachable!(),
                        }
                    })
                    .collect();
                Invocation::All { dir, runs }
            }
        }
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Ok(Cli::try_parse_from(argv)?.command.into())
}

#[derive(Debug)]
pub enum RunError {
    Experiment(plateau_core::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Experiment(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<plateau_core::Error> for RunError {
    fn from(e: plateau_core::Error) -> Self {
        RunError::Experiment(e)
    }
}

impl RunError {
    /// 1 for bad experiment settings, 2 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Experiment(_) => 1,
            RunError::Io { .. } => 2,
        }
    }
}

/// Writes `table` to `path` as CSV or JSON.
pub fn emit_table(
    table: &Table,
    format: Format,
    path: &Path,
    experiment: &str,
    config: &RunConfig,
) -> Result<(), RunError> {
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let cfg = serde_json::to_value(config).expect("run configuration serialises");
            table.to_json(experiment, &cfg)
        }
    };
    fs::write(path, body).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sibling(path: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}.{}", format.extension()))
}

fn configs(weight: f64) -> Vec<LossConfig> {
    LossConfig::standard()
        .into_iter()
        .map(|c| c.with_weight(weight))
        .collect()
}

/// Runs one experiment and writes its table(s). Returns the files written.
pub fn execute(rc: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let name = rc.experiment.name();
    let first = |v: &[usize]| v.first().copied().unwrap_or(0);
    let mut written = vec![rc.output.clone()];
    match rc.experiment {
        Experiment::SweepQubits => {
            let layers = first(&rc.layers);
            let r = sweep_qubits(&rc.qubits, layers, &configs(rc.physics_weight), rc.samples, rc.seed)?;
            emit_table(&report::sweep_table(&r), rc.format, &rc.output, name, rc)?;

            let mut ns: Vec<usize> = r.rows.iter().map(|x| x.n).collect();
            ns.sort_unstable();
            ns.dedup();
            let anchor = r
                .find(ns[0], layers, "global")
                .or_else(|| r.rows.iter().find(|x| x.n == ns[0]))
                .map(|x| x.mean_variance)
                .unwrap_or(1.0);
            let lines = report::reference_lines(&ns, anchor);
            let path = sibling(&rc.output, "reference", rc.format);
            emit_table(&report::reference_table(&lines), rc.format, &path, "reference", rc)?;
            written.push(path);
        }
        Experiment::SweepDepth => {
            let r = sweep_depth(
                &rc.layers,
                first(&rc.qubits),
                &configs(rc.physics_weight),
                rc.samples,
                rc.seed,
            )?;
            emit_table(&report::sweep_table(&r), rc.format, &rc.output, name, rc)?;
        }
        Experiment::SweepPde => {
            let pdes: Vec<PdeKind> = rc.pdes.iter().filter_map(|p| PdeKind::from_name(p)).collect();
            let r = sweep_pde(
                &pdes,
                first(&rc.qubits),
                first(&rc.layers),
                rc.physics_weight,
                rc.samples,
                rc.seed,
            )?;
            emit_table(&report::sweep_table(&r), rc.format, &rc.output, name, rc)?;
        }
        Experiment::Entanglement => {
            let r = entanglement_sweep(
                &rc.qubits,
                &rc.layers,
                &[Topology::NearestNeighbor, Topology::AllToAll],
                rc.samples,
                rc.seed,
            )?;
            emit_table(&report::entropy_table(&r), rc.format, &rc.output, name, rc)?;
        }
        Experiment::Converge => {
            let traces = configs(rc.physics_weight)
                .iter()
                .map(|c| {
                    train(
                        c,
                        first(&rc.qubits),
                        first(&rc.layers),
                        rc.epochs.unwrap_or(experiments::TRAIN_EPOCHS),
                        rc.learning_rate.unwrap_or(experiments::TRAIN_LEARNING_RATE),
                        rc.seed,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            emit_table(&report::trace_table(&traces), rc.format, &rc.output, name, rc)?;
        }
        Experiment::PerParam => {
            let r = per_param_distribution(
                first(&rc.qubits),
                first(&rc.layers),
                &configs(rc.physics_weight),
                rc.samples,
                rc.seed,
            )?;
            emit_table(&report::per_param_table(&r), rc.format, &rc.output, name, rc)?;
        }
    }
    Ok(written)
}

/// Runs a parsed invocation, creating the output directory for `all`.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>, RunError> {
    match inv {
        Invocation::Single(rc) => execute(rc),
        Invocation::All { dir, runs } => {
            fs::create_dir_all(dir).map_err(|source| RunError::Io {
                path: dir.clone(),
                source,
            })?;
            let mut out = Vec::new();
            for rc in runs {
                out.extend(execute(rc)?);
            }
            Ok(out)
        }
    }
}
