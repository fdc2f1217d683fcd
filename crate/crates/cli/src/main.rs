//! `stepsvm`: stepwise-SVM feature selection from the command line.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 I/O failure,
//! 3 solver failure. Diagnostics go to standard error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stepsvm::data::Orientation;
use stepsvm::{Error, ErrorKind};

#[derive(Parser, Debug)]
#[command(name = "stepsvm", version, about = "Stepwise-SVM feature selection for large-p-small-n data")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: one per core). Never changes any output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// key = value file supplying flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score every feature, tune the error-rate threshold and write the
    /// selection report plus the reduced dataset.
    Select(SelectArgs),
    /// Keep only the features named in a selection report.
    Reduce(ReduceArgs),
    /// Repeated stratified half-split benchmark of several reducers.
    Compare(CompareArgs),
    /// Euclidean distance matrices between samples, full and reduced.
    Distances(DistancesArgs),
    /// Generate a planted-signal dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrientationArg {
    /// One sample per line.
    #[value(alias = "samples-as-rows")]
    Samples,
    /// One feature (gene) per line, one sample per column.
    #[value(alias = "features-as-rows")]
    Features,
}

impl OrientationArg {
    fn name(self) -> &'static str {
        match self {
            OrientationArg::Samples => "samples",
            OrientationArg::Features => "features",
        }
    }
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Samples => Orientation::SamplesAsRows,
            OrientationArg::Features => Orientation::FeaturesAsRows,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Input CSV.
    #[arg(long, value_name = "PATH")]
    data: PathBuf,

    #[arg(long, value_enum, default_value_t = OrientationArg::Samples)]
    orientation: OrientationArg,

    /// Label field: zero-based position or header name (a row for
    /// feature-major files).
    #[arg(long, default_value = "0")]
    label_col: String,

    /// Field holding sample names.
    #[arg(long)]
    id_col: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Solver stopping tolerance on the largest KKT violation.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,

    /// Iteration cap of the dual solver.
    #[arg(long, default_value_t = 10_000_000)]
    max_iter: u64,

    /// Use the values as loaded instead of scaling by training statistics.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Kernel of the single-feature screening models.
    #[arg(long, default_value = "rbf")]
    select_kernel: String,

    /// Kernel of the model on the selected features.
    #[arg(long, default_value = "rbf")]
    predict_kernel: String,

    /// Box constraint.
    #[arg(long, default_value_t = 1.0)]
    c: f64,

    /// Cross-validation folds for the threshold search.
    #[arg(long, default_value_t = 5)]
    folds: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fixed threshold such as 6/181 or 0.0331; skips the search.
    #[arg(long)]
    threshold: Option<String>,

    #[command(flatten)]
    solver: SolverArgs,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Selection report written by `select`.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,

    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Method spec, repeatable, e.g. `stepwise,kernel=linear` or
    /// `correlation,thresholds=0.8:0.9` [default: stepwise, original, pca,
    /// correlation, rf_rfe].
    #[arg(long = "method", value_name = "SPEC")]
    methods: Vec<String>,

    /// Repetitions.
    #[arg(long, default_value_t = 100)]
    reps: usize,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Row label in the rank table [default: file stem of --data].
    #[arg(long)]
    label: Option<String>,

    /// Refuse to run unless the loaded data hashes to this value.
    #[arg(long, value_name = "HEX")]
    dataset_sha256: Option<String>,

    /// Manifest of an earlier run to reproduce.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,

    #[command(flatten)]
    solver: SolverArgs,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DistancesArgs {
    /// Input CSV.
    #[arg(long, value_name = "PATH")]
    data: PathBuf,

    #[arg(long, value_enum, default_value_t = OrientationArg::Samples)]
    orientation: OrientationArg,

    /// Label field, or `none` for unlabeled data (contrast is then omitted).
    #[arg(long, default_value = "0")]
    label_col: String,

    #[arg(long)]
    id_col: Option<String>,

    /// Selection report whose features define the reduced matrix.
    #[arg(long, value_name = "FILE")]
    subset: Option<PathBuf>,

    /// Standardize features first (default: raw values).
    #[arg(long)]
    standardize: bool,

    /// Order samples by class, then name.
    #[arg(long)]
    reorder: bool,

    /// Also write 8-bit greymaps (darker = more dissimilar).
    #[arg(long)]
    pgm: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 60)]
    n: usize,

    #[arg(long, default_value_t = 500)]
    p: usize,

    /// Informative features.
    #[arg(long, default_value_t = 10)]
    informative: usize,

    #[arg(long, default_value_t = 2)]
    classes: usize,

    /// Mean shift per class step on informative features.
    #[arg(long, default_value_t = 2.0)]
    effect: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Also write the informative indices, one per line.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 1,
        ErrorKind::Io => 2,
        ErrorKind::Solver => 3,
    }
}

fn run(args: Vec<String>) -> Result<(), Error> {
    let args = config::expand(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::Validation(e.to_string().trim_end().to_string())),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("cannot set up {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Select(a) => commands::select(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Compare(a) => commands::compare(a),
        Command::Distances(a) => commands::distances(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            if !msg.starts_with("error") {
                msg = format!("error: {msg}");
            }
            eprintln!("{msg}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
