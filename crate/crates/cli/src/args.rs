use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mdag_gof::gof::ModelKind;
use mdag_gof::simulate::{Distribution, Scenario};

#[derive(Debug, Parser)]
#[command(name = "mdag-gof", version, about = "Goodness-of-fit tests for missing-data DAG models")]
pub struct Cli {
    /// Worker threads for replications and bootstrap resamples.
    #[arg(long, global = true, env = "MDAG_GOF_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a missingness model against a CSV dataset.
    Test(TestArgs),
    /// Run a Monte-Carlo acceptance-rate study.
    Simulate(SimulateArgs),
    /// Inspect a graph file.
    Graph {
        #[command(subcommand)]
        op: GraphOp,
    },
    /// Check the criss-cross non-identification example in exact arithmetic.
    VerifyCounterexample {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    SeqMar,
    SeqMnar,
    BlockParallel,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::SeqMar => ModelKind::SeqMar,
            ModelArg::SeqMnar => ModelKind::SeqMnar,
            ModelArg::BlockParallel => ModelKind::BlockParallel,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV with a header row; missing cells are `NA`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Comma-separated variable order, earliest first. Required for sequential models.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap resamples per pair (block-parallel only).
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Bootstrap seed; drawn from entropy and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Graph JSON checked for colluders and criss-crosses before a seq-mnar test.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    #[arg(long, value_parser = parse_dist, default_value = "binary")]
    pub dist: Distribution,
    /// Sample sizes as `start:stop:step`, inclusive of `stop`.
    #[arg(long, value_parser = parse_grid, default_value = "1000:15000:500")]
    pub n_grid: Grid,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Number of variables.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Range of the missingness coefficients as `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "0,2", allow_hyphen_values = true)]
    pub param_range: (f64, f64),
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Drawn from entropy and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Curve CSV destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// For block-parallel scenarios, write the per-replication estimate table
    /// at the largest sample size here.
    #[arg(long)]
    pub theta_output: Option<PathBuf>,
    /// Directory that receives every replication dataset plus `verdicts.csv`.
    #[arg(long)]
    pub emit_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph JSON file.
    #[arg(long)]
    pub graph: PathBuf,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub given: Vec<String>,
    /// Indicators set to 1 by intervention.
    #[arg(long = "do", value_delimiter = ',')]
    pub intervene: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum GraphOp {
    /// d-separation query.
    Dsep {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Most restrictive model class the graph belongs to.
    Classify {
        #[command(flatten)]
        graph: GraphArgs,
        /// Variable order; falls back to the graph file's `order`.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Self-censoring edges, colluders, criss-crosses and colluding paths.
    Structures {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Full-law versus saturated observed-law parameter counts.
    CountParams {
        #[command(flatten)]
        graph: GraphArgs,
        /// One cardinality per variable (`inf` for continuous); binary when absent.
        #[arg(long, value_delimiter = ',')]
        cardinalities: Option<Vec<String>>,
    },
    /// Whether an independence implies an observed-data restriction.
    Testability {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        query: QueryArgs,
    },
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// Sample sizes parsed from `start:stop:step`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

/// `a:b:c` → `a, a+c, …` up to and including `b`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a non-negative integer"));
    let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
    if step == 0 || start == 0 || start > stop {
        return Err(format!("grid `{s}` needs 0 < start <= stop and step > 0"));
    }
    Ok(Grid((start..=stop).step_by(step).collect()))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let (lo, hi) = (num(a)?, num(b)?);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("range `{s}` needs finite lo < hi"));
    }
    Ok((lo, hi))
}
