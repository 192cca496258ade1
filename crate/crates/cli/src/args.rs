use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "sphcond",
    version,
    about = "Design and evaluate spherical sampling layouts by SHM conditioning"
)]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write a run manifest (command line, seed, config hash, file digests) here.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Generate a point set as `theta,phi` CSV (plus JSON sidecar when written to a file).
    Gen(GenArgs),
    /// Voronoi-based D-measure of a point set.
    Dmeasure(PointArgs),
    /// Condition number, eigenvalue summary and D-measure of a point set.
    Analyze(AnalyzeArgs),
    /// Select a well-conditioned subset by the transition sweep.
    Optimize(OptimizeArgs),
    /// Plane-wave reproduction error of one or two loudspeaker layouts.
    AmbiEval(AmbiArgs),
    /// HRTF fitting study (ECC vs MCC) or LSD between two stored spectra.
    HrtfEval(HrtfArgs),
    /// Desk-scale recomputation of the published tables.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fibonacci,
    Gaussian,
    Equiangular,
    Tdesign,
    Cipic,
    Ecc,
    Mcc,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    pub scheme: Scheme,
    /// Number of points (fibonacci; for tdesign, the smallest design with at least Q points).
    #[arg(long)]
    pub q: Option<usize>,
    /// Grid order (gaussian, equiangular).
    #[arg(long)]
    pub order: Option<usize>,
    /// T-design name, e.g. T5Q12.
    #[arg(long)]
    pub name: Option<String>,
    /// Output CSV path; the sidecar JSON is written next to it. Default: CSV on stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// A point set read from a CSV file or generated from a scheme.
#[derive(Debug, Args, Serialize)]
pub struct PointArgs {
    /// Point-set CSV (`theta,phi`, with optional JSON sidecar).
    #[arg(long, conflicts_with = "scheme")]
    pub points: Option<PathBuf>,
    /// Generate the points instead of reading them.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Scheme point count (fibonacci, tdesign).
    #[arg(long)]
    pub q: Option<usize>,
    /// Scheme grid order (gaussian, equiangular).
    #[arg(long)]
    pub grid_order: Option<usize>,
    /// Scheme T-design name.
    #[arg(long)]
    pub design: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingArg {
    /// Colatitude from the direction's geometry.
    #[default]
    Geometric,
    /// Elevation fed unconverted as the polar argument.
    Literal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisArg {
    #[default]
    Complex,
    Real,
}

#[derive(Debug, Args, Serialize)]
pub struct ShmArgs {
    /// Spherical harmonic order N.
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mapping: MappingArg,
    #[arg(long, value_enum, default_value_t)]
    pub basis: BasisArg,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    pub shm: ShmArgs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Exact,
    #[default]
    Local,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t)]
    pub solver: SolverArg,
    /// Margin by which λ_min must exceed η.
    #[arg(long, default_value_t = sphcond::optimizer::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Random seed (overridden by SPHCOND_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Local-search restarts per inner problem.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Branch-and-bound node budget per inner problem.
    #[arg(long, default_value_t = 50_000_000)]
    pub max_nodes: u64,
    /// Stop the sweep after this many transitions.
    #[arg(long, default_value_t = 5_000)]
    pub max_transitions: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    pub shm: ShmArgs,
    /// Number of points to keep.
    #[arg(long)]
    pub q_prime: usize,
    /// Hoop constraints JSON `{"membership": [...], "caps": [...]}`, or `cipic`
    /// for the built-in caps of the CIPIC grid.
    #[arg(long)]
    pub hoops: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory for `trace.json` and `selected.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderArg {
    #[default]
    Pinv,
    ModeMatching,
    Sampling,
    Regularized,
}

#[derive(Debug, Args, Serialize)]
pub struct AmbiArgs {
    /// Loudspeaker layout CSV.
    #[arg(long)]
    pub speakers: PathBuf,
    /// Second layout to compare against, direction by direction.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Decoding order N.
    #[arg(long)]
    pub order: usize,
    /// Evaluation order (default: the decoding order).
    #[arg(long)]
    pub eval_order: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub decoder: DecoderArg,
    /// Regularization β for `--decoder regularized`.
    #[arg(long, default_value_t = 1e-3)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t)]
    pub basis: BasisArg,
    /// Directory for the error-map CSVs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HrtfArgs {
    /// SH order of the synthetic field and of the fits.
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Random seed (overridden by SPHCOND_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative measurement noise added on the ECC/MCC grids.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Reference spectrum header JSON; with `--test`, only the LSD map is computed.
    #[arg(long, requires = "test")]
    pub reference: Option<PathBuf>,
    /// Test spectrum header JSON.
    #[arg(long, requires = "reference")]
    pub test: Option<PathBuf>,
    /// Directory for LSD maps and the full report.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Table1,
    Table2,
    Table3,
    AppendixC,
}

impl std::str::FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Table::Table1),
            "table2" => Ok(Table::Table2),
            "table3" => Ok(Table::Table3),
            "appendixc" => Ok(Table::AppendixC),
            _ => Err(format!(
                "unknown table `{s}` (expected table1, table2, table3 or appendixC)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Table2Row {
    #[default]
    All,
    Tdesign,
    Fibonacci,
    Gaussian,
    Proposed,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    /// table1, table2, table3 or appendixC.
    pub table: Table,
    /// Candidate count for table1 (one of 50, 55, …, 100).
    #[arg(long, default_value_t = 100)]
    pub q: usize,
    /// Row of table2 to recompute.
    #[arg(long, value_enum, default_value_t)]
    pub row: Table2Row,
    /// Random seed (overridden by SPHCOND_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Local-search restarts per inner problem.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Transition cap for every sweep.
    #[arg(long, default_value_t = 5_000)]
    pub max_transitions: usize,
    /// Write the report here as well as to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
