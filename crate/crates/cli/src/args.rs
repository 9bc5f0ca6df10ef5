use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tracegn", version, about = "Trace-estimation sample sizes and stochastic Gauss-Newton inversion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Loose and tight probe counts over a range of failure probabilities.
    SampleSize(SampleSizeArgs),
    /// Empirical coverage of the trace estimator on a test operator.
    TraceCoverage(CoverageArgs),
    /// Monte-Carlo check of the extremal envelope of weighted gamma sums.
    ExtremalVerify(ExtremalArgs),
    /// Synthesize a DC-resistivity survey and invert it.
    Invert(InvertArgs),
}

/// Options shared by all subcommands. Any option except `--config` may also
/// be set in the config file as `key = value`; flags take precedence.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing [default: tracegn-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed [default: 1].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleSizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Relative accuracy [default: 0.1].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Smallest failure probability [default: 0.01].
    #[arg(long)]
    pub delta_min: Option<f64>,
    /// Largest failure probability [default: 0.3].
    #[arg(long)]
    pub delta_max: Option<f64>,
    /// Step between rows [default: 0.01].
    #[arg(long)]
    pub delta_step: Option<f64>,
    /// Rank for the necessary-size columns [default: 4].
    #[arg(long)]
    pub rank: Option<u64>,
    /// Largest sample size scanned [default: 1000000].
    #[arg(long)]
    pub scan_limit: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub common: Common,
    /// rank1, rank5, random20 or identity5 [default: rank1].
    #[arg(long)]
    pub fixture: Option<String>,
    /// [default: 0.1]
    #[arg(long)]
    pub eps: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub delta: Option<f64>,
    /// lower, upper or two_sided [default: lower].
    #[arg(long)]
    pub side: Option<String>,
    /// Independent estimates [default: 10000].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Probes per estimate [default: the sufficient size for the side].
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtremalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Gamma shape [default: 0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Gamma rate [default: 0.5].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of summands [default: 2].
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated evaluation points [default: one point in each
    /// determinate regime and one below the mean].
    #[arg(long)]
    pub x: Option<String>,
    /// Simplex grid spacing; its inverse must be an integer [default: 0.1].
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Monte-Carlo samples per point [default: 20000].
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub common: Common,
    /// E1 or E2 [default: E1].
    #[arg(long)]
    pub example: Option<String>,
    /// i..viii or vanilla [default: viii].
    #[arg(long)]
    pub variant: Option<String>,
    /// desk (32x32, p=15) or full (64x64, p=62) [default: desk].
    #[arg(long)]
    pub preset: Option<String>,
    /// Cells per side of the reconstruction grid, overriding the preset.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Source rows per side, overriding the preset.
    #[arg(long)]
    pub p: Option<usize>,
    /// Refinement of the synthesis grid [default: 2].
    #[arg(long)]
    pub fine_factor: Option<usize>,
    /// Relative noise level [default: 0.02].
    #[arg(long)]
    pub noise: Option<f64>,
    /// Discrepancy factor [default: 1.2].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Seed of the data noise [default: --seed].
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// [default: 100]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Initial fitting sample size [default: 1].
    #[arg(long)]
    pub n0: Option<usize>,
    /// Sufficient-decrease factor of the cross validation [default: 1].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// [default: 0.05]
    #[arg(long)]
    pub cv_eps: Option<f64>,
    /// [default: 0.3]
    #[arg(long)]
    pub cv_delta: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub uc_eps: Option<f64>,
    /// [default: 0.3]
    #[arg(long)]
    pub uc_delta: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub stop_eps: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub stop_delta: Option<f64>,
    /// Inner CG iteration limit [default: 20].
    #[arg(long)]
    pub pcg_iters: Option<usize>,
    /// Inner CG relative tolerance [default: 1e-3].
    #[arg(long)]
    pub pcg_tol: Option<f64>,
    /// Shift of the model smoothing preconditioner [default: 3e-3].
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// PDE solver: direct or cg [default: direct].
    #[arg(long)]
    pub solver: Option<String>,
    /// Tolerance of the cg PDE solver [default: 1e-10].
    #[arg(long)]
    pub cg_tol: Option<f64>,
    /// Use all experiments exactly once a probe set would reach s vectors
    /// [default: true].
    #[arg(long)]
    pub exact_when_saturated: Option<bool>,
}
