use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omt_core::config::{
    default_gamma, DEFAULT_EPSILON, DEFAULT_INITIAL_COVER_RADIUS, DEFAULT_MAX_REPRESENTATIVES,
    DEFAULT_RADIUS, DEFAULT_SIGMA,
};
use omt_core::{FeatureVector, OmtConfig, StreamFormat, SynthSpec};

/// Online manifold tracking: streaming one-shot recognition experiments.
///
/// Options can also come from OMT_<NAME> environment variables and from a
/// key=value file given with --config; command-line flags take precedence
/// over the environment, which takes precedence over the file.
#[derive(Debug, Parser)]
#[command(name = "omt", version, args_override_self = true)]
pub struct Cli {
    /// key=value file of option defaults (keys are long flag names).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for sweeps; 1 runs sequentially.
    #[arg(long, global = true, env = "OMT_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic labeled stream.
    Synth(SynthArgs),
    /// Replay a stream through the recognizer and report its predictions.
    Run(RunArgs),
    /// Sweep epsilon, the generalization radius or the cover budget.
    Sweep(SweepArgs),
    /// Time every step of a replay.
    Bench(BenchArgs),
    /// ROC of the nearest-neighbor baseline over the radius.
    RocNn(RocNnArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, env = "OMT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of target frames.
    #[arg(long, env = "OMT_STEPS", default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, env = "OMT_DIM", default_value_t = 32)]
    pub dim: usize,
    #[arg(long, env = "OMT_LATENT_DIM", default_value_t = 2)]
    pub latent_dim: usize,
    /// Alternate target and distractor frames.
    #[arg(long, env = "OMT_INTERLEAVE")]
    pub interleave: bool,
    #[arg(long, env = "OMT_CLUSTERS", default_value_t = 42)]
    pub clusters: usize,
    #[arg(long, env = "OMT_SPREAD", default_value_t = 0.1)]
    pub spread: f64,
    #[arg(long, env = "OMT_MIN_DISTANCE", default_value_t = 0.1)]
    pub min_distance: f64,
    #[arg(long, env = "OMT_MAX_DISTANCE", default_value_t = 0.9)]
    pub max_distance: f64,
    #[arg(long, env = "OMT_MANIFOLD_RADIUS", default_value_t = 0.2)]
    pub manifold_radius: f64,
    #[arg(long, env = "OMT_START_OFFSET", default_value_t = 0.0)]
    pub start_offset: f64,
    #[arg(long, env = "OMT_DRIFT", default_value_t = 0.02)]
    pub drift: f64,
    #[arg(long, env = "OMT_SMOOTHNESS", default_value_t = 0.8)]
    pub smoothness: f64,
    #[arg(long, env = "OMT_NOISE", default_value_t = 0.005)]
    pub noise: f64,
    /// Repeat the target path with this period (0 = never).
    #[arg(long, env = "OMT_LOOP_PERIOD", default_value_t = 0)]
    pub loop_period: usize,
    /// Output format; defaults to the file extension.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            dim: self.dim,
            n_steps: self.steps,
            latent_dim: self.latent_dim,
            start_offset: self.start_offset,
            manifold_radius: self.manifold_radius,
            drift: self.drift,
            smoothness: self.smoothness,
            noise: self.noise,
            distractor_clusters: self.clusters,
            distractor_spread: self.spread,
            distractor_min_distance: self.min_distance,
            distractor_max_distance: self.max_distance,
            interleave: self.interleave,
            loop_period: self.loop_period,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for StreamFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => StreamFormat::Csv,
            FormatArg::Jsonl => StreamFormat::Jsonl,
        }
    }
}

/// Input stream, read as CSV or JSONL by extension unless --input-format is
/// given.
#[derive(Debug, Args)]
pub struct StreamArgs {
    #[arg(long, value_name = "FILE")]
    pub stream: PathBuf,
    #[arg(long, value_enum)]
    pub input_format: Option<FormatArg>,
}

impl StreamArgs {
    pub fn format(&self) -> StreamFormat {
        self.input_format
            .map(Into::into)
            .unwrap_or_else(|| StreamFormat::from_path(&self.stream))
    }
}

/// Recognizer parameters.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Generalization radius around the labeled example.
    #[arg(long, env = "OMT_RADIUS", default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
    /// Maximum number of representatives.
    #[arg(long, env = "OMT_K", default_value_t = DEFAULT_MAX_REPRESENTATIVES)]
    pub k: usize,
    /// Gaussian kernel bandwidth.
    #[arg(long, env = "OMT_SIGMA", default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Sink weight [default: exp(-4.5)].
    #[arg(long, env = "OMT_GAMMA")]
    pub gamma: Option<f64>,
    /// Recognition threshold on the absorption score.
    #[arg(long, env = "OMT_EPSILON", default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Initial cover radius.
    #[arg(long, env = "OMT_R0", default_value_t = DEFAULT_INITIAL_COVER_RADIUS)]
    pub r0: f64,
}

impl ModelArgs {
    pub fn config(&self, anchor: FeatureVector) -> OmtConfig {
        OmtConfig::new(anchor)
            .with_radius(self.radius)
            .with_max_representatives(self.k)
            .with_sigma(self.sigma)
            .with_gamma(self.gamma.unwrap_or_else(default_gamma))
            .with_epsilon(self.epsilon)
            .with_initial_cover_radius(self.r0)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-step predictions CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-step timing JSONL.
    #[arg(long, value_name = "FILE")]
    pub diagnostics: Option<PathBuf>,
    /// Final representatives CSV.
    #[arg(long, value_name = "FILE")]
    pub cover_dump: Option<PathBuf>,
    /// Summary JSON (also printed to stdout).
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
    /// Save the recognizer state after the last step.
    #[arg(long, value_name = "FILE")]
    pub snapshot_out: Option<PathBuf>,
    /// Continue from a saved state; its parameters replace the model flags.
    #[arg(long, value_name = "FILE")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Epsilon,
    Radius,
    K,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub grid: Vec<f64>,
    /// ROC CSV (epsilon) or per-value report table (radius, k).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Long-format ROC of every grid value (radius, k).
    #[arg(long, value_name = "FILE")]
    pub roc_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-step timing JSONL.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocNnArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Extra labeled examples, one comma-separated vector per line, in the
    /// stream's raw units. The stream's anchor is always included.
    #[arg(long, value_name = "FILE")]
    pub anchors: Option<PathBuf>,
    /// Comma-separated radii [default: 201 points on 0..2].
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}
