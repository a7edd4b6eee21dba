use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ifsdyn::analysis::WORD_BUDGET;
use ifsdyn::circle::GOLDEN_ANGLE;

#[derive(Debug, Parser)]
#[command(name = "ifsdyn", version, about = "Grid numerics for iterated function systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Cells per axis (cells on the circle). Each command has its own default.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory that receives report.json and the artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// File of `key = value` lines using the flag names; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the minimal affine system, check absorption, compute the attractor.
    Construct(ConstructArgs),
    /// Test whether sampled orbits are ε-dense.
    Minimality(MinimalityArgs),
    /// Estimate the distortion constants and compare with sampled ratios.
    Distortion(DistortionArgs),
    /// Search for an intermediate invariant set.
    Ergodicity(ErgodicityArgs),
    /// Probe the circle example, its rational substitution and perturbations.
    Circle(CircleArgs),
    /// Check or search disk families against the packing conditions.
    Packing {
        #[command(subcommand)]
        action: PackingCommand,
    },
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 0.76)]
    pub kappa: f64,
    /// Rotation angle in degrees.
    #[arg(long, default_value_t = 179.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Radius of the absorbing ball in units of delta.
    #[arg(long, default_value_t = 16.0)]
    pub u_factor: f64,
    #[command(flatten)]
    pub iteration: IterationArgs,
}

#[derive(Debug, Args)]
pub struct IterationArgs {
    /// Stop once successive iterates are this close; default two cells.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

/// Region for planar systems: the attractor grown from a ball at the origin.
#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Text file with one generator per line.
    #[arg(long)]
    pub system: PathBuf,
    /// Radius of the absorbing ball centered at the origin.
    #[arg(long, default_value_t = 16.0)]
    pub u_radius: f64,
    #[command(flatten)]
    pub iteration: IterationArgs,
}

#[derive(Debug, Args)]
pub struct MinimalityArgs {
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    /// Read epsilon as a fraction of the region's diameter.
    #[arg(long)]
    pub relative: bool,
    #[arg(long, default_value_t = 25)]
    pub max_word_len: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Map evaluations allowed per start point.
    #[arg(long, default_value_t = WORD_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Point pairs for the Hölder estimate of each generator.
    #[arg(long, default_value_t = 2000)]
    pub holder_pairs: usize,
    /// Sample cells for the contraction factor.
    #[arg(long, default_value_t = 4096)]
    pub xi_samples: usize,
    #[arg(long, default_value_t = 1000)]
    pub words: usize,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
    #[arg(long, default_value_t = 30)]
    pub max_len: usize,
    /// Also report the shrink time of a random reverse word to this diameter.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub max_r: usize,
}

#[derive(Debug, Args)]
pub struct ErgodicityArgs {
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = 8)]
    pub seed_sets: usize,
    #[arg(long, default_value_t = 20)]
    pub refine_steps: usize,
}

#[derive(Debug, Args)]
pub struct CircleArgs {
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,
    /// Rotation angle in turns.
    #[arg(long, default_value_t = GOLDEN_ANGLE)]
    pub angle: f64,
    /// Also run the experiment with the angle replaced by p/q.
    #[arg(long)]
    pub rational: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub amplitude: f64,
    /// Comma-separated perturbation amplitudes for a robustness sweep.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 300)]
    pub max_word_len: usize,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub seed_sets: usize,
    #[arg(long, default_value_t = 20)]
    pub refine_steps: usize,
}

#[derive(Debug, Subcommand)]
pub enum PackingCommand {
    /// Check an instance file against the four conditions.
    Verify {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Place disks greedily into the instance's ambient disk.
    Greedy {
        /// Instance file; its family is ignored.
        #[arg(long)]
        instance: PathBuf,
        /// Smallest disk radius; default four cells.
        #[arg(long)]
        min_radius: Option<f64>,
        #[arg(long, default_value_t = 200)]
        max_disks: usize,
    },
}
