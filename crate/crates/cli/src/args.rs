use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tempweak_core::changemap::DEFAULT_TAU;
use tempweak_core::metrics::DEFAULT_MEDIAN_WINDOW;
use tempweak_core::refinement::DEFAULT_THRESHOLD;
use tempweak_core::sampling::DEFAULT_P_REAL;
use tempweak_core::{ChangeMethod, Connectivity};

#[derive(Debug, Parser)]
#[command(name = "tempweak", version, about = "Weak change-detection supervision and change-map evaluation")]
pub struct Cli {
    /// Worker threads (0 picks one per core)
    #[arg(long, global = true, env = "TEMPWEAK_THREADS")]
    pub threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Change maps between date-t and date-t' masks, or weak targets for a batch plan
    Changemap(ChangemapArgs),
    /// Plan balanced batches of real and fake pairs
    BatchPlan(BatchPlanArgs),
    /// Drop training pairs whose predicted change exceeds a threshold
    Refine(RefineArgs),
    /// Score predicted change maps against references
    Evaluate(EvaluateArgs),
    /// Cut a raster into overlapping tiles
    Tile(TileArgs),
    /// Reassemble tile change maps into a mosaic
    Stitch(StitchArgs),
    /// Collapse a semantic mask to foreground/background
    MergeClasses(MergeClassesArgs),
    /// Nearest-neighbour downsampling of a mask by an integer factor
    Resample(ResampleArgs),
    /// Generate a synthetic building dataset
    Synth(SynthArgs),
    /// Check masks for invariant violations
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Siou,
    Xor,
    Or,
}

impl From<Mode> for ChangeMethod {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Siou => ChangeMethod::Siou,
            Mode::Xor => ChangeMethod::Xor,
            Mode::Or => ChangeMethod::Or,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Adjacency {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

impl From<Adjacency> for Connectivity {
    fn from(a: Adjacency) -> Self {
        match a {
            Adjacency::Four => Connectivity::Four,
            Adjacency::Eight => Connectivity::Eight,
        }
    }
}

/// Class table shared by commands that read semantic masks.
#[derive(Debug, Args)]
pub struct ClassTable {
    /// Number of classes K in the masks
    #[arg(long, default_value_t = 2)]
    pub num_classes: u16,

    /// Background class index
    #[arg(long, default_value_t = 0)]
    pub background: u8,
}

#[derive(Debug, Args)]
pub struct ChangemapArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// sIoU threshold; components scoring below it are changed
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,

    #[arg(long, value_enum, default_value_t = Mode::Siou)]
    pub mode: Mode,

    #[arg(long, value_enum, default_value_t = Adjacency::Eight)]
    pub connectivity: Adjacency,

    /// Classes of interest, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub classes: Vec<u8>,

    #[command(flatten)]
    pub table: ClassTable,

    /// Batch plan file; writes one weak change target per planned slot instead
    #[arg(long)]
    pub plan: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchPlanArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long)]
    pub batch_size: usize,

    /// Share of real pairs per batch
    #[arg(long, default_value_t = DEFAULT_P_REAL)]
    pub p_real: f64,

    #[arg(long)]
    pub seed: u64,

    /// Number of batches to plan
    #[arg(long, default_value_t = 1)]
    pub batches: u64,

    /// Plan file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Directory holding `<id>_change.png` predictions
    #[arg(long)]
    pub pred_dir: PathBuf,

    /// Largest changed-pixel fraction a kept pair may have
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,

    #[arg(long)]
    pub out: PathBuf,

    /// Report file; stdout when omitted
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Human-readable report
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted `<id>_change.png` maps
    #[arg(long)]
    pub pred: PathBuf,

    /// Directory of reference `<id>_change.png` maps
    #[arg(long = "ref")]
    pub reference: PathBuf,

    /// Apply the binary median filter to predictions before scoring
    #[arg(long)]
    pub median_filter: bool,

    /// Median window side
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    pub window: usize,

    /// Ground resolution in m/px for object areas
    #[arg(long)]
    pub resolution: Option<f64>,

    /// Report file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Human-readable report
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    /// Single-channel PNG
    #[arg(long)]
    pub input: PathBuf,

    /// Tile side in pixels
    #[arg(long, default_value_t = 256)]
    pub size: usize,

    /// Pixels shared by adjacent tiles
    #[arg(long, default_value_t = 6)]
    pub overlap: usize,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StitchArgs {
    /// Grid file written by `tile`
    #[arg(long)]
    pub grid: PathBuf,

    /// Directory of `tile_<k>.png` change maps; defaults to the grid's directory
    #[arg(long)]
    pub tiles: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeClassesArgs {
    #[arg(long)]
    pub input: PathBuf,

    /// Classes mapped to foreground, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub classes: Vec<u8>,

    #[command(flatten)]
    pub table: ClassTable,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub factor: usize,

    #[command(flatten)]
    pub table: ClassTable,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,

    #[arg(long, default_value_t = 64)]
    pub pairs: usize,

    /// Image side in pixels
    #[arg(long, default_value_t = 64)]
    pub size: usize,

    /// Share of pairs with a real change
    #[arg(long, default_value_t = 0.1)]
    pub change_rate: f64,

    /// Largest per-building shift between dates, in pixels
    #[arg(long, default_value_t = 1)]
    pub jitter: usize,

    /// Ground resolution in m/px
    #[arg(long, default_value_t = 0.2)]
    pub resolution: f64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Manifest whose masks are checked
    #[arg(long, required_unless_present = "mask")]
    pub manifest: Option<PathBuf>,

    /// Single mask PNG
    #[arg(long, conflicts_with = "manifest")]
    pub mask: Option<PathBuf>,

    #[command(flatten)]
    pub table: ClassTable,

    /// Resolution checked for `--mask`
    #[arg(long)]
    pub resolution: Option<f64>,
}
