//! Command-line front end: argument parsing, dataset handling, model files
//! and evaluation reports.

pub mod commands;
pub mod eval;
pub mod manifest;
pub mod model_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::AdlError;
use crate::features::{FeatureConfig, Scale, WindowFn};
use crate::trainer::{Algorithm, TrainConfig};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Bad arguments or configuration.
pub const EXIT_USAGE: i32 = 1;
/// Unreadable or inconsistent data.
pub const EXIT_DATA: i32 = 2;
/// Numerical failure during training or scoring.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "adl", version, about = "Adversarial class-specific dictionaries for audio classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one dictionary per class directory of DATA_DIR.
    Train {
        data_dir: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        features: FeatureFlags,
        /// Model output file.
        #[arg(long, default_value = "model.adl")]
        out: PathBuf,
    },
    /// Classify one WAV clip by majority vote over its patches.
    Classify { model: PathBuf, wav: PathBuf },
    /// Clip-level accuracy over a directory-per-class test set.
    Eval {
        model: PathBuf,
        test_dir: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Stratified cross-validation over a grid of rho values.
    Gridsearch {
        data_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Comma-separated rho values.
        #[arg(long, value_delimiter = ',', default_values_t = commands::DEFAULT_RHO_GRID.to_vec())]
        rho_grid: Vec<f64>,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        features: FeatureFlags,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Accuracy against atoms per class on a fixed held-out split.
    SweepAtoms {
        data_dir: PathBuf,
        /// Comma-separated atom counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
        atoms_list: Vec<usize>,
        /// The held-out split is one fold out of this many.
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        features: FeatureFlags,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the patch matrix of one clip.
    Features {
        wav: PathBuf,
        #[command(flatten)]
        features: FeatureFlags,
        #[arg(long, default_value = "features.adlf")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Recon,
    Adv1,
    Adv2,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Recon => Algorithm::Reconstructive,
            AlgorithmArg::Adv1 => Algorithm::AdversarialBatch,
            AlgorithmArg::Adv2 => Algorithm::AdversarialMinibatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hann,
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Db,
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    /// Atoms per class dictionary.
    #[arg(long, default_value_t = 32)]
    pub atoms: usize,
    /// Nonzeros per code.
    #[arg(long, default_value_t = 2)]
    pub sparsity: usize,
    /// Weight of the off-class term.
    #[arg(long, default_value_t = 1e-3)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Adv2)]
    pub algorithm: AlgorithmArg,
    /// Maximum outer iterations.
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative objective change that counts as converged.
    #[arg(long, default_value_t = 1e-4)]
    pub conv_tol: f64,
    /// Column-update sweeps per dictionary update.
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
}

impl TrainFlags {
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            atoms: self.atoms,
            sparsity: self.sparsity,
            rho: self.rho,
            max_outer_iters: self.iters,
            conv_tol: self.conv_tol,
            seed: self.seed,
            algorithm: self.algorithm.into(),
            sweeps: self.sweeps,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FeatureFlags {
    #[arg(long, default_value_t = 1024)]
    pub fft_size: usize,
    #[arg(long, default_value_t = 512)]
    pub hop: usize,
    #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
    pub window: WindowArg,
    /// Frames per patch.
    #[arg(long, default_value_t = 50)]
    pub window_frames: usize,
    /// Frames between consecutive patches.
    #[arg(long, default_value_t = 1)]
    pub shift: usize,
    #[arg(long, value_enum, default_value_t = ScaleArg::Db)]
    pub scale: ScaleArg,
    /// Level range of the dB scale.
    #[arg(long, default_value_t = 120.0)]
    pub dynamic_range: f64,
    /// Drop frames this many dB below the loudest frame.
    #[arg(long)]
    pub trim_silence_db: Option<f64>,
}

impl FeatureFlags {
    pub fn to_config(&self) -> FeatureConfig {
        FeatureConfig {
            fft_size: self.fft_size,
            hop: self.hop,
            window: match self.window {
                WindowArg::Hann => WindowFn::Hann,
                WindowArg::Hamming => WindowFn::Hamming,
                WindowArg::Rectangular => WindowFn::Rectangular,
            },
            window_frames: self.window_frames,
            shift: self.shift,
            scale: match self.scale {
                ScaleArg::Db => Scale::Db,
                ScaleArg::Log => Scale::Log,
            },
            dynamic_range_db: self.dynamic_range,
            trim_silence_db: self.trim_silence_db,
            ..FeatureConfig::default()
        }
    }
}

/// Exit status for an error.
pub fn exit_code(err: &AdlError) -> i32 {
    match err {
        e if e.is_numerical() => EXIT_NUMERICAL,
        AdlError::InvalidInput(_) => EXIT_USAGE,
        AdlError::Column { source, .. } | AdlError::Class { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

/// Executes a parsed command, writing results to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> crate::Result<()> {
    match cli.command {
        Command::Train {
            data_dir,
            train,
            features,
            out: path,
        } => commands::cmd_train(&data_dir, &train.to_config(), &features.to_config(), &path, out).map(drop),
        Command::Classify { model, wav } => commands::cmd_classify(&model, &wav, out).map(drop),
        Command::Eval { model, test_dir, csv } => {
            commands::cmd_eval(&model, &test_dir, csv.as_deref(), out).map(drop)
        }
        Command::Gridsearch {
            data_dir,
            folds,
            rho_grid,
            train,
            features,
            csv,
        } => commands::cmd_gridsearch(
            &data_dir,
            folds,
            &rho_grid,
            &train.to_config(),
            &features.to_config(),
            csv.as_deref(),
            out,
        )
        .map(drop),
        Command::SweepAtoms {
            data_dir,
            atoms_list,
            folds,
            train,
            features,
            csv,
        } => commands::cmd_sweep_atoms(
            &data_dir,
            &atoms_list,
            folds,
            &train.to_config(),
            &features.to_config(),
            csv.as_deref(),
            out,
        )
        .map(drop),
        Command::Features {
            wav,
            features,
            out: path,
        } => commands::cmd_features(&wav, &features.to_config(), &path, out).map(drop),
    }
}

/// Entry point of the binary. `ADL_THREADS` caps the worker pool.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = std::env::var("ADL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("ADL_THREADS ignored: {e}");
        }
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
