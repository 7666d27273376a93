//! `ness`: command-line driver for the stationary-state solvers and analyses.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ChainBlock, RunConfig, ToyBlock};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error(transparent)]
    Core(ness_core::Error),
}

impl From<ness_core::Error> for CliError {
    fn from(e: ness_core::Error) -> Self {
        use ness_core::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::DimensionMismatch(_)
            | E::IndexOutOfRange(_)
            | E::TooLarge { .. }
            | E::Json(_) => CliError::Config(e.to_string()),
            E::NotConverged(m) => CliError::NotConverged(m),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ness", version, about = "Stationary states of driven, dephased fermion chains")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for result files (default: NESS_OUT_DIR, then the working directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output file stem (default: the subcommand name).
    #[arg(long, global = true)]
    name: Option<String>,
    /// Seed for random initial states.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
struct ChainArgs {
    /// Number of sites N.
    #[arg(long = "n")]
    n_sites: Option<usize>,
    /// Interaction Δ.
    #[arg(long = "delta", allow_negative_numbers = true)]
    interaction: Option<f64>,
    /// Driving bias f.
    #[arg(long = "f", allow_negative_numbers = true)]
    bias: Option<f64>,
    /// Dephasing rate γ.
    #[arg(long = "gamma")]
    dephasing: Option<f64>,
    /// Reservoir coupling Γ.
    #[arg(long = "coupling")]
    coupling: Option<f64>,
    /// Hopping τ.
    #[arg(long = "tau", allow_negative_numbers = true)]
    hopping: Option<f64>,
    /// Staggered potential B.
    #[arg(long = "staggered", allow_negative_numbers = true)]
    staggered: Option<f64>,
}

impl From<&ChainArgs> for ChainBlock {
    fn from(a: &ChainArgs) -> Self {
        ChainBlock {
            n_sites: a.n_sites,
            hopping: a.hopping,
            interaction: a.interaction,
            coupling: a.coupling,
            bias: a.bias,
            dephasing: a.dephasing,
            staggered: a.staggered,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single point with the exact solver.
    NessExact {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Single point with MPO time evolution.
    NessMpo {
        #[command(flatten)]
        chain: ChainArgs,
        /// Maximum bond dimension.
        #[arg(long)]
        chi: Option<usize>,
        /// Relative discarded-weight cutoff.
        #[arg(long)]
        cutoff: Option<f64>,
        /// Trotter step ladder, e.g. `0.1,0.05`.
        #[arg(long, value_delimiter = ',')]
        dt: Option<Vec<f64>>,
        /// Checkpoint file, resumed from when it exists.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Toy model at one point, or over the bias-dephasing grid.
    Toy {
        /// Number of ladder states K.
        #[arg(long = "k")]
        n_levels: Option<usize>,
        #[arg(long = "delta", allow_negative_numbers = true)]
        interaction: Option<f64>,
        #[arg(long = "coupling")]
        coupling: Option<f64>,
        #[arg(long = "f")]
        bias: Option<f64>,
        #[arg(long = "gamma")]
        dephasing: Option<f64>,
        /// Evaluate the full grid from the config's `toy_grid`.
        #[arg(long)]
        grid: bool,
    },
    /// Parameter sweep from the config's `sweep` block.
    Sweep,
    /// Dephasing rate maximizing the current.
    GammaOpt {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Current-to-gradient ratio against chain length.
    Diffusion {
        #[command(flatten)]
        chain: ChainArgs,
        /// Chain lengths, e.g. `8,12,16,20`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Sector spectrum and domain-state deviations.
    Spectrum {
        #[command(flatten)]
        chain: ChainArgs,
        /// Particle number of the sector (default N/2).
        #[arg(long)]
        sector: Option<usize>,
    },
    /// Closed-form predictions.
    Predict {
        #[command(flatten)]
        chain: ChainArgs,
        /// Emit the sector probabilities p_n.
        #[arg(long)]
        pn: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::NessExact { .. } => "ness-exact",
            Command::NessMpo { .. } => "ness-mpo",
            Command::Toy { .. } => "toy",
            Command::Sweep => "sweep",
            Command::GammaOpt { .. } => "gamma-opt",
            Command::Diffusion { .. } => "diffusion",
            Command::Spectrum { .. } => "spectrum",
            Command::Predict { .. } => "predict",
        }
    }
}

/// File config with every command-line override applied.
fn effective_config(cmd: &Command, common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.check_subcommand(cmd.name())?;
    if let Some(d) = &common.out_dir {
        cfg.output.dir = Some(d.clone());
    }
    if cfg.output.dir.is_none() {
        cfg.output.dir = std::env::var_os("NESS_OUT_DIR").map(PathBuf::from);
    }
    if let Some(n) = &common.name {
        cfg.output.name = Some(n.clone());
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    match cmd {
        Command::NessExact { chain }
        | Command::GammaOpt { chain }
        | Command::Spectrum { chain, .. }
        | Command::Predict { chain, .. } => cfg.chain.merge(&chain.into()),
        Command::Diffusion { chain, sizes } => {
            cfg.chain.merge(&chain.into());
            if let Some(s) = sizes {
                cfg.diffusion_sizes = s.clone();
            }
        }
        Command::NessMpo { chain, chi, cutoff, dt, checkpoint } => {
            cfg.chain.merge(&chain.into());
            if let Some(c) = chi {
                cfg.solver.truncation.chi_max = *c;
            }
            if let Some(c) = cutoff {
                cfg.solver.truncation.svd_cutoff = *c;
            }
            if let Some(d) = dt {
                cfg.solver.schedule.time_steps = d.clone();
            }
            if let Some(p) = checkpoint {
                cfg.solver.schedule.checkpoint = Some(p.clone());
            }
            if let Some(seed) = cfg.seed {
                cfg.solver.schedule.initial = ness_core::mpo::InitialState::Random { seed };
            }
        }
        Command::Toy { n_levels, interaction, coupling, bias, dephasing, .. } => {
            cfg.toy.merge(&ToyBlock {
                n_levels: *n_levels,
                interaction: *interaction,
                coupling: *coupling,
                bias: *bias,
                dephasing: *dephasing,
            });
        }
        Command::Sweep => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli.command, &cli.common)?;
    let stem = cfg.stem(cli.command.name());
    match &cli.command {
        Command::NessExact { .. } => commands::ness_point(&cfg, &stem, true),
        Command::NessMpo { .. } => commands::ness_point(&cfg, &stem, false),
        Command::Toy { grid, .. } => commands::toy(&cfg, &stem, *grid),
        Command::Sweep => commands::sweep(&cfg, &stem),
        Command::GammaOpt { .. } => commands::gamma_opt(&cfg, &stem),
        Command::Diffusion { .. } => commands::diffusion(&cfg, &stem),
        Command::Spectrum { sector, .. } => commands::spectrum(&cfg, &stem, *sector),
        Command::Predict { pn, .. } => commands::predict(&cfg, &stem, *pn),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
