use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qff_lab::commands::{self, BoundsQuery};
use qff_lab::{Context, ExperimentConfig, LabError, Result};

/// Quadrature Fourier feature experiments: datasets, kernel and posterior
/// error sweeps, ODIN runs, timing benchmarks and bound queries.
#[derive(Debug, Parser)]
#[command(name = "qff-lab", version)]
struct Cli {
    /// Experiment definition (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Added to every configured seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Use exact operators instead of features.
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one noisy dataset per seed and a manifest.
    GenData,
    /// Kernel reconstruction errors against the proven bounds.
    KernelSweep,
    /// Feature posterior errors against the exact GP.
    PosteriorSweep,
    /// Parameter inference per seed with timing.
    OdinRun,
    /// Per-evaluation timing over an observation or feature ladder.
    Bench,
    /// Evaluate error bounds and minimum quadrature orders.
    Bounds {
        #[command(subcommand)]
        query: BoundsCmd,
    },
}

#[derive(Debug, Subcommand)]
enum BoundsCmd {
    /// Kernel, first- and second-derivative error bounds at order m.
    Budget {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = std::f64::consts::PI.sqrt())]
        rho: f64,
    },
    /// Minimum order for a posterior error tolerance.
    Gprd {
        #[command(flatten)]
        common: Common,
        /// min(gamma, sigma^2)
        #[arg(long)]
        c: f64,
        /// Largest absolute observation
        #[arg(long)]
        r_max: f64,
        #[arg(long)]
        tol: f64,
    },
    /// Minimum order for a relative risk tolerance.
    Risk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-6)]
        jitter: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long)]
    n: usize,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| LabError::config("--workers", e.to_string()))?;
    }
    if let Command::Bounds { query } = &cli.command {
        let q = match *query {
            BoundsCmd::Budget { m, l, rho } => BoundsQuery::Budget { m, l, rho },
            BoundsCmd::Gprd { ref common, c, r_max, tol } => {
                BoundsQuery::Gprd { l: common.l, rho: common.rho, n: common.n, c, r_max, tol }
            }
            BoundsCmd::Risk { ref common, jitter, gamma, eps } => {
                BoundsQuery::Risk { l: common.l, rho: common.rho, jitter, gamma, n: common.n, eps }
            }
        };
        print!("{}", commands::bounds(&q)?);
        return Ok(());
    }
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let ctx = Context { out: cli.out, seed_offset: cli.seed_offset, force_exact: cli.exact };
    let dir = ctx.out_dir(&cfg);
    match cli.command {
        Command::GenData => {
            let out = commands::gen_data(&cfg, &ctx)?;
            println!("wrote {} datasets and {}", out.files.len(), out.manifest.display());
        }
        Command::KernelSweep => {
            let t = commands::kernel_sweep(&cfg, &ctx)?;
            println!("wrote {} rows to {}", t.rows.len(), dir.join("kernel_sweep.tsv").display());
        }
        Command::PosteriorSweep => {
            let t = commands::posterior_sweep(&cfg, &ctx)?;
            println!("wrote {} rows to {}", t.rows.len(), dir.join("posterior_sweep.tsv").display());
        }
        Command::OdinRun => {
            let out = commands::odin_run(&cfg, &ctx)?;
            print!("{}", out.summary.to_tsv(&cfg.hash()));
        }
        Command::Bench => {
            let out = commands::bench(&cfg, &ctx)?;
            print!("{}", out.table.to_tsv(&cfg.hash()));
        }
        Command::Bounds { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
