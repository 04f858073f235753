use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clickstat_cli::config::{EngineKind, ExperimentConfig, DEFAULT_BOOTSTRAP, DEFAULT_SEED};
use clickstat_cli::sweep::{self, Figure, SweepEngine};
use clickstat_cli::{
    analyze, click_table, write_analysis_csv, write_analysis_text, write_table_csv, CliError,
};
use clickstat_core::montecarlo::DEFAULT_TRIALS;

#[derive(Parser)]
#[command(
    name = "clickstat",
    version,
    about = "Click statistics of multiplexed on-off detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Mc,
}

#[derive(Args)]
struct Run {
    /// Override the engine.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Monte Carlo trials M.
    #[arg(long)]
    trials: Option<u64>,
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Click statistics and Q_M, Q_B, Q_PB for one configuration.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Keep per-trial rows (enables the bootstrap error of Q_PB).
        #[arg(long)]
        keep_raw: bool,
        #[command(flatten)]
        run: Run,
    },
    /// Raw M x N click table with f_k / w_j footer.
    Table {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: Run,
    },
    /// Q_PB and Q_B against the mean photon number (ring, Monte Carlo by default).
    SweepFig3 {
        #[arg(long, default_value_t = sweep::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 10)]
        n_trc: usize,
        /// Coherent and thermal mean photon numbers: list or start:stop:step.
        #[arg(long)]
        nbar_grid: Option<String>,
        #[arg(long)]
        odd_grid: Option<String>,
        #[arg(long)]
        fock_grid: Option<String>,
        /// Bootstrap resamples for the Q_PB error (Monte Carlo only).
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[command(flatten)]
        run: Run,
    },
    /// Q_PB over efficiency and truncation for Fock and odd-coherent inputs.
    SweepFig4 {
        #[arg(long, default_value_t = sweep::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long)]
        eta_grid: Option<String>,
        #[arg(long)]
        n_trc_grid: Option<String>,
        #[arg(long)]
        fock_grid: Option<String>,
        #[arg(long)]
        odd_grid: Option<String>,
        #[command(flatten)]
        run: Run,
    },
    /// Q_PB of photon-added thermal light with closed-form Q_M and Q_B.
    SweepFig5 {
        #[arg(long, default_value_t = sweep::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long)]
        nth_grid: Option<String>,
        #[arg(long)]
        eta_grid: Option<String>,
        #[arg(long)]
        n_trc_grid: Option<String>,
        #[command(flatten)]
        run: Run,
    },
}

fn grid(flag: &str, spec: &Option<String>, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
    match spec {
        None => Ok(default),
        Some(s) => sweep::parse_grid(s).map_err(|e| CliError::Config(format!("--{flag}: {e}"))),
    }
}

fn int_grid(
    flag: &str,
    spec: &Option<String>,
    default: Vec<usize>,
) -> Result<Vec<usize>, CliError> {
    match spec {
        None => Ok(default),
        Some(s) => sweep::parse_int_grid(s).map_err(|e| CliError::Config(format!("--{flag}: {e}"))),
    }
}

fn sweep_engine(run: &Run, default: EngineArg, bootstrap: usize) -> SweepEngine {
    match run.engine.unwrap_or(default) {
        EngineArg::Exact => SweepEngine::Exact,
        EngineArg::Mc => SweepEngine::MonteCarlo {
            trials: run.trials.unwrap_or(DEFAULT_TRIALS),
            seed: run.seed.unwrap_or(DEFAULT_SEED),
            bootstrap,
        },
    }
}

fn load(path: &Path, run: &Run) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    match run.engine {
        Some(EngineArg::Exact) => cfg.engine.kind = EngineKind::Exact,
        Some(EngineArg::Mc) => cfg.engine.kind = EngineKind::MonteCarlo,
        None => {}
    }
    if let Some(m) = run.trials {
        if m == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        cfg.engine.trials = m;
    }
    if let Some(s) = run.seed {
        cfg.engine.seed = s;
    }
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze {
            config,
            keep_raw,
            run,
        } => {
            let cfg = load(&config, &run)?;
            let a = sweep::with_workers(run.workers, || analyze(&cfg, keep_raw))??;
            write_analysis_text(&a, std::io::stdout().lock())?;
            if let Some(path) = &run.out {
                let mut w = BufWriter::new(File::create(path)?);
                write_analysis_csv(&a, &mut w)?;
                w.flush()?;
            }
        }
        Command::Table { config, run } => {
            let cfg = load(&config, &run)?;
            let table = sweep::with_workers(run.workers, || {
                click_table(&cfg, cfg.engine.trials, cfg.engine.seed)
            })??;
            if table.tail_mass > 0.0 {
                eprintln!(
                    "note: truncated tail mass {:e} renormalized by the sampler",
                    table.tail_mass
                );
            }
            let mut w = output(&run.out)?;
            write_table_csv(&table, &mut w)?;
            w.flush()?;
        }
        Command::SweepFig3 {
            kappa,
            eta,
            n_trc,
            nbar_grid,
            odd_grid,
            fock_grid,
            bootstrap,
            run,
        } => {
            let mut p = sweep::Fig3Params::new(sweep_engine(&run, EngineArg::Mc, bootstrap));
            p.kappa = kappa;
            p.eta = eta;
            p.n_trc = n_trc;
            p.nbar = grid("nbar-grid", &nbar_grid, p.nbar)?;
            p.odd_nbar = grid("odd-grid", &odd_grid, p.odd_nbar)?;
            p.fock = int_grid("fock-grid", &fock_grid, p.fock)?;
            let rows = sweep::with_workers(run.workers, || sweep::sweep_fig3(&p))??;
            sweep::emit(
                Figure::Fig3,
                &sweep::FIG3_HEADER,
                &sweep::fig3_records(&rows),
                run.out.as_deref(),
            )?;
        }
        Command::SweepFig4 {
            kappa,
            eta_grid,
            n_trc_grid,
            fock_grid,
            odd_grid,
            run,
        } => {
            let mut p = sweep::Fig4Params::new(sweep_engine(&run, EngineArg::Exact, 0));
            p.kappa = kappa;
            p.eta = grid("eta-grid", &eta_grid, p.eta)?;
            p.n_trc = int_grid("n-trc-grid", &n_trc_grid, p.n_trc)?;
            p.fock = int_grid("fock-grid", &fock_grid, p.fock)?;
            p.odd_nbar = grid("odd-grid", &odd_grid, p.odd_nbar)?;
            let rows = sweep::with_workers(run.workers, || sweep::sweep_fig4(&p))??;
            sweep::emit(
                Figure::Fig4,
                &sweep::FIG4_HEADER,
                &sweep::fig4_records(&rows),
                run.out.as_deref(),
            )?;
        }
        Command::SweepFig5 {
            kappa,
            nth_grid,
            eta_grid,
            n_trc_grid,
            run,
        } => {
            let mut p = sweep::Fig5Params::new(sweep_engine(&run, EngineArg::Exact, 0));
            p.kappa = kappa;
            p.n_th = grid("nth-grid", &nth_grid, p.n_th)?;
            p.eta = grid("eta-grid", &eta_grid, p.eta)?;
            p.n_trc = int_grid("n-trc-grid", &n_trc_grid, p.n_trc)?;
            let rows = sweep::with_workers(run.workers, || sweep::sweep_fig5(&p))??;
            sweep::emit(
                Figure::Fig5,
                &sweep::FIG5_HEADER,
                &sweep::fig5_records(&rows),
                run.out.as_deref(),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
