use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use nefem_fsi::bench::{convergence_study, run_case, CaseConfig, CaseKind, TRANSIENT_UNSUPPORTED};
use nefem_fsi::fluid::Discretization;

#[derive(Parser, Debug)]
#[command(name = "nefem-fsi", version, about = "Steady NURBS-interface FSI benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; defaults to `[case] output` of the case file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for assembly and independent grids (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for compatibility; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the case on its configured grid.
    Run { config: PathBuf },
    /// h-refinement study over successive uniform refinements.
    Study {
        config: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Parse and check a case file without solving.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Nefem,
    Fem,
}

impl From<Mode> for Discretization {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Nefem => Discretization::Nefem,
            Mode::Fem => Discretization::Fem,
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Validate { config } => {
            let cfg = CaseConfig::load(&config)?;
            cfg.validate()?;
            println!("{}: valid {:?} case `{}`, Re = {:.4}", config.display(), cfg.case.kind, cfg.case.name, cfg.reynolds());
            if cfg.case.kind == CaseKind::Transient {
                println!("note: {TRANSIENT_UNSUPPORTED}");
            }
        }
        Command::Run { config } => {
            let cfg = CaseConfig::load(&config)?;
            let out = cli.output.clone().unwrap_or_else(|| cfg.output_dir());
            let result = run_case(&cfg, Some(&out))?;
            println!("{result}");
            println!("output     {}", out.display());
        }
        Command::Study { config, levels, mode } => {
            let cfg = CaseConfig::load(&config)?;
            let mode = mode.map(Discretization::from).unwrap_or(cfg.case.mode);
            let levels = levels.unwrap_or(cfg.case.levels);
            let report = convergence_study(&cfg, levels, mode, None)?;
            let out = cli.output.clone().unwrap_or_else(|| cfg.output_dir());
            report.write_files(&out)?;
            print!("{report}");
            println!("output     {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
