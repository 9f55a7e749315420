use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtomo_cli::{commands, validate, ExperimentConfig, Figure, Suite, Table};

#[derive(Parser)]
#[command(name = "cvtomo", version, about = "Phase-space tomography bounds and Monte Carlo benchmarks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Global {
    /// TOML configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also compute the inverse-Radon BHOM bound and Monte Carlo runs.
    #[arg(long, global = true)]
    include_bhom: bool,
    /// CSV destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and quadrature bounds for every configured state.
    ScrbTable,
    /// Data behind the Gaussian (fig3) or Fock (fig4) bound curves.
    Figure {
        #[arg(value_enum)]
        which: FigureArg,
    },
    /// Run an invariant suite; exits nonzero if any check fails.
    Validate {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Scaled mean-squared errors from the replication harness.
    Mse,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig3,
    Fig4,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Conventions,
    #[value(name = "appendixA", alias = "appendixa")]
    AppendixA,
    #[value(name = "appendixB", alias = "appendixb")]
    AppendixB,
    Crossovers,
    Dominance,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Conventions => Suite::Conventions,
            SuiteArg::AppendixA => Suite::AppendixA,
            SuiteArg::AppendixB => Suite::AppendixB,
            SuiteArg::Crossovers => Suite::Crossovers,
            SuiteArg::Dominance => Suite::Dominance,
        }
    }
}

fn emit(table: &Table, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            table.write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let g = cli.global;
    if g.print_defaults {
        print!("{}", ExperimentConfig::default().to_toml());
        return Ok(true);
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no subcommand given; see --help");
    };
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = g.out {
        cfg.out = Some(o);
    }
    cfg.validate()?;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    if g.include_bhom {
        eprintln!("note: --include-bhom adds the O(M^2) inverse-Radon bound and reconstruction; expect long runtimes");
    }
    let (table, ok) = match command {
        Command::ScrbTable => (commands::scrb_table(&cfg, g.include_bhom)?, true),
        Command::Figure { which } => {
            let f = match which {
                FigureArg::Fig3 => Figure::Fig3,
                FigureArg::Fig4 => Figure::Fig4,
            };
            (commands::figure(&cfg, f, g.include_bhom)?, true)
        }
        Command::Validate { suite } => validate::run(&cfg, suite.into())?,
        Command::Mse => (commands::mse(&cfg, g.include_bhom)?, true),
    };
    emit(&table, cfg.out.as_ref())?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
