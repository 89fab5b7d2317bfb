use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tnt_cli::commands::{self, Preset};
use tnt_cli::config::{OutputFormat, RunConfig};
use tnt_cli::error::{CliError, CliResult};
use tnt_core::optimizer::BasisMode;

#[derive(Parser)]
#[command(name = "tnt-readout", version, about = "Twist-and-turn squeezing and interaction-based readout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate the data behind one figure preset.
    Fig {
        #[arg(long, value_enum)]
        preset: Preset,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a single protocol.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Check the parity conditions for a protocol.
    Certify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration, laid over the preset defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of atoms.
    #[arg(long = "N", alias = "n-atoms")]
    n_atoms: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    /// Worker threads for parameter sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BasisArg {
    Fixed,
    Optimized,
}

impl Common {
    fn layered(&self, base: RunConfig) -> CliResult<RunConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            cfg = cfg.overlay(&RunConfig::load(path)?);
        }
        let flags = RunConfig {
            n_atoms: self.n_atoms,
            format: self.format,
            basis: self.basis.map(|b| match b {
                BasisArg::Fixed => BasisMode::FixedSx,
                BasisArg::Optimized => BasisMode::Optimized,
            }),
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        };
        Ok(cfg.overlay(&flags))
    }

    fn init_threads(&self) -> CliResult<()> {
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(CliError::Config("--threads must be >= 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn out_dir(cfg: &RunConfig, fallback: &str) -> PathBuf {
    cfg.out.as_ref().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out").join(fallback))
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Fig { preset, common } => {
            common.init_threads()?;
            let cfg = common.layered(preset.base())?;
            let resolved = cfg.resolve()?;
            let out = out_dir(&cfg, preset.name());
            let bundle = commands::fig(preset, &resolved)?;
            for path in bundle.commit(&out, "fig", Some(preset.name()), &resolved)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Run { common } => {
            common.init_threads()?;
            let cfg = common.layered(RunConfig::default())?;
            let resolved = cfg.resolve()?;
            let out = out_dir(&cfg, "run");
            let bundle = commands::run(&resolved)?;
            for path in bundle.commit(&out, "run", None, &resolved)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Certify { common } => {
            let resolved = common.layered(RunConfig::default())?.resolve()?;
            let report = commands::certify(&resolved)?;
            for line in commands::report_lines(&report) {
                println!("{line}");
            }
            let ok = report.all_hold();
            println!("{}", if ok { "certified" } else { "not certified" });
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
