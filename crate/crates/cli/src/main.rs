use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gausslab::io::{load, save, write_off};
use gausslab_cli::{cmd_analyze, cmd_convergence, cmd_estimates, cmd_gen, parse_levels, AnalysisConfig, RawConfig};

#[derive(Parser)]
#[command(name = "gausslab", version, about = "Stability analysis of Gaussian-weighted critical surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a surface mesh (OFF or OBJ by extension, OFF on stdout).
    Gen(Common),
    /// Criticality, spectrum, index, splitting and analytic comparisons.
    Analyze(Common),
    /// Run the curvature-estimate battery.
    Estimates(Common),
    /// Refinement study written as CSV.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Inclusive level range, e.g. 4..6.
        #[arg(long, value_parser = levels_arg, default_value = "4..6")]
        levels: RangeInclusive<u32>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Analyze this OFF/OBJ mesh instead of generating one.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key; bare keys refer to tol.* (repeatable).
    #[arg(long = "tol", value_name = "KEY=VAL")]
    overrides: Vec<String>,
}

fn levels_arg(text: &str) -> Result<RangeInclusive<u32>, String> {
    parse_levels(text).map_err(|e| format!("{e:#}"))
}

impl Common {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        for o in &self.overrides {
            raw.apply_override(o)?;
        }
        AnalysisConfig::from_raw(&raw)
    }

    fn out_path(&self, cfg: &AnalysisConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from))
    }

    fn mesh(&self) -> Result<Option<gausslab::SurfaceMesh>> {
        self.mesh.as_deref().map(|p| load(p).with_context(|| format!("loading mesh {}", p.display()))).transpose()
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn run(cli: Cli) -> Result<Vec<String>> {
    match cli.command {
        Command::Gen(common) => {
            let cfg = common.config()?;
            let mesh = cmd_gen(&cfg)?;
            match common.out_path(&cfg) {
                Some(path) => save(&mesh, &path).with_context(|| format!("writing {}", path.display()))?,
                None => emit(&write_off(&mesh), None)?,
            }
            Ok(Vec::new())
        }
        Command::Analyze(common) => {
            let cfg = common.config()?;
            let report = cmd_analyze(&cfg, common.mesh()?)?;
            emit(&report.to_json()?, common.out_path(&cfg).as_deref())?;
            Ok(report.hard_failures)
        }
        Command::Estimates(common) => {
            let cfg = common.config()?;
            let report = cmd_estimates(&cfg, common.mesh()?)?;
            emit(&report.to_json()?, common.out_path(&cfg).as_deref())?;
            Ok(report.hard_failures)
        }
        Command::Convergence { common, levels } => {
            let cfg = common.config()?;
            let table = cmd_convergence(&cfg, levels)?;
            emit(&table.to_csv()?, common.out_path(&cfg).as_deref())?;
            Ok(table.hard_failures)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("assertion failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
