use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wkb_lab::cli::{self, CliError, ExperimentConfig, Study};

/// Semiclassical Gross–Pitaevskii experiments on the periodic box.
#[derive(Parser)]
#[command(name = "wkb-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quadratic-potential Riccati examples against their closed forms.
    Riccati {
        /// harmonic, repulsive, focusing, defocusing or free.
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        omega: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Splitting solution against the WKB approximation over an ε sweep.
    Converge(Common),
    /// Unimodular amplitude with zero phase against the wave-equation solution.
    Colinsoyeur(Common),
    /// Divergence of nearby solutions under a small amplitude perturbation.
    Instability(Common),
    /// Density and momentum against the limit (Euler) solution.
    Hydro(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; the shipped defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated, strictly decreasing list of ε values.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Grid points per dimension.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when the study's tolerance check fails.
    #[arg(long)]
    assert: bool,
}

fn load(study: Study, common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        None => ExperimentConfig::default_for(study),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg = ExperimentConfig::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if cfg.study != study {
                return Err(CliError::Config(format!(
                    "{} describes the {} study, not {study}",
                    path.display(),
                    cfg.study
                )));
            }
            cfg
        }
    };
    if let Some(eps) = &common.eps {
        cfg.epsilons = eps.clone();
    }
    if let Some(n) = common.grid {
        cfg.grid.points = Some(n);
    }
    if let Some(d) = common.dim {
        match (study, cfg.riccati.as_mut()) {
            (Study::Riccati, Some(r)) => r.dim = d,
            _ => cfg.grid.dim = d,
        }
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (study, common, example, omega) = match cli.command {
        Command::Riccati { example, omega, common } => (Study::Riccati, common, example, omega),
        Command::Converge(c) => (Study::Converge, c, None, None),
        Command::Colinsoyeur(c) => (Study::Colinsoyeur, c, None, None),
        Command::Instability(c) => (Study::Instability, c, None, None),
        Command::Hydro(c) => (Study::Hydro, c, None, None),
    };
    let result = load(study, &common).and_then(|mut cfg| {
        if let Some(r) = cfg.riccati.as_mut() {
            if let Some(e) = example {
                r.example = e;
            }
            if let Some(w) = omega {
                r.omega = w;
            }
        }
        cli::run(&cfg)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.table.trim_end());
            println!("{}", outcome.summary_line());
            if common.assert && !outcome.pass {
                ExitCode::from(cli::EXIT_ASSERTION as u8)
            } else {
                ExitCode::from(cli::EXIT_OK as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
