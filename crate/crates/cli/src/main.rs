//! `wgf`: batch driver for windowed Green function scattering runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wgf_mom::scenario::{self, RunOptions, ScenarioConfig};
use wgf_mom::solver::EIGEN_CAP;
use wgf_mom::{oracle, Error};

#[derive(Parser, Debug)]
#[command(name = "wgf", version, about = "Windowed Green function MoM solver for locally perturbed half-spaces")]
struct Cli {
    /// Worker threads (overrides solve.threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write GMRES residual histories.
    #[arg(long, global = true)]
    residuals: bool,
    /// Directory for tables, manifests and field files.
    #[arg(long, global = true, default_value = "wgf-output")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the scenario at geometry.mesh_size and window.A.
    Solve { config: PathBuf },
    /// Run the convergence study described by the [study] section.
    Study { config: PathBuf },
    /// Run the reference-solution self-checks.
    Validate,
    /// Eigenvalues of the plain and Jacobi-scaled system matrix.
    Spectrum {
        config: PathBuf,
        /// Largest matrix dimension to diagonalise.
        #[arg(long, default_value_t = EIGEN_CAP)]
        cap: usize,
    },
}

const CONFIG_ERROR: u8 = 1;
const NUMERICAL_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { CONFIG_ERROR } else { NUMERICAL_ERROR })
        }
    }
}

fn init_threads(cli: &Cli, cfg: Option<&ScenarioConfig>) -> wgf_mom::Result<()> {
    let n = cli.threads.or_else(|| cfg.and_then(|c| c.solve.threads));
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    Ok(())
}

fn load(cli: &Cli, path: &Path) -> wgf_mom::Result<ScenarioConfig> {
    let cfg = scenario::load(path)?;
    init_threads(cli, Some(&cfg))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> wgf_mom::Result<ExitCode> {
    match &cli.command {
        Command::Solve { config } | Command::Study { config } => {
            let cfg = load(cli, config)?;
            let opts = RunOptions {
                output_dir: cli.output_dir.clone(),
                residuals: cli.residuals,
                single: matches!(cli.command, Command::Solve { .. }),
            };
            let summary = scenario::run(&cfg, &opts)?;
            print!("{}", summary.report.study_csv());
            for a in &summary.artifacts {
                eprintln!("wrote {}", a.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            init_threads(cli, None)?;
            let mut ok = true;
            for c in oracle::self_checks()? {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!("{status} {}: {:.3e} (threshold {:.0e})", c.name, c.value, c.threshold);
                ok &= c.passed();
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(NUMERICAL_ERROR) })
        }
        Command::Spectrum { config, cap } => {
            let cfg = load(cli, config)?;
            let rep = scenario::spectrum(&cfg, &cli.output_dir, *cap)?;
            let (pmin, pmed) = rep.plain_spread();
            let (jmin, jmed) = rep.preconditioned_spread();
            println!("dimension {}", rep.dim);
            println!("plain:  min |lambda| {pmin:.4e}, median |lambda| {pmed:.4e}, ratio {:.4}", pmin / pmed);
            println!("jacobi: min |lambda| {jmin:.4e}, median |lambda| {jmed:.4e}, ratio {:.4}", jmin / jmed);
            Ok(ExitCode::SUCCESS)
        }
    }
}
