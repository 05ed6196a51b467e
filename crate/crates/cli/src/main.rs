use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use suspopt::characteristics::{fit_damper_curve, read_samples};
use suspopt::io::format_columns;
use suspopt_cli::scenario::{run_bode, run_grid};
use suspopt_cli::{compare_runs, run_scenario, CliError, LoadedConfig, RunOptions};

#[derive(Parser)]
#[command(name = "suspopt", version, about = "Suspension characteristic optimization runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Road seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Baseline file for half-3 (overrides the config).
    #[arg(long, global = true)]
    baseline: Option<PathBuf>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one case and write its result directory.
    Run { config: PathBuf },
    /// Compare the metric reports of two result directories.
    Compare { dir_a: PathBuf, dir_b: PathBuf },
    /// Bode magnitudes of the initial design.
    Bode { config: PathBuf },
    /// Objective surface over the spring and damper scales.
    Grid { config: PathBuf },
    /// Fit the exponential damper law to (velocity, force) samples.
    FitDamper { samples: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let opts = RunOptions {
        out: cli.out.clone(),
        seed: cli.seed,
        baseline: cli.baseline.clone(),
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Run { config } => {
            let loaded = LoadedConfig::load(config)?;
            let summary = run_scenario(&loaded, &opts)?;
            if !cli.quiet {
                let r = &summary.report;
                println!(
                    "{}: objective {} -> {} ({}), {} after {} evaluations",
                    summary.case,
                    r.get("initial.total").unwrap_or("?"),
                    r.get("optimized.total").unwrap_or("?"),
                    r.get("change.total").unwrap_or("?"),
                    r.get("termination").unwrap_or("?"),
                    r.get("evaluations").unwrap_or("?"),
                );
                println!("results in {}", summary.out_dir.display());
            }
        }
        Command::Compare { dir_a, dir_b } => print!("{}", compare_runs(dir_a, dir_b)?),
        Command::Bode { config } => {
            let loaded = LoadedConfig::load(config)?;
            for path in run_bode(&loaded, &opts)? {
                if !cli.quiet {
                    println!("wrote {}", path.display());
                }
            }
        }
        Command::Grid { config } => {
            let loaded = LoadedConfig::load(config)?;
            let (path, grid) = run_grid(&loaded, &opts)?;
            if !cli.quiet {
                if let Some(((i, j), v)) = grid.argmin() {
                    println!("grid minimum {v:?} at spring_scale {:?}, damper_scale {:?}", grid.x[i], grid.y[j]);
                }
                println!("wrote {}", path.display());
            }
        }
        Command::FitDamper { samples } => {
            let text = std::fs::read_to_string(samples).map_err(|e| CliError::io(samples, e))?;
            let fit = fit_damper_curve(&read_samples(&text)?)?;
            let [a, k, b, q] = fit.curve.params();
            let summary = format!(
                "a = {a:?}\nk = {k:?}\nb = {b:?}\nq = {q:?}\nresidual_rms = {:?}\niterations = {}\n",
                fit.residual_rms, fit.iterations
            );
            print!("{summary}");
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                let v: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
                let f: Vec<f64> = v.iter().map(|&v| fit.curve.eval(v)).collect();
                let path = dir.join("damper_fit.txt");
                let table = format_columns(Some("# velocity_m_s force_n"), " ", &[&v, &f]);
                std::fs::write(&path, format!("{}{table}", summary.lines().map(|l| format!("# {l}\n")).collect::<String>()))
                    .map_err(|e| CliError::io(&path, e))?;
            }
        }
    }
    Ok(())
}
