use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use etdms::config::{ExperimentConfig, Kind};
use etdms::experiments::{adaptive, coarsen, converge, step_debug};

#[derive(Parser)]
#[command(name = "etdms", version, about = "Variable-step stabilized ETD multistep experiments for the NSS thin-film model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence table on uniform and perturbed meshes.
    Converge(RunArgs),
    /// Coarsening run with diagnostics, snapshots and scaling-law fits.
    Coarsen(RunArgs),
    /// Adaptive run compared with uniform runs at the smallest and largest steps.
    Adaptive(RunArgs),
    /// One multistep step with its constant chain and Lagrange window.
    StepDebug(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Overrides the mesh and initial-data seeds.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs, kind: Kind) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg.for_kind(kind)?)
}

fn report(dir: &Path, what: &str) {
    println!("{what} written to {}", dir.display());
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Converge(a) => {
            let cfg = load(&a, Kind::Converge)?;
            let table = converge::run_convergence(&cfg).context("convergence study failed")?;
            converge::write_convergence(&cfg, &table, &a.output)?;
            println!("{:>5} {:>14} {:>8} {:>14} {:>8}", "N_T", "err_uniform", "rate", "err_perturbed", "rate");
            let f = |x: Option<f64>, w: usize| x.map_or(format!("{:>w$}", "-"), |v| format!("{v:>w$.4}"));
            for r in &table.rows {
                println!(
                    "{:>5} {:>14.4e} {} {} {}",
                    r.n_t,
                    r.error_uniform,
                    f(r.rate_uniform, 8),
                    r.error_perturbed.map_or(format!("{:>14}", "-"), |e| format!("{e:>14.4e}")),
                    f(r.rate_perturbed, 8)
                );
            }
            report(&a.output, "converge.csv");
        }
        Command::Coarsen(a) => {
            let cfg = load(&a, Kind::Coarsen)?;
            let run = coarsen::run_coarsening(&cfg, Some(&a.output)).context("coarsening run failed")?;
            coarsen::write_coarsening(&cfg, &run, &a.output)?;
            if let Some(f) = run.fits.energy {
                println!("E ~ {:.4} ln t + {:.4}", f.slope, f.intercept);
            }
            if let Some(f) = run.fits.height {
                println!("h ~ t^{:.4}", f.slope);
            }
            if let Some(f) = run.fits.slope {
                println!("m ~ t^{:.4}", f.slope);
            }
            println!("modified-energy increases: {}", run.decay_violations);
            report(&a.output, "coarsen.csv and fits.json");
        }
        Command::Adaptive(a) => {
            let cfg = load(&a, Kind::Adaptive)?;
            let run = adaptive::run_adaptive_comparison(&cfg).context("adaptive comparison failed")?;
            adaptive::write_adaptive(&cfg, &run, &a.output)?;
            let r = &run.report;
            println!("steps: adaptive {} (+{} rejected), large {}, small {}", r.accepted_steps, r.rejected_attempts, r.large_steps, r.small_steps);
            println!("distance to small-step run: adaptive {:e}, large-step {:e}", r.distance_adaptive_small, r.distance_large_small);
            println!("late-time saturation at tau_max: {:.1}%", 100.0 * r.steps.saturation_fraction);
            report(&a.output, "adaptive_events.csv and report.json");
        }
        Command::StepDebug(a) => {
            let cfg = load(&a, Kind::StepDebug)?;
            let dbg = step_debug::run_step_debug(&cfg)?;
            step_debug::write_step_debug(&cfg, &dbg, &a.output)?;
            println!("{}", serde_json::to_string_pretty(&dbg)?);
        }
    }
    Ok(())
}
