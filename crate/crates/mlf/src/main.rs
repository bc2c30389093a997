use anyhow::Context;
use clap::{Parser, Subcommand};
use mlf::bench::{self, report, ExperimentConfig};
use mlf::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Multi-level deep solver for PDE benchmarks.
#[derive(Parser)]
#[command(name = "mlf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write its report directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate a checkpoint directory on a fresh test grid.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Grid points per axis (total points for dimensions above 2).
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Emit the sampling diagnostics (pool, monitor, density, draw counts)
    /// that produce the given level's training points, as CSV on stdout.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Target level (>= 2; earlier levels are trained first).
        #[arg(long)]
        level: u32,
    },
    /// Run the executable theorem checks and print their verdicts as JSON.
    Check,
}

fn init_threads() {
    if let Ok(v) = std::env::var("MLF_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out_dir = bench::resolve_out_dir(&cfg, out.as_deref());
            let report = bench::run_experiment(&cfg, &out_dir)
                .with_context(|| format!("experiment failed (partial report in {})", out_dir.display()))?;
            println!("report written to {}", out_dir.join("report.json").display());
            if let Some(m) = report.final_metrics {
                println!("final e_inf = {:.6e}, e_2 = {:.6e}", m.e_inf, m.e_2);
            }
            if let Some(s) = report.spike {
                println!(
                    "spike |v| along y=1: start {:.4e}, mid {:.4e}, end {:.4e} (growth {:.2}x)",
                    s.v_max_start, s.v_max_mid, s.v_max_end, s.growth
                );
            }
            Ok(())
        }
        Command::Eval { checkpoint, grid } => {
            let csv = checkpoint.join("eval_heatmap.csv");
            let metrics = bench::evaluate_checkpoint(&checkpoint, grid, Some(&csv))?;
            match metrics {
                Some(m) => println!(
                    "{{\"e_inf\": {:.17e}, \"e_2\": {:.17e}, \"heatmap\": \"{}\"}}",
                    m.e_inf,
                    m.e_2,
                    csv.display()
                ),
                None => println!(
                    "{{\"e_inf\": null, \"e_2\": null, \"heatmap\": \"{}\"}}",
                    csv.display()
                ),
            }
            Ok(())
        }
        Command::Sample { config, level } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let data = bench::sample_level_data(&cfg, level)?;
            report::write_sample_csv(
                std::io::stdout().lock(),
                &data.pool,
                &data.monitor,
                &data.density,
                &data.drawn_counts,
            )?;
            Ok(())
        }
        Command::Check => {
            let verdicts = bench::theorem_checks();
            println!("{}", serde_json::to_string_pretty(&verdicts)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => 2,
                Some(_) => 3,
                None => 3,
            };
            ExitCode::from(code)
        }
    }
}
