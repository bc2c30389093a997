use mlf::bench::{relative_errors, ExperimentConfig};
use mlf::mlt::{self};
use mlf::pde::points;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cfg_path = &args[1];
    let cfg = ExperimentConfig::from_path(std::path::Path::new(cfg_path)).unwrap();
    let run_cfg = cfg.to_run_config().unwrap();
    let problem = &run_cfg.problem;
    let tpts = match cfg.points.test {
        mlf::bench::TestSetSpec::Grid { n } => points::grid_points(&problem.domain, n),
        mlf::bench::TestSetSpec::Random { n } => points::random_test_points(&problem.domain, n, cfg.seed),
    };
    let exact: Option<Vec<Vec<f64>>> = problem
        .exact_solution
        .as_ref()
        .map(|f| tpts.iter().map(|x| f(x)).collect());
    let t0 = Instant::now();
    let result = mlt::run_multilevel_with(&run_cfg, |stack, level| {
        let focus = level.focus_fraction.unwrap_or(-1.0);
        match &exact {
            Some(ex) => {
                let pred = mlt::predict_with(problem, stack, &tpts)?;
                let (e_inf, e_2) = relative_errors(&pred, ex)?;
                println!(
                    "level {}: pre {:.3e} best {:.3e} impr {:.3} stalled {} e_inf {:.3e} e_2 {:.3e} focus {:.4} [{:.1}s]",
                    level.level, level.pre_loss, level.outcome.best_loss, level.improvement,
                    level.outcome.stalled, e_inf, e_2, focus, t0.elapsed().as_secs_f64()
                );
            }
            None => {
                println!(
                    "level {}: pre {:.3e} best {:.3e} impr {:.3} stalled {} focus {:.4} [{:.1}s]",
                    level.level, level.pre_loss, level.outcome.best_loss, level.improvement,
                    level.outcome.stalled, focus, t0.elapsed().as_secs_f64()
                );
            }
        }
        Ok(())
    });
    match result {
        Ok(run) => {
            if cfg.problem.name == "prandtl2d" && !run.stack.is_empty() {
                let max_v = |t: f64| -> f64 {
                    (0..401)
                        .map(|i| {
                            let x = i as f64 / 400.0;
                            mlt::predict_with(problem, &run.stack, &[vec![x, 1.0, t]]).unwrap()[0][1]
                                .abs()
                        })
                        .fold(0.0f64, f64::max)
                };
                let (v0, vmid, vend) = (max_v(0.0), max_v(0.08), max_v(0.16));
                println!(
                    "spike |v| y=1: t=0 {:.4e}, t=0.08 {:.4e}, t=0.16 {:.4e} (growth {:.2}x)",
                    v0, vmid, vend, vend / v0.max(1e-300)
                );
            }
            println!("done: stop {:?} total {:.1}s", run.stop, t0.elapsed().as_secs_f64());
        }
        Err(e) => println!("FAILED: {e}"),
    }
}
