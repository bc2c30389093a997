// Reproduces a correction level standalone: train level 1, resample, then
// watch the level-2/3-style SSB-only phase epoch by epoch.
use mlf::jet_net::{NetSpec, Network};
use mlf::mls;
use mlf::mlt::{run_phases, OptimizerSpec, Phase, RunConfig, RunPlan, LevelPlan};
use mlf::pde::problems::builtin_problem;
use mlf::pde::{points, LossWeights};
use mlf::stream::{stream, StreamId};

fn main() {
    let problem = builtin_problem("sharp_poisson", 2).unwrap();
    let weights = LossWeights { residual: 1.0, boundary: 100.0 };
    let soap = |e: usize, lr: f64| Phase { epochs: e, optimizer: OptimizerSpec::Soap {
        lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, lr_decay: 0.97, lr_decay_every: 500,
        shampoo_decay: 0.95, precondition_frequency: 10, preconditioning: true } };
    let ssb = |e: usize, tau: mlf::optim::TauRule, c2: f64| Phase { epochs: e, optimizer: OptimizerSpec::Ssbroyden { tau, phi: 1.0, wolfe_c2: c2 } };

    // train two levels quickly to get a realistic stack
    let run_cfg = RunConfig {
        problem: builtin_problem("sharp_poisson", 2).unwrap(),
        hidden: vec![24, 24, 24],
        seed: 100,
        n_interior: 2000,
        n_boundary: 400,
        weights,
        monitor: mls::MonitorParams { gradient_scale: 0.02, history_weight: 1.0, ..Default::default() },
        pool_factor: 20,
        plan: RunPlan { levels: vec![
            LevelPlan { phases: vec![soap(1500, 7e-3)], hidden: None },
            LevelPlan { phases: vec![soap(1500, 7e-3), ssb(1500, mlf::optim::TauRule::SelfScaled, 0.9)], hidden: None },
        ], loss_tol: 1e-14, improvement_tol: 1e-12 },
    };
    let run = mlf::mlt::run_multilevel(&run_cfg).unwrap();
    println!("stack of {} levels ready", run.stack.len());

    // resample level-3 points
    let pool = mls::draw_pool(&problem, 40000, 3, 100);
    let mut state = mls::MonitorState::new(run_cfg.monitor.clone());
    let w = mls::level_monitor(&mut state, &problem, &run.stack, &pool).unwrap();
    let p = mls::density(&w);
    let (x_r, _) = mls::draw_points(&pool, &p, 2000, 100);
    let x_b = points::boundary_points(&problem, 400, 100);

    // level-3 phase, verbose: direct optimizer stepping with eval counts
    let spec = NetSpec::new(2, 1, vec![24, 24, 24], 100).unwrap();
    let net = Network::new(spec);
    let initial = net.init_params_at_level(3);
    let frozen = mlf::pde::freeze_fields(&problem, &run.stack, &x_r, &x_b).unwrap();
    let mut eval = |th: &[f64]| -> mlf::Result<(f64, Vec<f64>)> {
        let pv = mlf::jet_net::ParamVector { values: th.to_vec() };
        mlf::pde::empirical_loss_with(&problem, &frozen, &net, &pv, &x_r, &x_b, &weights)
    };
    for which in ["ssb", "lbfgs"] {
        let mut theta = initial.values.clone();
        println!("--- {which}");
        match which {
            "ssb" => {
                let mut opt = mlf::optim::Ssbroyden::new(
                    mlf::optim::SsbConfig { tau: mlf::optim::TauRule::SelfScaled, phi: 1.0, c2: 0.9 },
                    theta.len());
                for it in 0..300 {
                    let rep = opt.step(&mut theta, &mut eval).unwrap();
                    if it % 25 == 0 || it == 299 {
                        println!("it {it:4} loss {:.6e} gnorm {:.3e} evals {} stalled {}", rep.loss, rep.grad_norm, rep.evals, rep.stalled);
                    }
                }
            }
            _ => {
                let mut opt = mlf::optim::Lbfgs::new(mlf::optim::LbfgsConfig::default());
                for it in 0..300 {
                    let rep = opt.step(&mut theta, &mut eval).unwrap();
                    if it % 25 == 0 || it == 299 {
                        println!("it {it:4} loss {:.6e} gnorm {:.3e} evals {} stalled {}", rep.loss, rep.grad_norm, rep.evals, rep.stalled);
                    }
                }
            }
        }
    }
    let _ = (run_phases, stream(0, StreamId::Check { tag: 0 }));
}
