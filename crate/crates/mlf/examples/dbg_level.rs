use mlf::jet_net::NetSpec;
use mlf::mlt::{run_phases, OptimizerSpec, Phase};
use mlf::pde::problems::builtin_problem;
use mlf::pde::{points, LossWeights, SolutionStack};
use mlf::jet_net::Network;
use mlf::stream::{stream, StreamId};

fn main() {
    let problem = builtin_problem("poisson_peak2d", 2).unwrap();
    let stack = SolutionStack::new(&problem);
    let spec = NetSpec::new(2, 1, vec![20, 20, 20], 100).unwrap();
    let net = Network::new(spec);
    let initial = net.init_params_at_level(1);
    let mut rng = stream(100, StreamId::UniformInterior);
    let x_r = points::uniform_interior(&problem.domain, 2000, &mut rng);
    let x_b = points::boundary_points(&problem, 400, 100);
    let phases = vec![
        Phase { epochs: 400, optimizer: OptimizerSpec::Soap {
            lr: 3e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8,
            lr_decay: 0.98, lr_decay_every: 1000,
            shampoo_decay: 0.95, precondition_frequency: 10, preconditioning: true } },
        Phase { epochs: 200, optimizer: OptimizerSpec::Ssbroyden {
            tau: mlf::optim::TauRule::SelfScaled, phi: 1.0, wolfe_c2: 0.9 } },
    ];
    let out = run_phases(&problem, &stack, &net, initial, &phases, 1, &x_r, &x_b, &LossWeights::default()).unwrap();
    for row in out.trace.iter().step_by(20) {
        println!("epoch {:4} [{}] loss {:.4e} gnorm {:.3e}", row.epoch, row.optimizer, row.loss, row.grad_norm);
    }
    let last = out.trace.last().unwrap();
    println!("last epoch {} [{}] loss {:.4e} stalled {}", last.epoch, last.optimizer, last.loss, out.stalled);
}
