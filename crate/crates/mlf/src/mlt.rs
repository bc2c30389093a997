//! Multi-level training: pre-train level 1 on uniform points, then repeatedly
//! freeze the stack, resample collocation points from the monitor density,
//! and train a fresh correction network against the updated equation.

use crate::error::{Error, Result};
use crate::jet_net::{NetSpec, Network, ParamVector};
use crate::mls;
use crate::optim::{
    AdamConfig, AnyOptimizer, LbfgsConfig, SoapConfig, SsbConfig, TauRule,
};
use crate::pde::{
    combined_values, freeze_fields, points, BoundaryPoint, LossWeights, PdeProblem, SolutionStack,
};
use crate::stream::{stream, StreamId};
use serde::{Deserialize, Serialize};
use std::time::Instant;

fn default_lr() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_lr_decay() -> f64 {
    0.98
}
fn default_lr_decay_every() -> u64 {
    1000
}
fn default_shampoo_decay() -> f64 {
    0.95
}
fn default_precondition_frequency() -> u64 {
    10
}
fn default_true() -> bool {
    true
}
fn default_memory() -> usize {
    20
}
fn default_tau() -> TauRule {
    TauRule::SelfScaled
}
fn default_phi() -> f64 {
    1.0
}
fn default_c2() -> f64 {
    0.9
}

/// Optimizer choice with its hyperparameters, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "optimizer", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Adam {
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_lr_decay")]
        lr_decay: f64,
        #[serde(default = "default_lr_decay_every")]
        lr_decay_every: u64,
    },
    Soap {
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_lr_decay")]
        lr_decay: f64,
        #[serde(default = "default_lr_decay_every")]
        lr_decay_every: u64,
        #[serde(default = "default_shampoo_decay")]
        shampoo_decay: f64,
        #[serde(default = "default_precondition_frequency")]
        precondition_frequency: u64,
        #[serde(default = "default_true")]
        preconditioning: bool,
    },
    Lbfgs {
        #[serde(default = "default_memory")]
        memory: usize,
        #[serde(default = "default_c2")]
        wolfe_c2: f64,
    },
    Ssbroyden {
        #[serde(default = "default_tau")]
        tau: TauRule,
        #[serde(default = "default_phi")]
        phi: f64,
        #[serde(default = "default_c2")]
        wolfe_c2: f64,
    },
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Adam { .. } => "adam",
            OptimizerSpec::Soap { .. } => "soap",
            OptimizerSpec::Lbfgs { .. } => "lbfgs",
            OptimizerSpec::Ssbroyden { .. } => "ssbroyden",
        }
    }

    fn build(&self, net: &Network) -> AnyOptimizer {
        match *self {
            OptimizerSpec::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
                lr_decay,
                lr_decay_every,
            } => AnyOptimizer::adam(
                AdamConfig {
                    lr,
                    beta1,
                    beta2,
                    epsilon,
                    lr_decay,
                    lr_decay_every,
                },
                net.param_len(),
            ),
            OptimizerSpec::Soap {
                lr,
                beta1,
                beta2,
                epsilon,
                lr_decay,
                lr_decay_every,
                shampoo_decay,
                precondition_frequency,
                preconditioning,
            } => AnyOptimizer::soap(
                SoapConfig {
                    adam: AdamConfig {
                        lr,
                        beta1,
                        beta2,
                        epsilon,
                        lr_decay,
                        lr_decay_every,
                    },
                    shampoo_decay,
                    precondition_frequency,
                    preconditioning,
                },
                net.layers(),
            ),
            OptimizerSpec::Lbfgs { memory, wolfe_c2 } => {
                AnyOptimizer::lbfgs(LbfgsConfig { memory, c2: wolfe_c2 })
            }
            OptimizerSpec::Ssbroyden { tau, phi, wolfe_c2 } => AnyOptimizer::ssbroyden(
                SsbConfig {
                    tau,
                    phi,
                    c2: wolfe_c2,
                },
                net.param_len(),
            ),
        }
    }

    fn records_post_step_loss(&self) -> bool {
        matches!(
            self,
            OptimizerSpec::Lbfgs { .. } | OptimizerSpec::Ssbroyden { .. }
        )
    }
}

/// One (optimizer, epoch count) pair of a level's schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub epochs: usize,
    #[serde(flatten)]
    pub optimizer: OptimizerSpec,
}

/// Training schedule for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelPlan {
    pub phases: Vec<Phase>,
    /// Optional hidden-layer override; default is the run-wide network shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
}

impl LevelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::config("a level plan needs at least one phase"));
        }
        if self.phases.iter().any(|p| p.epochs == 0) {
            return Err(Error::config("phase epoch counts must be >= 1"));
        }
        Ok(())
    }
}

fn default_loss_tol() -> f64 {
    1e-10
}
fn default_improvement_tol() -> f64 {
    0.05
}

/// Level schedules plus the stop rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    pub levels: Vec<LevelPlan>,
    /// Stop when a level ends with empirical loss at or below this.
    #[serde(default = "default_loss_tol")]
    pub loss_tol: f64,
    /// Stop when the relative level-over-level loss improvement falls below this.
    #[serde(default = "default_improvement_tol")]
    pub improvement_tol: f64,
}

impl RunPlan {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::config("run plan needs at least one level"));
        }
        if !(self.loss_tol > 0.0) || !(self.improvement_tol > 0.0) {
            return Err(Error::config("stop tolerances must be positive"));
        }
        for level in &self.levels {
            level.validate()?;
        }
        Ok(())
    }
}

/// One row of the per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub epoch: usize,
    pub level: u32,
    pub optimizer: &'static str,
    pub loss: f64,
    pub grad_norm: f64,
    pub wall_ms: f64,
}

/// Result of training one level.
pub struct TrainOutcome {
    /// Parameters at the minimum recorded loss across the final phase.
    pub params: ParamVector,
    pub best_loss: f64,
    pub final_loss: f64,
    pub stalled: bool,
    pub trace: Vec<TraceRow>,
}

/// Runs the phases of one level over a fixed point set, starting from the
/// given parameters. Optimizer state is reset between phases.
#[allow(clippy::too_many_arguments)]
pub fn run_phases(
    problem: &PdeProblem,
    stack: &SolutionStack,
    net: &Network,
    initial: ParamVector,
    phases: &[Phase],
    level: u32,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
    weights: &LossWeights,
) -> Result<TrainOutcome> {
    let frozen = freeze_fields(problem, stack, x_r, x_b)?;
    let mut theta = initial.values;
    let mut trace = Vec::new();
    let mut stalled = false;
    let mut epoch_counter = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut final_loss = f64::INFINITY;
    let started = Instant::now();

    let n_phases = phases.len();
    for (pi, phase) in phases.iter().enumerate() {
        let mut opt = phase.optimizer.build(net);
        let post_step = phase.optimizer.records_post_step_loss();
        let is_final_phase = pi + 1 == n_phases;
        if is_final_phase {
            best = None;
        }
        let mut eval = |th: &[f64]| -> Result<(f64, Vec<f64>)> {
            let pv = ParamVector {
                values: th.to_vec(),
            };
            crate::pde::empirical_loss_with(problem, &frozen, net, &pv, x_r, x_b, weights)
        };
        let mut consecutive_stalls = 0u32;
        for _ in 0..phase.epochs {
            let theta_pre = theta.clone();
            let rec = opt.epoch(&mut theta, &mut eval)?;
            epoch_counter += 1;
            trace.push(TraceRow {
                epoch: epoch_counter,
                level,
                optimizer: phase.optimizer.name(),
                loss: rec.loss,
                grad_norm: rec.grad_norm,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            final_loss = rec.loss;
            let candidate = if post_step { &theta } else { &theta_pre };
            if best.as_ref().map_or(true, |(b, _)| rec.loss < *b) {
                best = Some((rec.loss, candidate.clone()));
            }
            if rec.stalled {
                // retry once from fresh curvature; a second stall in a row
                // means no descent is possible at this precision
                stalled = true;
                consecutive_stalls += 1;
                if consecutive_stalls >= 2 {
                    break;
                }
                opt.reset_curvature();
            } else {
                consecutive_stalls = 0;
            }
        }
    }

    let (best_loss, best_theta) = best.ok_or_else(|| Error::config("empty phase list"))?;
    Ok(TrainOutcome {
        params: ParamVector { values: best_theta },
        best_loss,
        final_loss,
        stalled,
        trace,
    })
}

/// Trains one level from a fresh network drawn on the level's init stream.
#[allow(clippy::too_many_arguments)]
pub fn train_level(
    problem: &PdeProblem,
    stack: &SolutionStack,
    spec: &NetSpec,
    plan: &LevelPlan,
    level: u32,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
    weights: &LossWeights,
) -> Result<(Network, TrainOutcome)> {
    plan.validate()?;
    if x_r.is_empty() || x_b.is_empty() {
        return Err(Error::config("training point sets must be nonempty"));
    }
    let net = Network::new(spec.clone());
    let initial = net.init_params_at_level(level);
    let outcome = run_phases(
        problem, stack, &net, initial, &plan.phases, level, x_r, x_b, weights,
    )?;
    Ok((net, outcome))
}

/// Why the multi-level loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxLevels,
    LossTolerance,
    NoImprovement,
}

/// Everything the orchestrator needs for one run.
pub struct RunConfig {
    pub problem: PdeProblem,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub weights: LossWeights,
    pub monitor: mls::MonitorParams,
    /// Candidate pool size as a multiple of `n_interior`.
    pub pool_factor: usize,
    pub plan: RunPlan,
}

/// Per-level artifacts of a run.
pub struct LevelReport {
    pub level: u32,
    pub outcome: TrainOutcome,
    /// The residual training points this level used.
    pub points: Vec<Vec<f64>>,
    /// Fraction of those points inside the problem's focus region.
    pub focus_fraction: Option<f64>,
    /// Loss of the previous stack on this level's own point set, before the
    /// correction trained.
    pub pre_loss: f64,
    /// Relative improvement this level achieved on its own point set:
    /// (pre − best)/pre. The stop rule compares this against improvement_tol.
    pub improvement: f64,
}

pub struct RunOutcome {
    pub stack: SolutionStack,
    pub levels: Vec<LevelReport>,
    pub stop: StopReason,
    pub boundary_points: Vec<BoundaryPoint>,
}

/// Runs the full multi-level loop: level 1 trains on uniform points, level
/// k ≥ 2 on points drawn from the monitor density of the frozen stack. The
/// boundary set is fixed across levels; each trained network is pushed onto
/// the stack and never mutated again.
pub fn run_multilevel(cfg: &RunConfig) -> Result<RunOutcome> {
    run_multilevel_with(cfg, |_, _| Ok(()))
}

/// [`run_multilevel`] with a per-level observer, called right after each
/// level is frozen (artifact persistence, incremental metrics).
pub fn run_multilevel_with<F>(cfg: &RunConfig, mut on_level: F) -> Result<RunOutcome>
where
    F: FnMut(&SolutionStack, &LevelReport) -> Result<()>,
{
    cfg.plan.validate()?;
    if cfg.n_interior == 0 || cfg.n_boundary == 0 {
        return Err(Error::config("point counts must be >= 1"));
    }
    if cfg.pool_factor == 0 {
        return Err(Error::config("pool factor must be >= 1"));
    }
    let problem = &cfg.problem;
    let x_b = points::boundary_points(problem, cfg.n_boundary, cfg.seed);
    let mut rng = stream(cfg.seed, StreamId::UniformInterior);
    let mut x_r = points::uniform_interior(&problem.domain, cfg.n_interior, &mut rng);

    let mut stack = SolutionStack::new(problem);
    let mut levels: Vec<LevelReport> = Vec::new();
    let mut monitor_state = mls::MonitorState::new(cfg.monitor.clone());
    let mut stop = StopReason::MaxLevels;

    let max_levels = cfg.plan.levels.len();
    for (idx, plan) in cfg.plan.levels.iter().enumerate() {
        let level = (idx + 1) as u32;
        let hidden = plan.hidden.clone().unwrap_or_else(|| cfg.hidden.clone());
        let spec = NetSpec::new(problem.dim(), problem.outputs, hidden, cfg.seed)?;
        let pre_loss =
            crate::pde::stack_empirical_loss(problem, &stack, &x_r, &x_b, &cfg.weights)?;
        let (net, outcome) =
            train_level(problem, &stack, &spec, plan, level, &x_r, &x_b, &cfg.weights)?;
        stack.push(net.spec().clone(), outcome.params.clone())?;
        let focus = mls::focus_fraction(problem, &x_r);
        let improvement =
            (pre_loss - outcome.best_loss) / pre_loss.abs().max(f64::MIN_POSITIVE);
        levels.push(LevelReport {
            level,
            outcome,
            points: std::mem::take(&mut x_r),
            focus_fraction: focus,
            pre_loss,
            improvement,
        });
        on_level(&stack, levels.last().unwrap())?;

        let this = levels.last().unwrap();
        if this.outcome.best_loss <= cfg.plan.loss_tol {
            stop = StopReason::LossTolerance;
            break;
        }
        if idx + 1 == max_levels {
            stop = StopReason::MaxLevels;
            break;
        }
        if this.improvement < cfg.plan.improvement_tol {
            stop = StopReason::NoImprovement;
            break;
        }

        // sample the next level's points from the frozen stack
        let next_level = level + 1;
        let pool = mls::draw_pool(
            problem,
            cfg.pool_factor * cfg.n_interior,
            next_level,
            cfg.seed,
        );
        let monitor = mls::level_monitor(&mut monitor_state, problem, &stack, &pool)?;
        let p = mls::density(&monitor);
        let (drawn, _) = mls::draw_points(&pool, &p, cfg.n_interior, cfg.seed);
        x_r = drawn;
    }

    Ok(RunOutcome {
        stack,
        levels,
        stop,
        boundary_points: x_b,
    })
}

/// Stack prediction at a set of points: Sum outputs add every level, Replace
/// outputs come from the newest level (the problem's combination rules).
pub fn predict_with(
    problem: &PdeProblem,
    stack: &SolutionStack,
    points: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if stack.is_empty() {
        return Err(Error::config("cannot predict from an empty stack"));
    }
    points
        .iter()
        .map(|x| combined_values(problem, stack.view(), None, x))
        .collect()
}

/// [`predict_with`] resolving the problem from the stack's recorded name.
pub fn predict(stack: &SolutionStack, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let problem = crate::pde::problems::builtin_for_stack(stack)?;
    predict_with(&problem, stack, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::problems::builtin_problem;
    use crate::pde::stack_jet;

    fn micro_plan(epochs: usize) -> RunPlan {
        RunPlan {
            levels: vec![
                LevelPlan {
                    phases: vec![Phase {
                        epochs,
                        optimizer: OptimizerSpec::Adam {
                            lr: 1e-2,
                            beta1: 0.9,
                            beta2: 0.999,
                            epsilon: 1e-8,
                            lr_decay: 0.98,
                            lr_decay_every: 1000,
                        },
                    }],
                    hidden: None,
                },
                LevelPlan {
                    phases: vec![Phase {
                        epochs,
                        optimizer: OptimizerSpec::Adam {
                            lr: 1e-2,
                            beta1: 0.9,
                            beta2: 0.999,
                            epsilon: 1e-8,
                            lr_decay: 0.98,
                            lr_decay_every: 1000,
                        },
                    }],
                    hidden: None,
                },
            ],
            loss_tol: 1e-12,
            improvement_tol: 1e-9,
        }
    }

    fn micro_config(problem: &str, epochs: usize) -> RunConfig {
        RunConfig {
            problem: builtin_problem(problem, 2).unwrap(),
            hidden: vec![8, 8],
            seed: 100,
            n_interior: 64,
            n_boundary: 16,
            weights: LossWeights::default(),
            monitor: mls::MonitorParams::default(),
            pool_factor: 4,
            plan: micro_plan(epochs),
        }
    }

    #[test]
    fn zero_residual_problem_stays_at_zero_loss() {
        // f ≡ 0, g ≡ 0 and a zero output layer: the loss starts at 0, the
        // gradient is 0, and training leaves both untouched.
        use crate::jet_net::{Jet, JetCotangent};
        use crate::pde::{BoundaryGroup, BoundaryKind, Domain, HardConstraint, OutputMode};
        use std::sync::Arc;
        let problem = PdeProblem {
            name: "null".into(),
            domain: Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            outputs: 1,
            residual_components: 1,
            interior: Arc::new(|jet: &Jet, _x: &[f64]| vec![jet.value[0]]),
            interior_pullback: Arc::new(|jet: &Jet, _x: &[f64], w: &[f64]| {
                let mut cot = JetCotangent::zeros(1, jet.dim());
                cot.d_value[0] = w[0];
                cot
            }),
            boundary_groups: vec![BoundaryGroup {
                name: "dirichlet",
                share: 1.0,
                kind: BoundaryKind::DirichletFaces {
                    g: Arc::new(|_x| vec![0.0]),
                },
            }],
            exact_solution: None,
            hard_constraint: HardConstraint::None,
            output_modes: vec![OutputMode::Sum],
            focus_region: None,
        };
        let stack = SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![6], 100).unwrap();
        let net = Network::new(spec);
        let mut initial = net.init_params_at_level(1);
        let out_layer = net.layers()[net.layers().len() - 1];
        for v in &mut initial.values[out_layer.weight_offset..] {
            *v = 0.0;
        }
        let x_r = vec![vec![0.2, 0.3], vec![0.8, 0.6]];
        let x_b = points::boundary_points(&problem, 4, 100);
        let phases = vec![Phase {
            epochs: 20,
            optimizer: OptimizerSpec::Adam {
                lr: 1e-2,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                lr_decay: 0.98,
                lr_decay_every: 1000,
            },
        }];
        let outcome = run_phases(
            &problem,
            &stack,
            &net,
            initial,
            &phases,
            1,
            &x_r,
            &x_b,
            &LossWeights::default(),
        )
        .unwrap();
        assert_eq!(outcome.best_loss, 0.0);
        assert_eq!(outcome.final_loss, 0.0);
        assert!(outcome.trace.iter().all(|row| row.loss == 0.0));
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let cfg = micro_config("poisson_peak2d", 60);
        let run1 = run_multilevel(&cfg).unwrap();
        let run2 = run_multilevel(&cfg).unwrap();
        assert_eq!(run1.levels.len(), run2.levels.len());
        for (a, b) in run1.levels.iter().zip(&run2.levels) {
            assert_eq!(a.outcome.best_loss.to_bits(), b.outcome.best_loss.to_bits());
            assert_eq!(a.points, b.points);
            for (ra, rb) in a.outcome.trace.iter().zip(&b.outcome.trace) {
                assert_eq!(ra.loss.to_bits(), rb.loss.to_bits());
            }
        }
        let first = &run1.levels[0].outcome;
        assert!(first.trace.last().unwrap().loss < first.trace[0].loss);
    }

    #[test]
    fn one_level_run_is_a_plain_single_network_training() {
        let mut cfg = micro_config("poisson_peak2d", 30);
        cfg.plan.levels.truncate(1);
        let run = run_multilevel(&cfg).unwrap();
        assert_eq!(run.levels.len(), 1);
        assert_eq!(run.stack.len(), 1);
        assert_eq!(run.stop, StopReason::MaxLevels);

        // identical to training the same net directly on the same points
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let stack = SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![8, 8], 100).unwrap();
        let mut rng = stream(100, StreamId::UniformInterior);
        let x_r = points::uniform_interior(&problem.domain, 64, &mut rng);
        let x_b = points::boundary_points(&problem, 16, 100);
        let (_, outcome) = train_level(
            &problem,
            &stack,
            &spec,
            &cfg.plan.levels[0],
            1,
            &x_r,
            &x_b,
            &LossWeights::default(),
        )
        .unwrap();
        assert_eq!(
            outcome.best_loss.to_bits(),
            run.levels[0].outcome.best_loss.to_bits()
        );
        assert_eq!(outcome.params, run.levels[0].outcome.params);
    }

    #[test]
    fn stack_is_append_only_across_levels() {
        let cfg = micro_config("poisson_peak2d", 25);
        let run = run_multilevel(&cfg).unwrap();
        assert!(run.stack.len() >= 1);
        // level-1 entry equals the level-1 outcome exactly; later levels do
        // not mutate it
        assert_eq!(
            run.stack.entries()[0].params,
            run.levels[0].outcome.params
        );
    }

    #[test]
    fn predict_matches_stack_modes() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let mut stack = SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![7], 5).unwrap();
        let net = Network::new(spec.clone());
        let params = net.init_params();
        stack.push(spec.clone(), params.clone()).unwrap();
        let x = vec![vec![0.1, -0.4], vec![0.8, 0.2]];
        let pred = predict(&stack, &x).unwrap();
        for (xi, pi) in x.iter().zip(&pred) {
            assert_eq!(pi[0], net.forward(&params, xi).unwrap()[0]);
        }

        // pushing the same net with a negated output layer cancels the sum
        let mut negated = params.clone();
        let out = net.layers()[net.layers().len() - 1];
        for v in &mut negated.values[out.weight_offset..] {
            *v = -*v;
        }
        stack.push(spec, negated).unwrap();
        let pred = predict(&stack, &x).unwrap();
        for (xi, pi) in x.iter().zip(&pred) {
            // Lemma-style scalar closure with c = −1: the stacked sum is 0 to
            // rounding of the two evaluations
            let scale = net.forward(&params, xi).unwrap()[0].abs().max(1e-300);
            assert!(pi[0].abs() <= 1e-12 * scale.max(1.0));
        }

        let jet = stack_jet(&stack, &x[0]).unwrap();
        assert!(jet.value[0].abs() <= 1e-12);
    }

    #[test]
    fn empty_stack_prediction_is_an_error() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let stack = SolutionStack::new(&problem);
        assert!(predict(&stack, &[vec![0.0, 0.0]]).is_err());
    }
}
