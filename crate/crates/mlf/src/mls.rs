//! Multi-level sampling: residual and gradient magnitudes over the frozen
//! stack, cumulative monitor functions, density construction and point
//! drawing.
//!
//! The continuous density is realized on a uniform candidate pool redrawn at
//! every level; monitor history is re-evaluated on the current pool from the
//! stack prefixes, so the level-k monitor is
//!
//! ```text
//! W_k = Σ_{j=1}^{k−1} coef(j)·μ·W_j + fresh_k,   fresh_j = √(R_j+H_j) / ∫√(R_j+H_j)
//! ```
//!
//! with coef(j) = (k−j) as printed (oldest heaviest) or j (reversed).

use crate::error::{Error, Result};
use crate::pde::{combined_jet, PdeProblem, SolutionStack, StackView};
use crate::stream::{stream, StreamId};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Discrete carrier for the sampling density: M uniform interior points.
pub struct CandidatePool {
    pub points: Vec<Vec<f64>>,
    pub level: u32,
}

/// Draws the candidate pool for sampling the given level's training points.
pub fn draw_pool(problem: &PdeProblem, size: usize, level: u32, seed: u64) -> CandidatePool {
    let mut rng = stream(seed, StreamId::Pool { level });
    CandidatePool {
        points: crate::pde::points::uniform_interior(&problem.domain, size, &mut rng),
        level,
    }
}

/// Which end of the history carries the largest coefficient in the level-k
/// monitor. `OldestHeaviest` is the rule as printed ((k−1)μ on the first
/// level's monitor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorWeighting {
    OldestHeaviest,
    NewestHeaviest,
}

/// Constants driving the monitor construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorParams {
    /// γ₁ in front of the gradient magnitude.
    pub gradient_scale: f64,
    /// μ weighting the accumulated history terms.
    pub history_weight: f64,
    pub weighting: MonitorWeighting,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams {
            gradient_scale: 1.0,
            history_weight: 0.5,
            weighting: MonitorWeighting::OldestHeaviest,
        }
    }
}

/// Accumulated monitor data: the per-level normalized fresh terms evaluated
/// on the current pool (rebuilt whenever the pool changes).
pub struct MonitorState {
    pub params: MonitorParams,
    pub history: Vec<Vec<f64>>,
}

impl MonitorState {
    pub fn new(params: MonitorParams) -> Self {
        MonitorState {
            params,
            history: Vec::new(),
        }
    }

    pub fn levels_completed(&self) -> usize {
        self.history.len()
    }
}

/// |𝒜[Σ frozen](x) − f(x)|, Euclidean across residual components.
pub fn residual_magnitude(problem: &PdeProblem, frozen: StackView<'_>, x: &[f64]) -> Result<f64> {
    let jet = combined_jet(problem, frozen, None, x)?;
    let r = (problem.interior)(&jet, x);
    Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// γ₁·‖∇(Σ frozen)(x)‖ (Frobenius across the s×d gradient block).
pub fn gradient_magnitude(
    params: &MonitorParams,
    problem: &PdeProblem,
    frozen: StackView<'_>,
    x: &[f64],
) -> Result<f64> {
    if frozen.is_empty() {
        return Ok(0.0);
    }
    let jet = combined_jet(problem, frozen, None, x)?;
    Ok(params.gradient_scale * jet.grad.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Normalized fresh term √(ℛ+ℋ) / (V·mean over the pool) for one stack
/// prefix. Falls back to the uniform monitor 1/V when ℛ+ℋ vanishes on the
/// whole pool.
pub fn fresh_monitor_term(
    params: &MonitorParams,
    problem: &PdeProblem,
    frozen: StackView<'_>,
    pool: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::config("candidate pool must be nonempty"));
    }
    let volume = problem.domain.volume();
    let raw: Vec<f64> = pool
        .par_chunks(64)
        .map(|chunk| {
            chunk
                .iter()
                .map(|x| {
                    let r = residual_magnitude(problem, frozen, x)?;
                    let h = gradient_magnitude(params, problem, frozen, x)?;
                    Ok((r + h).sqrt())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    if mean == 0.0 {
        return Ok(vec![1.0 / volume; pool.len()]);
    }
    let integral = volume * mean;
    Ok(raw.into_iter().map(|v| v / integral).collect())
}

/// Total monitor for sampling the next level's points, evaluated on `pool`.
/// Rebuilds the history (fresh terms of every stack prefix) on this pool and
/// stores it in `state`.
pub fn level_monitor(
    state: &mut MonitorState,
    problem: &PdeProblem,
    stack: &SolutionStack,
    pool: &CandidatePool,
) -> Result<Vec<f64>> {
    let k = stack.len();
    if k == 0 {
        return Err(Error::config(
            "monitor needs at least one trained level in the stack",
        ));
    }
    state.history.clear();
    for j in 1..=k {
        let term = fresh_monitor_term(&state.params, problem, stack.prefix(j), &pool.points)?;
        state.history.push(term);
    }
    let mu = state.params.history_weight;
    let mut total = state.history[k - 1].clone();
    for j in 1..k {
        let coef = match state.params.weighting {
            MonitorWeighting::OldestHeaviest => (k - j) as f64 * mu,
            MonitorWeighting::NewestHeaviest => j as f64 * mu,
        };
        for (t, w) in total.iter_mut().zip(&state.history[j - 1]) {
            *t += coef * w;
        }
    }
    Ok(total)
}

/// p ∝ W + 1, normalized to a probability vector on the pool.
pub fn density(monitor: &[f64]) -> Vec<f64> {
    let total: f64 = monitor.iter().map(|w| w + 1.0).sum();
    monitor.iter().map(|w| (w + 1.0) / total).collect()
}

/// `n` categorical draws with replacement; returns pool indices.
pub fn draw_indices(p: &[f64], n: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &pi in p {
        acc += pi;
        cum.push(acc);
    }
    let total = acc;
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            match cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                Ok(i) => (i + 1).min(p.len() - 1),
                Err(i) => i.min(p.len() - 1),
            }
        })
        .collect()
}

/// Draws the residual training points of `level` from the pool under `p`,
/// on the level's dedicated stream.
pub fn draw_points(
    pool: &CandidatePool,
    p: &[f64],
    n: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = stream(seed, StreamId::Draw { level: pool.level });
    let idx = draw_indices(p, n, &mut rng);
    let pts = idx.iter().map(|&i| pool.points[i].clone()).collect();
    (pts, idx)
}

/// Fraction of `points` inside the problem's focus region (the concentration
/// statistic reported per level).
pub fn focus_fraction(problem: &PdeProblem, points: &[Vec<f64>]) -> Option<f64> {
    let (lo, hi) = problem.focus_region.as_ref()?;
    let inside = points
        .iter()
        .filter(|x| {
            x.iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
        })
        .count();
    Some(inside as f64 / points.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet_net::{Jet, JetCotangent, NetSpec, Network};
    use crate::pde::problems::builtin_problem;
    use crate::stream::uniform;
    use crate::pde::{
        BoundaryGroup, BoundaryKind, Domain, HardConstraint, OutputMode, PdeProblem,
    };
    use std::sync::Arc;

    /// Problem with constant interior residual c and no sources; H of an
    /// empty stack is zero, so √(ℛ+ℋ) is constant on the pool.
    fn constant_residual_problem(c: f64) -> PdeProblem {
        PdeProblem {
            name: "const".into(),
            domain: Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            outputs: 1,
            residual_components: 1,
            interior: Arc::new(move |_jet, _x| vec![c]),
            interior_pullback: Arc::new(|jet: &Jet, _x: &[f64], _w: &[f64]| {
                JetCotangent::zeros(1, jet.dim())
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
        }
    }

    #[test]
    fn constant_monitor_equals_inverse_volume() {
        // constant ℛ+ℋ on (−1,1)² normalizes to W ≡ 1/V = 0.25
        let problem = constant_residual_problem(3.0);
        let stack = crate::pde::SolutionStack::new(&problem);
        let pool = draw_pool(&problem, 500, 2, 100);
        let w = fresh_monitor_term(&MonitorParams::default(), &problem, stack.view(), &pool.points)
            .unwrap();
        for wi in &w {
            assert!((wi - 0.25).abs() <= 1e-12, "{wi}");
        }
    }

    #[test]
    fn empty_stack_magnitudes() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let stack = crate::pde::SolutionStack::new(&problem);
        let params = MonitorParams::default();
        // gradient magnitude of nothing is zero; residual is |−f| ≥ 0
        let mut rng = stream(1, StreamId::Check { tag: 90 });
        for _ in 0..1000 {
            let x = [uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0)];
            assert_eq!(
                gradient_magnitude(&params, &problem, stack.view(), &x).unwrap(),
                0.0
            );
            assert!(residual_magnitude(&problem, stack.view(), &x).unwrap() >= 0.0);
        }
        assert_eq!(
            residual_magnitude(&problem, stack.view(), &[0.0, 0.0]).unwrap(),
            4000.0
        );
    }

    #[test]
    fn gradient_magnitude_scales_linearly_in_gamma() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let mut stack = crate::pde::SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![7], 3).unwrap();
        let net = Network::new(spec.clone());
        stack.push(spec, net.init_params()).unwrap();

        let base = MonitorParams::default();
        let doubled = MonitorParams {
            gradient_scale: 2.0,
            ..MonitorParams::default()
        };
        let x = [0.3, -0.2];
        let a = gradient_magnitude(&base, &problem, stack.view(), &x).unwrap();
        let b = gradient_magnitude(&doubled, &problem, stack.view(), &x).unwrap();
        assert_eq!(b, 2.0 * a);
        assert!(a > 0.0);
    }

    #[test]
    fn first_level_monitor_is_the_fresh_term_alone() {
        let problem = constant_residual_problem(2.0);
        let mut stack = crate::pde::SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![4], 9).unwrap();
        let net = Network::new(spec.clone());
        stack.push(spec, net.init_params()).unwrap();

        let pool = draw_pool(&problem, 300, 2, 100);
        let mut state = MonitorState::new(MonitorParams::default());
        let total = level_monitor(&mut state, &problem, &stack, &pool).unwrap();
        assert_eq!(state.history.len(), 1);
        assert_eq!(total, state.history[0]);
    }

    #[test]
    fn zero_history_weight_reduces_to_fresh_term() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let mut stack = crate::pde::SolutionStack::new(&problem);
        for seed in 0..3u64 {
            let spec = NetSpec::new(2, 1, vec![5], 70 + seed).unwrap();
            let net = Network::new(spec.clone());
            stack.push(spec, net.init_params()).unwrap();
        }
        let pool = draw_pool(&problem, 200, 4, 100);
        let mut state = MonitorState::new(MonitorParams {
            history_weight: 0.0,
            ..MonitorParams::default()
        });
        let total = level_monitor(&mut state, &problem, &stack, &pool).unwrap();
        assert_eq!(total, state.history[2]);
    }

    #[test]
    fn monitor_integrates_to_one_on_independent_pool() {
        let problem = builtin_problem("poisson_peak2d", 2).unwrap();
        let mut stack = crate::pde::SolutionStack::new(&problem);
        let spec = NetSpec::new(2, 1, vec![10], 33).unwrap();
        let net = Network::new(spec.clone());
        stack.push(spec, net.init_params()).unwrap();

        let params = MonitorParams::default();
        let fit_pool = draw_pool(&problem, 100_000, 2, 100);
        let eval_pool = draw_pool(&problem, 100_000, 3, 100);
        // normalization constant from the fit pool
        let volume = problem.domain.volume();
        let raw_mean = |pool: &CandidatePool| -> f64 {
            pool.points
                .iter()
                .map(|x| {
                    let r = residual_magnitude(&problem, stack.view(), x).unwrap();
                    let h = gradient_magnitude(&params, &problem, stack.view(), x).unwrap();
                    (r + h).sqrt()
                })
                .sum::<f64>()
                / pool.points.len() as f64
        };
        let integral_fit = volume * raw_mean(&fit_pool);
        let integral_eval = volume * raw_mean(&eval_pool);
        let ratio = integral_eval / integral_fit;
        assert!((ratio - 1.0).abs() <= 0.02, "∫W estimate {ratio}");
    }

    #[test]
    fn density_properties() {
        // zero monitor → exactly uniform
        let p = density(&vec![0.0; 10]);
        assert!(p.iter().all(|&pi| pi == 0.1));

        // a huge one-hot value concentrates the density monotonically
        let mut prev = 0.0;
        for scale in [1e2, 1e4, 1e6] {
            let mut w = vec![0.0; 10];
            w[0] = scale;
            let p = density(&w);
            assert!(p[0] > prev);
            prev = p[0];
        }
        assert!(prev > 0.999);

        // normalization to 1e-12 on arbitrary nonnegative input
        let mut rng = stream(5, StreamId::Check { tag: 91 });
        for _ in 0..50 {
            let w: Vec<f64> = (0..64).map(|_| uniform(&mut rng, 0.0, 10.0).exp()).collect();
            let p = density(&w);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|&pi| pi > 0.0));
        }
    }

    #[test]
    fn draws_are_deterministic_and_respect_degenerate_density() {
        let problem = constant_residual_problem(1.0);
        let pool = draw_pool(&problem, 50, 3, 100);
        let mut p = vec![0.0; 50];
        p[17] = 1.0;
        let (pts, idx) = draw_points(&pool, &p, 20, 100);
        assert!(idx.iter().all(|&i| i == 17));
        assert!(pts.iter().all(|x| *x == pool.points[17]));

        let (pts2, _) = draw_points(&pool, &p, 20, 100);
        assert_eq!(pts, pts2);
    }

    proptest::proptest! {
        /// density output is a valid probability vector for any finite
        /// nonnegative monitor values
        #[test]
        fn density_is_a_probability_vector(w in proptest::collection::vec(0.0f64..1e9, 1..200)) {
            let p = density(&w);
            let sum: f64 = p.iter().sum();
            proptest::prop_assert!((sum - 1.0).abs() <= 1e-12);
            proptest::prop_assert!(p.iter().all(|&pi| pi > 0.0 && pi <= 1.0));
        }
    }

    #[test]
    fn uniform_draws_pass_chi_square() {
        // M = 100 cells, N = 1e5 draws, χ²(df=99) at the 0.001 level = 148.2304
        let m = 100usize;
        let n = 100_000usize;
        let p = vec![1.0 / m as f64; m];
        let mut rng = stream(100, StreamId::Draw { level: 9 });
        let idx = draw_indices(&p, n, &mut rng);
        let mut counts = vec![0usize; m];
        for i in idx {
            counts[i] += 1;
        }
        let expected = n as f64 / m as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 <= 148.23035916510173, "chi2 = {chi2}");
    }
}
