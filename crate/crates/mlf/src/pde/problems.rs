//! The four benchmark problems. Source terms and Dirichlet data are derived
//! from the exact solutions by the exact-derivative algebra in
//! [`super::symbolic`], never hand-typed.

use super::symbolic::SymVal;
use super::{
    BoundaryGroup, BoundaryKind, Domain, HardConstraint, OutputMode, PdeProblem, PointFn,
};
use crate::error::{Error, Result};
use crate::jet_net::{Jet, JetCotangent};
use std::f64::consts::PI;
use std::sync::Arc;

pub type JetFn = Arc<dyn Fn(&[f64]) -> Jet + Send + Sync>;

/// Exact solution of the peak problem: u = e^{−1000(x²+y²)}.
fn peak_sym(x: &[f64]) -> SymVal {
    (SymVal::var(x, 0).squared() + SymVal::var(x, 1).squared())
        .scale(-1000.0)
        .exp()
}

/// Exact solution of the Helmholtz problem: u = 4e^{−100(x²+y²)}·sin(6πx)·sin(6πy).
fn helmholtz_sym(x: &[f64]) -> SymVal {
    let bump = (SymVal::var(x, 0).squared() + SymVal::var(x, 1).squared())
        .scale(-100.0)
        .exp()
        .scale(4.0);
    bump * SymVal::var(x, 0).scale(6.0 * PI).sin() * SymVal::var(x, 1).scale(6.0 * PI).sin()
}

/// Exact solution with a sharp spherical interface:
/// u = 4^d·(1/2 + (1/π)·arctan(A(1/16 − Σ(xᵢ−1/2)²)))·Π(1−xᵢ)xᵢ with A = 120.
fn sharp_sym(x: &[f64]) -> SymVal {
    let d = x.len();
    let sharpness = 120.0;
    let mut r2 = SymVal::constant(0.0, d);
    for i in 0..d {
        let c = SymVal::var(x, i) - SymVal::constant(0.5, d);
        r2 = r2 + c.squared();
    }
    let arg = (SymVal::constant(1.0 / 16.0, d) - r2).scale(sharpness);
    let front = SymVal::constant(0.5, d) + arg.atan().scale(1.0 / PI);
    let mut bubble = SymVal::constant(4f64.powi(d as i32), d);
    for i in 0..d {
        let xi = SymVal::var(x, i);
        bubble = bubble * (SymVal::constant(1.0, d) - xi) * xi;
    }
    front * bubble
}

fn sym_to_jet(s: &SymVal) -> Jet {
    let d = s.dim;
    let mut jet = Jet::zeros(1, d);
    jet.value[0] = s.v;
    jet.grad[..d].copy_from_slice(&s.g[..d]);
    for p in 0..d {
        for q in 0..d {
            jet.hess[p * d + q] = s.h[p * 3 + q];
        }
    }
    jet.laplacian[0] = s.laplacian();
    jet
}

/// Second-order scalar problem −Δu = f with Dirichlet data, both manufactured
/// from `exact`.
fn neg_laplace_problem(
    name: &str,
    domain: Domain,
    exact: Arc<dyn Fn(&[f64]) -> SymVal + Send + Sync>,
    focus_region: Option<(Vec<f64>, Vec<f64>)>,
) -> PdeProblem {
    let exact_f = exact.clone();
    let exact_g = exact.clone();
    let exact_v = exact.clone();
    PdeProblem {
        name: name.to_string(),
        domain,
        outputs: 1,
        residual_components: 1,
        interior: Arc::new(move |jet, x| {
            let f = -exact_f(x).laplacian();
            vec![-jet.laplacian[0] - f]
        }),
        interior_pullback: Arc::new(|jet: &Jet, _x: &[f64], w: &[f64]| {
            let mut cot = JetCotangent::zeros(1, jet.dim());
            cot.d_laplacian[0] = -w[0];
            cot
        }),
        boundary_groups: vec![BoundaryGroup {
            name: "dirichlet",
            share: 1.0,
            kind: BoundaryKind::DirichletFaces {
                g: Arc::new(move |x| vec![exact_g(x).v]),
            },
        }],
        exact_solution: Some(Arc::new(move |x: &[f64]| vec![exact_v(x).v]) as PointFn),
        hard_constraint: HardConstraint::None,
        output_modes: vec![OutputMode::Sum],
        focus_region,
    }
}

fn helmholtz_problem() -> PdeProblem {
    let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let wave_sq = 9.0; // k = 3
    PdeProblem {
        name: "helmholtz2d".to_string(),
        domain,
        outputs: 1,
        residual_components: 1,
        interior: Arc::new(move |jet, x| {
            let star = helmholtz_sym(x);
            let f = star.laplacian() + wave_sq * star.v;
            vec![jet.laplacian[0] + wave_sq * jet.value[0] - f]
        }),
        interior_pullback: Arc::new(move |jet: &Jet, _x: &[f64], w: &[f64]| {
            let mut cot = JetCotangent::zeros(1, jet.dim());
            cot.d_laplacian[0] = w[0];
            cot.d_value[0] = wave_sq * w[0];
            cot
        }),
        boundary_groups: vec![BoundaryGroup {
            name: "dirichlet",
            share: 1.0,
            kind: BoundaryKind::DirichletFaces {
                g: Arc::new(|_x| vec![0.0]),
            },
        }],
        exact_solution: Some(Arc::new(|x: &[f64]| vec![helmholtz_sym(x).v]) as PointFn),
        hard_constraint: HardConstraint::None,
        output_modes: vec![OutputMode::Sum],
        focus_region: Some((vec![-0.3, -0.3], vec![0.3, 0.3])),
    }
}

/// Unsteady inviscid boundary-layer system over (x, y, t):
///   u_t + u·u_x + v·u_y = 0,  u_x + v_y = 0,
/// periodic in x, u(x,y,0) = y + sin(2πx) soft, v(x,0,t) = 0 hard via v = y·N.
/// The multi-level correction applies to v only; u is re-solved per level.
fn prandtl_problem() -> PdeProblem {
    let mut domain = Domain::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.16]).unwrap();
    domain.periodic_axes = vec![0];
    const X: usize = 0;
    const Y: usize = 1;
    const T: usize = 2;
    PdeProblem {
        name: "prandtl2d".to_string(),
        domain,
        outputs: 2,
        residual_components: 2,
        interior: Arc::new(|jet, _x| {
            let u = jet.value[0];
            let v = jet.value[1];
            let ux = jet.grad_at(0, X);
            let uy = jet.grad_at(0, Y);
            let ut = jet.grad_at(0, T);
            let vy = jet.grad_at(1, Y);
            vec![ut + u * ux + v * uy, ux + vy]
        }),
        interior_pullback: Arc::new(|jet: &Jet, _x: &[f64], w: &[f64]| {
            let d = jet.dim();
            let mut cot = JetCotangent::zeros(2, d);
            let u = jet.value[0];
            let v = jet.value[1];
            let ux = jet.grad_at(0, X);
            let uy = jet.grad_at(0, Y);
            // r₁ = u_t + u·u_x + v·u_y
            cot.d_value[0] += w[0] * ux;
            cot.d_value[1] += w[0] * uy;
            cot.d_grad[X] += w[0] * u;
            cot.d_grad[Y] += w[0] * v;
            cot.d_grad[T] += w[0];
            // r₂ = u_x + v_y
            cot.d_grad[X] += w[1];
            cot.d_grad[d + Y] += w[1];
            cot
        }),
        boundary_groups: vec![
            BoundaryGroup {
                name: "initial",
                share: 1.0 / 3.0,
                kind: BoundaryKind::Plane {
                    axis: T,
                    at: 0.0,
                    components: vec![0],
                    g: Arc::new(|x: &[f64]| vec![x[Y] + (2.0 * PI * x[X]).sin()]),
                },
            },
            BoundaryGroup {
                name: "periodic_x",
                share: 2.0 / 3.0,
                kind: BoundaryKind::PeriodicPair {
                    axis: X,
                    components: vec![0, 1],
                },
            },
        ],
        exact_solution: None,
        hard_constraint: HardConstraint::ScaleByCoordinate { output: 1, axis: Y },
        output_modes: vec![OutputMode::Replace, OutputMode::Sum],
        focus_region: Some((vec![0.0, 0.0, 0.12], vec![1.0, 2.0, 0.16])),
    }
}

/// Wires a fully-specified benchmark problem.
///
/// Names: `poisson_peak2d`, `helmholtz2d`, `sharp_poisson` (dim 2 or 3),
/// `prandtl2d`.
pub fn builtin_problem(name: &str, dim: usize) -> Result<PdeProblem> {
    match (name, dim) {
        ("poisson_peak2d", 2) => Ok(neg_laplace_problem(
            "poisson_peak2d",
            Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            Arc::new(peak_sym),
            Some((vec![-0.1, -0.1], vec![0.1, 0.1])),
        )),
        ("helmholtz2d", 2) => Ok(helmholtz_problem()),
        ("sharp_poisson", 2) | ("sharp_poisson", 3) => Ok(neg_laplace_problem(
            "sharp_poisson",
            Domain::new(vec![0.0; dim], vec![1.0; dim]).unwrap(),
            Arc::new(sharp_sym),
            // bounding box of the interface sphere |x−½| = ¼
            Some((vec![0.2; dim], vec![0.8; dim])),
        )),
        ("prandtl2d", 2) => Ok(prandtl_problem()),
        _ => Err(Error::config(format!(
            "unknown problem/dim combination: {name} (dim {dim})"
        ))),
    }
}

/// Resolves the builtin problem a stack was trained on from its recorded
/// name and input dimension.
pub fn builtin_for_stack(stack: &crate::pde::SolutionStack) -> Result<PdeProblem> {
    let name = stack.problem_name();
    let dim = match name {
        "prandtl2d" => 2,
        "sharp_poisson" => stack.input_dim(),
        _ => stack.input_dim(),
    };
    builtin_problem(name, dim)
}

/// Exact solution as a full jet (value/gradient/Hessian), when defined.
/// Substituted for the network prediction in consistency checks.
pub fn exact_jet_fn(name: &str, dim: usize) -> Option<JetFn> {
    match (name, dim) {
        ("poisson_peak2d", 2) => Some(Arc::new(|x: &[f64]| sym_to_jet(&peak_sym(x)))),
        ("helmholtz2d", 2) => Some(Arc::new(|x: &[f64]| sym_to_jet(&helmholtz_sym(x)))),
        ("sharp_poisson", 2) | ("sharp_poisson", 3) => {
            Some(Arc::new(|x: &[f64]| sym_to_jet(&sharp_sym(x))))
        }
        _ => None,
    }
}
