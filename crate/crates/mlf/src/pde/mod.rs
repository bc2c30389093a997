//! Benchmark PDE definitions, composed residual/boundary operators over a
//! frozen solution stack plus one active network, and the empirical loss.
//!
//! A level-k training step solves the correction equation: the differential
//! operator is applied to (sum of frozen predictions + active network) and the
//! active network learns whatever residual remains.

pub mod points;
pub mod problems;
pub mod symbolic;

use crate::error::{Error, Result};
use crate::jet_net::{Jet, JetCotangent, JetTrace, NetSpec, Network, ParamVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Fixed chunk length for parallel reductions. Partial sums are produced per
/// chunk and folded in ascending chunk order, so results are independent of
/// the worker count.
const REDUCE_CHUNK: usize = 64;

/// Axis-aligned box domain, optionally periodic along some axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic_axes: Vec<usize>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config("domain bounds must have equal nonzero dims"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::config("domain needs lower < upper componentwise"));
        }
        Ok(Domain {
            lower,
            upper,
            periodic_axes: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi > *l && *xi < *u)
    }

    pub fn contains_closure(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }
}

/// How one output component combines across stack levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    /// Levels are corrections: the prediction is the sum over all levels.
    Sum,
    /// The newest level's output replaces earlier ones (re-solved per level).
    Replace,
}

/// Output transform that enforces a boundary condition exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HardConstraint {
    None,
    /// Multiply output `output` by coordinate `axis` (e.g. v ← y·N).
    ScaleByCoordinate { output: usize, axis: usize },
}

impl HardConstraint {
    /// Applies the transform to a network jet in place.
    pub fn apply_jet(&self, jet: &mut Jet, x: &[f64]) {
        match *self {
            HardConstraint::None => {}
            HardConstraint::ScaleByCoordinate { output: i, axis: a } => {
                let d = jet.dim();
                let c = x[a];
                let val = jet.value[i];
                let grad: Vec<f64> = jet.grad[i * d..(i + 1) * d].to_vec();
                jet.value[i] = c * val;
                for p in 0..d {
                    jet.grad[i * d + p] = c * grad[p] + if p == a { val } else { 0.0 };
                }
                for p in 0..d {
                    for q in 0..d {
                        let mut h = c * jet.hess[i * d * d + p * d + q];
                        if p == a {
                            h += grad[q];
                        }
                        if q == a {
                            h += grad[p];
                        }
                        jet.hess[i * d * d + p * d + q] = h;
                    }
                }
                jet.laplacian[i] = c * jet.laplacian[i] + 2.0 * grad[a];
            }
        }
    }

    pub fn apply_values(&self, values: &mut [f64], x: &[f64]) {
        if let HardConstraint::ScaleByCoordinate { output: i, axis: a } = *self {
            values[i] *= x[a];
        }
    }

    /// Pulls a cotangent w.r.t. the transformed jet back to the raw net jet.
    pub fn pullback(&self, cot: &mut JetCotangent, x: &[f64], d: usize) {
        if let HardConstraint::ScaleByCoordinate { output: i, axis: a } = *self {
            let c = x[a];
            let dv = cot.d_value[i];
            let dl = cot.d_laplacian[i];
            // forward map: value' = c·value, grad'[p] = c·grad[p] + δ_{pa}·value,
            //              lap' = c·lap + 2·grad[a]
            cot.d_value[i] = c * dv + cot.d_grad[i * d + a];
            for p in 0..d {
                cot.d_grad[i * d + p] *= c;
            }
            cot.d_grad[i * d + a] += 2.0 * dl;
            cot.d_laplacian[i] = c * dl;
        }
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// 𝒜[u](x) − f(x) evaluated on a prediction jet.
pub type ResidualFn = Arc<dyn Fn(&Jet, &[f64]) -> Vec<f64> + Send + Sync>;
/// Weighted contraction Σₘ wₘ·∂rₘ/∂(jet fields) of the residual partials.
pub type ResidualPullbackFn = Arc<dyn Fn(&Jet, &[f64], &[f64]) -> JetCotangent + Send + Sync>;

/// One soft boundary condition with its sampler geometry.
#[derive(Clone)]
pub struct BoundaryGroup {
    pub name: &'static str,
    /// Fraction of the boundary point budget assigned to this group.
    pub share: f64,
    pub kind: BoundaryKind,
}

#[derive(Clone)]
pub enum BoundaryKind {
    /// u(x) − g(x) over all outputs, sampled area-weighted on the box faces.
    DirichletFaces { g: PointFn },
    /// Selected outputs minus g(x) on the hyperplane `axis = at`.
    Plane {
        axis: usize,
        at: f64,
        components: Vec<usize>,
        g: PointFn,
    },
    /// Paired-plane differences u(x)|axis=lo − u(x)|axis=hi for the selected
    /// outputs; points are parameterized on the `axis = lo` plane.
    PeriodicPair { axis: usize, components: Vec<usize> },
}

impl BoundaryGroup {
    pub fn component_count(&self, outputs: usize) -> usize {
        match &self.kind {
            BoundaryKind::DirichletFaces { .. } => outputs,
            BoundaryKind::Plane { components, .. } => components.len(),
            BoundaryKind::PeriodicPair { components, .. } => components.len(),
        }
    }

    /// Whether `x` lies on this group's sampling geometry (used to route
    /// boundary points presented without a group id).
    fn matches(&self, domain: &Domain, x: &[f64]) -> bool {
        let tol = 1e-12;
        match &self.kind {
            BoundaryKind::DirichletFaces { .. } => x
                .iter()
                .zip(domain.lower.iter().zip(&domain.upper))
                .any(|(xi, (l, u))| (xi - l).abs() <= tol || (xi - u).abs() <= tol),
            BoundaryKind::Plane { axis, at, .. } => (x[*axis] - at).abs() <= tol,
            BoundaryKind::PeriodicPair { axis, .. } => {
                (x[*axis] - domain.lower[*axis]).abs() <= tol
                    || (x[*axis] - domain.upper[*axis]).abs() <= tol
            }
        }
    }
}

/// A benchmark problem: domain, interior operator, boundary conditions and
/// (when known) the exact solution everything is manufactured from.
#[derive(Clone)]
pub struct PdeProblem {
    pub name: String,
    pub domain: Domain,
    pub outputs: usize,
    pub residual_components: usize,
    pub interior: ResidualFn,
    pub interior_pullback: ResidualPullbackFn,
    pub boundary_groups: Vec<BoundaryGroup>,
    pub exact_solution: Option<PointFn>,
    pub hard_constraint: HardConstraint,
    pub output_modes: Vec<OutputMode>,
    /// Box where the interesting feature lives; drives the reported
    /// concentration statistic.
    pub focus_region: Option<(Vec<f64>, Vec<f64>)>,
}

impl PdeProblem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn has_replace_outputs(&self) -> bool {
        self.output_modes.contains(&OutputMode::Replace)
    }
}

/// Ordered list of frozen trained networks whose (mode-aware) combination is
/// the current predicted solution.
pub struct SolutionStack {
    problem_name: String,
    input_dim: usize,
    output_dim: usize,
    entries: Vec<StackEntry>,
}

pub struct StackEntry {
    pub network: Network,
    pub params: ParamVector,
}

impl SolutionStack {
    pub fn new(problem: &PdeProblem) -> Self {
        SolutionStack {
            problem_name: problem.name.clone(),
            input_dim: problem.dim(),
            output_dim: problem.outputs,
            entries: Vec::new(),
        }
    }

    pub fn for_dims(problem_name: &str, input_dim: usize, output_dim: usize) -> Self {
        SolutionStack {
            problem_name: problem_name.to_string(),
            input_dim,
            output_dim,
            entries: Vec::new(),
        }
    }

    pub fn problem_name(&self) -> &str {
        &self.problem_name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StackEntry] {
        &self.entries
    }

    pub fn push(&mut self, spec: NetSpec, params: ParamVector) -> Result<()> {
        if spec.input_dim != self.input_dim || spec.output_dim != self.output_dim {
            return Err(Error::config(
                "stack entries must share input/output dimensions",
            ));
        }
        let network = Network::new(spec);
        if params.len() != network.param_len() {
            return Err(Error::config("stack entry parameter length mismatch"));
        }
        self.entries.push(StackEntry { network, params });
        Ok(())
    }

    /// Truncated view over the first `k` entries (used to re-evaluate the
    /// monitor history of earlier levels).
    pub fn prefix(&self, k: usize) -> StackView<'_> {
        StackView {
            stack: self,
            len: k.min(self.entries.len()),
        }
    }

    pub fn view(&self) -> StackView<'_> {
        self.prefix(self.entries.len())
    }
}

/// Borrowed prefix of a stack.
#[derive(Clone, Copy)]
pub struct StackView<'a> {
    stack: &'a SolutionStack,
    len: usize,
}

impl<'a> StackView<'a> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entries(&self) -> &'a [StackEntry] {
        &self.stack.entries[..self.len]
    }

    pub fn input_dim(&self) -> usize {
        self.stack.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.stack.output_dim
    }
}

/// Plain componentwise sum of `forward_jet` over all frozen entries; the empty
/// stack gives the zero jet. Problem-specific combination rules live in
/// [`combined_jet`].
pub fn stack_jet(stack: &SolutionStack, x: &[f64]) -> Result<Jet> {
    let mut acc = Jet::zeros(stack.output_dim, stack.input_dim);
    for entry in &stack.entries {
        let jet = entry.network.forward_jet(&entry.params, x)?;
        acc.add_assign(&jet);
    }
    Ok(acc)
}

/// The effective prediction jet of `frozen ⊕ active` under the problem's
/// output modes and hard constraint:
/// - `Sum` outputs add every frozen entry plus the active network;
/// - `Replace` outputs take the active network when present, else the newest
///   frozen entry.
pub fn combined_jet(
    problem: &PdeProblem,
    frozen: StackView<'_>,
    active: Option<(&Network, &ParamVector)>,
    x: &[f64],
) -> Result<Jet> {
    let (s, d) = (problem.outputs, problem.dim());
    let mut acc = Jet::zeros(s, d);
    let newest_frozen = frozen.len().checked_sub(1);
    for (idx, entry) in frozen.entries().iter().enumerate() {
        let mut jet = entry.network.forward_jet(&entry.params, x)?;
        problem.hard_constraint.apply_jet(&mut jet, x);
        merge_jet(
            &mut acc,
            &jet,
            &problem.output_modes,
            active.is_none() && Some(idx) == newest_frozen,
        );
    }
    if let Some((net, params)) = active {
        let mut jet = net.forward_jet(params, x)?;
        problem.hard_constraint.apply_jet(&mut jet, x);
        merge_jet(&mut acc, &jet, &problem.output_modes, true);
    }
    Ok(acc)
}

/// Adds `jet` into `acc`: Sum outputs always accumulate; Replace outputs are
/// written only when `jet` is the designated newest source.
fn merge_jet(acc: &mut Jet, jet: &Jet, modes: &[OutputMode], is_newest: bool) {
    let d = acc.dim();
    for (i, mode) in modes.iter().enumerate() {
        match mode {
            OutputMode::Sum => {
                acc.value[i] += jet.value[i];
                acc.laplacian[i] += jet.laplacian[i];
                for p in 0..d {
                    acc.grad[i * d + p] += jet.grad[i * d + p];
                }
                for pq in 0..d * d {
                    acc.hess[i * d * d + pq] += jet.hess[i * d * d + pq];
                }
            }
            OutputMode::Replace => {
                if is_newest {
                    acc.value[i] = jet.value[i];
                    acc.laplacian[i] = jet.laplacian[i];
                    for p in 0..d {
                        acc.grad[i * d + p] = jet.grad[i * d + p];
                    }
                    for pq in 0..d * d {
                        acc.hess[i * d * d + pq] = jet.hess[i * d * d + pq];
                    }
                }
            }
        }
    }
}

fn merge_values(acc: &mut [f64], vals: &[f64], modes: &[OutputMode], is_newest: bool) {
    for (i, mode) in modes.iter().enumerate() {
        match mode {
            OutputMode::Sum => acc[i] += vals[i],
            OutputMode::Replace => {
                if is_newest {
                    acc[i] = vals[i];
                }
            }
        }
    }
}

/// Value-only counterpart of [`combined_jet`].
pub fn combined_values(
    problem: &PdeProblem,
    frozen: StackView<'_>,
    active: Option<(&Network, &ParamVector)>,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; problem.outputs];
    let newest_frozen = frozen.len().checked_sub(1);
    for (idx, entry) in frozen.entries().iter().enumerate() {
        let mut vals = entry.network.forward(&entry.params, x)?;
        problem.hard_constraint.apply_values(&mut vals, x);
        merge_values(
            &mut acc,
            &vals,
            &problem.output_modes,
            active.is_none() && Some(idx) == newest_frozen,
        );
    }
    if let Some((net, params)) = active {
        let mut vals = net.forward(params, x)?;
        problem.hard_constraint.apply_values(&mut vals, x);
        merge_values(&mut acc, &vals, &problem.output_modes, true);
    }
    Ok(acc)
}

/// 𝒜[frozen ⊕ active](x) − f(x) at an interior point.
pub fn composed_residual(
    problem: &PdeProblem,
    stack: &SolutionStack,
    active: Option<(&Network, &ParamVector)>,
    x: &[f64],
) -> Result<Vec<f64>> {
    if !problem.domain.contains_closure(x) {
        return Err(Error::domain(format!(
            "point {x:?} lies outside the domain closure"
        )));
    }
    let jet = combined_jet(problem, stack.view(), active, x)?;
    Ok((problem.interior)(&jet, x))
}

/// ℬ[frozen ⊕ active](x) − g(x) at a boundary point. The point is routed to
/// the first boundary group whose geometry contains it.
pub fn composed_boundary(
    problem: &PdeProblem,
    stack: &SolutionStack,
    active: Option<(&Network, &ParamVector)>,
    x: &[f64],
) -> Result<Vec<f64>> {
    let group = problem
        .boundary_groups
        .iter()
        .position(|grp| grp.matches(&problem.domain, x))
        .ok_or_else(|| Error::domain(format!("point {x:?} is not on a declared boundary")))?;
    boundary_residual(problem, stack.view(), active, group, x)
}

/// Boundary residual for a known group.
pub fn boundary_residual(
    problem: &PdeProblem,
    frozen: StackView<'_>,
    active: Option<(&Network, &ParamVector)>,
    group: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let grp = &problem.boundary_groups[group];
    match &grp.kind {
        BoundaryKind::DirichletFaces { g } => {
            let vals = combined_values(problem, frozen, active, x)?;
            let target = g(x);
            Ok(vals.iter().zip(&target).map(|(v, t)| v - t).collect())
        }
        BoundaryKind::Plane { components, g, .. } => {
            let vals = combined_values(problem, frozen, active, x)?;
            let target = g(x);
            Ok(components
                .iter()
                .enumerate()
                .map(|(m, &c)| vals[c] - target[m])
                .collect())
        }
        BoundaryKind::PeriodicPair { axis, components } => {
            let (lo, hi) = periodic_endpoints(&problem.domain, *axis, x);
            let v_lo = combined_values(problem, frozen, active, &lo)?;
            let v_hi = combined_values(problem, frozen, active, &hi)?;
            Ok(components.iter().map(|&c| v_lo[c] - v_hi[c]).collect())
        }
    }
}

fn periodic_endpoints(domain: &Domain, axis: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = x.to_vec();
    let mut hi = x.to_vec();
    lo[axis] = domain.lower[axis];
    hi[axis] = domain.upper[axis];
    (lo, hi)
}

/// Boundary point tagged with the group it was sampled for.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub group: usize,
    pub x: Vec<f64>,
}

/// Residual/boundary loss weights (the α₁/α₂ of the empirical loss; volume
/// factors are absorbed here).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub residual: f64,
    pub boundary: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            residual: 1.0,
            boundary: 1.0,
        }
    }
}

/// Frozen-stack contributions precomputed on a fixed point set, so that
/// per-epoch work depends only on the active network.
pub struct FrozenFields {
    /// Per interior point: the frozen jets merged for Sum outputs (Replace
    /// outputs zeroed — the active network is their sole source during training).
    interior: Vec<Jet>,
    boundary: Vec<FrozenBoundary>,
}

enum FrozenBoundary {
    Single { values: Vec<f64>, target: Vec<f64> },
    Pair { lo: Vec<f64>, hi: Vec<f64> },
}

/// Precomputes the frozen-stack fields on fixed training sets. Holds for the
/// whole level because stack entries are immutable.
pub fn freeze_fields(
    problem: &PdeProblem,
    stack: &SolutionStack,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
) -> Result<FrozenFields> {
    let (s, d) = (problem.outputs, problem.dim());
    let frozen_sum_jet = |x: &[f64]| -> Result<Jet> {
        let mut acc = Jet::zeros(s, d);
        for entry in stack.entries() {
            let mut jet = entry.network.forward_jet(&entry.params, x)?;
            problem.hard_constraint.apply_jet(&mut jet, x);
            merge_jet(&mut acc, &jet, &problem.output_modes, false);
        }
        Ok(acc)
    };
    let frozen_sum_values = |x: &[f64]| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; s];
        for entry in stack.entries() {
            let mut vals = entry.network.forward(&entry.params, x)?;
            problem.hard_constraint.apply_values(&mut vals, x);
            merge_values(&mut acc, &vals, &problem.output_modes, false);
        }
        Ok(acc)
    };

    let interior = x_r
        .iter()
        .map(|x| frozen_sum_jet(x))
        .collect::<Result<Vec<_>>>()?;
    let boundary = x_b
        .iter()
        .map(|bp| {
            let grp = &problem.boundary_groups[bp.group];
            Ok(match &grp.kind {
                BoundaryKind::DirichletFaces { g } => FrozenBoundary::Single {
                    values: frozen_sum_values(&bp.x)?,
                    target: g(&bp.x),
                },
                BoundaryKind::Plane { g, .. } => FrozenBoundary::Single {
                    values: frozen_sum_values(&bp.x)?,
                    target: g(&bp.x),
                },
                BoundaryKind::PeriodicPair { axis, .. } => {
                    let (lo, hi) = periodic_endpoints(&problem.domain, *axis, &bp.x);
                    FrozenBoundary::Pair {
                        lo: frozen_sum_values(&lo)?,
                        hi: frozen_sum_values(&hi)?,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrozenFields { interior, boundary })
}

/// Empirical loss α₁·Σ|r|² + α₂·Σ|b|² and its exact parameter gradient for
/// the active network, against precomputed frozen fields.
pub fn empirical_loss_with(
    problem: &PdeProblem,
    frozen: &FrozenFields,
    active_net: &Network,
    active: &ParamVector,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
    w: &LossWeights,
) -> Result<(f64, Vec<f64>)> {
    if x_r.is_empty() {
        return Err(Error::config("interior point set must be nonempty"));
    }
    if !(w.residual > 0.0 && w.boundary > 0.0) {
        return Err(Error::config("loss weights must be positive"));
    }
    if frozen.interior.len() != x_r.len() || frozen.boundary.len() != x_b.len() {
        return Err(Error::config("frozen fields do not match the point sets"));
    }
    let n_params = active_net.param_len();
    let (s, d) = (problem.outputs, problem.dim());

    // interior: chunked deterministic reduction
    let interior_parts: Vec<Result<(f64, Vec<f64>)>> = x_r
        .par_chunks(REDUCE_CHUNK)
        .zip(frozen.interior.par_chunks(REDUCE_CHUNK))
        .map(|(points, fro)| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; n_params];
            let mut trace = JetTrace::new(active_net);
            for (x, base) in points.iter().zip(fro) {
                active_net.forward_jet_trace(active, x, &mut trace)?;
                let mut jet = trace.output_jet(active_net);
                problem.hard_constraint.apply_jet(&mut jet, x);
                let mut combined = base.clone();
                merge_jet(&mut combined, &jet, &problem.output_modes, true);

                let r = (problem.interior)(&combined, x);
                let mut weights = Vec::with_capacity(r.len());
                for rm in &r {
                    loss += rm * rm;
                    weights.push(2.0 * w.residual * rm);
                }
                let mut cot = (problem.interior_pullback)(&combined, x, &weights);
                problem.hard_constraint.pullback(&mut cot, x, d);
                active_net.backprop_jet(active, &trace, &cot, &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect();

    // boundary (value-only paths)
    let boundary_parts: Vec<Result<(f64, Vec<f64>)>> = x_b
        .par_chunks(REDUCE_CHUNK)
        .zip(frozen.boundary.par_chunks(REDUCE_CHUNK))
        .map(|(points, fro)| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; n_params];
            let mut trace = JetTrace::value_only(active_net);
            let mut vals = vec![0.0; s];
            for (bp, base) in points.iter().zip(fro) {
                let grp = &problem.boundary_groups[bp.group];
                match (&grp.kind, base) {
                    (BoundaryKind::DirichletFaces { .. }, FrozenBoundary::Single { values, target })
                    | (BoundaryKind::Plane { .. }, FrozenBoundary::Single { values, target }) => {
                        active_net.forward_jet_trace(active, &bp.x, &mut trace)?;
                        trace.write_output_values(&mut vals);
                        problem.hard_constraint.apply_values(&mut vals, &bp.x);
                        let mut combined = values.clone();
                        merge_values(&mut combined, &vals, &problem.output_modes, true);

                        let comps: &[usize] = match &grp.kind {
                            BoundaryKind::Plane { components, .. } => components,
                            _ => &[],
                        };
                        let mut d_value = vec![0.0; s];
                        if comps.is_empty() {
                            for i in 0..s {
                                let b = combined[i] - target[i];
                                loss += b * b;
                                d_value[i] = 2.0 * w.boundary * b;
                            }
                        } else {
                            for (m, &c) in comps.iter().enumerate() {
                                let b = combined[c] - target[m];
                                loss += b * b;
                                d_value[c] = 2.0 * w.boundary * b;
                            }
                        }
                        apply_value_constraint_pullback(
                            &problem.hard_constraint,
                            &mut d_value,
                            &bp.x,
                        );
                        active_net.backprop_value(active, &trace, &d_value, &mut grad)?;
                    }
                    (BoundaryKind::PeriodicPair { axis, components }, FrozenBoundary::Pair { lo, hi }) => {
                        let (xlo, xhi) = periodic_endpoints(&problem.domain, *axis, &bp.x);
                        active_net.forward_jet_trace(active, &xlo, &mut trace)?;
                        trace.write_output_values(&mut vals);
                        problem.hard_constraint.apply_values(&mut vals, &xlo);
                        let mut c_lo = lo.clone();
                        merge_values(&mut c_lo, &vals, &problem.output_modes, true);

                        // second endpoint needs its own trace for backprop
                        let mut trace_hi = JetTrace::value_only(active_net);
                        active_net.forward_jet_trace(active, &xhi, &mut trace_hi)?;
                        trace_hi.write_output_values(&mut vals);
                        problem.hard_constraint.apply_values(&mut vals, &xhi);
                        let mut c_hi = hi.clone();
                        merge_values(&mut c_hi, &vals, &problem.output_modes, true);

                        let mut d_lo = vec![0.0; s];
                        let mut d_hi = vec![0.0; s];
                        for &c in components {
                            let b = c_lo[c] - c_hi[c];
                            loss += b * b;
                            d_lo[c] = 2.0 * w.boundary * b;
                            d_hi[c] = -2.0 * w.boundary * b;
                        }
                        apply_value_constraint_pullback(&problem.hard_constraint, &mut d_lo, &xlo);
                        apply_value_constraint_pullback(&problem.hard_constraint, &mut d_hi, &xhi);
                        active_net.backprop_value(active, &trace, &d_lo, &mut grad)?;
                        active_net.backprop_value(active, &trace_hi, &d_hi, &mut grad)?;
                    }
                    _ => {
                        return Err(Error::config(
                            "frozen boundary data does not match its group kind",
                        ))
                    }
                }
            }
            Ok((loss, grad))
        })
        .collect();

    let mut loss = 0.0;
    let mut grad = vec![0.0; n_params];
    for part in interior_parts {
        let (l, g) = part?;
        loss += w.residual * l;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    for part in boundary_parts {
        let (l, g) = part?;
        loss += w.boundary * l;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}

fn apply_value_constraint_pullback(hc: &HardConstraint, d_value: &mut [f64], x: &[f64]) {
    if let HardConstraint::ScaleByCoordinate { output: i, axis: a } = *hc {
        d_value[i] *= x[a];
    }
}

/// Empirical loss of the frozen stack alone (no active network, no gradient).
/// Used as the level-over-level progress measure on a fixed reference set.
pub fn stack_empirical_loss(
    problem: &PdeProblem,
    stack: &SolutionStack,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
    w: &LossWeights,
) -> Result<f64> {
    let mut interior = 0.0;
    for x in x_r {
        let jet = combined_jet(problem, stack.view(), None, x)?;
        let r = (problem.interior)(&jet, x);
        interior += r.iter().map(|v| v * v).sum::<f64>();
    }
    let mut boundary = 0.0;
    for bp in x_b {
        let b = boundary_residual(problem, stack.view(), None, bp.group, &bp.x)?;
        boundary += b.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(w.residual * interior + w.boundary * boundary)
}

/// One-shot empirical loss over explicit point sets (precomputes the frozen
/// fields internally; training loops should do that once via
/// [`freeze_fields`] + [`empirical_loss_with`]).
pub fn empirical_loss(
    problem: &PdeProblem,
    stack: &SolutionStack,
    active_net: &Network,
    active: &ParamVector,
    x_r: &[Vec<f64>],
    x_b: &[BoundaryPoint],
    w: &LossWeights,
) -> Result<(f64, Vec<f64>)> {
    let frozen = freeze_fields(problem, stack, x_r, x_b)?;
    empirical_loss_with(problem, &frozen, active_net, active, x_r, x_b, w)
}
