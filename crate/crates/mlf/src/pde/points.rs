//! Point-set construction: uniform interior samples, per-group boundary
//! samples and test grids.

use super::{BoundaryKind, BoundaryPoint, Domain, PdeProblem};
use crate::stream::{stream, uniform, StreamId};
use rand_chacha::ChaCha12Rng;

/// Uniform draws strictly inside the box (draws landing exactly on the
/// boundary are redrawn; with continuous draws this virtually never happens
/// but keeps the strict-interior precondition honest).
pub fn uniform_interior(domain: &Domain, n: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = domain
            .lower
            .iter()
            .zip(&domain.upper)
            .map(|(l, u)| uniform(rng, *l, *u))
            .collect();
        if domain.contains_interior(&x) {
            out.push(x);
        }
    }
    out
}

/// Deterministic split of `n_total` across the groups by their shares:
/// group i receives round(cum_i·n) − round(cum_{i−1}·n).
pub fn boundary_budget(problem: &PdeProblem, n_total: usize) -> Vec<usize> {
    let total_share: f64 = problem.boundary_groups.iter().map(|g| g.share).sum();
    let mut counts = Vec::with_capacity(problem.boundary_groups.len());
    let mut cum = 0.0;
    let mut prev = 0usize;
    for grp in &problem.boundary_groups {
        cum += grp.share / total_share;
        let here = (cum * n_total as f64).round() as usize;
        counts.push(here - prev);
        prev = here;
    }
    counts
}

/// Samples the full boundary training set, one counter-based stream per group.
/// The set is drawn once per run and reused at every level.
pub fn boundary_points(problem: &PdeProblem, n_total: usize, seed: u64) -> Vec<BoundaryPoint> {
    let counts = boundary_budget(problem, n_total);
    let mut out = Vec::with_capacity(n_total);
    for (gi, (grp, &count)) in problem
        .boundary_groups
        .iter()
        .zip(counts.iter())
        .enumerate()
    {
        let mut rng = stream(seed, StreamId::Boundary { group: gi as u32 });
        for _ in 0..count {
            let x = sample_on_group(&problem.domain, &grp.kind, &mut rng);
            out.push(BoundaryPoint { group: gi, x });
        }
    }
    out
}

fn sample_on_group(domain: &Domain, kind: &BoundaryKind, rng: &mut ChaCha12Rng) -> Vec<f64> {
    match kind {
        BoundaryKind::DirichletFaces { .. } => sample_on_faces(domain, rng),
        BoundaryKind::Plane { axis, at, .. } => {
            let mut x = free_coords(domain, *axis, rng);
            x[*axis] = *at;
            x
        }
        BoundaryKind::PeriodicPair { axis, .. } => {
            let mut x = free_coords(domain, *axis, rng);
            x[*axis] = domain.lower[*axis];
            x
        }
    }
}

fn free_coords(domain: &Domain, fixed_axis: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    (0..domain.dim())
        .map(|i| {
            if i == fixed_axis {
                0.0
            } else {
                uniform(rng, domain.lower[i], domain.upper[i])
            }
        })
        .collect()
}

/// Area-weighted uniform sample over the 2d faces of the box.
fn sample_on_faces(domain: &Domain, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let d = domain.dim();
    let sides: Vec<f64> = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(l, u)| u - l)
        .collect();
    let face_measures: Vec<f64> = (0..d)
        .map(|a| sides.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, s)| s).product())
        .collect();
    let total: f64 = 2.0 * face_measures.iter().sum::<f64>();
    let mut pick = uniform(rng, 0.0, total);
    let mut axis = 0;
    let mut upper_side = false;
    for a in 0..d {
        for side in [false, true] {
            if pick < face_measures[a] || (a == d - 1 && side) {
                axis = a;
                upper_side = side;
                pick = -1.0;
                break;
            }
            pick -= face_measures[a];
        }
        if pick < 0.0 {
            break;
        }
    }
    let mut x = free_coords(domain, axis, rng);
    x[axis] = if upper_side {
        domain.upper[axis]
    } else {
        domain.lower[axis]
    };
    x
}

/// Regular grid with `per_axis` points per axis, endpoints included,
/// axis 0 slowest. The standard test set for 2-D problems.
pub fn grid_points(domain: &Domain, per_axis: usize) -> Vec<Vec<f64>> {
    assert!(per_axis >= 2);
    let d = domain.dim();
    let mut out = Vec::with_capacity(per_axis.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = (0..d)
            .map(|i| {
                let t = idx[i] as f64 / (per_axis - 1) as f64;
                domain.lower[i] + t * (domain.upper[i] - domain.lower[i])
            })
            .collect();
        out.push(x);
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Uniform random test set over the closed box (used where the test spec is
/// a point count rather than a grid).
pub fn random_test_points(domain: &Domain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, StreamId::TestSet);
    (0..n)
        .map(|_| {
            domain
                .lower
                .iter()
                .zip(&domain.upper)
                .map(|(l, u)| uniform(&mut rng, *l, *u))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::problems::builtin_problem;

    #[test]
    fn interior_points_are_strictly_inside() {
        let p = builtin_problem("poisson_peak2d", 2).unwrap();
        let mut rng = stream(100, StreamId::UniformInterior);
        let pts = uniform_interior(&p.domain, 500, &mut rng);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|x| p.domain.contains_interior(x)));
    }

    #[test]
    fn boundary_points_lie_on_their_groups() {
        let p = builtin_problem("prandtl2d", 2).unwrap();
        let pts = boundary_points(&p, 300, 100);
        assert_eq!(pts.len(), 300);
        let counts = boundary_budget(&p, 300);
        assert_eq!(counts, vec![100, 200]);
        for bp in &pts {
            match bp.group {
                0 => assert_eq!(bp.x[2], 0.0),
                1 => assert_eq!(bp.x[0], 0.0),
                _ => panic!("unknown group"),
            }
            assert!(p.domain.contains_closure(&bp.x));
        }
    }

    #[test]
    fn dirichlet_points_cover_all_faces() {
        let p = builtin_problem("poisson_peak2d", 2).unwrap();
        let pts = boundary_points(&p, 400, 100);
        let mut face_hits = [0usize; 4];
        for bp in &pts {
            if bp.x[0] == -1.0 {
                face_hits[0] += 1;
            } else if bp.x[0] == 1.0 {
                face_hits[1] += 1;
            } else if bp.x[1] == -1.0 {
                face_hits[2] += 1;
            } else if bp.x[1] == 1.0 {
                face_hits[3] += 1;
            } else {
                panic!("point not on any face: {:?}", bp.x);
            }
        }
        assert!(face_hits.iter().all(|&c| c > 50), "{face_hits:?}");
    }

    #[test]
    fn grid_is_dense_and_ordered() {
        let p = builtin_problem("poisson_peak2d", 2).unwrap();
        let g = grid_points(&p.domain, 5);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], vec![-1.0, -1.0]);
        assert_eq!(g[1], vec![-1.0, -0.5]);
        assert_eq!(g[24], vec![1.0, 1.0]);
    }
}
