//! Strong Wolfe line search (bracketing + zoom).

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

pub const WOLFE_C1: f64 = 1e-4;
/// Default curvature constant; phases may tighten it for better-converged steps.
pub const WOLFE_C2: f64 = 0.9;
pub const MAX_TRIALS: usize = 25;

/// Accepted step with the objective data already evaluated there.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub alpha: f64,
    pub f: f64,
    pub grad: Vec<f64>,
    pub evals: usize,
}

/// Outcome of a search: either a point satisfying both strong Wolfe
/// conditions or a stall after the trial budget is exhausted.
#[derive(Debug, Clone)]
pub enum LineSearch {
    Accepted(Accepted),
    Stalled { evals: usize },
}

struct Probe {
    alpha: f64,
    f: f64,
    dphi: f64,
    grad: Vec<f64>,
}

/// Searches along `direction` from `theta` for a step length satisfying the
/// strong Wolfe conditions with `c1 = 1e-4`, `c2 = 0.9`, first trial `α = 1`.
///
/// `f0` and `g0` are the objective value and gradient at `theta` (not counted
/// against the trial budget). A non-descent direction is an error.
pub fn wolfe_search<F>(
    eval: &mut F,
    theta: &[f64],
    direction: &[f64],
    f0: f64,
    g0: &[f64],
) -> Result<LineSearch>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    wolfe_search_from(eval, theta, direction, f0, g0, 1.0, WOLFE_C2)
}

/// [`wolfe_search`] with an explicit first trial length (used on fresh
/// curvature state, where `α = 1` can be wildly out of scale).
#[allow(clippy::too_many_arguments)]
pub fn wolfe_search_from<F>(
    eval: &mut F,
    theta: &[f64],
    direction: &[f64],
    f0: f64,
    g0: &[f64],
    initial: f64,
    c2: f64,
) -> Result<LineSearch>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let dphi0 = dot(g0, direction);
    if !(dphi0 < 0.0) {
        return Err(Error::numerical(format!(
            "line search needs a descent direction (g·d = {dphi0:e})"
        )));
    }

    let mut evals = 0usize;
    let mut probe = |alpha: f64, evals: &mut usize| -> Result<Probe> {
        let mut x = theta.to_vec();
        axpy(alpha, direction, &mut x);
        let (f, grad) = eval(&x)?;
        *evals += 1;
        let dphi = dot(&grad, direction);
        Ok(Probe {
            alpha,
            f,
            dphi,
            grad,
        })
    };

    let armijo = |alpha: f64, f: f64| f <= f0 + WOLFE_C1 * alpha * dphi0;
    let curvature = |dphi: f64| dphi.abs() <= -c2 * dphi0;

    let accept = |p: Probe, evals: usize| {
        LineSearch::Accepted(Accepted {
            alpha: p.alpha,
            f: p.f,
            grad: p.grad,
            evals,
        })
    };

    // Bracketing phase.
    let mut prev_alpha = 0.0;
    let mut prev_f = f0;
    let mut prev_dphi = dphi0;
    let mut prev_grad: Option<Vec<f64>> = None;
    let mut alpha = if initial.is_finite() && initial > 0.0 {
        initial
    } else {
        1.0
    };
    let mut bracket: Option<(Probe, Probe)> = None;

    while evals < MAX_TRIALS {
        let p = probe(alpha, &mut evals)?;
        if !p.f.is_finite() || !armijo(p.alpha, p.f) || (prev_alpha > 0.0 && p.f >= prev_f) {
            let lo = Probe {
                alpha: prev_alpha,
                f: prev_f,
                dphi: prev_dphi,
                grad: prev_grad.take().unwrap_or_else(|| g0.to_vec()),
            };
            bracket = Some((lo, p));
            break;
        }
        if curvature(p.dphi) {
            return Ok(accept(p, evals));
        }
        if p.dphi >= 0.0 {
            let hi = Probe {
                alpha: prev_alpha,
                f: prev_f,
                dphi: prev_dphi,
                grad: prev_grad.take().unwrap_or_else(|| g0.to_vec()),
            };
            bracket = Some((p, hi));
            break;
        }
        prev_alpha = p.alpha;
        prev_f = p.f;
        prev_dphi = p.dphi;
        prev_grad = Some(p.grad);
        alpha *= 2.0;
    }

    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => return Ok(LineSearch::Stalled { evals }),
    };

    // Zoom phase: quadratic interpolation on (lo.f, lo.dphi, hi.f) with a
    // bisection safeguard.
    while evals < MAX_TRIALS {
        let span = hi.alpha - lo.alpha;
        if span.abs() <= 1e-16 * lo.alpha.abs().max(1.0) {
            return Ok(LineSearch::Stalled { evals });
        }
        let denom = hi.f - lo.f - lo.dphi * span;
        let mut alpha_j = if denom.abs() > 0.0 {
            lo.alpha - lo.dphi * span * span / (2.0 * denom)
        } else {
            lo.alpha + 0.5 * span
        };
        let (a_min, a_max) = if lo.alpha < hi.alpha {
            (lo.alpha, hi.alpha)
        } else {
            (hi.alpha, lo.alpha)
        };
        let margin = 0.05 * (a_max - a_min);
        if !alpha_j.is_finite() || alpha_j < a_min + margin || alpha_j > a_max - margin {
            alpha_j = lo.alpha + 0.5 * span;
        }

        let p = probe(alpha_j, &mut evals)?;
        if !p.f.is_finite() || !armijo(p.alpha, p.f) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(p.dphi) {
                return Ok(accept(p, evals));
            }
            if p.dphi * span >= 0.0 {
                hi = Probe {
                    alpha: lo.alpha,
                    f: lo.f,
                    dphi: lo.dphi,
                    grad: std::mem::take(&mut lo.grad),
                };
            }
            lo = p;
        }
    }
    Ok(LineSearch::Stalled { evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((x[0] * x[0], vec![2.0 * x[0]]))
    }

    #[test]
    fn lands_on_exact_minimum_of_quadratic() {
        // f = θ², θ = 1, d = −2: the zoom interpolation hits α = 0.5, the
        // exact minimizer, where both conditions hold.
        let mut eval = quadratic;
        let theta = [1.0];
        let (f0, g0) = quadratic(&theta).unwrap();
        let res = wolfe_search(&mut eval, &theta, &[-2.0], f0, &g0).unwrap();
        match res {
            LineSearch::Accepted(a) => {
                assert_eq!(a.alpha, 0.5);
                assert_eq!(a.f, 0.0);
            }
            LineSearch::Stalled { .. } => panic!("should accept"),
        }
    }

    #[test]
    fn unit_step_accepted_without_extra_evals() {
        // Newton direction on the same quadratic: α = 1 satisfies both
        // conditions and is accepted after a single probe.
        let mut eval = quadratic;
        let theta = [1.0];
        let (f0, g0) = quadratic(&theta).unwrap();
        let res = wolfe_search(&mut eval, &theta, &[-1.0], f0, &g0).unwrap();
        match res {
            LineSearch::Accepted(a) => {
                assert_eq!(a.alpha, 1.0);
                assert_eq!(a.evals, 1);
            }
            LineSearch::Stalled { .. } => panic!("should accept"),
        }
    }

    #[test]
    fn non_descent_direction_is_an_error() {
        let mut eval = quadratic;
        let theta = [1.0];
        let (f0, g0) = quadratic(&theta).unwrap();
        assert!(wolfe_search(&mut eval, &theta, &[2.0], f0, &g0).is_err());
    }

    #[test]
    fn kink_stalls_without_crashing() {
        // f = |θ| near 0: no point satisfies the curvature condition with a
        // meaningful margin; the search must flag a stall, not panic.
        let mut eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            Ok((x[0].abs(), vec![x[0].signum()]))
        };
        let theta = [1e-12];
        let (f0, g0) = eval(&theta).unwrap();
        let res = wolfe_search(&mut eval, &theta, &[-1.0], f0, &g0).unwrap();
        match res {
            LineSearch::Stalled { evals } => assert!(evals <= MAX_TRIALS),
            LineSearch::Accepted(a) => {
                // acceptable only if the conditions genuinely hold
                assert!(a.f <= f0 + WOLFE_C1 * a.alpha * dot(&g0, &[-1.0]));
            }
        }
    }
}
