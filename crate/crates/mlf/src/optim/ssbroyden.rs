//! Self-scaled Broyden quasi-Newton method over a dense inverse-Hessian
//! approximation.
//!
//! The update introduces a self-scaling factor τ and an update parameter φ:
//!
//! ```text
//! ψ  = √(δGᵀH⁻¹δG) · [ δθ/(δG·δθ) − H⁻¹δG/(δGᵀH⁻¹δG) ]
//! H⁻¹ ← (1/τ)[ H⁻¹ − (H⁻¹δG ⊗ H⁻¹δG)/(δGᵀH⁻¹δG) + φ·ψ⊗ψ ] + (δθ⊗δθ)/(δG·δθ)
//! ```
//!
//! With τ = φ = 1 this is exactly the BFGS inverse update.

use super::lbfgs::QnStep;
use super::wolfe::{wolfe_search_from, LineSearch};
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2, Mat};
use serde::{Deserialize, Serialize};

/// Choice of the self-scaling factor τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// τ = (δGᵀH⁻¹δG)/(δG·δθ). Dividing the update core by this is the
    /// classical Oren–Luenberger scaling (the core gets multiplied by
    /// δG·δθ/δGᵀH⁻¹δG ≤ 1); the reciprocal pairing blows the approximation
    /// up on plain SPD quadratics.
    SelfScaled,
    /// τ = 1 (no scaling).
    One,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsbConfig {
    pub tau: TauRule,
    /// Update parameter φ (1.0 recovers the BFGS convex-class member).
    pub phi: f64,
    /// Strong Wolfe curvature constant.
    pub c2: f64,
}

impl Default for SsbConfig {
    fn default() -> Self {
        SsbConfig {
            tau: TauRule::SelfScaled,
            phi: 1.0,
            c2: super::wolfe::WOLFE_C2,
        }
    }
}

/// Applies one self-scaled Broyden update of the inverse Hessian in place.
/// Pairs with non-positive curvature are skipped; a non-SPD probe resets the
/// approximation to the identity. Returns whether the update was applied.
pub fn ssbroyden_update(
    h_inv: &mut Mat,
    step: &[f64],
    grad_diff: &[f64],
    cfg: &SsbConfig,
) -> bool {
    let n = step.len();
    debug_assert_eq!(h_inv.rows, n);
    let b = dot(grad_diff, step);
    if b <= 1e-14 * norm2(grad_diff) * norm2(step) {
        return false;
    }
    let hy = h_inv.matvec(grad_diff);
    let c = dot(grad_diff, &hy);
    if !(c > 0.0) {
        // curvature information inconsistent with an SPD approximation
        *h_inv = Mat::identity(n);
        return false;
    }
    let sqrt_c = c.sqrt();
    let psi: Vec<f64> = (0..n)
        .map(|i| sqrt_c * (step[i] / b - hy[i] / c))
        .collect();
    let tau = match cfg.tau {
        TauRule::SelfScaled => c / b,
        TauRule::One => 1.0,
    };
    let inv_tau = 1.0 / tau;
    for i in 0..n {
        for j in 0..n {
            let core = h_inv[(i, j)] - hy[i] * hy[j] / c + cfg.phi * (psi[i] * psi[j]);
            h_inv[(i, j)] = inv_tau * core + step[i] * step[j] / b;
        }
    }
    // SPD drift probe along the step direction
    let hs = h_inv.matvec(step);
    if dot(step, &hs) < 0.0 {
        *h_inv = Mat::identity(n);
    }
    true
}

pub struct Ssbroyden {
    cfg: SsbConfig,
    h_inv: Mat,
    cached: Option<(f64, Vec<f64>)>,
    /// true until the first successful update after construction or a reset
    fresh: bool,
}

impl Ssbroyden {
    pub fn new(cfg: SsbConfig, n_params: usize) -> Self {
        Ssbroyden {
            cfg,
            h_inv: Mat::identity(n_params),
            cached: None,
            fresh: true,
        }
    }

    pub fn inverse_hessian(&self) -> &Mat {
        &self.h_inv
    }

    /// Resets the inverse-Hessian approximation to the identity (stall
    /// recovery); the cached objective value stays valid.
    pub fn reset_curvature(&mut self) {
        let n = self.h_inv.rows;
        self.h_inv = Mat::identity(n);
        self.fresh = true;
    }

    pub fn step<F>(&mut self, theta: &mut Vec<f64>, eval: &mut F) -> Result<QnStep>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let (f0, g0) = match self.cached.take() {
            Some(fg) => fg,
            None => eval(theta)?,
        };
        let g0_norm = norm2(&g0);
        if g0_norm == 0.0 {
            self.cached = Some((f0, g0));
            return Ok(QnStep {
                loss: f0,
                grad_norm: 0.0,
                stalled: false,
                evals: 0,
            });
        }

        let mut dir: Vec<f64> = self.h_inv.matvec(&g0).iter().map(|v| -v).collect();
        if dot(&dir, &g0) >= 0.0 {
            self.reset_curvature();
            dir = g0.iter().map(|g| -g).collect();
        }
        let initial = if self.fresh {
            (1.0 / g0_norm).min(1.0)
        } else {
            1.0
        };

        match wolfe_search_from(eval, theta, &dir, f0, &g0, initial, self.cfg.c2)? {
            LineSearch::Accepted(acc) => {
                let s: Vec<f64> = dir.iter().map(|d| acc.alpha * d).collect();
                let y: Vec<f64> = acc.grad.iter().zip(&g0).map(|(a, b)| a - b).collect();
                if self.fresh {
                    // set the identity to the curvature scale of the first
                    // pair before updating; H = I can be off by many orders
                    // on stiff objectives and the approximation never recovers
                    let sy = dot(&s, &y);
                    let yy = dot(&y, &y);
                    if sy > 0.0 && yy > 0.0 {
                        let gamma = sy / yy;
                        let n = self.h_inv.rows;
                        for i in 0..n {
                            self.h_inv[(i, i)] = gamma;
                        }
                    }
                }
                if ssbroyden_update(&mut self.h_inv, &s, &y, &self.cfg) {
                    self.fresh = false;
                }
                axpy(1.0, &s, theta);
                let gn = norm2(&acc.grad);
                self.cached = Some((acc.f, acc.grad));
                Ok(QnStep {
                    loss: acc.f,
                    grad_norm: gn,
                    stalled: false,
                    evals: acc.evals,
                })
            }
            LineSearch::Stalled { evals } => {
                self.cached = Some((f0, g0));
                Ok(QnStep {
                    loss: f0,
                    grad_norm: g0_norm,
                    stalled: true,
                    evals,
                })
            }
        }
    }
}
