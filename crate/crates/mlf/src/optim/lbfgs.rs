//! Limited-memory BFGS with strong Wolfe line search.

use super::wolfe::{wolfe_search_from, LineSearch};
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    /// Strong Wolfe curvature constant.
    pub c2: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 20,
            c2: super::wolfe::WOLFE_C2,
        }
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Result of one quasi-Newton step (shared with SSBroyden).
#[derive(Debug, Clone)]
pub struct QnStep {
    /// objective value at the accepted point (or at the current point on stall)
    pub loss: f64,
    pub grad_norm: f64,
    pub stalled: bool,
    pub evals: usize,
}

pub struct Lbfgs {
    cfg: LbfgsConfig,
    history: VecDeque<Pair>,
    cached: Option<(f64, Vec<f64>)>,
}

impl Lbfgs {
    pub fn new(cfg: LbfgsConfig) -> Self {
        Lbfgs {
            cfg,
            history: VecDeque::new(),
            cached: None,
        }
    }

    /// Drops the curvature history (stall recovery); the cached objective
    /// value stays valid.
    pub fn reset_curvature(&mut self) {
        self.history.clear();
    }

    /// Two-loop recursion; with empty history this is steepest descent.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.history.len());
        for pair in self.history.iter().rev() {
            let a = pair.rho * dot(&pair.s, &q);
            axpy(-a, &pair.y, &mut q);
            alphas.push(a);
        }
        if let Some(last) = self.history.back() {
            let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
            for v in q.iter_mut() {
                *v *= gamma;
            }
        }
        for (pair, &a) in self.history.iter().zip(alphas.iter().rev()) {
            let b = pair.rho * dot(&pair.y, &q);
            axpy(a - b, &pair.s, &mut q);
        }
        for v in q.iter_mut() {
            *v = -*v;
        }
        q
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

        let mut dir = self.direction(&g0);
        if dot(&dir, &g0) >= 0.0 {
            // defective curvature history: fall back to steepest descent
            self.history.clear();
            dir = g0.iter().map(|g| -g).collect();
        }
        // without curvature information α = 1 can be out of scale by orders
        // of magnitude; start the search at a unit-length step instead
        let initial = if self.history.is_empty() {
            (1.0 / g0_norm).min(1.0)
        } else {
            1.0
        };

        match wolfe_search_from(eval, theta, &dir, f0, &g0, initial, self.cfg.c2)? {
            LineSearch::Accepted(acc) => {
                let s: Vec<f64> = dir.iter().map(|d| acc.alpha * d).collect();
                let y: Vec<f64> = acc.grad.iter().zip(&g0).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-14 * norm2(&s) * norm2(&y) {
                    if self.history.len() == self.cfg.memory {
                        self.history.pop_front();
                    }
                    self.history.push_back(Pair {
                        s: s.clone(),
                        y,
                        rho: 1.0 / sy,
                    });
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{stream, uniform, StreamId};

    #[test]
    fn empty_history_gives_steepest_descent() {
        let lbfgs = Lbfgs::new(LbfgsConfig::default());
        let d = lbfgs.direction(&[3.0, -1.0]);
        assert_eq!(d, vec![-3.0, 1.0]);
    }

    #[test]
    fn solves_spd_quadratic_to_tight_tolerance() {
        // f(x) = ½(x−x*)ᵀA(x−x*) on a random 10-D SPD system.
        let n = 10;
        let mut rng = stream(12, StreamId::Check { tag: 40 });
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = uniform(&mut rng, -1.0, 1.0);
            }
        }
        // A ← MᵀM + I is SPD
        let mut spd = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += a[k][i] * a[k][j];
                }
                spd[i][j] = acc + if i == j { 1.0 } else { 0.0 };
            }
        }
        let x_star: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();

        let mut eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let d: Vec<f64> = x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
            let mut ad = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    ad[i] += spd[i][j] * d[j];
                }
            }
            let f = 0.5 * dot(&ad, &d);
            Ok((f, ad))
        };

        let mut lbfgs = Lbfgs::new(LbfgsConfig::default());
        let mut x = vec![0.0; n];
        let mut converged = false;
        for _ in 0..50 {
            let rep = lbfgs.step(&mut x, &mut eval).unwrap();
            assert!(!rep.stalled);
            if rep.grad_norm <= 1e-10 {
                converged = true;
                break;
            }
        }
        assert!(converged, "gradient norm not driven to 1e-10");
        let (_, g) = eval(&x).unwrap();
        assert!(norm2(&g) <= 1e-10);
    }

    #[test]
    fn accepted_directions_are_descent() {
        let mut rng = stream(13, StreamId::Check { tag: 41 });
        let mut eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let f = x.iter().map(|v| v.powi(4) + v * v).sum::<f64>();
            let g = x.iter().map(|v| 4.0 * v.powi(3) + 2.0 * v).collect();
            Ok((f, g))
        };
        let mut lbfgs = Lbfgs::new(LbfgsConfig::default());
        let mut x: Vec<f64> = (0..6).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let mut prev = eval(&x).unwrap().0;
        for _ in 0..25 {
            let rep = lbfgs.step(&mut x, &mut eval).unwrap();
            assert!(rep.loss <= prev + 1e-12, "loss increased");
            prev = rep.loss;
        }
    }
}
