//! SOAP: Adam executed in the eigenbasis of layerwise Kronecker preconditioners.
//!
//! Per weight matrix the left/right second-moment accumulators are
//! `L ← β·L + G·Gᵀ` and `R ← β·R + Gᵀ·G`; every `precondition_frequency`
//! steps their eigenbases `Q_L`, `Q_R` are recomputed and the gradient is
//! rotated as `G̃ = Q_Lᵀ G Q_R` before the Adam moment update. The resulting
//! direction is rotated back with `Q_L · D̃ · Q_Rᵀ`. Bias vectors bypass the
//! rotation and use plain Adam.

use super::adam::{adam_direction, AdamConfig, Moments};
use super::eig::sym_eig;
use crate::error::{Error, Result};
use crate::jet_net::LayerLayout;
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct SoapConfig {
    pub adam: AdamConfig,
    /// Decay of the left/right accumulators.
    pub shampoo_decay: f64,
    /// Eigenbasis refresh interval in steps.
    pub precondition_frequency: u64,
    /// When false the bases stay at identity and SOAP follows Adam exactly.
    pub preconditioning: bool,
}

impl Default for SoapConfig {
    fn default() -> Self {
        SoapConfig {
            adam: AdamConfig::default(),
            shampoo_decay: 0.95,
            precondition_frequency: 10,
            preconditioning: true,
        }
    }
}

struct LayerState {
    layout: LayerLayout,
    left: Mat,
    right: Mat,
    basis_left: Option<Mat>,
    basis_right: Option<Mat>,
    weight_moments: Moments,
    bias_moments: Moments,
}

/// SOAP over a flat parameter vector organized per layer.
pub struct Soap {
    cfg: SoapConfig,
    layers: Vec<LayerState>,
    t: u64,
    /// set when an eigendecomposition failed and stale bases were kept
    pub basis_warnings: u64,
}

impl Soap {
    pub fn new(cfg: SoapConfig, layers: &[LayerLayout]) -> Self {
        Soap {
            cfg,
            layers: layers
                .iter()
                .map(|&layout| LayerState {
                    layout,
                    left: Mat::zeros(layout.fan_out, layout.fan_out),
                    right: Mat::zeros(layout.fan_in, layout.fan_in),
                    basis_left: None,
                    basis_right: None,
                    weight_moments: Moments::zeros(layout.fan_in * layout.fan_out),
                    bias_moments: Moments::zeros(layout.fan_out),
                })
                .collect(),
            t: 0,
            basis_warnings: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite gradient in SOAP step"));
        }
        self.t += 1;
        let t = self.t;
        let lr = self.cfg.adam.lr_at(t);
        let refresh = self.cfg.preconditioning && (t - 1) % self.cfg.precondition_frequency == 0;

        for layer in &mut self.layers {
            let lay = layer.layout;
            let (m, n) = (lay.fan_out, lay.fan_in);
            let g_mat = Mat {
                rows: m,
                cols: n,
                data: grad[lay.weight_offset..lay.weight_offset + m * n].to_vec(),
            };

            if self.cfg.preconditioning {
                // L ← β·L + G·Gᵀ, R ← β·R + Gᵀ·G
                let ggt = g_mat.matmul_t(&g_mat);
                let gtg = g_mat.t_matmul(&g_mat);
                for (l, s) in layer.left.data.iter_mut().zip(&ggt.data) {
                    *l = self.cfg.shampoo_decay * *l + s;
                }
                for (r, s) in layer.right.data.iter_mut().zip(&gtg.data) {
                    *r = self.cfg.shampoo_decay * *r + s;
                }
                if refresh {
                    if layer.left.data.iter().all(|v| v.is_finite())
                        && layer.right.data.iter().all(|v| v.is_finite())
                    {
                        layer.basis_left = Some(sym_eig(&layer.left).eigenvectors);
                        layer.basis_right = Some(sym_eig(&layer.right).eigenvectors);
                    } else {
                        self.basis_warnings += 1;
                    }
                }
            }

            // project, run the Adam update in the rotated basis, rotate back
            let rotated = match (&layer.basis_left, &layer.basis_right) {
                (Some(ql), Some(qr)) => ql.t_matmul(&g_mat).matmul(qr),
                _ => g_mat,
            };
            let mut dir = vec![0.0; m * n];
            adam_direction(
                &mut layer.weight_moments,
                &self.cfg.adam,
                t,
                &rotated.data,
                &mut dir,
            );
            let dir = match (&layer.basis_left, &layer.basis_right) {
                (Some(ql), Some(qr)) => {
                    let d = Mat {
                        rows: m,
                        cols: n,
                        data: dir,
                    };
                    ql.matmul(&d).matmul_t(qr).data
                }
                _ => dir,
            };
            for (th, d) in theta[lay.weight_offset..lay.weight_offset + m * n]
                .iter_mut()
                .zip(&dir)
            {
                *th -= lr * d;
            }

            let mut bias_dir = vec![0.0; m];
            adam_direction(
                &mut layer.bias_moments,
                &self.cfg.adam,
                t,
                &grad[lay.bias_offset..lay.bias_offset + m],
                &mut bias_dir,
            );
            for (th, d) in theta[lay.bias_offset..lay.bias_offset + m]
                .iter_mut()
                .zip(&bias_dir)
            {
                *th -= lr * d;
            }
        }
        Ok(())
    }
}
