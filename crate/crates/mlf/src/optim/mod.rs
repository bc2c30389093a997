//! Optimizers over a generic "evaluate loss and gradient at θ" contract:
//! Adam, SOAP, L-BFGS and self-scaled Broyden, plus the strong Wolfe line
//! search and the dense symmetric eigensolver they rely on.

pub mod adam;
pub mod eig;
pub mod lbfgs;
pub mod soap;
pub mod ssbroyden;
pub mod wolfe;

pub use adam::{Adam, AdamConfig};
pub use eig::{sym_eig, SymEig};
pub use lbfgs::{Lbfgs, LbfgsConfig, QnStep};
pub use soap::{Soap, SoapConfig};
pub use ssbroyden::{SsbConfig, Ssbroyden, TauRule};
pub use wolfe::{wolfe_search, LineSearch};

use crate::error::Result;
use crate::jet_net::LayerLayout;
use crate::linalg::norm2;

/// Record of one training epoch, uniform across optimizer families.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub loss: f64,
    pub grad_norm: f64,
    pub stalled: bool,
}

/// Uniform driver over the four optimizers. Gradient-stepping methods
/// (Adam, SOAP) evaluate once per epoch; line-search methods (L-BFGS,
/// SSBroyden) evaluate as their search requires.
pub enum AnyOptimizer {
    Adam(Adam),
    Soap(Soap),
    Lbfgs(Lbfgs),
    Ssbroyden(Ssbroyden),
}

impl AnyOptimizer {
    pub fn adam(cfg: AdamConfig, n_params: usize) -> Self {
        AnyOptimizer::Adam(Adam::new(cfg, n_params))
    }

    pub fn soap(cfg: SoapConfig, layers: &[LayerLayout]) -> Self {
        AnyOptimizer::Soap(Soap::new(cfg, layers))
    }

    pub fn lbfgs(cfg: LbfgsConfig) -> Self {
        AnyOptimizer::Lbfgs(Lbfgs::new(cfg))
    }

    pub fn ssbroyden(cfg: SsbConfig, n_params: usize) -> Self {
        AnyOptimizer::Ssbroyden(Ssbroyden::new(cfg, n_params))
    }

    /// Drops curvature state (quasi-Newton stall recovery); a no-op for the
    /// gradient-stepping methods.
    pub fn reset_curvature(&mut self) {
        match self {
            AnyOptimizer::Lbfgs(opt) => opt.reset_curvature(),
            AnyOptimizer::Ssbroyden(opt) => opt.reset_curvature(),
            _ => {}
        }
    }

    /// Runs one epoch. For gradient-stepping methods the recorded loss is the
    /// one evaluated at the pre-step parameters; for line-search methods it is
    /// the accepted post-step loss.
    pub fn epoch<F>(&mut self, theta: &mut Vec<f64>, eval: &mut F) -> Result<EpochRecord>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        match self {
            AnyOptimizer::Adam(opt) => {
                let (loss, grad) = eval(theta)?;
                let grad_norm = norm2(&grad);
                opt.step(theta, &grad)?;
                Ok(EpochRecord {
                    loss,
                    grad_norm,
                    stalled: false,
                })
            }
            AnyOptimizer::Soap(opt) => {
                let (loss, grad) = eval(theta)?;
                let grad_norm = norm2(&grad);
                opt.step(theta, &grad)?;
                Ok(EpochRecord {
                    loss,
                    grad_norm,
                    stalled: false,
                })
            }
            AnyOptimizer::Lbfgs(opt) => {
                let step = opt.step(theta, eval)?;
                Ok(EpochRecord {
                    loss: step.loss,
                    grad_norm: step.grad_norm,
                    stalled: step.stalled,
                })
            }
            AnyOptimizer::Ssbroyden(opt) => {
                let step = opt.step(theta, eval)?;
                Ok(EpochRecord {
                    loss: step.loss,
                    grad_norm: step.grad_norm,
                    stalled: step.stalled,
                })
            }
        }
    }
}
