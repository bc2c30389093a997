//! Multi-level deep solver engine for PDEs.
//!
//! Trains a stack of small dense networks level by level: each level freezes
//! the previous networks, resamples collocation points where the current
//! residual and solution gradients are large, and trains a correction network
//! against the updated equation. Second-order optimizers (SOAP, self-scaled
//! Broyden) handle the fine-tuning phases.

pub mod bench;
pub mod error;
pub mod jet_net;
pub mod linalg;
pub mod mls;
pub mod mlt;
pub mod optim;
pub mod pde;
pub mod stream;

pub use error::{Error, Result};
