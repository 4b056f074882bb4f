//! Spectral toolbox for collisionless phase-mixing studies on the periodic
//! torus: deterministic grids and transforms, Gevrey-weighted diagnostics,
//! dyadic/paraproduct machinery, stability scans of the linearized kernel,
//! mode-by-mode Volterra density solves, a split-step nonlinear solver and
//! time-response kernel sweeps.

pub mod dispersion;
pub mod dyadic;
pub mod echo;
pub mod equilibrium;
pub mod error;
pub mod fft;
pub mod gevrey;
pub mod grid;
pub mod interaction;
pub mod sim;
pub mod spectrum;
pub mod volterra;

pub use error::{Error, Result};
