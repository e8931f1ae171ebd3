//! Stationary states, exceptional points and split-operator dynamics of the
//! nonlinear Schrodinger equation in a PT-symmetric double delta well
//!
//! ```text
//! -Psi'' - [(1 + i gamma) delta(x + a/2) + (1 - i gamma) delta(x - a/2)] Psi - g |Psi|^2 Psi = -kappa^2 Psi
//! ```

pub mod cli;
pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod linear;
pub mod model;
pub mod newton;
pub mod ode;
pub mod stationary;

pub use error::{PtError, Result};
pub use model::{Branch, Eigenvalue, Grid, GridState, ModelParams, PhaseConvention};
