//! Coarse-grained effective dynamics for scalar reaction coordinates of
//! overdamped Langevin systems.
//!
//! Given a potential `V` on R^n and a scalar reaction coordinate `xi`, the
//! library tabulates the drift `b(z)`, diffusion `sigma(z)` and mean force
//! `A'(z)` of the closed one-dimensional SDE
//!
//! ```text
//! dy_t = b(y_t) dt + sqrt(2/beta) sigma(y_t) dB_t
//! ```
//!
//! obtained by conditional averaging over the level sets of `xi`, and
//! validates the reduced model against the full dynamics through
//! residence-time, shared-noise pathwise and time-marginal experiments.

pub mod cli;
pub mod conditional;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod integrate;
pub mod model;

pub use conditional::{CoefficientTable, ConditionalEstimate, Engine, GridSpec};
pub use error::CgError;
pub use integrate::NoiseStream;
pub use model::{Configuration, ModelSpec, ReactionCoordinate};
