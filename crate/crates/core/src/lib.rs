//! Driven two-mode Bose Josephson junction.
//!
//! * [`model`]: dimensionless equations, energy, effective potential, regimes.
//! * [`integrator`]: adaptive step-doubling RK4, trajectories and stroboscopic sections.
//! * [`twomode`]: direct complex-amplitude integration used as an independent check.
//! * [`melnikov`]: separatrix, variational basis and the first-order stability condition.
//! * [`analysis`]: spectra, time averages, frequency locking and Lyapunov exponents.

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod melnikov;
pub mod model;
pub mod quadrature;
pub mod twomode;

pub use error::{Error, Result};
pub use integrator::{SectionPoints, StepControl, Trajectory};
pub use model::{DampingKind, PhaseState, TrapParams};
