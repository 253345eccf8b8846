//! Asymptotic-preserving semi-Lagrangian solver for the strongly anisotropic
//! heat transport equation
//!
//! ```text
//! dT/dt - (1/eps) div(b b . grad T) = lap_perp T + S
//! ```
//!
//! on the unit square, Dirichlet in `x` and periodic in `y`, for magnetic
//! fields of the form `B = z x grad(psi) + B0 z`.
//!
//! Parallel transport is integrated exactly along field lines with the
//! analytic heat kernel `G` and its time integral `U`. Two formulations are
//! provided: the arc-length ("tokamak ordering") scheme, valid when the field
//! magnitude is nearly constant along field lines, and the arbitrary-field
//! scheme, which integrates in `lambda` (`d lambda / ds = |B|`) and uses the
//! auxiliary field `beta` to keep the implicit system well conditioned.
//!
//! Module map:
//!
//! - [`field`]: mesh, nodal fields, fourth-order finite differences, splines, norms.
//! - [`magnetics`]: the analytic field model and field-line tracing.
//! - [`kernels`]: `G`, `U`, `erfc`, and field-line quadrature weights.
//! - [`propagators`]: field-level propagators and field-line averages.
//! - [`beta`]: Picard solve for `beta`.
//! - [`stepper`]: GMRES and the three BDF1 time advances.
//! - [`mms`]: the manufactured solution and its source.
//! - [`harness`]: configuration, runs, convergence studies, output files.

pub mod beta;
pub mod error;
pub mod field;
pub mod harness;
pub mod kernels;
pub mod magnetics;
pub mod mms;
pub mod propagators;
pub mod stepper;

pub use error::{Error, Result};
