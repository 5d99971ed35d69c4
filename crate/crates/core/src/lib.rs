//! Viscous strong-detonation traveling waves of the one-dimensional reactive
//! Navier-Stokes (RNS) system and their spectral stability via the Evans
//! function.
//!
//! The crate is organized around the computational pipeline:
//!
//! 1. [`gasdyn`] -- thermodynamic closure, ignition kinetics, Rankine-Hugoniot
//!    algebra, Chapman-Jouguet limits, overdrive conversions.
//! 2. [`znd`] -- inviscid ZND reference profiles and reaction-rate calibration.
//! 3. [`profile`] -- the viscous traveling-wave two-point boundary-value
//!    problem, solved by collocation with projective boundary conditions.
//! 4. [`linop`] -- assembly of the 7x7 flux-variable eigenvalue system
//!    `W' = G(x; lambda) W` linearized about a profile.
//! 5. [`evans`] -- Evans-function evaluation by continuous orthogonalization
//!    with Kato-analytic subspace initialization, winding numbers, moments,
//!    and two-dimensional bisection for root location.
//! 6. [`stab`] -- parameter sweeps: root tracking in activation energy,
//!    neutral-boundary bisection, boundary fits, viscous-delay tables.

pub mod bvp;
pub mod error;
pub mod evans;
pub mod gasdyn;
pub mod linop;
pub mod ode;
pub mod profile;
pub mod stab;
pub mod subspace;
pub mod znd;

pub use error::{Error, Result};
