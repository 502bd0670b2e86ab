//! Numerical solver for the time-symmetric (Fokker-Schwarzschild-Tetrode)
//! electrodynamic two-body problem on a straight line.
//!
//! Given asymptotic scattering data in the remote past, the crate builds
//! conditional solutions on half-lines by waveform relaxation, drives the
//! `T -> -inf` family whose Cauchy limit is a global solution, and turns the
//! a priori estimates on that family into numeric checks.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; the `std` feature only adds thread-parallel sweeps.
//!
//! Module map:
//!
//! * [`asymptotics`]: scattering data, correction amplitudes, asymptotes, `T0`.
//! * [`trajectory`]: uniform-grid Hermite trajectories with closed-form tails.
//! * [`lightcone`]: advanced/retarded time solver.
//! * [`dynamics`]: forces, integrated residuals, the five-term decomposition.
//! * [`solver`]: RK4 kernel, conditional solutions, the global family.
//! * [`diagnostics`]: fitted-constant checks of the estimates.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod lightcone;
pub(crate) mod math;
pub mod quadrature;
pub mod solver;
pub mod trajectory;

pub use asymptotics::{compute_etas, AsymptoticData, Particle};
pub use error::{Error, Result};
pub use lightcone::{ConeQuery, ConeResult, ConeSign};
pub use trajectory::{Trajectory, TrajectoryBuilder, TrajectoryPair};
