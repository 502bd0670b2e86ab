//! Conditional solutions by waveform relaxation and the `T -> -inf` family.
//!
//! A conditional solution starts `a` on its asymptote at `T` and pins `b` to
//! its asymptote up to the advanced time `T+` of `x(T)`. Each relaxation
//! sweep integrates both particles with RK4 in (position, momentum) against
//! the previous iterate; the family repeats this for decreasing `T` until
//! successive members agree in the pair norm.

mod conditional;
mod config;
mod global;
mod integrate;

pub use conditional::{solve_conditional, solve_conditional_seeded, ConditionalSolution, DIVERGENCE_STREAK};
pub use config::{geometric_schedule, SolverConfig, Sweep, DEFAULT_SCHEDULE_LEN, DEFAULT_SCHEDULE_START};
pub use global::{closeness_ratio, closeness_sample, member_distance, run_family, solve_global, ClosenessSample, GlobalRun};
pub use integrate::{integrate_state, rk4_step, PhaseState};
