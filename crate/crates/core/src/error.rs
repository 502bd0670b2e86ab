use alloc::boxed::Box;

use crate::solver::GlobalRun;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("asymptotic velocities must satisfy -1 < u < v < 1 (got u = {u}, v = {v})")]
    DegenerateVelocities { u: f64, v: f64 },
    #[error("coupling constants must be finite and non-negative (got kappa_a = {kappa_a}, kappa_b = {kappa_b})")]
    InvalidCoupling { kappa_a: f64, kappa_b: f64 },
    #[error("asymptotes are only defined for t < -1 (got t = {t})")]
    DomainError { t: f64 },
    #[error("no admissible T0 at or above the floor {floor}")]
    NoValidT0 { floor: f64 },
    #[error("time {t} lies outside the evaluable domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("time 0 is not evaluable on both pairs")]
    IncompatibleDomains,
    #[error("superluminal sample |v| = {speed} at node {index}")]
    SuperluminalSample { index: usize, speed: f64 },
    #[error("node time {t} is not on the uniform grid (expected {expected})")]
    NonUniformStep { t: f64, expected: f64 },
    #[error("first node differs from the asymptotic tail by {deviation}")]
    TailMismatch { deviation: f64 },
    #[error("a trajectory needs at least two nodes")]
    TooFewNodes,
    #[error("trajectories are not ordered a > b at t = {t} (a - b = {gap})")]
    NotSeparated { t: f64, gap: f64 },
    #[error("pair trajectories do not share a grid")]
    GridMismatch,
    #[error("cone iteration did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("cone iterate {t} left the evaluable domain")]
    DomainExceeded { t: f64 },
    #[error("velocity {v} is not subluminal")]
    SuperluminalInput { v: f64 },
    #[error("light-cone separation {separation} below floor {floor} at t = {t}")]
    SeparationUnderflow { t: f64, separation: f64, floor: f64 },
    #[error("Picard update norm grew for {streak} consecutive iterations (last {norm})")]
    PicardDivergence { streak: usize, norm: f64 },
    #[error("Picard iteration stopped after {iterations} iterations with update norm {norm}")]
    PicardExhausted { iterations: usize, norm: f64 },
    #[error("scattering precondition fails at T = {t}: {reason}")]
    NonScattering { t: f64, reason: &'static str },
    #[error("schedule exhausted without reaching the global tolerance")]
    ScheduleExhausted { run: Box<GlobalRun> },
    #[error("diagnostics need at least two family members (got {members})")]
    InsufficientFamily { members: usize },
    #[error("bound fitting needs at least {needed} samples with |t| > 1 (got {got})")]
    EmptySamples { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
