use alloc::vec::Vec;

use crate::asymptotics::AsymptoticData;
use crate::error::{Error, Result};
use crate::math;

/// Order in which the two particles are updated within one relaxation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Both particles integrate against the previous iterate.
    Jacobi,
    /// `b` integrates against the `a` computed earlier in the same sweep.
    GaussSeidel,
}

/// Numerical settings for conditional solutions and the global family.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Grid step.
    pub step: f64,
    /// Right edge of the reported window.
    pub t_end: f64,
    /// Right-edge buffer; `None` derives it from the seed iterate.
    pub margin: Option<f64>,
    /// Relaxation stops when the update norm falls below this.
    pub tol_fix: f64,
    pub max_picard: usize,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
    pub tol_cone: f64,
    pub separation_floor: f64,
    /// Strictly decreasing starting times `T_n`.
    pub t_schedule: Vec<f64>,
    /// Family stops when successive members are closer than this.
    pub tol_global: f64,
    /// Panel width for residual quadrature.
    pub quad_step: f64,
    pub sweep: Sweep,
    /// Seed each family member from the previous one.
    pub warm_start: bool,
    /// Worker threads for independent family members (cold starts only).
    pub threads: usize,
    /// Lowest admissible `T0`.
    pub t0_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: 0.1,
            t_end: 0.0,
            margin: None,
            tol_fix: 1e-10,
            max_picard: 100,
            damping: 1.0,
            tol_cone: 1e-12,
            separation_floor: crate::dynamics::SEPARATION_FLOOR,
            t_schedule: Vec::new(),
            tol_global: 1e-3,
            quad_step: 0.01,
            sweep: Sweep::Jacobi,
            warm_start: true,
            threads: 1,
            t0_floor: -1e7,
        }
    }
}

/// Number of members in the default schedule.
pub const DEFAULT_SCHEDULE_LEN: usize = 10;

/// Latest first member of the default schedule.
pub const DEFAULT_SCHEDULE_START: f64 = -100.0;

/// `count` grid-aligned times `T_0 * ratio^n`.
pub fn geometric_schedule(start: f64, ratio: f64, count: usize, step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut t = start;
    for _ in 0..count {
        out.push(math::round(t / step) * step);
        t *= ratio;
    }
    out
}

impl SolverConfig {
    /// Defaults with a geometric ratio-2 schedule starting at the earlier of
    /// `T0` and [`DEFAULT_SCHEDULE_START`].
    pub fn default_for(data: &AsymptoticData) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        cfg.t_schedule = cfg.default_schedule(data)?;
        Ok(cfg)
    }

    pub fn default_schedule(&self, data: &AsymptoticData) -> Result<Vec<f64>> {
        let t0 = data.find_t0(self.step, self.t0_floor)?;
        Ok(geometric_schedule(t0.min(DEFAULT_SCHEDULE_START), 2.0, DEFAULT_SCHEDULE_LEN, self.step))
    }

    /// Checks the data-independent invariants.
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.step) {
            return Err(Error::InvalidConfig("step must be positive"));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidConfig("t_end must be finite"));
        }
        if let Some(m) = self.margin {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig("margin must be non-negative"));
            }
        }
        if !(self.tol_fix >= 0.0) || !(self.tol_global >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative"));
        }
        if !pos(self.tol_cone) {
            return Err(Error::InvalidConfig("tol_cone must be positive"));
        }
        if !pos(self.separation_floor) {
            return Err(Error::InvalidConfig("separation_floor must be positive"));
        }
        if self.max_picard == 0 {
            return Err(Error::InvalidConfig("max_picard must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig("damping must lie in (0, 1]"));
        }
        if !pos(self.quad_step) {
            return Err(Error::InvalidConfig("quad_step must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1"));
        }
        if self.t_schedule.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("schedule entries must be finite"));
        }
        if self.t_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidConfig("schedule must be strictly decreasing"));
        }
        Ok(())
    }

    /// Checks the schedule against `T0` for `data`.
    pub fn validate_for(&self, data: &AsymptoticData) -> Result<f64> {
        self.validate()?;
        if self.t_schedule.is_empty() {
            return Err(Error::InvalidConfig("schedule is empty"));
        }
        let t0 = data.find_t0(self.step, self.t0_floor)?;
        if self.t_schedule[0] > t0 {
            return Err(Error::InvalidConfig("schedule starts after T0"));
        }
        Ok(t0)
    }
}
