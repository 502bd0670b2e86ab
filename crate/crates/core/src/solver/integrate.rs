use alloc::vec::Vec;

use crate::dynamics::{momentum_from_velocity, velocity_from_momentum};
use crate::error::Result;
use crate::trajectory::State;

/// Position and momentum at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub x: f64,
    pub p: f64,
}

impl PhaseState {
    pub fn from_state(t: f64, s: State) -> Result<Self> {
        Ok(PhaseState { t, x: s.pos, p: momentum_from_velocity(s.vel)? })
    }

    #[inline]
    pub fn vel(&self) -> f64 {
        velocity_from_momentum(self.p)
    }

    #[inline]
    pub fn state(&self) -> State {
        State { pos: self.x, vel: self.vel() }
    }
}

/// One classical RK4 step of `x' = v(p)`, `p' = force(t, x, v)`.
#[inline]
pub fn rk4_step<F>(s: PhaseState, h: f64, force: &mut F) -> Result<PhaseState>
where
    F: FnMut(f64, State) -> Result<f64>,
{
    let hh = 0.5 * h;
    let v1 = velocity_from_momentum(s.p);
    let f1 = force(s.t, State { pos: s.x, vel: v1 })?;
    let (x2, p2) = (s.x + hh * v1, s.p + hh * f1);
    let v2 = velocity_from_momentum(p2);
    let f2 = force(s.t + hh, State { pos: x2, vel: v2 })?;
    let (x3, p3) = (s.x + hh * v2, s.p + hh * f2);
    let v3 = velocity_from_momentum(p3);
    let f3 = force(s.t + hh, State { pos: x3, vel: v3 })?;
    let (x4, p4) = (s.x + h * v3, s.p + h * f3);
    let v4 = velocity_from_momentum(p4);
    let f4 = force(s.t + h, State { pos: x4, vel: v4 })?;
    Ok(PhaseState {
        t: s.t + h,
        x: s.x + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4),
        p: s.p + h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4),
    })
}

/// Integrates from `start` through the increasing `targets`, returning the
/// state at each target. Each RK4 step goes from one target to the next.
pub fn integrate_state<F, I>(start: PhaseState, targets: I, mut force: F) -> Result<Vec<PhaseState>>
where
    F: FnMut(f64, State) -> Result<f64>,
    I: IntoIterator<Item = f64>,
{
    let targets = targets.into_iter();
    let mut out = Vec::with_capacity(targets.size_hint().0);
    let mut s = start;
    for t in targets {
        s = rk4_step(s, t - s.t, &mut force)?;
        s.t = t;
        out.push(s);
    }
    Ok(out)
}
