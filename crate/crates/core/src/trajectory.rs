//! Dense C^1 trajectories on a uniform grid.
//!
//! Between nodes the position is the cubic Hermite interpolant of the stored
//! `(pos, vel)` samples and the velocity is its derivative. Left of the grid a
//! trajectory follows its tail (normally the closed-form asymptote); right of
//! the grid it continues linearly with the terminal velocity for at most
//! `reach` time units.

use alloc::vec::Vec;

use crate::asymptotics::{AsymptoticData, Particle};
use crate::error::{Error, Result};
use crate::math;

/// Position and velocity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub pos: f64,
    pub vel: f64,
}

/// Source of values left of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// The asymptote of `particle` for the given scattering data.
    Asymptote { data: AsymptoticData, particle: Particle },
    /// Straight-line continuation of the first node (synthetic test pairs).
    Linear,
}

/// Default absolute/relative tolerance for tail continuity at the first node.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Cubic Hermite evaluation on the uniform grid `start + k*step`.
#[inline]
fn hermite(start: f64, step: f64, pos: &[f64], vel: &[f64], t: f64) -> Option<State> {
    let n = pos.len();
    let x = (t - start) / step;
    let fk = math::floor(x);
    if fk < 0.0 {
        return None;
    }
    let k = fk as usize;
    if k + 1 >= n {
        return None;
    }
    let th = x - fk;
    let (p0, p1, v0, v1) = (pos[k], pos[k + 1], vel[k], vel[k + 1]);
    let th2 = th * th;
    let om = 1.0 - th;
    let h00 = (1.0 + 2.0 * th) * om * om;
    let h10 = th * om * om;
    let h01 = th2 * (3.0 - 2.0 * th);
    let h11 = th2 * (th - 1.0);
    let p = h00 * p0 + h10 * step * v0 + h01 * p1 + h11 * step * v1;
    let d = 6.0 * th * (th - 1.0);
    let v = d * (p0 - p1) / step + (3.0 * th2 - 4.0 * th + 1.0) * v0 + (3.0 * th2 - 2.0 * th) * v1;
    Some(State { pos: p, vel: v })
}

/// Shared evaluation logic for frozen trajectories and growing builders.
#[derive(Clone, Copy)]
pub(crate) struct GridView<'a> {
    pub start: f64,
    pub step: f64,
    pub pos: &'a [f64],
    pub vel: &'a [f64],
    pub tail: &'a Tail,
    pub reach: f64,
}

impl GridView<'_> {
    #[inline]
    pub fn end(&self) -> f64 {
        self.start + (self.pos.len() - 1) as f64 * self.step
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Result<State> {
        if t < self.start {
            return Ok(match self.tail {
                Tail::Asymptote { data, particle } => {
                    let s = data.asymptote_unchecked(*particle, t);
                    State { pos: s.pos, vel: s.vel }
                }
                Tail::Linear => State {
                    pos: self.pos[0] + self.vel[0] * (t - self.start),
                    vel: self.vel[0],
                },
            });
        }
        if let Some(s) = hermite(self.start, self.step, self.pos, self.vel, t) {
            return Ok(s);
        }
        let last = self.pos.len() - 1;
        let end = self.end();
        let dt = t - end;
        if dt <= 0.0 {
            return Ok(State { pos: self.pos[last], vel: self.vel[last] });
        }
        if dt <= self.reach {
            return Ok(State { pos: self.pos[last] + self.vel[last] * dt, vel: self.vel[last] });
        }
        Err(Error::OutOfDomain { t, lo: f64::NEG_INFINITY, hi: end + self.reach })
    }
}

/// Immutable trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: f64,
    step: f64,
    pos: Vec<f64>,
    vel: Vec<f64>,
    tail: Tail,
    reach: f64,
}

impl Trajectory {
    #[inline]
    pub(crate) fn view(&self) -> GridView<'_> {
        GridView {
            start: self.start,
            step: self.step,
            pos: &self.pos,
            vel: &self.vel,
            tail: &self.tail,
            reach: self.reach,
        }
    }

    /// Position and velocity at `t`.
    #[inline]
    pub fn eval(&self, t: f64) -> Result<State> {
        self.view().eval(t)
    }

    pub fn grid_start(&self) -> f64 {
        self.start
    }

    pub fn grid_end(&self) -> f64 {
        self.view().end()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Time of node `k`.
    #[inline]
    pub fn node_time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn positions(&self) -> &[f64] {
        &self.pos
    }

    pub fn velocities(&self) -> &[f64] {
        &self.vel
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// How far right of the last node linear extrapolation is allowed.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Largest node speed.
    pub fn max_speed(&self) -> f64 {
        self.vel.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rebuilds the trajectory with new samples on the same grid, running the
    /// same validation as [`TrajectoryBuilder::freeze`].
    pub fn with_samples(&self, pos: Vec<f64>, vel: Vec<f64>, tail_tolerance: Option<f64>) -> Result<Trajectory> {
        let mut b = TrajectoryBuilder::new(self.start, self.step, self.tail).reach(self.reach);
        b.tail_tolerance = tail_tolerance;
        b.pos = pos;
        b.vel = vel;
        b.freeze()
    }
}

/// Incrementally assembles a [`Trajectory`].
#[derive(Debug, Clone)]
pub struct TrajectoryBuilder {
    start: f64,
    step: f64,
    pos: Vec<f64>,
    vel: Vec<f64>,
    tail: Tail,
    reach: f64,
    tail_tolerance: Option<f64>,
}

impl TrajectoryBuilder {
    pub fn new(start: f64, step: f64, tail: Tail) -> Self {
        TrajectoryBuilder {
            start,
            step,
            pos: Vec::new(),
            vel: Vec::new(),
            tail,
            reach: 0.0,
            tail_tolerance: Some(TAIL_TOLERANCE),
        }
    }

    pub fn with_capacity(mut self, n: usize) -> Self {
        self.pos.reserve(n);
        self.vel.reserve(n);
        self
    }

    /// Right-edge extrapolation allowance.
    pub fn reach(mut self, reach: f64) -> Self {
        self.reach = reach;
        self
    }

    /// Tail continuity tolerance at the first node; `None` skips the check.
    pub fn tail_tolerance(mut self, tol: Option<f64>) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Largest node speed so far.
    pub fn max_speed(&self) -> f64 {
        self.vel.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Time the next appended node will carry.
    pub fn next_time(&self) -> f64 {
        self.start + self.pos.len() as f64 * self.step
    }

    /// Appends the next node.
    pub fn append_node(&mut self, pos: f64, vel: f64) -> Result<()> {
        if !(vel.abs() < 1.0) || !pos.is_finite() {
            return Err(Error::SuperluminalSample { index: self.pos.len(), speed: vel.abs() });
        }
        self.pos.push(pos);
        self.vel.push(vel);
        Ok(())
    }

    /// Appends a node carrying an explicit time, which must be the next grid time.
    pub fn append_node_at(&mut self, t: f64, pos: f64, vel: f64) -> Result<()> {
        let expected = self.next_time();
        if (t - expected).abs() > 1e-9 * self.step.max(1e-300) {
            return Err(Error::NonUniformStep { t, expected });
        }
        self.append_node(pos, vel)
    }

    /// Evaluates the nodes appended so far, extrapolating linearly without
    /// limit past the last one.
    pub(crate) fn view_unbounded(&self) -> GridView<'_> {
        GridView {
            start: self.start,
            step: self.step,
            pos: &self.pos,
            vel: &self.vel,
            tail: &self.tail,
            reach: f64::INFINITY,
        }
    }

    /// Validates the invariants and yields the immutable trajectory.
    pub fn freeze(self) -> Result<Trajectory> {
        if !(self.step > 0.0 && self.step.is_finite() && self.start.is_finite()) {
            return Err(Error::InvalidConfig("trajectory grid needs a finite start and positive step"));
        }
        if self.pos.len() < 2 || self.pos.len() != self.vel.len() {
            return Err(Error::TooFewNodes);
        }
        if let Some((index, v)) = self.vel.iter().enumerate().find(|(_, v)| !(v.abs() < 1.0)) {
            return Err(Error::SuperluminalSample { index, speed: v.abs() });
        }
        if let (Some(tol), Tail::Asymptote { data, particle }) = (self.tail_tolerance, &self.tail) {
            let s = data.asymptote_unchecked(*particle, self.start);
            let dp = (self.pos[0] - s.pos).abs();
            let dv = (self.vel[0] - s.vel).abs();
            if dp > tol * s.pos.abs().max(1.0) || dv > tol {
                return Err(Error::TailMismatch { deviation: dp.max(dv) });
            }
        }
        Ok(Trajectory {
            start: self.start,
            step: self.step,
            pos: self.pos,
            vel: self.vel,
            tail: self.tail,
            reach: self.reach,
        })
    }
}

/// A pair `(a, b)` on a common grid with `a > b` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub a: Trajectory,
    pub b: Trajectory,
}

impl TrajectoryPair {
    pub fn new(a: Trajectory, b: Trajectory) -> Result<Self> {
        if a.len() != b.len() || a.start != b.start || a.step != b.step {
            return Err(Error::GridMismatch);
        }
        for k in 0..a.len() {
            let gap = a.pos[k] - b.pos[k];
            if !(gap > 0.0) {
                return Err(Error::NotSeparated { t: a.node_time(k), gap });
            }
        }
        Ok(TrajectoryPair { a, b })
    }

    pub fn get(&self, particle: Particle) -> &Trajectory {
        match particle {
            Particle::A => &self.a,
            Particle::B => &self.b,
        }
    }

    pub fn grid_start(&self) -> f64 {
        self.a.grid_start()
    }

    pub fn grid_end(&self) -> f64 {
        self.a.grid_end()
    }

    pub fn step(&self) -> f64 {
        self.a.step()
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn node_time(&self, k: usize) -> f64 {
        self.a.node_time(k)
    }

    /// `a(t) - b(t)`.
    pub fn gap(&self, t: f64) -> Result<f64> {
        Ok(self.a.eval(t)?.pos - self.b.eval(t)?.pos)
    }
}

/// Nodes and midpoints of the uniform grid `lo, lo + step, ...` up to `hi`.
pub fn probe_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let half = 0.5 * step;
    let n = math::floor((hi - lo) / half + 1e-9) as usize;
    (0..=n).map(|k| lo + k as f64 * half).collect()
}

/// Grid surrogate of the sup-type norm distance
/// `max(|a1(0)-a2(0)|, |b1(0)-b2(0)|, sup|a1'-a2'|, sup|b1'-b2'|)`.
pub fn pair_norm_distance(p1: &TrajectoryPair, p2: &TrajectoryPair, probe_grid: &[f64]) -> Result<f64> {
    let at0 = |p: &TrajectoryPair| -> Result<(State, State)> {
        match (p.a.eval(0.0), p.b.eval(0.0)) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(Error::IncompatibleDomains),
        }
    };
    let (a1, b1) = at0(p1)?;
    let (a2, b2) = at0(p2)?;
    let mut d = (a1.pos - a2.pos).abs().max((b1.pos - b2.pos).abs());
    for &t in probe_grid {
        let da = (p1.a.eval(t)?.vel - p2.a.eval(t)?.vel).abs();
        let db = (p1.b.eval(t)?.vel - p2.b.eval(t)?.vel).abs();
        d = d.max(da).max(db);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_fn(start: f64, step: f64, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Trajectory {
        let mut b = TrajectoryBuilder::new(start, step, Tail::Linear).reach(10.0);
        for k in 0..n {
            let (p, v) = f(start + k as f64 * step);
            b.append_node(p, v).unwrap();
        }
        b.freeze().unwrap()
    }

    #[test]
    fn nodes_are_reproduced() {
        let tr = from_fn(-3.0, 0.25, 20, |t| (0.1 * t * t, 0.2 * t / 10.0));
        for k in 0..tr.len() {
            let s = tr.eval(tr.node_time(k)).unwrap();
            assert_eq!(s.pos, tr.positions()[k]);
            assert_eq!(s.vel, tr.velocities()[k]);
        }
    }

    #[test]
    fn hermite_exact_on_cubics() {
        let p = |t: f64| 0.01 * t * t * t - 0.02 * t * t + 0.1 * t + 3.0;
        let dp = |t: f64| 0.03 * t * t - 0.04 * t + 0.1;
        let tr = from_fn(-2.0, 0.3, 15, |t| (p(t), dp(t)));
        for k in 0..140 {
            let t = -2.0 + 0.029 * k as f64;
            let s = tr.eval(t).unwrap();
            assert!((s.pos - p(t)).abs() < 1e-13, "t={t}");
            assert!((s.vel - dp(t)).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn tail_delegates_to_asymptote() {
        let data = AsymptoticData::new(1.0, -1.0, -0.4, 0.4, 1.0, 1.0).unwrap();
        let start = -100.0;
        let mut b = TrajectoryBuilder::new(start, 0.5, Tail::Asymptote { data, particle: Particle::B });
        for k in 0..5 {
            let s = data.asymptote_eval(Particle::B, start + 0.5 * k as f64).unwrap();
            b.append_node(s.pos, s.vel).unwrap();
        }
        let tr = b.freeze().unwrap();
        let q = tr.eval(start - 5.0).unwrap();
        let s = data.asymptote_eval(Particle::B, start - 5.0).unwrap();
        assert_eq!((q.pos, q.vel), (s.pos, s.vel));
    }

    #[test]
    fn right_edge_linear_then_out_of_domain() {
        let tr = from_fn(0.0, 1.0, 3, |t| (t * 0.5, 0.5));
        let s = tr.eval(2.0 + 4.0).unwrap();
        assert!((s.pos - 3.0).abs() < 1e-15);
        assert!(matches!(tr.eval(2.0 + 10.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn builder_rejects_superluminal_and_off_grid() {
        let mut b = TrajectoryBuilder::new(0.0, 0.1, Tail::Linear);
        assert!(matches!(b.append_node(0.0, 1.0), Err(Error::SuperluminalSample { .. })));
        b.append_node_at(0.0, 0.0, 0.0).unwrap();
        assert!(matches!(b.append_node_at(0.15, 0.0, 0.0), Err(Error::NonUniformStep { .. })));
        b.append_node_at(0.1, 0.0, 0.0).unwrap();
        assert!(b.freeze().is_ok());
    }

    #[test]
    fn tail_continuity_checked() {
        let data = AsymptoticData::new(1.0, -1.0, -0.4, 0.4, 1.0, 1.0).unwrap();
        let tail = Tail::Asymptote { data, particle: Particle::A };
        let build = |offset: f64| {
            let mut b = TrajectoryBuilder::new(-50.0, 0.5, tail);
            for k in 0..4 {
                let s = data.asymptote_eval(Particle::A, -50.0 + 0.5 * k as f64).unwrap();
                let off = if k == 0 { offset } else { 0.0 };
                b.append_node(s.pos + off, s.vel).unwrap();
            }
            b.freeze()
        };
        assert!(build(0.0).is_ok());
        assert!(matches!(build(1e-6), Err(Error::TailMismatch { .. })));
    }

    #[test]
    fn pair_requires_ordering() {
        let a = from_fn(0.0, 1.0, 4, |_| (1.0, 0.0));
        let b = from_fn(0.0, 1.0, 4, |t| (-1.0 + t, 0.9));
        assert!(matches!(TrajectoryPair::new(a, b), Err(Error::NotSeparated { .. })));
    }

    fn static_pair(shift_a: f64, wobble: f64) -> TrajectoryPair {
        let a = from_fn(-4.0, 0.1, 81, |t| (2.0 + 0.1 * t + shift_a, 0.1 + wobble * libm::sin(t)));
        let b = from_fn(-4.0, 0.1, 81, |t| (-2.0 - 0.2 * t, -0.2));
        TrajectoryPair::new(a, b).unwrap()
    }

    #[test]
    fn norm_identity_and_shift() {
        let p = static_pair(0.0, 0.0);
        let probe = probe_grid(-4.0, 4.0, 0.1);
        assert_eq!(pair_norm_distance(&p, &p, &probe).unwrap(), 0.0);
        let q = static_pair(0.3, 0.0);
        assert!((pair_norm_distance(&p, &q, &probe).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn norm_sees_velocity_perturbation() {
        let p = static_pair(0.0, 0.0);
        let q = static_pair(0.0, 0.01);
        let probe = probe_grid(-4.0, 4.0, 0.1);
        // Oracle: max over nodes of the explicit perturbation 0.01 |sin t|
        // (velocity perturbation with unchanged positions also moves the
        // Hermite derivative between nodes by at most the node values).
        let oracle = (0..81).map(|k| 0.01 * libm::sin(-4.0 + 0.1 * k as f64).abs()).fold(0.0, f64::max);
        let d = pair_norm_distance(&p, &q, &probe).unwrap();
        assert!((d - oracle).abs() < 1e-3 * 0.01 + 1e-12, "d={d} oracle={oracle}");
    }

    #[test]
    fn norm_needs_time_zero() {
        let p = static_pair(0.0, 0.0);
        let a = from_fn(-30.0, 0.1, 10, |_| (1.0, 0.0));
        let b = from_fn(-30.0, 0.1, 10, |_| (-1.0, 0.0));
        let r = TrajectoryPair::new(a, b).unwrap();
        assert!(matches!(pair_norm_distance(&p, &r, &[]), Err(Error::IncompatibleDomains)));
    }

    proptest! {
        #[test]
        fn norm_is_pseudometric(s1 in -1.0f64..1.0, s2 in -1.0f64..1.0, s3 in -1.0f64..1.0,
                                w1 in -0.05f64..0.05, w2 in -0.05f64..0.05, w3 in -0.05f64..0.05) {
            let probe = probe_grid(-4.0, 4.0, 0.1);
            let p = static_pair(s1, w1);
            let q = static_pair(s2, w2);
            let r = static_pair(s3, w3);
            let pq = pair_norm_distance(&p, &q, &probe).unwrap();
            let qp = pair_norm_distance(&q, &p, &probe).unwrap();
            let qr = pair_norm_distance(&q, &r, &probe).unwrap();
            let pr = pair_norm_distance(&p, &r, &probe).unwrap();
            prop_assert!((pq - qp).abs() <= 1e-12);
            prop_assert!(pr <= pq + qr + 1e-12);
        }

        #[test]
        fn interpolated_speed_stays_subluminal(v0 in -0.4f64..0.4, acc in -0.5f64..0.5) {
            // Node speeds <= V and h max|acc| < (1 - V)/2.
            let h = 0.05;
            let tr = from_fn(0.0, h, 60, |t| {
                (v0 * t - acc * libm::cos(t), v0 + acc * libm::sin(t))
            });
            let vmax = tr.max_speed();
            prop_assume!(h * acc.abs() < (1.0 - vmax) / 2.0);
            for k in 0..(59 * 8) {
                let s = tr.eval(k as f64 * h / 8.0).unwrap();
                prop_assert!(s.vel.abs() < 1.0);
            }
        }
    }
}
