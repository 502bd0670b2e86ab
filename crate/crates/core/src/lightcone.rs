//! Advanced and retarded times.
//!
//! For a vertex at time `t` on one worldline, the cone time `s` on the other
//! worldline solves `s = t +/- |x_vertex(t) - x_other(s)|`. With `sigma = +1`
//! for a vertex on `a` and `-1` on `b` the modulus is `sigma (x_vertex - x_other)`
//! and the root is found by fixed-point iteration, a contraction with rate
//! `sup |x_other'| < 1`, accelerated by Newton steps while they help.

use crate::asymptotics::Particle;
use crate::error::{Error, Result};
use crate::trajectory::{GridView, State, Trajectory, TrajectoryPair};

/// Iteration cap for the fixed-point map.
pub const MAX_CONE_ITERATIONS: usize = 2000;

/// Future (`+`) or past (`-`) light cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeSign {
    Advanced,
    Retarded,
}

impl ConeSign {
    #[inline]
    pub fn epsilon(self) -> f64 {
        match self {
            ConeSign::Advanced => 1.0,
            ConeSign::Retarded => -1.0,
        }
    }
}

/// Request for the cone time of `vertex` at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeQuery {
    pub vertex: Particle,
    pub sign: ConeSign,
    pub t: f64,
}

/// Solved cone intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeResult {
    /// `t1+-` or `t2+-`.
    pub cone_time: f64,
    /// `|x_vertex(t) - x_other(cone_time)|`.
    pub separation: f64,
    /// `d cone_time / dt`.
    pub derivative: f64,
    /// Defect of the cone equation at `cone_time`.
    pub residual: f64,
    pub iterations: usize,
    /// Velocity of the other worldline at `cone_time`.
    pub other_vel: f64,
}

/// Anything that can report position and velocity at a time.
pub trait Worldline {
    fn state(&self, t: f64) -> Result<State>;

    /// Magnitude of the times the samples are addressed by; sets the
    /// resolution of `state` in time.
    fn time_scale(&self) -> f64 {
        0.0
    }
}

impl Worldline for Trajectory {
    #[inline]
    fn state(&self, t: f64) -> Result<State> {
        self.eval(t)
    }

    fn time_scale(&self) -> f64 {
        self.grid_start().abs().max(self.grid_end().abs())
    }
}

impl Worldline for GridView<'_> {
    #[inline]
    fn state(&self, t: f64) -> Result<State> {
        self.eval(t)
    }

    fn time_scale(&self) -> f64 {
        self.start.abs().max(self.end().abs())
    }
}

impl<F: Fn(f64) -> Result<State>> Worldline for F {
    #[inline]
    fn state(&self, t: f64) -> Result<State> {
        self(t)
    }
}

/// Solves the cone equation against `other` for a vertex in state `vertex`
/// at `t`. `sigma` is the vertex orientation (`+1` for `a`). The iteration
/// starts at `seed`, or at `t +/- gap(t)` when none is given.
///
/// Each step applies the fixed-point map `g(s) = t +/- sigma (x_vertex - x_other(s))`
/// and, while the residual keeps shrinking, divides the update by the local
/// slope `1 -/+ sigma x_other'(s)` (a Newton step at no extra evaluations).
pub fn solve_cone_with<W: Worldline + ?Sized>(
    vertex: State,
    sigma: f64,
    sign: ConeSign,
    t: f64,
    other: &W,
    tol_cone: f64,
    seed: Option<f64>,
) -> Result<ConeResult> {
    let eps = sign.epsilon();
    let xv = sigma * vertex.pos;
    let mut s = match seed {
        Some(s) => s,
        None => {
            let o = other.state(t).map_err(|_| Error::DomainExceeded { t })?;
            t + eps * (xv - sigma * o.pos)
        }
    };
    let mut last = f64::INFINITY;
    let grid_scale = other.time_scale();
    for it in 1..=MAX_CONE_ITERATIONS {
        let o = other.state(s).map_err(|_| Error::DomainExceeded { t: s })?;
        let yo = sigma * o.pos;
        let next = t + eps * (xv - yo);
        let residual = (next - s).abs();
        let w = sigma * o.vel;
        let newton = s + (next - s) / (1.0 + eps * w);
        let scale = t.abs() + xv.abs() + yo.abs() + s.abs() + grid_scale;
        if residual <= tol_cone + 8.0 * f64::EPSILON * scale {
            // The reported residual is that of the last evaluated iterate and
            // bounds the defect of the corrected root.
            let v = sigma * vertex.vel;
            return Ok(ConeResult {
                cone_time: newton,
                separation: eps * (newton - t),
                derivative: (1.0 + eps * v) / (1.0 + eps * w),
                residual,
                iterations: it,
                other_vel: o.vel,
            });
        }
        if !next.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
        s = if residual < last { newton } else { next };
        last = residual;
    }
    Err(Error::NoConvergence { iterations: MAX_CONE_ITERATIONS, residual: last })
}

/// Cone time for `q` on a frozen pair.
pub fn solve_cone(pair: &TrajectoryPair, q: ConeQuery, tol_cone: f64) -> Result<ConeResult> {
    let vertex = pair.get(q.vertex).eval(q.t).map_err(|_| Error::DomainExceeded { t: q.t })?;
    let other = pair.get(q.vertex.other());
    solve_cone_with(vertex, q.vertex.orientation(), q.sign, q.t, other, tol_cone, None)
}

/// Whether the separation obeys `gap/2 <= separation <= gap/(1-V)` with
/// `gap = a(t) - b(t)`.
pub fn cone_bounds_check(pair: &TrajectoryPair, res: &ConeResult, t: f64, v_bound: f64) -> Result<bool> {
    let gap = pair.gap(t)?;
    let slack = 1e-12 * gap.abs();
    Ok(res.separation >= 0.5 * gap - slack && res.separation <= gap / (1.0 - v_bound) + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Tail, TrajectoryBuilder};

    fn line(start: f64, n: usize, step: f64, x0: f64, v: f64) -> Trajectory {
        let mut b = TrajectoryBuilder::new(start, step, Tail::Linear).reach(1e3);
        for k in 0..n {
            let t = start + k as f64 * step;
            b.append_node(x0 + v * t, v).unwrap();
        }
        b.freeze().unwrap()
    }

    fn static_pair() -> TrajectoryPair {
        TrajectoryPair::new(line(-10.0, 201, 0.1, 1.0, 0.0), line(-10.0, 201, 0.1, -1.0, 0.0)).unwrap()
    }

    fn linear_pair() -> TrajectoryPair {
        // b(t) = -1 + 0.5 t stays below a = 1 on [-10, 3].
        TrajectoryPair::new(line(-10.0, 131, 0.1, 1.0, 0.0), line(-10.0, 131, 0.1, -1.0, 0.5)).unwrap()
    }

    fn q(vertex: Particle, sign: ConeSign, t: f64) -> ConeQuery {
        ConeQuery { vertex, sign, t }
    }

    #[test]
    fn static_advanced() {
        let r = solve_cone(&static_pair(), q(Particle::A, ConeSign::Advanced, 0.0), 1e-12).unwrap();
        assert!((r.cone_time - 2.0).abs() < 1e-12);
        assert!((r.separation - 2.0).abs() < 1e-12);
        assert!((r.derivative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_advanced_and_retarded() {
        let p = linear_pair();
        let adv = solve_cone(&p, q(Particle::A, ConeSign::Advanced, 0.0), 1e-12).unwrap();
        assert!((adv.cone_time - 4.0 / 3.0).abs() < 1e-12);
        assert!((adv.separation - 4.0 / 3.0).abs() < 1e-12);
        assert!((adv.derivative - 2.0 / 3.0).abs() < 1e-12);
        assert!(adv.residual < 1e-12);
        let ret = solve_cone(&p, q(Particle::A, ConeSign::Retarded, 0.0), 1e-12).unwrap();
        assert!((ret.cone_time + 4.0).abs() < 1e-12);
        assert!((ret.separation - 4.0).abs() < 1e-12);
        assert!((ret.derivative - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_vertex_on_b() {
        // Vertex b(0) = -1 (velocity 0.5), other a = 1 static: s = 0 +/- 2.
        let p = linear_pair();
        let adv = solve_cone(&p, q(Particle::B, ConeSign::Advanced, 0.0), 1e-12).unwrap();
        assert!((adv.cone_time - 2.0).abs() < 1e-12);
        assert!((adv.separation - 2.0).abs() < 1e-12);
        // (1 + sigma*eps*v_b)/(1 + sigma*eps*v_a) = (1 - 0.5)/1.
        assert!((adv.derivative - 0.5).abs() < 1e-12);
        let ret = solve_cone(&p, q(Particle::B, ConeSign::Retarded, 0.0), 1e-12).unwrap();
        assert!((ret.cone_time + 2.0).abs() < 1e-12);
        assert!((ret.derivative - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bounds_check() {
        let s = static_pair();
        let r = solve_cone(&s, q(Particle::A, ConeSign::Advanced, 0.0), 1e-12).unwrap();
        assert!(cone_bounds_check(&s, &r, 0.0, 0.0).unwrap());
        let p = linear_pair();
        let r = solve_cone(&p, q(Particle::A, ConeSign::Advanced, 0.0), 1e-12).unwrap();
        assert!(cone_bounds_check(&p, &r, 0.0, 0.5).unwrap());
        let fake = ConeResult { separation: 3.0 * 2.0, ..r };
        assert!(!cone_bounds_check(&p, &fake, 0.0, 0.5).unwrap());
    }

    #[test]
    fn leaving_domain_is_reported() {
        let a = line(-1.0, 11, 0.1, 1.0, 0.0);
        let mut b = TrajectoryBuilder::new(-1.0, 0.1, Tail::Linear);
        for _ in 0..11 {
            b.append_node(-1.0, 0.0).unwrap();
        }
        let p = TrajectoryPair::new(a, b.freeze().unwrap()).unwrap();
        assert!(matches!(
            solve_cone(&p, q(Particle::A, ConeSign::Advanced, 0.0), 1e-12),
            Err(Error::DomainExceeded { .. })
        ));
    }

    fn smooth_pair() -> TrajectoryPair {
        let h = 0.01;
        let n = 2001;
        let mut a = TrajectoryBuilder::new(-10.0, h, Tail::Linear).reach(100.0);
        let mut b = TrajectoryBuilder::new(-10.0, h, Tail::Linear).reach(100.0);
        for k in 0..n {
            let t = -10.0 + k as f64 * h;
            a.append_node(3.0 + 0.3 * libm::sin(0.5 * t), 0.15 * libm::cos(0.5 * t)).unwrap();
            b.append_node(-3.0 + 0.4 * libm::sin(0.3 * t), 0.12 * libm::cos(0.3 * t)).unwrap();
        }
        TrajectoryPair::new(a.freeze().unwrap(), b.freeze().unwrap()).unwrap()
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = smooth_pair();
        let d = 1e-4;
        for vertex in [Particle::A, Particle::B] {
            for sign in [ConeSign::Advanced, ConeSign::Retarded] {
                for &t in &[-2.0, 0.3, 1.7] {
                    let c = solve_cone(&p, q(vertex, sign, t), 1e-14).unwrap();
                    let fwd = solve_cone(&p, q(vertex, sign, t + d), 1e-14).unwrap();
                    let bwd = solve_cone(&p, q(vertex, sign, t - d), 1e-14).unwrap();
                    let fd = (fwd.cone_time - bwd.cone_time) / (2.0 * d);
                    assert!((fd - c.derivative).abs() < 1e-6 * c.derivative.abs(), "{vertex:?} {sign:?} {t}");
                    // d/dt separation = (v - w)/(1 + eps w) in oriented units.
                    let sig = vertex.orientation();
                    let eps = sign.epsilon();
                    let v = sig * p.get(vertex).eval(t).unwrap().vel;
                    let w = sig * c.other_vel;
                    let ds = (fwd.separation - bwd.separation) / (2.0 * d);
                    let want = (v - w) / (1.0 + eps * w);
                    assert!((ds - want).abs() < 1e-6 * want.abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn contraction_rate_bounded_by_speed() {
        let p = smooth_pair();
        let vmax = p.a.max_speed().max(p.b.max_speed());
        let a = p.a.eval(0.0).unwrap();
        let t = 0.0;
        let mut s = t + (a.pos - p.b.eval(t).unwrap().pos);
        let mut prev = f64::INFINITY;
        for _ in 0..12 {
            let next = t + (a.pos - p.b.eval(s).unwrap().pos);
            let r = (next - s).abs();
            if r < 1e-13 {
                break;
            }
            if prev.is_finite() {
                assert!(r <= (vmax + 0.05) * prev);
            }
            prev = r;
            s = next;
        }
    }
}
