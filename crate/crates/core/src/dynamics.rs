//! Right-hand sides of the equations of motion and quantities derived from them.
//!
//! Momentum form, with `p = v / sqrt(1 - v^2)`:
//!
//! ```text
//! d/dt p_a =  (kappa_a/2) [ (1+b'(t2-))/(1-b'(t2-)) (a - b(t2-))^-2 + (1-b'(t2+))/(1+b'(t2+)) (a - b(t2+))^-2 ]
//! d/dt p_b = -(kappa_b/2) [ (1-a'(t1-))/(1+a'(t1-)) (b - a(t1-))^-2 + (1+a'(t1+))/(1-a'(t1+)) (b - a(t1+))^-2 ]
//! ```
//!
//! Multiplying positions and velocities by the orientation `sigma` (`+1` for
//! `a`, `-1` for `b`) maps the second line onto the first, so most helpers
//! work in that oriented frame.

use alloc::vec::Vec;

use crate::asymptotics::{AsymptoticData, Particle};
use crate::error::{Error, Result};
use crate::lightcone::{solve_cone_with, ConeResult, ConeSign, Worldline};
use crate::math;
use crate::quadrature;
use crate::trajectory::{State, Trajectory, TrajectoryPair};

/// Default floor below which a light-cone separation is treated as a failure.
pub const SEPARATION_FLOOR: f64 = 1e-6;

/// Couplings and numerical tolerances for force evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FstModel {
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub tol_cone: f64,
    pub separation_floor: f64,
}

impl FstModel {
    pub fn new(kappa_a: f64, kappa_b: f64) -> Self {
        FstModel { kappa_a, kappa_b, tol_cone: 1e-12, separation_floor: SEPARATION_FLOOR }
    }

    pub fn from_data(data: &AsymptoticData) -> Self {
        Self::new(data.kappa_a(), data.kappa_b())
    }

    pub fn with_tol_cone(mut self, tol: f64) -> Self {
        self.tol_cone = tol;
        self
    }

    pub fn kappa(&self, particle: Particle) -> f64 {
        match particle {
            Particle::A => self.kappa_a,
            Particle::B => self.kappa_b,
        }
    }
}

/// `v / sqrt(1 - v^2)`.
pub fn momentum_from_velocity(v: f64) -> Result<f64> {
    if !(v.abs() < 1.0) {
        return Err(Error::SuperluminalInput { v });
    }
    Ok(v / math::sqrt((1.0 - v) * (1.0 + v)))
}

/// `p / sqrt(1 + p^2)`; always subluminal for finite `p`.
#[inline]
pub fn velocity_from_momentum(p: f64) -> f64 {
    if p.abs() > 1e150 {
        return p.signum() * (1.0 - f64::EPSILON);
    }
    p / math::hypot(1.0, p)
}

/// One evaluation of the force on a particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEval {
    /// Momentum rate.
    pub dpdt: f64,
    /// `(1 - v^2)^{3/2} dpdt`.
    pub acc: f64,
    /// Contribution of the advanced cone to `dpdt`.
    pub adv_term: f64,
    /// Contribution of the retarded cone to `dpdt`.
    pub ret_term: f64,
    pub cone_adv: ConeResult,
    pub cone_ret: ConeResult,
}

/// Force on `particle` in state `vertex` at `t`, with cones taken on `other`.
/// Optional seeds start the advanced and retarded cone iterations.
#[inline]
pub fn force_with<W: Worldline + ?Sized>(
    model: &FstModel,
    particle: Particle,
    vertex: State,
    t: f64,
    other: &W,
    seeds: (Option<f64>, Option<f64>),
) -> Result<ForceEval> {
    let sigma = particle.orientation();
    let adv = solve_cone_with(vertex, sigma, ConeSign::Advanced, t, other, model.tol_cone, seeds.0)?;
    let ret = solve_cone_with(vertex, sigma, ConeSign::Retarded, t, other, model.tol_cone, seeds.1)?;
    for sep in [adv.separation, ret.separation] {
        if !(sep >= model.separation_floor) {
            return Err(Error::SeparationUnderflow { t, separation: sep, floor: model.separation_floor });
        }
    }
    let half = 0.5 * sigma * model.kappa(particle);
    let wr = sigma * ret.other_vel;
    let wa = sigma * adv.other_vel;
    let ret_term = half * (1.0 + wr) / (1.0 - wr) / (ret.separation * ret.separation);
    let adv_term = half * (1.0 - wa) / (1.0 + wa) / (adv.separation * adv.separation);
    let dpdt = ret_term + adv_term;
    Ok(ForceEval { dpdt, acc: math::lorentz_32(vertex.vel) * dpdt, adv_term, ret_term, cone_adv: adv, cone_ret: ret })
}

/// Force on `particle` at `t` for a frozen pair.
pub fn force_on(pair: &TrajectoryPair, particle: Particle, t: f64, model: &FstModel) -> Result<ForceEval> {
    let vertex = pair.get(particle).eval(t)?;
    force_with(model, particle, vertex, t, pair.get(particle.other()), (None, None))
}

/// Warm starts for consecutive cone solves along increasing times.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ConeSeeds {
    last: Option<(f64, f64, f64, f64, f64)>,
}

impl ConeSeeds {
    #[inline]
    pub fn predict(&self, t: f64) -> (Option<f64>, Option<f64>) {
        match self.last {
            Some((t0, sa, da, sr, dr)) => (Some(sa + da * (t - t0)), Some(sr + dr * (t - t0))),
            None => (None, None),
        }
    }

    #[inline]
    pub fn update(&mut self, t: f64, f: &ForceEval) {
        self.last = Some((
            t,
            f.cone_adv.cone_time,
            f.cone_adv.derivative,
            f.cone_ret.cone_time,
            f.cone_ret.derivative,
        ));
    }
}

/// `v(t) - v(T) - int_T^t acc ds`, the defect of the once-integrated
/// equation of motion, by composite Simpson with panels of at most `quad_step`.
pub fn integrated_velocity_residual(
    pair: &TrajectoryPair,
    model: &FstModel,
    particle: Particle,
    from: f64,
    to: f64,
    quad_step: f64,
) -> Result<f64> {
    let tr = pair.get(particle);
    let other = pair.get(particle.other());
    let mut seeds = ConeSeeds::default();
    let integral = quadrature::integrate(
        |s| {
            let vs = tr.eval(s)?;
            let f = force_with(model, particle, vs, s, other, seeds.predict(s))?;
            seeds.update(s, &f);
            Ok(f.acc)
        },
        from,
        to,
        quad_step,
    )?;
    Ok(tr.eval(to)?.vel - tr.eval(from)?.vel - integral)
}

/// Residuals of the once-integrated equation on consecutive windows of length
/// `window` covering `[from, to]`, as `(window start, residual)`.
pub fn window_residuals(
    pair: &TrajectoryPair,
    model: &FstModel,
    particle: Particle,
    from: f64,
    to: f64,
    window: f64,
    quad_step: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut s = from;
    while s < to - 1e-12 * window {
        let e = (s + window).min(to);
        out.push((s, integrated_velocity_residual(pair, model, particle, s, e, quad_step)?));
        s = e;
    }
    Ok(out)
}

/// Largest `|x(t_j) - x(t_i) - int v|` over consecutive node windows of
/// `nodes_per_window` intervals, integrating the stored node velocities by
/// Simpson's rule. Detects velocity samples inconsistent with positions.
pub fn kinematic_residual(tr: &Trajectory, first: usize, last: usize, nodes_per_window: usize) -> f64 {
    let n = nodes_per_window.max(2);
    let (pos, vel) = (tr.positions(), tr.velocities());
    let mut worst = 0.0_f64;
    let mut i = first;
    while i < last {
        let j = (i + n).min(last);
        let d = pos[j] - pos[i] - quadrature::simpson(&vel[i..=j], tr.step());
        worst = worst.max(d.abs());
        i = j;
    }
    worst
}

/// `k(u, w) = (1-u^2)^{3/2} (1-w^2) / (u-w)^2` and its partial derivatives.
#[inline]
pub fn k_factor(u: f64, w: f64) -> (f64, f64, f64) {
    let su = 1.0 - u * u;
    let r = math::sqrt(su);
    let d = u - w;
    let d2 = d * d;
    let d3 = d2 * d;
    let k = su * r * (1.0 - w * w) / d2;
    let du = r * (1.0 - w * w) * (-u * u + 3.0 * u * w - 2.0) / d3;
    let dw = 2.0 * su * r * (1.0 - u * w) / d3;
    (k, du, dw)
}

/// `h(u, w) = (1-u^2)^{3/2} (1 + c w) / (u-w)` with `c = +1` for the
/// retarded cone and `c = -1` for the advanced one, and its partials.
#[inline]
pub fn h_factor(u: f64, w: f64, c: f64) -> (f64, f64, f64) {
    let su = 1.0 - u * u;
    let r = math::sqrt(su);
    let d = u - w;
    let d2 = d * d;
    let h = su * r * (1.0 + c * w) / d;
    let du = r * (1.0 + c * w) * (-2.0 * u * u + 3.0 * u * w - 1.0) / d2;
    let dw = su * r * (1.0 + c * u) / d2;
    (h, du, dw)
}

/// The five terms of the twice-integrated equation at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WfintTerms {
    pub t: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    /// `sum |A_n|`.
    pub sum_bound: f64,
    /// `|p(t) - asymptote(t)|` for the particle `p`.
    pub lhs_gap: f64,
    /// `(p - asymptote) - (A1 - A2 + A3 + A4 + A5)` in the oriented frame.
    pub identity_defect: f64,
}

/// Acceleration of `particle` on a conditional solution: the asymptote's
/// before `pin`, the equation of motion from `pin` on.
pub struct AccelerationProvider<'a> {
    pub pair: &'a TrajectoryPair,
    pub data: &'a AsymptoticData,
    pub model: &'a FstModel,
    pub particle: Particle,
    pub pin: f64,
}

impl AccelerationProvider<'_> {
    pub fn acc(&self, t: f64, seeds: (Option<f64>, Option<f64>)) -> Result<(f64, Option<ForceEval>)> {
        if t < self.pin {
            return Ok((self.data.asymptote_unchecked(self.particle, t).acc, None));
        }
        let vs = self.pair.get(self.particle).eval(t)?;
        let f = force_with(self.model, self.particle, vs, t, self.pair.get(self.particle.other()), seeds)?;
        Ok((f.acc, Some(f)))
    }
}

/// Integrand values of the decomposition at one time, oriented frame.
struct Pieces {
    /// `sum k ln D`.
    k_log: f64,
    /// `sum h / D`.
    h_over_d: f64,
    /// `sum k' ln D` (integrand of A4 without the prefactor).
    a4: f64,
    /// `sum h' / D` (integrand of A5 without the prefactor).
    a5: f64,
    /// Oriented position.
    pos: f64,
    /// Retarded and advanced cone times.
    cone_times: [f64; 2],
}

/// Vertex side of the decomposition: the particle, its orientation and the
/// other particle's acceleration.
struct TermContext<'a> {
    pair: &'a TrajectoryPair,
    model: &'a FstModel,
    particle: Particle,
    theirs: AccelerationProvider<'a>,
}

impl TermContext<'_> {
    /// Integrands at `s`; `seeds` (vertex, retarded, advanced) warm-start the
    /// cone solves along a sweep.
    fn pieces(&self, s: f64, seeds: &mut [ConeSeeds; 3]) -> Result<Pieces> {
        let sigma = self.particle.orientation();
        let vs = self.pair.get(self.particle).eval(s)?;
        let f = force_with(self.model, self.particle, vs, s, self.pair.get(self.particle.other()), seeds[0].predict(s))?;
        seeds[0].update(s, &f);
        let u = sigma * vs.vel;
        let udot = sigma * f.acc;
        let mut p = Pieces {
            k_log: 0.0,
            h_over_d: 0.0,
            a4: 0.0,
            a5: 0.0,
            pos: sigma * vs.pos,
            cone_times: [f.cone_ret.cone_time, f.cone_adv.cone_time],
        };
        let [_, sr, sa] = seeds;
        for (cone, c, cs) in [(&f.cone_ret, 1.0, sr), (&f.cone_adv, -1.0, sa)] {
            let tau = cone.cone_time;
            let (acc_o, fo) = self.theirs.acc(tau, cs.predict(tau))?;
            if let Some(fo) = fo {
                cs.update(tau, &fo);
            }
            let w = sigma * cone.other_vel;
            let wdot = sigma * acc_o * cone.derivative;
            let d = cone.separation;
            let ld = math::ln(d);
            let (kk, kdu, kdw) = k_factor(u, w);
            let (hh, hdu, hdw) = h_factor(u, w, c);
            p.k_log += kk * ld;
            p.h_over_d += hh / d;
            p.a4 += (kdu * udot + kdw * wdot) * ld;
            p.a5 += (hdu * udot + hdw * wdot) / d;
        }
        Ok(p)
    }

    /// Time in `[lo, hi]` at which cone `j` (0 retarded, 1 advanced) reaches `pin`.
    fn crossing(&self, j: usize, pin: f64, lo: f64, hi: f64) -> Result<f64> {
        let sign = if j == 0 { ConeSign::Retarded } else { ConeSign::Advanced };
        let other = self.pair.get(self.particle.other());
        let mut t = 0.5 * (lo + hi);
        for _ in 0..6 {
            let vs = self.pair.get(self.particle).eval(t)?;
            let c = solve_cone_with(vs, self.particle.orientation(), sign, t, other, self.model.tol_cone, None)?;
            let next = (t + (pin - c.cone_time) / c.derivative).clamp(lo, hi);
            if next == t {
                break;
            }
            t = next;
        }
        Ok(t)
    }
}

/// Terms of the twice-integrated equation for `particle` on a conditional
/// solution, at times `base + k * step` for `k = 0..=n`.
///
/// `base` is the time from which the particle follows the equation of motion
/// with asymptote initial data (`T` for `a`, `T+` for `b`); `other_pin` is
/// the time before which the other particle is pinned to its asymptote
/// (`T+` for `b` when `particle` is `a`, `T` for `a` when it is `b`).
///
/// The other particle's acceleration jumps at `other_pin`, so the A4 and A5
/// integrands jump where a cone time crosses it. Those intervals are split at
/// the crossing and integrated by Gauss-Legendre on each side.
#[allow(clippy::too_many_arguments)]
pub fn wfint_series(
    pair: &TrajectoryPair,
    data: &AsymptoticData,
    model: &FstModel,
    particle: Particle,
    base: f64,
    other_pin: f64,
    step: f64,
    n: usize,
) -> Result<Vec<WfintTerms>> {
    let sigma = particle.orientation();
    let other = particle.other();
    let kappa = model.kappa(particle);
    let half = 0.5 * kappa;
    let eta = data.eta(particle);
    let u_lim = sigma * data.limit_velocity(particle);
    let v_lim = sigma * data.limit_velocity(other);
    let c_const = 0.5 * eta * math::ln((u_lim - v_lim) * (u_lim - v_lim) / (1.0 - v_lim * v_lim));
    let ctx = TermContext {
        pair,
        model,
        particle,
        theirs: AccelerationProvider { pair, data, model, particle: other, pin: other_pin },
    };

    let mut seeds = [ConeSeeds::default(); 3];
    let pieces: Vec<Pieces> = (0..=n).map(|k| ctx.pieces(base + k as f64 * step, &mut seeds)).collect::<Result<_>>()?;

    let f4: Vec<f64> = pieces.iter().map(|p| p.a4).collect();
    let f5: Vec<f64> = pieces.iter().map(|p| p.a5).collect();
    let f5r: Vec<f64> = pieces.iter().enumerate().map(|(k, p)| k as f64 * step * p.a5).collect();
    let skip: Vec<bool> = pieces
        .windows(2)
        .map(|w| (0..2).any(|j| (w[0].cone_times[j] < other_pin) != (w[1].cone_times[j] < other_pin)))
        .collect();
    let mut inc4 = quadrature::interval_increments(&f4, step, &skip);
    let mut inc5 = quadrature::interval_increments(&f5, step, &skip);
    let mut inc5r = quadrature::interval_increments(&f5r, step, &skip);
    for k in (0..n).filter(|&k| skip[k]) {
        let (lo, hi) = (base + k as f64 * step, base + (k + 1) as f64 * step);
        let mut cuts = alloc::vec![lo, hi];
        for j in 0..2 {
            if (pieces[k].cone_times[j] < other_pin) != (pieces[k + 1].cone_times[j] < other_pin) {
                cuts.push(ctx.crossing(j, other_pin, lo, hi)?);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let (mut s4, mut s5, mut s5r) = (0.0, 0.0, 0.0);
        for w in cuts.windows(2) {
            for (x, wt) in quadrature::gauss3(w[0], w[1]) {
                let p = ctx.pieces(x, &mut [ConeSeeds::default(); 3])?;
                s4 += wt * p.a4;
                s5 += wt * p.a5;
                s5r += wt * (x - base) * p.a5;
            }
        }
        inc4[k] = s4;
        inc5[k] = s5;
        inc5r[k] = s5r;
    }
    let prefix = |inc: &[f64]| {
        let mut acc = 0.0;
        core::iter::once(0.0)
            .chain(inc.iter().map(|v| {
                acc += v;
                acc
            }))
            .collect::<Vec<f64>>()
    };
    let (g4, g5, g5r) = (prefix(&inc4), prefix(&inc5), prefix(&inc5r));

    let p0 = &pieces[0];
    let a3 = half * p0.k_log - eta * math::ln(-base) - c_const;
    let slope = half * p0.h_over_d;
    let mut out = Vec::with_capacity(n + 1);
    for (k, p) in pieces.iter().enumerate() {
        let t = base + k as f64 * step;
        let dt = k as f64 * step;
        let a1 = slope * dt - eta * dt / base;
        let a2 = half * p.k_log - eta * math::ln(-t) - c_const;
        let a4 = half * g4[k];
        let a5 = half * (dt * g5[k] - g5r[k]);
        let asym = sigma * data.asymptote_unchecked(particle, t).pos;
        let lhs = p.pos - asym;
        out.push(WfintTerms {
            t,
            a1,
            a2,
            a3,
            a4,
            a5,
            sum_bound: a1.abs() + a2.abs() + a3.abs() + a4.abs() + a5.abs(),
            lhs_gap: lhs.abs(),
            identity_defect: lhs - (a1 - a2 + a3 + a4 + a5),
        });
    }
    Ok(out)
}

/// Terms of the twice-integrated equation at a single time `t >= base`,
/// with panels of at most `quad_step`.
#[allow(clippy::too_many_arguments)]
pub fn wfint_terms(
    pair: &TrajectoryPair,
    data: &AsymptoticData,
    model: &FstModel,
    particle: Particle,
    base: f64,
    other_pin: f64,
    t: f64,
    quad_step: f64,
) -> Result<WfintTerms> {
    let n = math::ceil(((t - base) / quad_step).max(0.0)) as usize;
    let step = if n == 0 { quad_step } else { (t - base) / n as f64 };
    let series = wfint_series(pair, data, model, particle, base, other_pin, step, n.max(1))?;
    Ok(series[n])
}

/// `kappa k(v(t), w(t+-)) - eta` on both cones, the deviation of the local
/// correction amplitude from its limit.
pub fn eta_closeness(
    pair: &TrajectoryPair,
    data: &AsymptoticData,
    model: &FstModel,
    particle: Particle,
    t: f64,
) -> Result<(f64, f64)> {
    let f = force_on(pair, particle, t, model)?;
    let sigma = particle.orientation();
    let u = sigma * pair.get(particle).eval(t)?.vel;
    let kappa = model.kappa(particle);
    let eta = data.eta(particle);
    let dev = |c: &ConeResult| kappa * k_factor(u, sigma * c.other_vel).0 - eta;
    Ok((dev(&f.cone_adv), dev(&f.cone_ret)))
}
