//! Scattering data and the logarithmically corrected asymptotes.
//!
//! In the remote past the two charges move along
//!
//! ```text
//! x(t) = x_-inf + u_-inf t - eta1 ln|t|
//! y(t) = y_-inf + v_-inf t + eta2 ln|t|        (t < -1)
//! ```
//!
//! with the correction amplitudes fixed by the couplings and the limiting
//! velocities.

use crate::error::{Error, Result};
use crate::math;

/// Which of the two charges. `A` is the right (upper) one: `a(t) > b(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Particle {
    A,
    B,
}

impl Particle {
    pub fn other(self) -> Particle {
        match self {
            Particle::A => Particle::B,
            Particle::B => Particle::A,
        }
    }

    /// `+1` for the upper charge, `-1` for the lower one.
    #[inline]
    pub(crate) fn orientation(self) -> f64 {
        match self {
            Particle::A => 1.0,
            Particle::B => -1.0,
        }
    }
}

/// Position, velocity and acceleration of an asymptote at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteState {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

/// Slack applied to the scattering margins when locating `T0`.
pub const T0_MARGIN_SLACK: f64 = 0.1;

/// Closed-form correction amplitudes `(eta1, eta2)`.
///
/// ```text
/// eta1 = kappa_a (1-u^2)^{3/2} (1-v^2) / (u-v)^2
/// eta2 = kappa_b (1-v^2)^{3/2} (1-u^2) / (u-v)^2
/// ```
pub fn compute_etas(kappa_a: f64, kappa_b: f64, u: f64, v: f64) -> Result<(f64, f64)> {
    if !(u.is_finite() && v.is_finite() && -1.0 < u && u < v && v < 1.0) {
        return Err(Error::DegenerateVelocities { u, v });
    }
    if !(kappa_a.is_finite() && kappa_b.is_finite() && kappa_a >= 0.0 && kappa_b >= 0.0) {
        return Err(Error::InvalidCoupling { kappa_a, kappa_b });
    }
    let du2 = (u - v) * (u - v);
    let eta1 = kappa_a * math::lorentz_32(u) * (1.0 - v * v) / du2;
    let eta2 = kappa_b * math::lorentz_32(v) * (1.0 - u * u) / du2;
    Ok((eta1, eta2))
}

/// Asymptotic scattering data together with the derived amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticData {
    x_minus_inf: f64,
    y_minus_inf: f64,
    u_minus_inf: f64,
    v_minus_inf: f64,
    kappa_a: f64,
    kappa_b: f64,
    eta1: f64,
    eta2: f64,
}

impl AsymptoticData {
    /// Validates `-1 < u < v < 1` and `kappa >= 0`, then derives the amplitudes.
    ///
    /// Zero couplings are accepted: they describe free motion, where both
    /// amplitudes vanish and the asymptotes are straight lines.
    pub fn new(x: f64, y: f64, u: f64, v: f64, kappa_a: f64, kappa_b: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidConfig("asymptotic positions must be finite"));
        }
        let (eta1, eta2) = compute_etas(kappa_a, kappa_b, u, v)?;
        Ok(AsymptoticData {
            x_minus_inf: x,
            y_minus_inf: y,
            u_minus_inf: u,
            v_minus_inf: v,
            kappa_a,
            kappa_b,
            eta1,
            eta2,
        })
    }

    /// Overrides the derived amplitudes, e.g. to inspect the straight-line
    /// limit of the asymptote formulas without touching the couplings.
    pub fn with_etas(mut self, eta1: f64, eta2: f64) -> Self {
        self.eta1 = eta1;
        self.eta2 = eta2;
        self
    }

    pub fn x_minus_inf(&self) -> f64 {
        self.x_minus_inf
    }
    pub fn y_minus_inf(&self) -> f64 {
        self.y_minus_inf
    }
    pub fn u_minus_inf(&self) -> f64 {
        self.u_minus_inf
    }
    pub fn v_minus_inf(&self) -> f64 {
        self.v_minus_inf
    }
    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }
    pub fn kappa_b(&self) -> f64 {
        self.kappa_b
    }
    pub fn eta1(&self) -> f64 {
        self.eta1
    }
    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn kappa(&self, particle: Particle) -> f64 {
        match particle {
            Particle::A => self.kappa_a,
            Particle::B => self.kappa_b,
        }
    }

    /// Limiting velocity of `particle` as `t -> -inf`.
    pub fn limit_velocity(&self, particle: Particle) -> f64 {
        match particle {
            Particle::A => self.u_minus_inf,
            Particle::B => self.v_minus_inf,
        }
    }

    pub fn eta(&self, particle: Particle) -> f64 {
        match particle {
            Particle::A => self.eta1,
            Particle::B => self.eta2,
        }
    }

    /// Scattering rate `mu = (u - v)/2 < 0`.
    pub fn mu(&self) -> f64 {
        0.5 * (self.u_minus_inf - self.v_minus_inf)
    }

    /// Asymptote of `particle` at `t < -1`.
    pub fn asymptote_eval(&self, particle: Particle, t: f64) -> Result<AsymptoteState> {
        if !(t < -1.0) {
            return Err(Error::DomainError { t });
        }
        Ok(self.asymptote_unchecked(particle, t))
    }

    /// Same formulas without the domain check; callers guarantee `t < 0`.
    #[inline]
    pub(crate) fn asymptote_unchecked(&self, particle: Particle, t: f64) -> AsymptoteState {
        let lt = math::ln(-t);
        match particle {
            Particle::A => AsymptoteState {
                pos: self.x_minus_inf + self.u_minus_inf * t - self.eta1 * lt,
                vel: self.u_minus_inf - self.eta1 / t,
                acc: self.eta1 / (t * t),
            },
            Particle::B => AsymptoteState {
                pos: self.y_minus_inf + self.v_minus_inf * t + self.eta2 * lt,
                vel: self.v_minus_inf + self.eta2 / t,
                acc: -self.eta2 / (t * t),
            },
        }
    }

    /// `x(t) - y(t)`.
    pub fn gap(&self, t: f64) -> f64 {
        self.asymptote_unchecked(Particle::A, t).pos - self.asymptote_unchecked(Particle::B, t).pos
    }

    /// Largest grid-aligned `T0 < -1` such that, for every `t <= T0`, the
    /// asymptotes are ordered and subluminal, the lower asymptote stays
    /// subluminal up to a conservative bound on `T0+`, and the scattering
    /// margins `x - y > mu t`, `x' - y' < mu` hold with [`T0_MARGIN_SLACK`].
    ///
    /// Every condition is monotone in `T0` left of the vertices of the gap
    /// functions, so it suffices to check them at `T0` itself.
    pub fn find_t0(&self, step: f64, floor: f64) -> Result<f64> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig("grid step must be positive"));
        }
        let mu = self.mu();
        let eta_sum = self.eta1 + self.eta2;
        // Vertex of (u-v) t - (eta1+eta2) ln|t| and of the slackened margin gap.
        let gap_vertex = eta_sum / (self.v_minus_inf - self.u_minus_inf);
        let margin_vertex = eta_sum / ((1.0 - T0_MARGIN_SLACK) * -mu);
        let cap = -(gap_vertex.max(margin_vertex).max(1.0));
        // Largest grid point strictly below the cap (and strictly below -1).
        let mut k = math::floor(cap / step);
        if k * step >= cap || k * step >= -1.0 {
            k -= 1.0;
        }
        let lowest = math::floor(floor / step);

        let monotone_ok = |t: f64| -> bool {
            let x = self.asymptote_unchecked(Particle::A, t);
            let y = self.asymptote_unchecked(Particle::B, t);
            let gap = x.pos - y.pos;
            gap > 0.0
                && gap > (1.0 + T0_MARGIN_SLACK) * mu * t
                && x.vel - y.vel <= (1.0 + T0_MARGIN_SLACK) * mu
                && x.vel.abs() < 1.0
                && y.vel.abs() < 1.0
        };
        let strip_ok = |t: f64| -> bool {
            // Conservative proxy for T0+: gap / (1 - |y'(T0)|).
            let y = self.asymptote_unchecked(Particle::B, t);
            let proxy = t + self.gap(t) / (1.0 - y.vel.abs());
            if self.eta2 == 0.0 {
                return true;
            }
            // y' = v + eta2/t' decreases on t' < 0; only its lower end matters.
            proxy < 0.0 && self.v_minus_inf + self.eta2 / proxy > -1.0
        };

        // Bisect for the largest grid index satisfying the monotone set.
        if !monotone_ok(lowest * step) {
            return Err(Error::NoValidT0 { floor });
        }
        let mut hi = k;
        if !monotone_ok(hi * step) {
            let mut lo = lowest; // satisfied
            while hi - lo > 1.0 {
                let mid = math::floor(0.5 * (lo + hi));
                if monotone_ok(mid * step) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi = lo;
        }
        // The strip proxy is not monotone in T0; walk down to the first pass.
        let mut idx = hi;
        while idx >= lowest {
            let t = idx * step;
            if strip_ok(t) {
                return Ok(t);
            }
            idx -= 1.0;
        }
        Err(Error::NoValidT0 { floor })
    }

    /// Strip endpoints `(T-, T+)`: the retarded and advanced times of the
    /// lower asymptote seen from `x(T)`.
    pub fn strip_endpoints(&self, t: f64) -> Result<(f64, f64)> {
        if !(t < -1.0) {
            return Err(Error::DomainError { t });
        }
        let xt = self.asymptote_unchecked(Particle::A, t).pos;
        let gap = self.gap(t);
        if !(gap > 0.0) {
            return Err(Error::NonScattering { t, reason: "asymptotes are not ordered" });
        }
        // f(s) = s - T -/+ (x(T) - y(s)), increasing in s whenever |y'| < 1.
        let retarded = |s: f64| s - t + (xt - self.asymptote_unchecked(Particle::B, s).pos);
        let advanced = |s: f64| s - t - (xt - self.asymptote_unchecked(Particle::B, s).pos);

        let mut lo = t - gap;
        let mut width = gap;
        while retarded(lo) > 0.0 {
            width *= 2.0;
            lo = t - width;
            if !lo.is_finite() {
                return Err(Error::NonScattering { t, reason: "retarded strip end not found" });
            }
        }
        let t_minus = bisect(retarded, lo, t);

        let hi = -1.0 - 1e-9 * (1.0 + t.abs());
        if advanced(hi) < 0.0 {
            return Err(Error::NonScattering {
                t,
                reason: "advanced strip end leaves the asymptote domain",
            });
        }
        let t_plus = bisect(advanced, t, hi);
        Ok((t_minus, t_plus))
    }
}

/// Bisection for an increasing function with `f(lo) <= 0 <= f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(hi).abs() < f(lo).abs() {
        hi
    } else {
        lo
    }
}
