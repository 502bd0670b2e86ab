use crate::error::{Error, Result};
use crate::math;

/// Fewest samples with `|t| > 1` accepted by [`fit_bound`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// Shape of a decaying bound `C m(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayModel {
    /// `C / |t|`
    COverT,
    /// `C ln|t| / |t|`
    CLogtOverT,
    /// `C / sqrt|t|`
    COverSqrtT,
}

impl DecayModel {
    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            DecayModel::COverT => 1.0 / a,
            DecayModel::CLogtOverT => math::ln(a) / a,
            DecayModel::COverSqrtT => 1.0 / math::sqrt(a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DecayModel::COverT => "C/|t|",
            DecayModel::CLogtOverT => "C ln|t|/|t|",
            DecayModel::COverSqrtT => "C/sqrt|t|",
        }
    }
}

/// Smallest `C >= 0` with `value <= C m(t)` on every sample with `|t| > 1`,
/// and the worst violation on those samples (zero by construction).
pub fn fit_bound(samples: &[(f64, f64)], model: DecayModel) -> Result<(f64, f64)> {
    let mut c = 0.0_f64;
    let mut got = 0;
    for &(t, v) in samples {
        if t.abs() > 1.0 {
            got += 1;
            c = c.max(v / model.eval(t));
        }
    }
    if got < MIN_FIT_SAMPLES {
        return Err(Error::EmptySamples { needed: MIN_FIT_SAMPLES, got });
    }
    Ok((c, bound_violation(samples, model, c).max(0.0)))
}

/// Largest `value - C m(t)` over samples with `|t| > 1`; positive means the
/// bound is violated. `-inf` without usable samples.
pub fn bound_violation(samples: &[(f64, f64)], model: DecayModel, c: f64) -> f64 {
    samples
        .iter()
        .filter(|(t, _)| t.abs() > 1.0)
        .map(|&(t, v)| v - c * model.eval(t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A fitted bound, applied with relative slack and an absolute floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedBound {
    pub model: DecayModel,
    pub c: f64,
    pub slack: f64,
    pub floor: f64,
}

impl FittedBound {
    #[inline]
    pub fn bound(&self, t: f64) -> f64 {
        (1.0 + self.slack) * self.c * self.model.eval(t) + self.floor
    }

    /// `1 - value / bound(t)`: positive while satisfied.
    #[inline]
    pub fn margin(&self, t: f64, value: f64) -> f64 {
        1.0 - value / self.bound(t)
    }

    /// Smallest margin over `samples`; `+inf` when empty.
    pub fn worst_margin(&self, samples: &[(f64, f64)]) -> f64 {
        samples.iter().filter(|(t, _)| t.abs() > 1.0).map(|&(t, v)| self.margin(t, v)).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn series(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn exact_model_fits_its_constant() {
        let s = series(-1000.0, -10.0, 50, |t| 3.0 / t.abs());
        let (c, worst) = fit_bound(&s, DecayModel::COverT).unwrap();
        assert!((c - 3.0).abs() < 1e-12);
        assert_eq!(worst, 0.0);
        let held = series(-1e5, -1000.0, 50, |t| 3.0 / t.abs());
        assert!(bound_violation(&held, DecayModel::COverT, c) <= 1e-15);
    }

    #[test]
    fn log_decay_outgrows_inverse_model() {
        let f = |t: f64| libm::log(t.abs()) / t.abs();
        let (c_small, _) = fit_bound(&series(-100.0, -10.0, 40, f), DecayModel::COverT).unwrap();
        let (c_large, _) = fit_bound(&series(-10000.0, -10.0, 400, f), DecayModel::COverT).unwrap();
        assert!(c_large > 1.5 * c_small);
        let held = series(-1e5, -1e3, 40, f);
        assert!(bound_violation(&held, DecayModel::COverT, c_small) > 0.0);
        let (c_log, _) = fit_bound(&series(-100.0, -10.0, 40, f), DecayModel::CLogtOverT).unwrap();
        assert!(bound_violation(&held, DecayModel::CLogtOverT, c_log) <= 1e-15);
    }

    #[test]
    fn constant_data_fails_validation() {
        for model in [DecayModel::COverT, DecayModel::CLogtOverT, DecayModel::COverSqrtT] {
            let (c, _) = fit_bound(&series(-50.0, -10.0, 20, |_| 0.5), model).unwrap();
            assert!(bound_violation(&series(-5000.0, -1000.0, 20, |_| 0.5), model, c) > 0.0);
        }
    }

    #[test]
    fn too_few_samples() {
        let s = series(-1.0, 0.0, 40, |_| 1.0);
        assert!(matches!(fit_bound(&s, DecayModel::COverT), Err(Error::EmptySamples { got: 0, .. })));
        let s = series(-20.0, -10.0, 9, |_| 1.0);
        assert!(matches!(fit_bound(&s, DecayModel::COverT), Err(Error::EmptySamples { got: 9, .. })));
    }

    #[test]
    fn margin_sign_convention() {
        let b = FittedBound { model: DecayModel::COverT, c: 2.0, slack: 0.0, floor: 0.0 };
        assert!(b.margin(-10.0, 0.1) > 0.0);
        assert!(b.margin(-10.0, 0.3) < 0.0);
        assert!(b.worst_margin(&[]).is_infinite());
    }
}
