//! Numeric checks of the estimates.
//!
//! Every check turns one estimate on the family of conditional solutions into
//! a verdict with a worst margin (positive = satisfied with room). Constants
//! whose existence is all the estimate asserts are fitted on every member but
//! the last and then validated, with slack, on the final pair; a corrupted or
//! non-uniform final pair therefore fails the check instead of inflating `C`.
//!
//! Windows: decay checks run on `[T_n, t0]` with `t0 = T_0 / 2` by default
//! (`T_0` the first member's start), node-wise checks on `[T_n, t_end]`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::asymptotics::{AsymptoticData, Particle};
use crate::dynamics::{force_with, k_factor, kinematic_residual, wfint_series, window_residuals, ConeSeeds, FstModel};
use crate::error::{Error, Result};
use crate::lightcone::{ConeResult, ConeSign};
use crate::math;
use crate::solver::{closeness_sample, ConditionalSolution, GlobalRun, SolverConfig};
use crate::trajectory::{Trajectory, TrajectoryPair};

mod fit;

pub use fit::{bound_violation, fit_bound, DecayModel, FittedBound, MIN_FIT_SAMPLES};

/// Tunables of [`run_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Right end of the decay windows; `None` means half the first member's start.
    pub t0: Option<f64>,
    pub quad_step: f64,
    pub tol_cone: f64,
    pub separation_floor: f64,
    /// Relative slack of fitted bounds on the validation member.
    pub validation_slack: f64,
    /// Absolute floor added to fitted and ratio bounds (roundoff allowance).
    pub absolute_floor: f64,
    /// Sample times per member for the fitted and envelope checks.
    pub samples_per_member: usize,
    pub residual_window: f64,
    pub residual_tol: f64,
    pub identity_tol: f64,
    /// Allowed growth of the closeness ratio across the family.
    pub ratio_factor: f64,
    /// Allowed relative spread of the per-member speed bound.
    pub speed_stability: f64,
    /// Relative tolerance of the envelope membership test.
    pub envelope_tol: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            t0: None,
            quad_step: 0.01,
            tol_cone: 1e-12,
            separation_floor: crate::dynamics::SEPARATION_FLOOR,
            validation_slack: 0.2,
            absolute_floor: 1e-10,
            samples_per_member: 200,
            residual_window: 1.0,
            residual_tol: 1e-4,
            identity_tol: 1e-6,
            ratio_factor: 1.5,
            speed_stability: 0.05,
            envelope_tol: 1e-9,
        }
    }
}

impl DiagnosticsConfig {
    /// Defaults with the quadrature and cone settings of a solver run.
    pub fn from_solver(cfg: &SolverConfig) -> Self {
        DiagnosticsConfig {
            quad_step: cfg.quad_step,
            tol_cone: cfg.tol_cone,
            separation_floor: cfg.separation_floor,
            ..Self::default()
        }
    }
}

/// Verdict of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// The inequality being checked, in words.
    pub description: &'static str,
    pub window: (f64, f64),
    pub fitted_constants: Vec<(&'static str, f64)>,
    /// Positive when satisfied with room; non-finite when it could not be evaluated.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Raw samples behind a check, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
    /// Run-level constants: `mu`, `V`, `D`, `t0`.
    pub constants: Vec<(&'static str, f64)>,
    pub samples: Vec<SampleTable>,
}

impl DiagnosticsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

const PARTICLES: [Particle; 2] = [Particle::A, Particle::B];

fn tag(p: Particle) -> &'static str {
    match p {
        Particle::A => "a",
        Particle::B => "b",
    }
}

fn idx(p: Particle) -> usize {
    match p {
        Particle::A => 0,
        Particle::B => 1,
    }
}

/// `n` times on `[lo, hi]` (both negative, `|t| > 1`) evenly spaced in `ln|t|`.
fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(lo < hi) {
        return Vec::new();
    }
    let (l0, l1) = (math::ln(-lo), math::ln(-hi));
    let n = n.max(2);
    (0..n).map(|k| -libm::exp(l0 + (l1 - l0) * k as f64 / (n - 1) as f64)).collect()
}

fn lin_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(lo < hi) {
        return Vec::new();
    }
    let n = n.max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Index of the last node at or before `t`.
fn node_at_or_before(tr: &Trajectory, t: f64) -> usize {
    let k = math::floor((t - tr.grid_start()) / tr.step() + 1e-9);
    (k.max(0.0) as usize).min(tr.len() - 1)
}

/// `true` when `margin` satisfies a sign condition that is strict for coupled particles.
fn strict_ok(margin: f64, strict: bool) -> bool {
    if strict {
        margin > 0.0
    } else {
        margin >= 0.0
    }
}

fn min_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

/// Values of one fitted quantity on every member, `(t, value)`.
type Series = Vec<Vec<(f64, f64)>>;

struct Fitted {
    bound: Option<FittedBound>,
    margin: f64,
}

/// Per-member quantities at the sample times of the decay window.
#[derive(Default)]
struct MemberSamples {
    /// `|p - asymptote|`.
    dev: [Vec<(f64, f64)>; 2],
    /// `sigma (v - v_lim)`.
    excess: [Vec<(f64, f64)>; 2],
    /// `a'(t1+) - a'(t)` and `b'(t) - b'(t2+)`.
    cone_decay: [Vec<(f64, f64)>; 2],
    /// Margins of the four cone velocity gaps against `mu` and `mu/2`.
    gap_margin: f64,
    gap_rows: Vec<Vec<f64>>,
    /// `max_pm |kappa k(v, w(t+-)) - eta|`.
    eta: [Vec<(f64, f64)>; 2],
    /// Decomposition terms, `|A_n|` at subsampled nodes.
    terms: [[Vec<(f64, f64)>; 5]; 2],
    identity_worst: f64,
    inequality_worst: f64,
}

/// Per-member node-wise quantities on `[T, t_end]`.
struct MemberNodes {
    monotone: [f64; 2],
    bracket_lower: [f64; 2],
    scattering: f64,
    speed: f64,
    distance: f64,
    acc_sign: [f64; 2],
    separation: f64,
    envelope: f64,
}

struct Ctx<'a> {
    data: &'a AsymptoticData,
    model: FstModel,
    cfg: &'a DiagnosticsConfig,
    t0: f64,
    mu: f64,
}

impl Ctx<'_> {
    fn fit(&self, series: &Series, model: DecayModel) -> Fitted {
        let last = series.len() - 1;
        let pool: Vec<(f64, f64)> = series[..last].concat();
        match fit_bound(&pool, model) {
            Ok((c, _)) => {
                let bound = FittedBound { model, c, slack: self.cfg.validation_slack, floor: self.cfg.absolute_floor };
                Fitted { margin: bound.worst_margin(&series[last]), bound: Some(bound) }
            }
            Err(_) => Fitted { bound: None, margin: f64::NEG_INFINITY },
        }
    }

    fn table(&self, name: String, family: &[ConditionalSolution], series: &Series, fitted: &Fitted) -> SampleTable {
        let mut rows = Vec::new();
        for (m, s) in family.iter().zip(series) {
            for &(t, v) in s {
                let b = fitted.bound.map_or(f64::NAN, |b| b.bound(t));
                rows.push(vec![m.t_start, t, v, b]);
            }
        }
        SampleTable { name, columns: vec!["T", "t", "value", "bound"], rows }
    }

    fn member_samples(&self, m: &ConditionalSolution) -> Result<MemberSamples> {
        let pair = &m.pair;
        let model = &self.model;
        let mut out = MemberSamples { gap_margin: f64::INFINITY, ..Default::default() };
        for t in log_times(m.t_start, self.t0, self.cfg.samples_per_member) {
            let sa = pair.a.eval(t)?;
            let sb = pair.b.eval(t)?;
            let fa = force_with(model, Particle::A, sa, t, &pair.b, (None, None))?;
            let fb = force_with(model, Particle::B, sb, t, &pair.a, (None, None))?;
            for (p, s) in [(Particle::A, sa), (Particle::B, sb)] {
                let sigma = p.orientation();
                let x = self.data.asymptote_eval(p, t)?;
                out.dev[idx(p)].push((t, (s.pos - x.pos).abs()));
                out.excess[idx(p)].push((t, sigma * (s.vel - self.data.limit_velocity(p))));
            }
            out.cone_decay[0].push((t, fb.cone_adv.other_vel - sa.vel));
            out.cone_decay[1].push((t, sb.vel - fa.cone_adv.other_vel));
            let g = [
                sa.vel - fa.cone_ret.other_vel,
                fb.cone_ret.other_vel - sb.vel,
                fb.cone_adv.other_vel - sb.vel,
                sa.vel - fa.cone_adv.other_vel,
            ];
            let lim = [self.mu, self.mu, 0.5 * self.mu, 0.5 * self.mu];
            for (v, l) in g.iter().zip(lim) {
                out.gap_margin = out.gap_margin.min(l - v);
            }
            out.gap_rows.push(vec![m.t_start, t, g[0], g[1], g[2], g[3]]);
            for (p, s, f) in [(Particle::A, sa, &fa), (Particle::B, sb, &fb)] {
                let sigma = p.orientation();
                let kappa = model.kappa(p);
                let eta = self.data.eta(p);
                let dev = |c: &ConeResult| (kappa * k_factor(sigma * s.vel, sigma * c.other_vel).0 - eta).abs();
                out.eta[idx(p)].push((t, dev(&f.cone_adv).max(dev(&f.cone_ret))));
            }
        }

        out.identity_worst = 0.0;
        out.inequality_worst = f64::NEG_INFINITY;
        for p in PARTICLES {
            let (base, pin) = match p {
                Particle::A => (m.t_start, m.t_plus),
                Particle::B => (m.t_plus, m.t_start),
            };
            let step = pair.step();
            let n = math::floor((self.t0 - base) / step + 1e-9);
            if n < 1.0 {
                continue;
            }
            let series = wfint_series(pair, self.data, model, p, base, pin, step, n as usize)?;
            let keep = log_times(base, base + n * step, self.cfg.samples_per_member);
            let mut next = 0;
            for (k, w) in series.iter().enumerate() {
                out.identity_worst = out.identity_worst.max(w.identity_defect.abs());
                out.inequality_worst = out.inequality_worst.max(w.lhs_gap - w.sum_bound);
                if next < keep.len() && (w.t >= keep[next] - 0.5 * step || k + 1 == series.len()) {
                    while next < keep.len() && keep[next] <= w.t + 0.5 * step {
                        next += 1;
                    }
                    let vals = [w.a1, w.a2, w.a3, w.a4, w.a5];
                    for (j, v) in vals.iter().enumerate() {
                        out.terms[idx(p)][j].push((w.t, v.abs()));
                    }
                }
            }
        }
        Ok(out)
    }

    fn member_nodes(&self, m: &ConditionalSolution) -> Result<MemberNodes> {
        let pair = &m.pair;
        let end = node_at_or_before(&pair.a, m.t_end);
        let decay_end = node_at_or_before(&pair.a, self.t0).min(end);
        let mut out = MemberNodes {
            monotone: [f64::INFINITY; 2],
            bracket_lower: [f64::INFINITY; 2],
            scattering: f64::INFINITY,
            speed: 0.0,
            distance: f64::INFINITY,
            acc_sign: [f64::INFINITY; 2],
            separation: f64::INFINITY,
            envelope: f64::INFINITY,
        };
        let (ap, av) = (pair.a.positions(), pair.a.velocities());
        let (bp, bv) = (pair.b.positions(), pair.b.velocities());
        for k in 0..=end {
            let t = pair.node_time(k);
            for (p, v) in [(Particle::A, av), (Particle::B, bv)] {
                let sigma = p.orientation();
                if k < end {
                    out.monotone[idx(p)] = out.monotone[idx(p)].min(sigma * (v[k + 1] - v[k]));
                }
                if k <= decay_end {
                    let lower = sigma * (v[k] - self.data.limit_velocity(p));
                    out.bracket_lower[idx(p)] = out.bracket_lower[idx(p)].min(lower);
                }
            }
            let gap = ap[k] - bp[k];
            if k <= decay_end {
                out.scattering = out.scattering.min(gap - self.mu * t).min(self.mu - (av[k] - bv[k]));
            }
            out.speed = out.speed.max(av[k].abs()).max(bv[k].abs());
            out.distance = out.distance.min(gap / (1.0 + t.abs()));
        }

        for p in PARTICLES {
            let tr = pair.get(p);
            let other = pair.get(p.other());
            let sigma = p.orientation();
            // Sup over the whole line: the tail approaches the limit velocity.
            let v_other = other.max_speed().max(self.data.limit_velocity(p.other()).abs());
            let first = node_at_or_before(tr, m.free_from(p)).max(1);
            let mut seeds = ConeSeeds::default();
            for k in first..=end {
                let t = pair.node_time(k);
                let s = crate::trajectory::State { pos: tr.positions()[k], vel: tr.velocities()[k] };
                let f = force_with(&self.model, p, s, t, other, seeds.predict(t))?;
                seeds.update(t, &f);
                out.acc_sign[idx(p)] = out.acc_sign[idx(p)].min(sigma * f.acc);
                let gap = ap[k] - bp[k];
                for c in [&f.cone_adv, &f.cone_ret] {
                    let lo = c.separation - 0.5 * gap;
                    let hi = gap / (1.0 - v_other) - c.separation;
                    out.separation = out.separation.min(lo.min(hi) / gap);
                }
            }
            for t in lin_times(m.t_start, m.t_end, self.cfg.samples_per_member) {
                if t.abs() < 1e-9 {
                    // Both sides vanish.
                    continue;
                }
                let s = tr.eval(t)?;
                let f = force_with(&self.model, p, s, t, other, (None, None))?;
                let gap = pair.gap(t)?;
                for (c, sign) in [(&f.cone_adv, ConeSign::Advanced), (&f.cone_ret, ConeSign::Retarded)] {
                    let (wmin, wmax) = velocity_range(other, t, c.cone_time)?;
                    let es = sign.epsilon() * sigma;
                    let q = t / c.separation;
                    let e1 = t * (1.0 + es * wmin) / gap;
                    let e2 = t * (1.0 + es * wmax) / gap;
                    let (lo, hi) = (e1.min(e2), e1.max(e2));
                    let margin = (q - lo).min(hi - q) / q.abs() + self.cfg.envelope_tol;
                    out.envelope = out.envelope.min(margin);
                }
            }
        }
        Ok(out)
    }
}

/// Extremes of `tr`'s velocity between `t` and `s`: its values there and at
/// every node in between.
fn velocity_range(tr: &Trajectory, t: f64, s: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (t.min(s), t.max(s));
    let mut wmin = f64::INFINITY;
    let mut wmax = f64::NEG_INFINITY;
    let mut push = |v: f64| {
        wmin = wmin.min(v);
        wmax = wmax.max(v);
    };
    push(tr.eval(lo)?.vel);
    push(tr.eval(hi)?.vel);
    if lo < tr.grid_start() && hi > tr.grid_start() {
        push(tr.velocities()[0]);
    }
    let start = tr.grid_start();
    let h = tr.step();
    let k0 = math::ceil((lo - start) / h).max(0.0) as usize;
    let k1 = math::floor((hi - start) / h);
    if k1 >= 0.0 {
        let k1 = (k1 as usize).min(tr.len() - 1);
        for &v in tr.velocities().get(k0..=k1).unwrap_or(&[]) {
            push(v);
        }
    }
    Ok((wmin, wmax))
}

/// Runs every check on a family with at least two members.
pub fn run_all(run: &GlobalRun, data: &AsymptoticData, cfg: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    let family = &run.family;
    if family.len() < 2 {
        return Err(Error::InsufficientFamily { members: family.len() });
    }
    let t0 = cfg.t0.unwrap_or(0.5 * family[0].t_start);
    if !(t0 < -1.0) {
        return Err(Error::InvalidConfig("the decay window end t0 must be below -1"));
    }
    let model = FstModel {
        kappa_a: data.kappa_a(),
        kappa_b: data.kappa_b(),
        tol_cone: cfg.tol_cone,
        separation_floor: cfg.separation_floor,
    };
    let ctx = Ctx { data, model, cfg, t0, mu: data.mu() };
    let t_first = family.iter().map(|m| m.t_start).fold(f64::INFINITY, f64::min);
    let t_end = family.iter().map(|m| m.t_end).fold(f64::NEG_INFINITY, f64::max);
    let decay_window = (t_first, t0);
    let node_window = (t_first, t_end);

    let samples: Vec<MemberSamples> = family.iter().map(|m| ctx.member_samples(m)).collect::<Result<_>>()?;
    let nodes: Vec<MemberNodes> = family.iter().map(|m| ctx.member_nodes(m)).collect::<Result<_>>()?;

    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let strict = |p: Particle| model.kappa(p) > 0.0;

    // Generic fitted check over both particles.
    let mut fitted_check = |name: &'static str,
                            description: &'static str,
                            names: [&'static str; 2],
                            get: &dyn Fn(&MemberSamples, usize) -> &Vec<(f64, f64)>,
                            model: DecayModel,
                            extra_margin: [f64; 2],
                            extra_ok: bool| {
        let mut constants = Vec::new();
        let mut margin = f64::INFINITY;
        for p in PARTICLES {
            let series: Series = samples.iter().map(|s| get(s, idx(p)).clone()).collect();
            let f = ctx.fit(&series, model);
            if let Some(b) = f.bound {
                constants.push((names[idx(p)], b.c));
            }
            margin = margin.min(f.margin).min(extra_margin[idx(p)]);
            tables.push(ctx.table(format!("{name}_{}", tag(p)), family, &series, &f));
        }
        checks.push(Check {
            name,
            description,
            window: decay_window,
            fitted_constants: constants,
            worst_margin: margin,
            pass: margin >= 0.0 && extra_ok,
        });
    };

    let lower = [0, 1].map(|i| min_of(nodes.iter().map(|n| n.bracket_lower[i])));
    fitted_check(
        "velocity_bracket",
        "u < a'(t) <= u + C/|t| and v > b'(t) >= v - C/|t| on [T, t0]",
        ["C_a", "C_b"],
        &|s, i| &s.excess[i],
        DecayModel::COverT,
        lower,
        strict_ok(lower[0], strict(Particle::A)) && strict_ok(lower[1], strict(Particle::B)),
    );
    fitted_check(
        "position_closeness",
        "|a - x|, |b - y| <= C ln|t|/|t| on [T, t0]",
        ["C_a", "C_b"],
        &|s, i| &s.dev[i],
        DecayModel::CLogtOverT,
        [f64::INFINITY; 2],
        true,
    );
    fitted_check(
        "cone_velocity_decay",
        "a'(t1+) - a'(t) < C/|t| and b'(t) - b'(t2+) < C/|t| on [T, t0]",
        ["C_a", "C_b"],
        &|s, i| &s.cone_decay[i],
        DecayModel::COverT,
        [f64::INFINITY; 2],
        true,
    );
    fitted_check(
        "eta_closeness",
        "|kappa k(v(t), w(t+-)) - eta| <= C/|t| on [T, t0]",
        ["C_a", "C_b"],
        &|s, i| &s.eta[i],
        DecayModel::COverT,
        [f64::INFINITY; 2],
        true,
    );
    const TERM_NAMES: [[&str; 5]; 2] = [["C_A1_a", "C_A2_a", "C_A3_a", "C_A4_a", "C_A5_a"], ["C_A1_b", "C_A2_b", "C_A3_b", "C_A4_b", "C_A5_b"]];
    {
        let mut constants = Vec::new();
        let mut margin = f64::INFINITY;
        for p in PARTICLES {
            for j in 0..5 {
                let model = if j == 4 { DecayModel::COverT } else { DecayModel::CLogtOverT };
                let series: Series = samples.iter().map(|s| s.terms[idx(p)][j].clone()).collect();
                let f = ctx.fit(&series, model);
                if let Some(b) = f.bound {
                    constants.push((TERM_NAMES[idx(p)][j], b.c));
                }
                margin = margin.min(f.margin);
                tables.push(ctx.table(format!("decomposition_A{}_{}", j + 1, tag(p)), family, &series, &f));
            }
        }
        checks.push(Check {
            name: "decomposition_decay",
            description: "|A1..A4| <= C ln|t|/|t| and |A5| <= C/|t| on [T, t0]",
            window: decay_window,
            fitted_constants: constants,
            worst_margin: margin,
            pass: margin >= 0.0,
        });
    }
    {
        let defect = samples.iter().map(|s| s.identity_worst).fold(0.0, f64::max);
        let ineq = samples.iter().map(|s| s.inequality_worst).fold(f64::NEG_INFINITY, f64::max);
        let margin = 1.0 - defect.max(ineq) / cfg.identity_tol;
        checks.push(Check {
            name: "decomposition_identity",
            description: "p - asymptote = A1 - A2 + A3 + A4 + A5 and |p - asymptote| <= sum |A_n| within tolerance",
            window: decay_window,
            fitted_constants: vec![("max_defect", defect)],
            worst_margin: margin,
            pass: margin >= 0.0,
        });
    }

    {
        let margin = min_of(nodes.iter().flat_map(|n| n.monotone));
        let per = [0, 1].map(|i| min_of(nodes.iter().map(|n| n.monotone[i])));
        checks.push(Check {
            name: "monotone_velocity",
            description: "a' increasing and b' decreasing across all nodes of [T, t_end]",
            window: node_window,
            fitted_constants: Vec::new(),
            worst_margin: margin,
            pass: strict_ok(per[0], strict(Particle::A)) && strict_ok(per[1], strict(Particle::B)),
        });
    }
    {
        let margin = min_of(nodes.iter().map(|n| n.scattering));
        checks.push(Check {
            name: "scattering_window",
            description: "a - b >= mu t and a' - b' <= mu on [T, t0]",
            window: decay_window,
            fitted_constants: vec![("mu", ctx.mu)],
            worst_margin: margin,
            pass: margin >= -cfg.absolute_floor,
        });
    }
    let v_fit = nodes.iter().map(|n| n.speed).fold(0.0, f64::max);
    let d_fit = min_of(nodes.iter().map(|n| n.distance));
    {
        let v_min = min_of(nodes.iter().map(|n| n.speed));
        let spread = v_fit - v_min;
        let margin = (1.0 - v_fit).min(d_fit).min(cfg.speed_stability * v_fit - spread);
        checks.push(Check {
            name: "speed_and_separation",
            description: "sup |a'|, |b'| <= V < 1 (stable across the family) and a - b >= D (1 + |t|) with D > 0",
            window: node_window,
            fitted_constants: vec![("V", v_fit), ("D", d_fit), ("V_spread", spread)],
            worst_margin: margin,
            pass: v_fit < 1.0 && d_fit > 0.0 && spread <= cfg.speed_stability * v_fit,
        });
        tables.push(SampleTable {
            name: String::from("speed_and_separation"),
            columns: vec!["T", "V", "D"],
            rows: family.iter().zip(&nodes).map(|(m, n)| vec![m.t_start, n.speed, n.distance]).collect(),
        });
    }
    {
        let per = [0, 1].map(|i| min_of(nodes.iter().map(|n| n.acc_sign[i])));
        checks.push(Check {
            name: "acceleration_sign",
            description: "a'' > 0 and b'' < 0 at every free interior node up to t_end",
            window: node_window,
            fitted_constants: Vec::new(),
            worst_margin: per[0].min(per[1]),
            pass: strict_ok(per[0], strict(Particle::A)) && strict_ok(per[1], strict(Particle::B)),
        });
    }
    {
        let margin = min_of(samples.iter().map(|s| s.gap_margin));
        checks.push(Check {
            name: "cone_velocity_gaps",
            description: "a'(t) - b'(t2-), a'(t1-) - b'(t) <= mu and a'(t1+) - b'(t), a'(t) - b'(t2+) <= mu/2 on [T, t0]",
            window: decay_window,
            fitted_constants: vec![("mu", ctx.mu)],
            worst_margin: margin,
            pass: margin >= -cfg.absolute_floor,
        });
        tables.push(SampleTable {
            name: String::from("cone_velocity_gaps"),
            columns: vec!["T", "t", "a'-b'(t2-)", "a'(t1-)-b'", "a'(t1+)-b'", "a'-b'(t2+)"],
            rows: samples.iter().flat_map(|s| s.gap_rows.iter().cloned()).collect(),
        });
    }
    {
        let margin = min_of(nodes.iter().map(|n| n.separation));
        checks.push(Check {
            name: "cone_separation",
            description: "(a - b)/2 <= cone separation <= (a - b)/(1 - V_other) at every free node",
            window: node_window,
            fitted_constants: Vec::new(),
            worst_margin: margin,
            pass: margin >= -1e-12,
        });
        let margin = min_of(nodes.iter().map(|n| n.envelope));
        checks.push(Check {
            name: "cone_envelope",
            description: "t / cone separation lies between t (1 +- w_min)/(a - b) and t (1 +- w_max)/(a - b)",
            window: node_window,
            fitted_constants: Vec::new(),
            worst_margin: margin,
            pass: margin >= 0.0,
        });
    }

    {
        let close: Vec<_> = family.iter().map(|m| closeness_sample(m, data)).collect::<Result<_>>()?;
        let first = close[0];
        let mut margin = f64::INFINITY;
        for c in &close {
            // The floor is a deviation, carried into ratio units at T/2.
            let th = 0.5 * c.t_start.abs();
            let floor = cfg.absolute_floor * th / math::ln(th);
            for (r, r0) in [(c.ratio_a_half, first.ratio_a_half), (c.ratio_b_half, first.ratio_b_half)] {
                margin = margin.min(1.0 - r / (cfg.ratio_factor * r0 + floor));
            }
        }
        checks.push(Check {
            name: "closeness_ratio",
            description: "|p(T/2) - asymptote| |t|/ln|t| stays below 1.5 times its first-member value",
            window: decay_window,
            fitted_constants: vec![("ratio_a", first.ratio_a_half), ("ratio_b", first.ratio_b_half)],
            worst_margin: margin,
            pass: margin >= 0.0,
        });
        tables.push(SampleTable {
            name: String::from("closeness_ratio"),
            columns: vec!["T", "ratio_a_half", "ratio_b_half", "max_ratio_a", "max_ratio_b"],
            rows: close.iter().map(|c| vec![c.t_start, c.ratio_a_half, c.ratio_b_half, c.max_ratio_a, c.max_ratio_b]).collect(),
        });
    }

    let last = family.last().expect("at least two members");
    {
        let mut rows = Vec::new();
        let mut worst = 0.0_f64;
        for p in PARTICLES {
            let r = window_residuals(&last.pair, &model, p, last.free_from(p), last.t_end, cfg.residual_window, cfg.quad_step)?;
            for (s, v) in r {
                worst = worst.max(v.abs());
                rows.push(vec![idx(p) as f64, s, v]);
            }
        }
        let margin = 1.0 - worst / cfg.residual_tol;
        checks.push(Check {
            name: "fst_residual",
            description: "once-integrated equation of motion holds on unit windows of [T, t_end] (a) and [T+, t_end] (b)",
            window: (last.t_start, last.t_end),
            fitted_constants: vec![("max_residual", worst)],
            worst_margin: margin,
            pass: margin >= 0.0,
        });
        tables.push(SampleTable { name: String::from("fst_residual"), columns: vec!["particle", "window_start", "residual"], rows });

        let per_window = math::round(cfg.residual_window / last.pair.step()).max(2.0) as usize;
        let end = node_at_or_before(&last.pair.a, last.t_end);
        let worst = PARTICLES
            .iter()
            .map(|&p| {
                let tr = last.pair.get(p);
                kinematic_residual(tr, node_at_or_before(tr, last.free_from(p) + 1e-9 * tr.step()), end, per_window)
            })
            .fold(0.0, f64::max);
        let margin = 1.0 - worst / cfg.residual_tol;
        checks.push(Check {
            name: "kinematic_closure",
            description: "positions agree with the integral of the velocities on unit windows",
            window: (last.t_start, last.t_end),
            fitted_constants: vec![("max_defect", worst)],
            worst_margin: margin,
            pass: margin >= 0.0,
        });
    }

    let constants = vec![("mu", ctx.mu), ("V", v_fit), ("D", d_fit), ("t0", t0)];
    Ok(DiagnosticsReport { checks, constants, samples: tables })
}

/// Pair of an ingested final trajectory and a recomputed family: replaces the
/// last member's pair, keeping its bookkeeping.
pub fn with_final_pair(run: &GlobalRun, pair: TrajectoryPair) -> GlobalRun {
    let mut out = run.clone();
    if let Some(last) = out.family.last_mut() {
        last.pair = pair;
    }
    out
}
