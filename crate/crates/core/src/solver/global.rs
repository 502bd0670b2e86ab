use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::asymptotics::{AsymptoticData, Particle};
use crate::error::{Error, Result};
use crate::math;
use crate::trajectory::{pair_norm_distance, probe_grid, TrajectoryPair};

use super::conditional::{solve_conditional, solve_conditional_seeded, ConditionalSolution};
use super::config::SolverConfig;

/// Samples of `|p(t) - asymptote(t)| |t| / ln|t|` on one family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessSample {
    pub t_start: f64,
    /// Ratio for `a` at `T/2`.
    pub ratio_a_half: f64,
    /// Ratio for `b` at `T/2`.
    pub ratio_b_half: f64,
    /// Largest ratio for `a` on `[T, T/10]`.
    pub max_ratio_a: f64,
    /// Largest ratio for `b` on `[T, T/10]`.
    pub max_ratio_b: f64,
}

/// A family of conditional solutions for decreasing `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRun {
    pub family: Vec<ConditionalSolution>,
    /// `deltas[n-1]` is the distance between members `n-1` and `n`.
    pub deltas: Vec<f64>,
    pub converged: bool,
    pub closeness: Vec<ClosenessSample>,
    pub tol_global: f64,
}

impl GlobalRun {
    /// The member with the earliest starting time.
    pub fn final_pair(&self) -> &TrajectoryPair {
        &self.family.last().expect("a run has at least one member").pair
    }

    pub fn final_member(&self) -> &ConditionalSolution {
        self.family.last().expect("a run has at least one member")
    }

    pub fn schedule(&self) -> Vec<f64> {
        self.family.iter().map(|m| m.t_start).collect()
    }
}

/// `|p(t) - asymptote(t)| |t| / ln|t|`.
pub fn closeness_ratio(pair: &TrajectoryPair, data: &AsymptoticData, particle: Particle, t: f64) -> Result<f64> {
    let p = pair.get(particle).eval(t)?.pos;
    let x = data.asymptote_eval(particle, t)?.pos;
    Ok((p - x).abs() * t.abs() / math::ln(-t))
}

/// Number of points sampled on `[T, T/10]` for the closeness maxima.
const CLOSENESS_SAMPLES: usize = 64;

/// Closeness ratios of one family member.
pub fn closeness_sample(member: &ConditionalSolution, data: &AsymptoticData) -> Result<ClosenessSample> {
    let t = member.t_start;
    let p = &member.pair;
    let mut max_a = 0.0_f64;
    let mut max_b = 0.0_f64;
    for k in 0..=CLOSENESS_SAMPLES {
        let s = t + (0.9 * -t) * k as f64 / CLOSENESS_SAMPLES as f64;
        max_a = max_a.max(closeness_ratio(p, data, Particle::A, s)?);
        max_b = max_b.max(closeness_ratio(p, data, Particle::B, s)?);
    }
    Ok(ClosenessSample {
        t_start: t,
        ratio_a_half: closeness_ratio(p, data, Particle::A, 0.5 * t)?,
        ratio_b_half: closeness_ratio(p, data, Particle::B, 0.5 * t)?,
        max_ratio_a: max_a,
        max_ratio_b: max_b,
    })
}

/// Distance between consecutive members in the pair norm, probed on the
/// nodes and midpoints of `[T_new, t_end]`. Left of `T_new` both members
/// coincide with the asymptotes.
pub fn member_distance(older: &ConditionalSolution, newer: &ConditionalSolution, step: f64) -> Result<f64> {
    let lo = newer.t_start.min(older.t_start);
    let hi = newer.t_end.min(older.t_end);
    pair_norm_distance(&newer.pair, &older.pair, &probe_grid(lo, hi, step))
}

fn solve_members(data: &AsymptoticData, cfg: &SolverConfig, stop_early: bool) -> Result<GlobalRun> {
    cfg.validate_for(data)?;
    let mut run = GlobalRun {
        family: Vec::new(),
        deltas: Vec::new(),
        converged: false,
        closeness: Vec::new(),
        tol_global: cfg.tol_global,
    };
    let cold_parallel = !cfg.warm_start && cfg.threads > 1;
    let members = if cold_parallel && !stop_early { parallel_cold(data, cfg)? } else { Vec::new() };
    let mut pending = members.into_iter();
    for &t in &cfg.t_schedule {
        let member = match pending.next() {
            Some(m) => m,
            None => {
                let prev = run.family.last().filter(|_| cfg.warm_start).map(|m| &m.pair);
                solve_conditional_seeded(data, t, cfg, prev)?
            }
        };
        run.closeness.push(closeness_sample(&member, data)?);
        if let Some(prev) = run.family.last() {
            let d = member_distance(prev, &member, cfg.step)?;
            run.deltas.push(d);
            if d < cfg.tol_global {
                run.converged = true;
            }
        }
        run.family.push(member);
        if stop_early && run.converged {
            break;
        }
    }
    if run.deltas.is_empty() && cfg.tol_global == f64::INFINITY {
        run.converged = true;
    }
    Ok(run)
}

#[cfg(feature = "std")]
fn parallel_cold(data: &AsymptoticData, cfg: &SolverConfig) -> Result<Vec<ConditionalSolution>> {
    let sched = &cfg.t_schedule;
    let threads = cfg.threads.min(sched.len()).max(1);
    let mut slots: Vec<Option<Result<ConditionalSolution>>> = (0..sched.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots
            .chunks_mut(sched.len().div_ceil(threads))
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * sched.len().div_ceil(threads);
                scope.spawn(move || {
                    for (i, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(solve_conditional(data, sched[base + i], cfg));
                    }
                })
            })
            .collect();
        for h in chunks {
            h.join().expect("family worker panicked");
        }
    });
    slots.into_iter().map(|s| s.expect("every slot is filled")).collect()
}

#[cfg(not(feature = "std"))]
fn parallel_cold(data: &AsymptoticData, cfg: &SolverConfig) -> Result<Vec<ConditionalSolution>> {
    cfg.t_schedule.iter().map(|&t| solve_conditional(data, t, cfg)).collect()
}

/// Runs the schedule until two successive members are closer than
/// `tol_global`.
pub fn solve_global(data: &AsymptoticData, cfg: &SolverConfig) -> Result<GlobalRun> {
    let run = solve_members(data, cfg, true)?;
    if run.converged {
        Ok(run)
    } else {
        Err(Error::ScheduleExhausted { run: Box::new(run) })
    }
}

/// Runs every member of the schedule regardless of convergence.
pub fn run_family(data: &AsymptoticData, cfg: &SolverConfig) -> Result<GlobalRun> {
    solve_members(data, cfg, false)
}
