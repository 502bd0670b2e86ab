use alloc::vec::Vec;

use crate::asymptotics::{AsymptoticData, Particle};
use crate::dynamics::{force_with, ConeSeeds, FstModel};
use crate::error::{Error, Result};
use crate::lightcone::Worldline;
use crate::math;
use crate::trajectory::{pair_norm_distance, probe_grid, State, Tail, Trajectory, TrajectoryBuilder, TrajectoryPair};

use super::config::{SolverConfig, Sweep};
use super::integrate::{rk4_step, PhaseState};

/// Consecutive growing updates tolerated before giving up.
pub const DIVERGENCE_STREAK: usize = 5;

/// A pair solving the equations of motion for `t >= T` (particle `a`) and
/// `t >= T+` (particle `b`), with `a(T) = x(T)`, `a'(T) = x'(T)` and `b = y`
/// up to `T+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSolution {
    pub pair: TrajectoryPair,
    /// Starting time `T`.
    pub t_start: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    /// Right edge of the reported window; the grid extends past it by the margin.
    pub t_end: f64,
    pub margin: f64,
    pub picard_iterations: usize,
    pub final_update_norm: f64,
    pub update_norms: Vec<f64>,
}

impl ConditionalSolution {
    /// Time from which `particle` follows the equations of motion.
    pub fn free_from(&self, particle: Particle) -> f64 {
        match particle {
            Particle::A => self.t_start,
            Particle::B => self.t_plus,
        }
    }

    /// Time before which `particle` coincides with its asymptote.
    pub fn pinned_until(&self, particle: Particle) -> f64 {
        self.free_from(particle)
    }
}

/// Grid layout and strip of one conditional problem.
struct Layout {
    data: AsymptoticData,
    model: FstModel,
    t_start: f64,
    t_minus: f64,
    t_plus: f64,
    step: f64,
    /// Index of the node at `T+`.
    pinned_last: usize,
}

impl Layout {
    fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.step
    }

    fn tail(&self, particle: Particle) -> Tail {
        Tail::Asymptote { data: self.data, particle }
    }

    fn asym(&self, particle: Particle, t: f64) -> State {
        let s = self.data.asymptote_unchecked(particle, t);
        State { pos: s.pos, vel: s.vel }
    }

    fn start_state(&self, particle: Particle) -> Result<PhaseState> {
        let t = match particle {
            Particle::A => self.t_start,
            Particle::B => self.t_plus,
        };
        PhaseState::from_state(t, self.asym(particle, t))
    }

    /// First node index integrated (not pinned) for `particle`.
    fn first_free(&self, particle: Particle) -> usize {
        match particle {
            Particle::A => 1,
            Particle::B => self.pinned_last + 1,
        }
    }
}

fn layout(data: &AsymptoticData, t_start: f64, cfg: &SolverConfig) -> Result<Layout> {
    let mu = data.mu();
    let x = data.asymptote_eval(Particle::A, t_start)?;
    let y = data.asymptote_eval(Particle::B, t_start)?;
    if !(x.pos - y.pos > mu * t_start) {
        return Err(Error::NonScattering { t: t_start, reason: "a - b > mu T fails" });
    }
    if !(x.vel - y.vel < mu) {
        return Err(Error::NonScattering { t: t_start, reason: "a' - b' < mu fails" });
    }
    let (t_minus, t_plus) = data.strip_endpoints(t_start)?;
    if !(cfg.t_end > t_plus) {
        return Err(Error::InvalidConfig("t_end must lie after the strip end T+"));
    }
    // Stretch the step slightly so that T+ is a node: b's acceleration jumps
    // there and no Hermite interval may straddle the jump.
    let pinned_last = (math::round((t_plus - t_start) / cfg.step) as usize).max(1);
    let step = (t_plus - t_start) / pinned_last as f64;
    let model = FstModel {
        kappa_a: data.kappa_a(),
        kappa_b: data.kappa_b(),
        tol_cone: cfg.tol_cone,
        separation_floor: cfg.separation_floor,
    };
    Ok(Layout { data: *data, model, t_start, t_minus, t_plus, step, pinned_last })
}

/// Advances one particle from node `k` to node `k + 1` (or from `T+` for the
/// first free node of `b`) against `other`.
fn advance<W: Worldline + ?Sized>(
    lay: &Layout,
    particle: Particle,
    state: PhaseState,
    target: f64,
    other: &W,
    seeds: &mut ConeSeeds,
) -> Result<PhaseState> {
    let model = lay.model;
    let mut force = |t: f64, s: State| -> Result<f64> {
        let f = force_with(&model, particle, s, t, other, seeds.predict(t))?;
        seeds.update(t, &f);
        Ok(f.dpdt)
    };
    let mut next = rk4_step(state, target - state.t, &mut force)?;
    next.t = target;
    Ok(next)
}

/// Iterate zero: both particles marched forward together, with the unknown
/// future of each continued linearly from its current front.
fn march_seed(lay: &Layout, cfg: &SolverConfig) -> Result<(TrajectoryPair, f64)> {
    let mut ba = TrajectoryBuilder::new(lay.t_start, lay.step, lay.tail(Particle::A));
    let mut bb = TrajectoryBuilder::new(lay.t_start, lay.step, lay.tail(Particle::B));
    let x0 = lay.asym(Particle::A, lay.t_start);
    ba.append_node(x0.pos, x0.vel)?;
    for k in 0..=lay.pinned_last {
        let y = lay.asym(Particle::B, lay.time(k));
        bb.append_node(y.pos, y.vel)?;
    }
    let mut sa = lay.start_state(Particle::A)?;
    let mut sb = lay.start_state(Particle::B)?;
    let (mut seeds_a, mut seeds_b) = (ConeSeeds::default(), ConeSeeds::default());

    let mut n_total: Option<usize> = cfg.margin.map(|m| node_count(lay, cfg.t_end + m));
    let end_idx = node_count(lay, cfg.t_end) - 1;
    let mut k = 0;
    loop {
        if let Some(n) = n_total {
            if k + 1 >= n {
                break;
            }
        }
        let target = lay.time(k + 1);
        let next_a = advance(lay, Particle::A, sa, target, &bb.view_unbounded(), &mut seeds_a)?;
        if k + 1 > lay.pinned_last {
            let next_b = advance(lay, Particle::B, sb, target, &ba.view_unbounded(), &mut seeds_b)?;
            bb.append_node(next_b.x, next_b.vel())?;
            sb = next_b;
        }
        ba.append_node(next_a.x, next_a.vel())?;
        sa = next_a;
        k += 1;
        if n_total.is_none() && k == end_idx {
            let gap = sa.x - sb.x;
            let v_est = ba.max_speed().max(bb.max_speed());
            let margin = (2.0 * gap / (1.0 - v_est)).max(2.0 * lay.step);
            n_total = Some(node_count(lay, cfg.t_end + margin));
        }
    }
    let margin = lay.time(ba.len() - 1) - cfg.t_end;
    let a = ba.reach(f64::INFINITY).freeze()?;
    let b = bb.reach(f64::INFINITY).freeze()?;
    Ok((TrajectoryPair::new(a, b)?, margin))
}

fn node_count(lay: &Layout, t: f64) -> usize {
    math::ceil((t - lay.t_start) / lay.step - 1e-9) as usize + 1
}

/// Integrates `particle` over the whole grid against a frozen `other`.
fn sweep(lay: &Layout, particle: Particle, n: usize, other: &Trajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    let first = lay.first_free(particle);
    for k in 0..first.min(n) {
        let s = lay.asym(particle, lay.time(k));
        pos.push(s.pos);
        vel.push(s.vel);
    }
    let mut state = lay.start_state(particle)?;
    let mut seeds = ConeSeeds::default();
    for k in first..n {
        state = advance(lay, particle, state, lay.time(k), other, &mut seeds)?;
        pos.push(state.x);
        vel.push(state.vel());
    }
    Ok((pos, vel))
}

fn mix(new: &mut [f64], old: &[f64], damping: f64) {
    if damping < 1.0 {
        for (n, o) in new.iter_mut().zip(old) {
            *n = damping * *n + (1.0 - damping) * o;
        }
    }
}

/// Conditional solution for starting time `t_start`, seeded by marching.
pub fn solve_conditional(data: &AsymptoticData, t_start: f64, cfg: &SolverConfig) -> Result<ConditionalSolution> {
    solve_conditional_seeded(data, t_start, cfg, None)
}

/// Conditional solution for `t_start`. With `seed`, iterate zero samples that
/// pair (for instance a neighbouring family member) on the new grid instead
/// of marching.
pub fn solve_conditional_seeded(
    data: &AsymptoticData,
    t_start: f64,
    cfg: &SolverConfig,
    seed: Option<&TrajectoryPair>,
) -> Result<ConditionalSolution> {
    cfg.validate()?;
    let lay = layout(data, t_start, cfg)?;
    let (mut frozen, margin) = match (seed, cfg.margin) {
        (Some(prev), Some(m)) => (resample(&lay, prev, node_count(&lay, cfg.t_end + m))?, m),
        (Some(prev), None) => {
            let m = prev.grid_end() - cfg.t_end;
            (resample(&lay, prev, node_count(&lay, cfg.t_end + m))?, m)
        }
        (None, _) => march_seed(&lay, cfg)?,
    };
    let n = frozen.len();
    let probe = probe_grid(lay.t_start, frozen.grid_end(), lay.step);

    let mut damping = cfg.damping;
    let mut norms = Vec::new();
    let mut streak = 0;
    for it in 1..=cfg.max_picard {
        let (mut ap, mut av) = sweep(&lay, Particle::A, n, &frozen.b)?;
        mix(&mut ap, frozen.a.positions(), damping);
        mix(&mut av, frozen.a.velocities(), damping);
        let a_new = frozen.a.with_samples(ap, av, Some(crate::trajectory::TAIL_TOLERANCE))?;
        let other_for_b = match cfg.sweep {
            Sweep::Jacobi => &frozen.a,
            Sweep::GaussSeidel => &a_new,
        };
        let (mut bp, mut bv) = sweep(&lay, Particle::B, n, other_for_b)?;
        mix(&mut bp, frozen.b.positions(), damping);
        mix(&mut bv, frozen.b.velocities(), damping);
        let b_new = frozen.b.with_samples(bp, bv, Some(crate::trajectory::TAIL_TOLERANCE))?;
        let next = TrajectoryPair::new(a_new, b_new)?;
        let norm = pair_norm_distance(&next, &frozen, &probe)?;
        frozen = next;
        if let Some(&prev) = norms.last() {
            if norm > prev {
                streak += 1;
                damping *= 0.5;
                if streak >= DIVERGENCE_STREAK {
                    return Err(Error::PicardDivergence { streak, norm });
                }
            } else {
                streak = 0;
            }
        }
        norms.push(norm);
        if norm < cfg.tol_fix {
            return Ok(ConditionalSolution {
                pair: frozen,
                t_start: lay.t_start,
                t_minus: lay.t_minus,
                t_plus: lay.t_plus,
                t_end: cfg.t_end,
                margin,
                picard_iterations: it,
                final_update_norm: norm,
                update_norms: norms,
            });
        }
    }
    Err(Error::PicardExhausted { iterations: cfg.max_picard, norm: norms.last().copied().unwrap_or(f64::NAN) })
}

/// Samples `prev` on the grid of `lay` with `n` nodes, re-pinning the initial data.
fn resample(lay: &Layout, prev: &TrajectoryPair, n: usize) -> Result<TrajectoryPair> {
    let mut ba = TrajectoryBuilder::new(lay.t_start, lay.step, lay.tail(Particle::A)).reach(f64::INFINITY);
    let mut bb = TrajectoryBuilder::new(lay.t_start, lay.step, lay.tail(Particle::B)).reach(f64::INFINITY);
    for k in 0..n {
        let t = lay.time(k);
        let a = if k == 0 { lay.asym(Particle::A, t) } else { prev.a.eval(t)? };
        let b = if k <= lay.pinned_last { lay.asym(Particle::B, t) } else { prev.b.eval(t)? };
        ba.append_node(a.pos, a.vel)?;
        bb.append_node(b.pos, b.vel)?;
    }
    TrajectoryPair::new(ba.freeze()?, bb.freeze()?)
}
