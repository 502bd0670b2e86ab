use fst_core::dynamics::{window_residuals, FstModel};
use fst_core::solver::{solve_conditional, SolverConfig};
use fst_core::{AsymptoticData, Particle};

fn symmetric() -> AsymptoticData {
    AsymptoticData::new(1.0, -1.0, -0.4, 0.4, 1.0, 1.0).unwrap()
}

#[test]
fn short_symmetric_solution_is_attractive_and_subluminal() {
    let data = symmetric();
    let cfg = SolverConfig::default();
    let sol = solve_conditional(&data, -50.0, &cfg).unwrap();
    assert!(sol.t_minus < sol.t_start && sol.t_start < sol.t_plus);
    assert!(sol.final_update_norm < cfg.tol_fix);
    let pair = &sol.pair;
    for k in 0..pair.len() {
        let t = pair.node_time(k);
        if t > sol.t_end {
            break;
        }
        assert!(pair.a.positions()[k] > pair.b.positions()[k]);
        assert!(pair.a.velocities()[k].abs() < 1.0 && pair.b.velocities()[k].abs() < 1.0);
        if k > 0 {
            // attraction: a speeds up toward b, b toward a, both monotonically.
            assert!(pair.a.velocities()[k] >= pair.a.velocities()[k - 1]);
            assert!(pair.b.velocities()[k] <= pair.b.velocities()[k - 1]);
        }
    }
}

fn mirror_defect(t_start: f64) -> f64 {
    let sol = solve_conditional(&symmetric(), t_start, &SolverConfig::default()).unwrap();
    let a = sol.pair.a.eval(0.0).unwrap();
    let b = sol.pair.b.eval(0.0).unwrap();
    (a.pos + b.pos).abs()
}

#[test]
fn mirror_defect_shrinks_with_earlier_start() {
    // b is pinned on [T, T+], so mirror data only gives a mirror solution as T -> -inf.
    let (near, far) = (mirror_defect(-50.0), mirror_defect(-200.0));
    assert!(far < 0.6 * near, "{near} {far}");
}

#[test]
fn residual_is_small_on_the_reported_window() {
    let data = symmetric();
    let cfg = SolverConfig::default();
    let sol = solve_conditional(&data, -50.0, &cfg).unwrap();
    let model = FstModel::from_data(&data).with_tol_cone(cfg.tol_cone);
    for p in [Particle::A, Particle::B] {
        let r = window_residuals(&sol.pair, &model, p, sol.free_from(p), sol.t_end, 1.0, cfg.quad_step).unwrap();
        assert!(!r.is_empty());
        assert!(r.iter().all(|(_, x)| x.abs() < 1e-6), "{p:?}");
    }
}

#[test]
fn step_must_resolve_the_problem() {
    let data = symmetric();
    assert!(solve_conditional(&data, -50.0, &SolverConfig { step: -0.1, ..SolverConfig::default() }).is_err());
    assert!(solve_conditional(&data, 10.0, &SolverConfig::default()).is_err());
}
