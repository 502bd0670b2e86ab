//! JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use fst_core::diagnostics::DiagnosticsConfig;
use fst_core::solver::{geometric_schedule, SolverConfig, Sweep};
use fst_core::AsymptoticData;
use serde::Deserialize;

/// Configuration error located in the source file.
#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path.display(), self.message)
        } else {
            write!(f, "{}:{}:{}: {}", self.path.display(), self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Overrides the derived logarithmic drift rates.
    #[serde(default)]
    pub etas: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepName {
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Explicit(Vec<f64>),
    Geometric(GeometricSchedule),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricSchedule {
    pub start: f64,
    #[serde(default = "two")]
    pub ratio: f64,
    pub count: usize,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub step: f64,
    pub t_end: f64,
    pub margin: Option<f64>,
    pub tol_fix: f64,
    pub max_picard: usize,
    pub damping: f64,
    pub tol_cone: f64,
    pub separation_floor: f64,
    /// `None` uses the default geometric schedule from `T0`.
    pub schedule: Option<Schedule>,
    pub tol_global: f64,
    pub quad_step: f64,
    pub sweep: SweepName,
    pub warm_start: bool,
    pub threads: usize,
    pub t0_floor: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverBlock {
            step: d.step,
            t_end: d.t_end,
            margin: d.margin,
            tol_fix: d.tol_fix,
            max_picard: d.max_picard,
            damping: d.damping,
            tol_cone: d.tol_cone,
            separation_floor: d.separation_floor,
            schedule: None,
            tol_global: d.tol_global,
            quad_step: d.quad_step,
            sweep: SweepName::Jacobi,
            warm_start: d.warm_start,
            threads: d.threads,
            t0_floor: d.t0_floor,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    pub t0: Option<f64>,
    pub validation_slack: f64,
    pub absolute_floor: f64,
    pub samples_per_member: usize,
    pub residual_window: f64,
    pub residual_tol: f64,
    pub identity_tol: f64,
    pub ratio_factor: f64,
    pub speed_stability: f64,
    pub envelope_tol: f64,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        let d = DiagnosticsConfig::default();
        DiagnosticsBlock {
            t0: d.t0,
            validation_slack: d.validation_slack,
            absolute_floor: d.absolute_floor,
            samples_per_member: d.samples_per_member,
            residual_window: d.residual_window,
            residual_tol: d.residual_tol,
            identity_tol: d.identity_tol,
            ratio_factor: d.ratio_factor,
            speed_stability: d.speed_stability,
            envelope_tol: d.envelope_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Trajectories,
    Gaps,
    Decay,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    pub plots: Vec<PlotKind>,
    /// Left edge of the plotted window; `None` uses the first member's start.
    pub plot_from: Option<f64>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: PathBuf::from("out"),
            csv: true,
            json: true,
            svg: true,
            plots: vec![PlotKind::Trajectories, PlotKind::Gaps, PlotKind::Decay],
            plot_from: None,
        }
    }
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub data: AsymptoticData,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputBlock,
}

/// Line and column of the first `"key"` in `src`, or `(0, 0)`.
fn locate(src: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    for (i, line) in src.lines().enumerate() {
        if let Some(c) = line.find(&needle) {
            return (i + 1, c + 1);
        }
    }
    (0, 0)
}

pub fn load(path: &Path, thread_cap: Option<usize>) -> Result<Resolved, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: 0,
        column: 0,
        message: format!("cannot read config: {e}"),
    })?;
    parse(&src, path, thread_cap)
}

pub fn parse(src: &str, path: &Path, thread_cap: Option<usize>) -> Result<Resolved, ConfigError> {
    let err = |key: &str, message: String| {
        let (line, column) = locate(src, key);
        ConfigError { path: path.to_path_buf(), line, column, message }
    };
    let raw: RunConfig = serde_json::from_str(src).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let d = &raw.data;
    let mut data = AsymptoticData::new(d.x, d.y, d.u, d.v, d.kappa_a, d.kappa_b).map_err(|e| {
        let key = match e {
            fst_core::Error::InvalidCoupling { .. } => "kappa_a",
            _ => "u",
        };
        err(key, format!("{e}; existence of a scattering solution needs incoming velocities with u < v and couplings kappa >= 0"))
    })?;
    if let Some([e1, e2]) = d.etas {
        if !(e1.is_finite() && e2.is_finite()) {
            return Err(err("etas", String::from("etas must be finite")));
        }
        data = data.with_etas(e1, e2);
    }

    let s = &raw.solver;
    let mut solver = SolverConfig {
        step: s.step,
        t_end: s.t_end,
        margin: s.margin,
        tol_fix: s.tol_fix,
        max_picard: s.max_picard,
        damping: s.damping,
        tol_cone: s.tol_cone,
        separation_floor: s.separation_floor,
        t_schedule: Vec::new(),
        tol_global: s.tol_global,
        quad_step: s.quad_step,
        sweep: match s.sweep {
            SweepName::Jacobi => Sweep::Jacobi,
            SweepName::GaussSeidel => Sweep::GaussSeidel,
        },
        warm_start: s.warm_start,
        threads: s.threads,
        t0_floor: s.t0_floor,
    };
    if let Some(cap) = thread_cap {
        solver.threads = solver.threads.min(cap.max(1));
    }
    solver.validate().map_err(|e| err("solver", e.to_string()))?;
    solver.t_schedule = match &s.schedule {
        None => solver.default_schedule(&data).map_err(|e| err("solver", e.to_string()))?,
        Some(Schedule::Explicit(t)) => t.clone(),
        Some(Schedule::Geometric(g)) => {
            if !(g.ratio > 1.0 && g.start < 0.0 && g.count > 0) {
                return Err(err("schedule", String::from("geometric schedule needs start < 0, ratio > 1, count > 0")));
            }
            geometric_schedule(g.start, g.ratio, g.count, solver.step)
        }
    };
    solver.validate_for(&data).map_err(|e| err("schedule", e.to_string()))?;

    let g = &raw.diagnostics;
    let mut diagnostics = DiagnosticsConfig::from_solver(&solver);
    diagnostics.t0 = g.t0;
    diagnostics.validation_slack = g.validation_slack;
    diagnostics.absolute_floor = g.absolute_floor;
    diagnostics.samples_per_member = g.samples_per_member;
    diagnostics.residual_window = g.residual_window;
    diagnostics.residual_tol = g.residual_tol;
    diagnostics.identity_tol = g.identity_tol;
    diagnostics.ratio_factor = g.ratio_factor;
    diagnostics.speed_stability = g.speed_stability;
    diagnostics.envelope_tol = g.envelope_tol;
    if let Some(t0) = g.t0 {
        if !(t0 < -1.0) {
            return Err(err("t0", String::from("diagnostics t0 must be below -1")));
        }
    }
    if g.samples_per_member < 10 {
        return Err(err("samples_per_member", String::from("samples_per_member must be at least 10")));
    }

    Ok(Resolved { data, solver, diagnostics, output: raw.output })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Result<Resolved, ConfigError> {
        parse(src, Path::new("cfg.json"), None)
    }

    const MIN: &str = r#"{"data": {"x": 1, "y": -1, "u": -0.4, "v": 0.4, "kappa_a": 1, "kappa_b": 1}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let r = p(MIN).unwrap();
        assert_eq!(r.solver.step, 0.1);
        assert_eq!(r.solver.t_schedule.len(), fst_core::solver::DEFAULT_SCHEDULE_LEN);
        assert!(r.output.svg);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let src = "{\n  \"data\": {\"x\": 1, \"y\": -1, \"u\": -0.4, \"v\": 0.4, \"kappa_a\": 1, \"kappa_b\": 1},\n  \"solver\": {\n    \"stepp\": 0.1\n  }\n}";
        let e = p(src).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains("stepp"));
    }

    #[test]
    fn velocity_order_is_located() {
        let src = "{\"data\": {\n\"x\": 1, \"y\": -1,\n\"u\": 0.5, \"v\": 0.4,\n\"kappa_a\": 1, \"kappa_b\": 1}}";
        let e = p(src).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("u < v"), "{}", e.message);
    }

    #[test]
    fn schedules() {
        let src = r#"{"data": {"x": 1, "y": -1, "u": -0.4, "v": 0.4, "kappa_a": 1, "kappa_b": 1},
            "solver": {"schedule": {"start": -100, "count": 3}}}"#;
        assert_eq!(p(src).unwrap().solver.t_schedule, vec![-100.0, -200.0, -400.0]);
        let src = r#"{"data": {"x": 1, "y": -1, "u": -0.4, "v": 0.4, "kappa_a": 1, "kappa_b": 1},
            "solver": {"schedule": [-100, -50]}}"#;
        assert!(p(src).unwrap_err().message.contains("decreasing"));
    }

    #[test]
    fn thread_cap_applies() {
        let src = r#"{"data": {"x": 1, "y": -1, "u": -0.4, "v": 0.4, "kappa_a": 1, "kappa_b": 1},
            "solver": {"threads": 8}}"#;
        assert_eq!(parse(src, Path::new("c"), Some(2)).unwrap().solver.threads, 2);
    }
}
