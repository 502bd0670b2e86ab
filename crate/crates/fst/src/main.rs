//! `fst`: solve, check and query straight-line FST two-body runs.

mod config;
mod io;
mod plot;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fst_core::diagnostics::{run_all, with_final_pair, DiagnosticsReport};
use fst_core::lightcone::solve_cone;
use fst_core::solver::{solve_global, GlobalRun};
use fst_core::trajectory::Tail;
use fst_core::{AsymptoticData, ConeQuery, ConeSign, Error, Particle, Trajectory, TrajectoryBuilder, TrajectoryPair};
use serde_json::json;

use config::{PlotKind, Resolved};
use plot::{Chart, Scale, Series};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Points per plotted curve.
const PLOT_POINTS: usize = 1500;

#[derive(Parser, Debug)]
#[command(version, about = "Straight-line FST two-body solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the family of conditional problems and write the final pair.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the estimate diagnostics on a stored final pair.
    Check {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json; defaults to the trajectory's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one light-cone equation on a stored pair.
    Cone {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum)]
        sign: SignArg,
        #[arg(long, value_enum)]
        vertex: VertexArg,
        /// Continue the pair left of the grid along its asymptotes instead of straight lines.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignArg {
    Adv,
    Ret,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VertexArg {
    A,
    B,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

type Outcome = Result<u8, Failure>;

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, err: err.into() }
}

fn classify(e: Error) -> Failure {
    let code = match e {
        Error::DegenerateVelocities { .. }
        | Error::InvalidCoupling { .. }
        | Error::InvalidConfig(_)
        | Error::NoValidT0 { .. }
        | Error::NonScattering { .. } => EXIT_USAGE,
        Error::ScheduleExhausted { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_NUMERIC,
    };
    Failure { code, err: e.into() }
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("FST_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| usage(anyhow::anyhow!("FST_THREADS must be a positive integer, got {s:?}"))),
    }
}

fn load(path: &Path) -> Result<Resolved, Failure> {
    config::load(path, thread_cap()?).map_err(usage)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display())).map_err(usage)?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(usage)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(usage)
}

/// The family as `solve` produces it, converged or not.
fn family(cfg: &Resolved) -> Result<(GlobalRun, bool), Failure> {
    match solve_global(&cfg.data, &cfg.solver) {
        Ok(run) => Ok((run, true)),
        Err(Error::ScheduleExhausted { run }) => Ok((*run, false)),
        Err(e) => Err(classify(e)),
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(PLOT_POINTS).max(1)
}

fn worldline_charts(pair: &TrajectoryPair, data: &AsymptoticData, from: f64, kinds: &[PlotKind]) -> Vec<Chart> {
    let first = (0..pair.len()).find(|&k| pair.node_time(k) >= from).unwrap_or(pair.len());
    let nodes: Vec<usize> = (first..pair.len()).step_by(stride(pair.len() - first)).collect();
    let series = |p: Particle| -> Vec<(f64, f64)> {
        let tr = pair.get(p);
        nodes.iter().map(|&k| (pair.node_time(k), tr.positions()[k])).collect()
    };
    let asym = |p: Particle, f: &dyn Fn(f64, f64) -> f64| -> Vec<(f64, f64)> {
        nodes
            .iter()
            .filter_map(|&k| {
                let t = pair.node_time(k);
                let x = data.asymptote_eval(p, t).ok()?.pos;
                Some((t, f(pair.get(p).positions()[k], x)))
            })
            .collect()
    };
    let mut out = Vec::new();
    if kinds.contains(&PlotKind::Trajectories) {
        let mut c = Chart::new("worldlines and asymptotes", "t", "position");
        c.series.push(Series::new("a", series(Particle::A)));
        c.series.push(Series::new("b", series(Particle::B)));
        c.series.push(Series::new("x (asymptote of a)", asym(Particle::A, &|_, x| x)).dashed());
        c.series.push(Series::new("y (asymptote of b)", asym(Particle::B, &|_, x| x)).dashed());
        out.push(c);
    }
    if kinds.contains(&PlotKind::Gaps) {
        let mut c = Chart::new("distance to the asymptotes", "t", "|gap|");
        c.y_scale = Scale::Log;
        c.series.push(Series::new("|a - x|", asym(Particle::A, &|p, x| (p - x).abs())));
        c.series.push(Series::new("|b - y|", asym(Particle::B, &|p, x| (p - x).abs())));
        c.series.push(
            Series::new("ln|t|/|t|", asym(Particle::A, &|_, _| 0.0).iter().map(|&(t, _)| (t, t.abs().ln() / t.abs())).collect())
                .dashed(),
        );
        out.push(c);
    }
    out
}

fn decay_charts(report: &DiagnosticsReport) -> Vec<Chart> {
    let mut out = Vec::new();
    for s in &report.samples {
        if s.columns != ["T", "t", "value", "bound"] {
            continue;
        }
        let Some(last_t) = s.rows.last().map(|r| r[0]) else { continue };
        let rows: Vec<&Vec<f64>> = s.rows.iter().filter(|r| r[0] == last_t).collect();
        let mut c = Chart::new(format!("{} (T = {last_t})", s.name), "|t|", "value");
        c.x_scale = Scale::Log;
        c.y_scale = Scale::Log;
        c.series.push(Series::new("|value|", rows.iter().map(|r| (r[1].abs(), r[2].abs())).collect()));
        c.series.push(Series::new("fitted bound", rows.iter().map(|r| (r[1].abs(), r[3])).collect()).dashed());
        out.push(c);
    }
    out
}

fn cmd_solve(config: &Path, out: Option<PathBuf>) -> Outcome {
    let cfg = load(config)?;
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())).map_err(usage)?;
    let (run, converged) = family(&cfg)?;
    let pair = run.final_pair();
    if cfg.output.csv {
        let path = dir.join("trajectory.csv");
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display())).map_err(usage)?;
        io::write_pair(BufWriter::new(f), pair).map_err(usage)?;
    }
    if cfg.output.json {
        write_json(&dir.join("convergence.json"), &io::convergence_json(&run))?;
    }
    if cfg.output.svg {
        let from = cfg.output.plot_from.unwrap_or(run.family[0].t_start);
        let plots = &cfg.output.plots;
        if plots.contains(&PlotKind::Trajectories) {
            let c = worldline_charts(pair, &cfg.data, from, &[PlotKind::Trajectories]);
            write_text(&dir.join("trajectories.svg"), &plot::render(&c))?;
        }
        if plots.contains(&PlotKind::Gaps) {
            let c = worldline_charts(pair, &cfg.data, from, &[PlotKind::Gaps]);
            write_text(&dir.join("gaps.svg"), &plot::render(&c))?;
        }
    }
    for (m, d) in run.family.iter().zip(std::iter::once(None).chain(run.deltas.iter().map(Some))) {
        match d {
            None => println!("T = {:>10}  picard {:>3}", m.t_start, m.picard_iterations),
            Some(d) => println!("T = {:>10}  picard {:>3}  delta {d:.3e}", m.t_start, m.picard_iterations),
        }
    }
    if converged {
        println!("converged: final delta below {}", run.tol_global);
        Ok(EXIT_OK)
    } else {
        eprintln!("schedule exhausted without reaching tol_global = {}", run.tol_global);
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Rebuilds `template` with the ingested samples.
fn ingest(template: &Trajectory, pos: Vec<f64>, vel: Vec<f64>, which: &str) -> Result<Trajectory, Failure> {
    template.with_samples(pos, vel, None).with_context(|| format!("trajectory {which}")).map_err(usage)
}

fn cmd_check(traj: &Path, config: &Path, out: Option<PathBuf>) -> Outcome {
    let cfg = load(config)?;
    let f = File::open(traj).with_context(|| format!("cannot open {}", traj.display())).map_err(usage)?;
    let nodes = io::read_nodes(f).with_context(|| format!("{}", traj.display())).map_err(usage)?;
    nodes.grid().with_context(|| format!("{}", traj.display())).map_err(usage)?;
    let (run, _) = family(&cfg)?;
    let template = run.final_pair();
    if nodes.len() != template.len() {
        return Err(usage(anyhow::anyhow!(
            "{} has {} rows but the configured final member has {} nodes",
            traj.display(),
            nodes.len(),
            template.len()
        )));
    }
    for (k, &t) in nodes.t.iter().enumerate() {
        let expected = template.node_time(k);
        if (t - expected).abs() > 1e-9 * template.step() {
            return Err(usage(anyhow::anyhow!("row {}: time {t} does not match the configured grid ({expected})", k + 2)));
        }
    }
    let a = ingest(&template.a, nodes.a, nodes.adot, "a")?;
    let b = ingest(&template.b, nodes.b, nodes.bdot, "b")?;
    let pair = TrajectoryPair::new(a, b).map_err(usage)?;
    let run = with_final_pair(&run, pair);
    let report = run_all(&run, &cfg.data, &cfg.diagnostics).map_err(classify)?;

    let dir = out.unwrap_or_else(|| traj.parent().map(Path::to_path_buf).unwrap_or_default());
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())).map_err(usage)?;
    write_json(&dir.join("report.json"), &io::report_json(&report))?;
    if cfg.output.svg && cfg.output.plots.contains(&PlotKind::Decay) {
        write_text(&dir.join("decay.svg"), &plot::render(&decay_charts(&report)))?;
    }
    for c in &report.checks {
        println!("{} {:24} margin {:+.3e}", if c.pass { "pass" } else { "FAIL" }, c.name, c.worst_margin);
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cone_pair(nodes: io::NodeTable, data: Option<&AsymptoticData>) -> Result<TrajectoryPair, Failure> {
    let (start, step) = nodes.grid().map_err(usage)?;
    let build = |p: Particle, pos: &[f64], vel: &[f64]| -> Result<Trajectory, Failure> {
        let tail = match data {
            Some(&data) => Tail::Asymptote { data, particle: p },
            None => Tail::Linear,
        };
        let mut b = TrajectoryBuilder::new(start, step, tail).reach(f64::INFINITY).tail_tolerance(None);
        for (&x, &v) in pos.iter().zip(vel) {
            b.append_node(x, v).map_err(usage)?;
        }
        b.freeze().map_err(usage)
    };
    let a = build(Particle::A, &nodes.a, &nodes.adot)?;
    let b = build(Particle::B, &nodes.b, &nodes.bdot)?;
    TrajectoryPair::new(a, b).map_err(usage)
}

fn cmd_cone(traj: &Path, t: f64, sign: SignArg, vertex: VertexArg, config: Option<&Path>, tol: f64) -> Outcome {
    let data = config.map(load).transpose()?.map(|c| c.data);
    let f = File::open(traj).with_context(|| format!("cannot open {}", traj.display())).map_err(usage)?;
    let nodes = io::read_nodes(f).with_context(|| format!("{}", traj.display())).map_err(usage)?;
    let pair = cone_pair(nodes, data.as_ref())?;
    if !(tol > 0.0) || !t.is_finite() {
        return Err(usage(anyhow::anyhow!("--t must be finite and --tol positive")));
    }
    let q = ConeQuery {
        vertex: match vertex {
            VertexArg::A => Particle::A,
            VertexArg::B => Particle::B,
        },
        sign: match sign {
            SignArg::Adv => ConeSign::Advanced,
            SignArg::Ret => ConeSign::Retarded,
        },
        t,
    };
    let r = solve_cone(&pair, q, tol).map_err(classify)?;
    let doc = json!({
        "t": t,
        "cone_time": r.cone_time,
        "derivative": r.derivative,
        "separation": r.separation,
        "residual": r.residual,
        "iterations": r.iterations,
        "other_velocity": r.other_vel,
    });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(usage)?);
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let outcome = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out),
        Command::Check { traj, config, out } => cmd_check(&traj, &config, out),
        Command::Cone { traj, t, sign, vertex, config, tol } => cmd_cone(&traj, t, sign, vertex, config.as_deref(), tol),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
