//! Trajectory CSV and JSON documents.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use fst_core::diagnostics::DiagnosticsReport;
use fst_core::solver::GlobalRun;
use fst_core::TrajectoryPair;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 5] = ["t", "a", "adot", "b", "bdot"];

/// Node samples read from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub adot: Vec<f64>,
    pub b: Vec<f64>,
    pub bdot: Vec<f64>,
}

impl NodeTable {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    /// Checks that the rows sit on a uniform grid and returns `(start, step)`.
    pub fn grid(&self) -> Result<(f64, f64)> {
        if self.len() < 2 {
            bail!("a trajectory needs at least two rows");
        }
        let start = self.t[0];
        let step = (self.t[self.len() - 1] - start) / (self.len() - 1) as f64;
        if !(step > 0.0) {
            bail!("times must increase");
        }
        for (k, &t) in self.t.iter().enumerate() {
            let expected = start + k as f64 * step;
            if (t - expected).abs() > 1e-9 * step {
                bail!("row {}: time {t} is off the uniform grid (expected {expected})", k + 2);
            }
        }
        Ok((start, step))
    }
}

/// `t,a,adot,b,bdot`, one row per node, shortest round-trip decimals.
pub fn write_pair<W: Write>(w: W, pair: &TrajectoryPair) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    let (a, b) = (&pair.a, &pair.b);
    for k in 0..pair.len() {
        out.write_record([
            pair.node_time(k).to_string(),
            a.positions()[k].to_string(),
            a.velocities()[k].to_string(),
            b.positions()[k].to_string(),
            b.velocities()[k].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_nodes<R: Read>(r: R) -> Result<NodeTable> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header = rd.headers().context("missing header")?.clone();
    if header.iter().ne(CSV_HEADER) {
        bail!("header must be {:?}, found {:?}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","));
    }
    let mut t = NodeTable { t: Vec::new(), a: Vec::new(), adot: Vec::new(), b: Vec::new(), bdot: Vec::new() };
    for (i, rec) in rd.records().enumerate() {
        let row = i + 2;
        let rec = rec.with_context(|| format!("row {row}"))?;
        if rec.len() != 5 {
            bail!("row {row}: expected 5 fields, found {}", rec.len());
        }
        let mut vals = [0.0_f64; 5];
        for (j, f) in rec.iter().enumerate() {
            vals[j] = f.parse().with_context(|| format!("row {row}, column {}: not a number: {f:?}", CSV_HEADER[j]))?;
            if !vals[j].is_finite() {
                bail!("row {row}, column {}: value is not finite", CSV_HEADER[j]);
            }
        }
        t.t.push(vals[0]);
        t.a.push(vals[1]);
        t.adot.push(vals[2]);
        t.b.push(vals[3]);
        t.bdot.push(vals[4]);
    }
    Ok(t)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn pairs(kv: &[(&str, f64)]) -> Value {
    Value::Object(kv.iter().map(|(k, v)| ((*k).to_string(), finite(*v))).collect())
}

pub fn convergence_json(run: &GlobalRun) -> Value {
    let members: Vec<Value> = run
        .family
        .iter()
        .zip(&run.closeness)
        .enumerate()
        .map(|(n, (m, c))| {
            json!({
                "t_start": m.t_start,
                "t_minus": m.t_minus,
                "t_plus": m.t_plus,
                "t_end": m.t_end,
                "margin": m.margin,
                "picard_iterations": m.picard_iterations,
                "final_update_norm": finite(m.final_update_norm),
                "delta": if n == 0 { Value::Null } else { finite(run.deltas[n - 1]) },
                "closeness": {
                    "ratio_a_half": finite(c.ratio_a_half),
                    "ratio_b_half": finite(c.ratio_b_half),
                    "max_ratio_a": finite(c.max_ratio_a),
                    "max_ratio_b": finite(c.max_ratio_b),
                },
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "converged": run.converged,
        "tol_global": run.tol_global,
        "schedule": run.schedule(),
        "deltas": run.deltas.iter().map(|&d| finite(d)).collect::<Vec<_>>(),
        "members": members,
    })
}

pub fn report_json(report: &DiagnosticsReport) -> Value {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "description": c.description,
                "window": [finite(c.window.0), finite(c.window.1)],
                "fitted_constants": pairs(&c.fitted_constants),
                "worst_margin": finite(c.worst_margin),
                "pass": c.pass,
            })
        })
        .collect();
    let mut samples = Map::new();
    for s in &report.samples {
        let rows: Vec<Value> = s.rows.iter().map(|r| Value::Array(r.iter().map(|&x| finite(x)).collect())).collect();
        samples.insert(s.name.clone(), json!({ "columns": s.columns, "rows": rows }));
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "all_pass": report.all_pass(),
        "checks": checks,
        "constants": pairs(&report.constants),
        "samples": samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fst_core::trajectory::Tail;
    use fst_core::TrajectoryBuilder;

    fn pair() -> TrajectoryPair {
        let mk = |x0: f64, v: f64| {
            let mut b = TrajectoryBuilder::new(-1.0, 0.1, Tail::Linear);
            for k in 0..21 {
                let t = -1.0 + k as f64 * 0.1;
                b.append_node(x0 + v * t + 1e-3 * (t * 7.3).sin() / 3.0, v).unwrap();
            }
            b.freeze().unwrap()
        };
        TrajectoryPair::new(mk(1.0, -0.3), mk(-1.0, 0.1)).unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let p = pair();
        let mut buf = Vec::new();
        write_pair(&mut buf, &p).unwrap();
        let t = read_nodes(buf.as_slice()).unwrap();
        assert_eq!(t.len(), p.len());
        assert_eq!(t.a, p.a.positions());
        assert_eq!(t.bdot, p.b.velocities());
        let (start, step) = t.grid().unwrap();
        assert_eq!(start, -1.0);
        assert!((step - 0.1).abs() < 1e-15);
    }

    #[test]
    fn schema_violations() {
        assert!(read_nodes("t,a,b\n0,1,2\n".as_bytes()).is_err());
        let e = read_nodes("t,a,adot,b,bdot\n0,1,0,-1,x\n".as_bytes()).unwrap_err();
        assert!(format!("{e:#}").contains("row 2"));
        let t = read_nodes("t,a,adot,b,bdot\n0,1,0,-1,0\n0.1,1,0,-1,0\n0.5,1,0,-1,0\n".as_bytes()).unwrap();
        assert!(t.grid().is_err());
    }
}
