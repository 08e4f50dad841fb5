//! Error norms, observed orders and refinement sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::solver::{solve, Mesh, Scheme, Solution, SolutionHistory, SolverOptions};

/// Error of one solution vector against the exact one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `√(h Σ e²)`
    pub l2: f64,
    /// `√(Σ e²)`: the unscaled root sum of squares. The reference tables
    /// are in this convention.
    pub l2_rss: f64,
    pub linf: f64,
}

impl ErrorNorms {
    pub fn max(self, other: Self) -> Self {
        Self {
            l2: self.l2.max(other.l2),
            l2_rss: self.l2_rss.max(other.l2_rss),
            linf: self.linf.max(other.linf),
        }
    }
}

pub fn error_norms(numerical: &[f64], exact: &[f64], h: f64) -> Result<ErrorNorms> {
    if numerical.len() != exact.len() {
        return Err(Error::ShapeMismatch {
            op: "error_norms",
            left: (numerical.len(), 1),
            right: (exact.len(), 1),
        });
    }
    if !(h > 0.0) {
        return Err(Error::param("h", h, "spacing must be > 0"));
    }
    let (sq, linf) = numerical
        .iter()
        .zip(exact)
        .map(|(u, v)| (u - v).abs())
        .fold((0.0, 0.0f64), |(s, m), e| (s + e * e, m.max(e)));
    Ok(ErrorNorms {
        l2: (h * sq).sqrt(),
        l2_rss: sq.sqrt(),
        linf,
    })
}

/// `log(e₁/e₂) / log(step₁/step₂)`
pub fn order(e_coarse: f64, e_fine: f64, step_coarse: f64, step_fine: f64) -> Result<f64> {
    for (name, v) in [
        ("e_coarse", e_coarse),
        ("e_fine", e_fine),
        ("step_coarse", step_coarse),
        ("step_fine", step_fine),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, v, "must be positive and finite"));
        }
    }
    if step_coarse == step_fine {
        return Err(Error::param("step_fine", step_fine, "steps must differ"));
    }
    Ok((e_coarse / e_fine).ln() / (step_coarse / step_fine).ln())
}

/// When the error is sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureTime {
    /// At `η = T`.
    #[default]
    Final,
    /// Largest value over all time levels, per norm.
    Max,
}

pub fn history_errors(
    p: &ProblemSpec,
    mesh: &Mesh,
    history: &SolutionHistory,
    when: MeasureTime,
) -> Result<ErrorNorms> {
    let exact = p
        .exact
        .as_ref()
        .ok_or_else(|| Error::Config(format!("problem '{}' has no exact solution", p.key)))?;
    let nodes = mesh.nodes();
    let at = |k: usize| -> Result<ErrorNorms> {
        let eta = mesh.eta(k);
        let ex: Vec<f64> = nodes.iter().map(|&s| exact(s, eta)).collect();
        error_norms(history.level(k), &ex, mesh.h())
    };
    match when {
        MeasureTime::Final => at(history.levels() - 1),
        MeasureTime::Max => {
            (1..history.levels()).try_fold(ErrorNorms::default(), |acc, k| Ok(acc.max(at(k)?)))
        }
    }
}

pub fn solution_errors(p: &ProblemSpec, sol: &Solution, when: MeasureTime) -> Result<ErrorNorms> {
    history_errors(p, &sol.mesh, &sol.history, when)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Spatial,
    Temporal,
}

/// Ordered `(M, N)` pairs, each strictly refining the previous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub name: Option<String>,
    pub axis: Axis,
    pub pairs: Vec<(usize, usize)>,
}

pub const SCHEDULE_NAMES: [&str; 5] = ["table2", "table3", "table4", "table5", "fdm-table"];

impl Schedule {
    /// Named refinement schedules. `M = 10·2^m, N = 10^{m+1}` for the
    /// spatial ones, `M = 80, N = 10·2^m` for the temporal ones.
    pub fn named(name: &str) -> Result<Self> {
        let spatial = |rows: u32| (0..rows).map(|m| (10 << m, 10usize.pow(m + 1))).collect();
        let temporal = |rows: u32| (0..rows).map(|m| (80, 10 << m)).collect();
        let (axis, pairs) = match name {
            "table2" | "fdm-table" => (Axis::Spatial, spatial(4)),
            "table4" => (Axis::Spatial, spatial(3)),
            "table3" => (Axis::Temporal, temporal(4)),
            "table5" => (Axis::Temporal, temporal(3)),
            other => return Err(Error::Config(format!("unknown schedule '{other}'"))),
        };
        Ok(Self {
            name: Some(name.to_string()),
            axis,
            pairs,
        })
    }

    /// Axis is temporal when every row shares the same `M`.
    pub fn explicit(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("schedule is empty".into()));
        }
        let axis = if pairs.len() > 1 && pairs.iter().all(|p| p.0 == pairs[0].0) {
            Axis::Temporal
        } else {
            Axis::Spatial
        };
        let s = Self {
            name: None,
            axis,
            pairs,
        };
        s.validate()?;
        Ok(s)
    }

    /// Keep only the first `rows` entries.
    pub fn truncated(mut self, rows: usize) -> Self {
        self.pairs.truncate(rows.max(1));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Config("schedule is empty".into()));
        }
        for w in self.pairs.windows(2) {
            let ((m0, n0), (m1, n1)) = (w[0], w[1]);
            let ok = match self.axis {
                Axis::Spatial => m1 > m0 && n1 >= n0,
                Axis::Temporal => m1 == m0 && n1 > n0,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "schedule is not strictly refining at ({m0},{n0}) -> ({m1},{n1})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub level: usize,
    pub intervals: usize,
    pub steps: usize,
    pub errors: Option<ErrorNorms>,
    pub oc_l2: Option<f64>,
    pub oc_l2_rss: Option<f64>,
    pub oc_linf: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub problem: String,
    pub alpha: f64,
    pub scheme: Scheme,
    pub axis: Axis,
    pub measure: MeasureTime,
    pub schedule: Option<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    pub measure: MeasureTime,
}

fn sweep(
    p: &ProblemSpec,
    schedule: &Schedule,
    axis: Axis,
    opts: &SweepOptions,
) -> Result<ConvergenceTable> {
    schedule.validate()?;
    if p.exact.is_none() {
        return Err(Error::Config(format!(
            "problem '{}' has no exact solution",
            p.key
        )));
    }
    let results: Vec<Result<ErrorNorms>> = schedule
        .pairs
        .par_iter()
        .map(|&(m, n)| {
            let sol = solve(p, m, n, &opts.solver)?;
            solution_errors(p, &sol, opts.measure)
        })
        .collect();

    let step = |m: usize, n: usize| match axis {
        Axis::Spatial => p.length() / m as f64,
        Axis::Temporal => p.horizon / n as f64,
    };
    let mut rows: Vec<TableRow> = Vec::with_capacity(results.len());
    for (level, (&(m, n), res)) in schedule.pairs.iter().zip(results).enumerate() {
        let mut row = TableRow {
            level,
            intervals: m,
            steps: n,
            errors: None,
            oc_l2: None,
            oc_l2_rss: None,
            oc_linf: None,
            failure: None,
        };
        match res {
            Ok(e) => {
                if let Some(prev) = rows.last().filter(|r| r.errors.is_some()) {
                    let pe = prev.errors.unwrap();
                    let (s0, s1) = (step(prev.intervals, prev.steps), step(m, n));
                    row.oc_l2 = order(pe.l2, e.l2, s0, s1).ok();
                    row.oc_l2_rss = order(pe.l2_rss, e.l2_rss, s0, s1).ok();
                    row.oc_linf = order(pe.linf, e.linf, s0, s1).ok();
                }
                row.errors = Some(e);
            }
            Err(e) => row.failure = Some(e.to_string()),
        }
        rows.push(row);
    }
    Ok(ConvergenceTable {
        problem: p.key.clone(),
        alpha: p.coeffs.alpha,
        scheme: opts.solver.scheme,
        axis,
        measure: opts.measure,
        schedule: schedule.name.clone(),
        rows,
    })
}

/// Orders are taken against `h`.
pub fn spatial_sweep(
    p: &ProblemSpec,
    schedule: &Schedule,
    opts: &SweepOptions,
) -> Result<ConvergenceTable> {
    sweep(p, schedule, Axis::Spatial, opts)
}

/// Orders are taken against `Δη`.
pub fn temporal_sweep(
    p: &ProblemSpec,
    schedule: &Schedule,
    opts: &SweepOptions,
) -> Result<ConvergenceTable> {
    sweep(p, schedule, Axis::Temporal, opts)
}

/// Six significant digits, scientific.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

pub const TABLE_COLUMNS: [&str; 14] = [
    "problem",
    "scheme",
    "alpha",
    "level",
    "M",
    "N",
    "l2",
    "oc_l2",
    "l2_rss",
    "oc_l2_rss",
    "linf",
    "oc_linf",
    "measure",
    "status",
];

impl ConvergenceTable {
    pub fn mean_order_linf(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.oc_linf))
    }

    pub fn mean_order_l2_rss(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.oc_l2_rss))
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some())
    }

    fn records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        let measure = match self.measure {
            MeasureTime::Final => "final",
            MeasureTime::Max => "max",
        };
        self.rows.iter().map(move |r| {
            let e = r.errors;
            vec![
                self.problem.clone(),
                self.scheme.to_string(),
                format!("{}", self.alpha),
                r.level.to_string(),
                r.intervals.to_string(),
                r.steps.to_string(),
                opt_sci(e.map(|e| e.l2)),
                opt_sci(r.oc_l2),
                opt_sci(e.map(|e| e.l2_rss)),
                opt_sci(r.oc_l2_rss),
                opt_sci(e.map(|e| e.linf)),
                opt_sci(r.oc_linf),
                measure.to_string(),
                r.failure
                    .clone()
                    .map_or_else(|| "ok".into(), |f| format!("failed: {f}")),
            ]
        })
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Writes any number of tables under one header.
pub fn write_tables_csv<W: Write>(out: W, tables: &[ConvergenceTable]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for t in tables {
        for rec in t.records() {
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `step,node,s,eta,value`
pub fn write_history_csv<W: Write>(out: W, mesh: &Mesh, history: &SolutionHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "node", "s", "eta", "value"])?;
    for (k, level) in history.iter().enumerate() {
        let eta = sci(mesh.eta(k));
        for (i, v) in level.iter().enumerate() {
            w.write_record([
                k.to_string(),
                i.to_string(),
                sci(mesh.node(i)),
                eta.clone(),
                sci(*v),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `s,numerical[,exact]` at the final level.
pub fn write_curve_csv<W: Write>(
    out: W,
    p: &ProblemSpec,
    mesh: &Mesh,
    history: &SolutionHistory,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let eta = mesh.eta(history.levels() - 1);
    match &p.exact {
        Some(_) => w.write_record(["s", "numerical", "exact"])?,
        None => w.write_record(["s", "numerical"])?,
    }
    for (i, v) in history.last().iter().enumerate() {
        let s = mesh.node(i);
        let mut rec = vec![sci(s), sci(*v)];
        if let Some(ex) = &p.exact {
            rec.push(sci(ex(s, eta)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `s,eta,numerical[,exact]` for every node and level.
pub fn write_surface_csv<W: Write>(
    out: W,
    p: &ProblemSpec,
    mesh: &Mesh,
    history: &SolutionHistory,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &p.exact {
        Some(_) => w.write_record(["s", "eta", "numerical", "exact"])?,
        None => w.write_record(["s", "eta", "numerical"])?,
    }
    for (k, level) in history.iter().enumerate() {
        let eta = mesh.eta(k);
        for (i, v) in level.iter().enumerate() {
            let s = mesh.node(i);
            let mut rec = vec![sci(s), sci(eta), sci(*v)];
            if let Some(ex) = &p.exact {
                rec.push(sci(ex(s, eta)));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
