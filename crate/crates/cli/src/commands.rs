use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tfbs_core::analysis::{
    self, solution_errors, spatial_sweep, temporal_sweep, Axis, ConvergenceTable, ErrorNorms,
    MeasureTime, SweepOptions,
};
use tfbs_core::golden::{self, compare, golden_table, Comparison, Tolerances, Verdict};
use tfbs_core::model::{build_problem, ProblemSpec};
use tfbs_core::solver::{self, BoundaryTreatment, Mesh, Scheme};
use tfbs_core::stability::{check_stability, StabilityReport};
use tfbs_core::weights::{BSource, WeightMatrices};

use crate::config::{Format, RunConfig};
use crate::CliError;

fn problem(cfg: &RunConfig, alpha: f64) -> Result<ProblemSpec, CliError> {
    Ok(build_problem(
        cfg.problem_key()?,
        alpha,
        &cfg.problem_options(),
    )?)
}

fn out_dir(cfg: &RunConfig) -> Result<Option<PathBuf>, CliError> {
    match &cfg.out_dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
            Ok(Some(d.clone()))
        }
        None => Ok(None),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn stability_for(
    p: &ProblemSpec,
    m: usize,
    n: usize,
    b_source: BSource,
) -> Result<StabilityReport, CliError> {
    let mesh = Mesh::for_problem(p, m, n)?;
    let w = WeightMatrices::new(m, b_source)?;
    let d = tfbs_core::l1::l1_weights(p.coeffs.alpha, n, mesh.dt())?.d;
    Ok(check_stability(p, &mesh, &w, d)?)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    problem: &'a str,
    alpha: f64,
    scheme: Scheme,
    boundary: BoundaryTreatment,
    #[serde(rename = "M")]
    intervals: usize,
    #[serde(rename = "N")]
    steps: usize,
    h: f64,
    dt: f64,
    d: f64,
    measure: MeasureTime,
    errors: Option<ErrorNorms>,
    l2: Option<f64>,
    l2_rss: Option<f64>,
    linf: Option<f64>,
    stability: Option<StabilityReport>,
    final_level: &'a [f64],
}

pub fn solve(cfg: &RunConfig, history_csv: bool) -> Result<(), CliError> {
    let alpha = cfg.single_alpha()?;
    let (m, n) = cfg.mesh()?;
    let p = problem(cfg, alpha)?;
    let opts = cfg.solver_options();
    let measure = cfg.measure_time.unwrap_or_default();
    let sol = solver::solve(&p, m, n, &opts)?;
    let errors = match p.exact {
        Some(_) => Some(solution_errors(&p, &sol, measure)?),
        None => None,
    };
    let stability = match (cfg.stability_report.unwrap_or(false), opts.scheme) {
        (true, Scheme::Dqm) => Some(stability_for(&p, m, n, opts.b_source)?),
        _ => None,
    };
    let summary = SolveSummary {
        problem: &p.key,
        alpha,
        scheme: opts.scheme,
        boundary: sol.operator.boundary,
        intervals: m,
        steps: n,
        h: sol.mesh.h(),
        dt: sol.mesh.dt(),
        d: sol.l1.d,
        measure,
        errors,
        l2: errors.map(|e| e.l2),
        l2_rss: errors.map(|e| e.l2_rss),
        linf: errors.map(|e| e.linf),
        stability,
        final_level: sol.final_level(),
    };
    print_json(&summary)?;
    if let Some(dir) = out_dir(cfg)? {
        write_json(&dir.join("summary.json"), &summary)?;
        if history_csv {
            let mut w = create(&dir.join("history.csv"))?;
            analysis::write_history_csv(&mut w, &sol.mesh, &sol.history)?;
            w.flush()?;
        }
    } else if history_csv {
        return Err(CliError::Validation("--history-csv needs --out-dir".into()));
    }
    Ok(())
}

fn run_tables(cfg: &RunConfig) -> Result<Vec<ConvergenceTable>, CliError> {
    let schedule = cfg.schedule()?;
    let opts = SweepOptions {
        solver: cfg.solver_options(),
        measure: cfg.measure_time.unwrap_or_default(),
    };
    let mut tables = Vec::new();
    for alpha in cfg.alphas()? {
        let p = problem(cfg, alpha)?;
        let t = match schedule.axis {
            Axis::Spatial => spatial_sweep(&p, &schedule, &opts)?,
            Axis::Temporal => temporal_sweep(&p, &schedule, &opts)?,
        };
        for r in t.rows.iter().filter(|r| r.failure.is_some()) {
            log::warn!(
                "alpha {alpha}: row (M={}, N={}) failed: {}",
                r.intervals,
                r.steps,
                r.failure.as_deref().unwrap_or("")
            );
        }
        tables.push(t);
    }
    Ok(tables)
}

fn reference_for(t: &ConvergenceTable, table: Option<&str>) -> Result<String, CliError> {
    let name = match table {
        Some(n) => n.to_string(),
        None => t
            .schedule
            .as_deref()
            .and_then(|s| golden::table_for_schedule(s, t.scheme))
            .ok_or_else(|| {
                CliError::Validation("cannot infer a reference table; pass --table".into())
            })?
            .to_string(),
    };
    Ok(name)
}

fn compare_all(tables: &[ConvergenceTable], table: Option<&str>) -> Result<Comparison, CliError> {
    let tol = Tolerances::default();
    let mut out = Comparison { cells: Vec::new() };
    for t in tables {
        let name = reference_for(t, table)?;
        let rows = golden_table(&name, t.alpha)?;
        if rows[0].problem != t.problem {
            return Err(CliError::Validation(format!(
                "reference table '{name}' is for '{}', run is for '{}'",
                rows[0].problem, t.problem
            )));
        }
        out = out.merge(compare(t, &rows, &tol));
    }
    Ok(out)
}

fn report_comparison(c: &Comparison, dir: Option<&Path>) -> Result<(), CliError> {
    let verdict = match c.verdict() {
        Verdict::Strict => "strict (values within tolerance)",
        Verdict::Fallback => "fallback (orders within tolerance, values not)",
        Verdict::Fail => "fail (values and orders off)",
    };
    let mut err = io::stderr().lock();
    for v in c.failures() {
        writeln!(
            err,
            "off-tolerance: {} alpha={} level {} {}: reference {}, measured {}",
            v.table,
            v.alpha,
            v.level,
            v.column,
            analysis::sci(v.reference),
            v.measured.map(analysis::sci).unwrap_or_else(|| "-".into())
        )?;
    }
    writeln!(err, "golden comparison: {verdict}")?;
    if let Some(dir) = dir {
        let mut w = create(&dir.join("golden_report.csv"))?;
        golden::write_verdicts_csv(&mut w, c)?;
        w.flush()?;
        write_json(&dir.join("golden_report.json"), c)?;
    }
    Ok(())
}

pub fn convergence(cfg: &RunConfig, compare_golden: bool) -> Result<(), CliError> {
    let tables = run_tables(cfg)?;
    let dir = out_dir(cfg)?;
    match &dir {
        Some(dir) => {
            for f in cfg.formats() {
                match f {
                    Format::Csv => {
                        let mut w = create(&dir.join("convergence.csv"))?;
                        analysis::write_tables_csv(&mut w, &tables)?;
                        w.flush()?;
                    }
                    Format::Json => write_json(&dir.join("convergence.json"), &tables)?,
                }
            }
        }
        None => analysis::write_tables_csv(io::stdout().lock(), &tables)?,
    }
    if compare_golden {
        report_comparison(&compare_all(&tables, None)?, dir.as_deref())?;
    }
    Ok(())
}

pub fn compare_golden(
    input: &Path,
    table: Option<&str>,
    dir: Option<&Path>,
) -> Result<(), CliError> {
    let text =
        fs::read_to_string(input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let tables: Vec<ConvergenceTable> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    report_comparison(&compare_all(&tables, table)?, dir)
}

pub fn stability(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.single_alpha()?;
    let (m, n) = cfg.mesh()?;
    let p = problem(cfg, alpha)?;
    let r = stability_for(&p, m, n, cfg.solver_options().b_source)?;
    let opt = |v: Option<f64>| v.map(analysis::sci).unwrap_or_else(|| "-".into());
    let mut err = io::stderr().lock();
    for (name, value) in [
        ("d", analysis::sci(r.d)),
        ("beta", analysis::sci(r.beta)),
        ("R_X", analysis::sci(r.r_x)),
        ("R_Y", analysis::sci(r.r_y)),
        ("||X||", analysis::sci(r.x_norm)),
        ("||Y||", analysis::sci(r.y_norm)),
        ("||P||", analysis::sci(r.p_norm)),
        ("P bound", analysis::sci(r.p_bound)),
        ("1 + cd", analysis::sci(r.threshold)),
        ("||Q||", analysis::sci(r.q_norm)),
        ("condition", r.condition_ok.to_string()),
        ("bound", opt(r.theoretical_bound)),
        ("||L^-1||", opt(r.empirical_inverse_norm)),
        ("||L^-1|| rows", opt(r.empirical_inverse_norm_replaced)),
    ] {
        writeln!(err, "{name:>14}  {value}")?;
    }
    if !r.condition_ok {
        log::warn!(
            "sufficient condition d·||P|| < 1 + cd does not hold; no uniform bound is implied"
        );
    }
    print_json(&r)?;
    if let Some(dir) = out_dir(cfg)? {
        write_json(&dir.join("stability.json"), &r)?;
    }
    Ok(())
}

fn write_matrix_csv(path: &Path, m: &tfbs_core::numerics::DenseMatrix) -> Result<(), CliError> {
    let mut w = create(path)?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn weights(m: usize, dump: Option<&Path>, regenerate_b: bool) -> Result<(), CliError> {
    let source = if regenerate_b {
        BSource::Regenerated
    } else {
        BSource::Tabulated
    };
    let w = WeightMatrices::new(m, source)?;
    let max_row_sum = |x: &tfbs_core::numerics::DenseMatrix| {
        (0..x.rows())
            .map(|i| x.row(i).iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    print_json(&serde_json::json!({
        "M": m,
        "x_inf_norm": w.x().inf_norm(),
        "y_inf_norm": w.y().inf_norm(),
        "x_max_row_sum": max_row_sum(w.x()),
        "y_max_row_sum": max_row_sum(w.y()),
    }))?;
    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("X.csv"), w.x())?;
        write_matrix_csv(&dir.join("Y.csv"), w.y())?;
    }
    Ok(())
}

pub fn plot_data(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.single_alpha()?;
    let (m, n) = cfg.mesh()?;
    let p = problem(cfg, alpha)?;
    let sol = solver::solve(&p, m, n, &cfg.solver_options())?;
    let dir = out_dir(cfg)?.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let mut curve = create(&dir.join("curve.csv"))?;
    analysis::write_curve_csv(&mut curve, &p, &sol.mesh, &sol.history)?;
    curve.flush()?;
    let mut surface = create(&dir.join("surface.csv"))?;
    analysis::write_surface_csv(&mut surface, &p, &sol.mesh, &sol.history)?;
    surface.flush()?;
    Ok(())
}
