//! Operator assembly and time marching for
//! `L·U^{k+1} = memory(U⁰..U^k) + d·F^{k+1}` with
//! `L = (1 + c·d)·I − (a·d/h²)·Y − (b·d/h)·X`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1::{history_rhs, l1_weights, HistoryForm, L1Weights};
use crate::model::ProblemSpec;
use crate::numerics::{lu_factor, Dd, DdLu, DdMatrix, DenseMatrix, LuFactorization};
use crate::weights::{BSource, WeightMatrices, MIN_INTERVALS};

/// Uniform space-time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    /// Space intervals `M`.
    pub intervals: usize,
    /// Time steps `N`.
    pub steps: usize,
    pub lo: f64,
    pub hi: f64,
    pub horizon: f64,
}

impl Mesh {
    pub fn new(intervals: usize, steps: usize, lo: f64, hi: f64, horizon: f64) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::param(
                "M",
                intervals as f64,
                "need at least 2 intervals",
            ));
        }
        if steps == 0 {
            return Err(Error::param("N", 0.0, "need at least one time step"));
        }
        if !(lo < hi) {
            return Err(Error::param("hi", hi, "domain must be non-empty"));
        }
        if !(horizon > 0.0) {
            return Err(Error::param("horizon", horizon, "horizon must be > 0"));
        }
        Ok(Self {
            intervals,
            steps,
            lo,
            hi,
            horizon,
        })
    }

    pub fn for_problem(p: &ProblemSpec, intervals: usize, steps: usize) -> Result<Self> {
        Self::new(intervals, steps, p.domain_lo, p.domain_hi, p.horizon)
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.intervals as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.hi
        } else {
            self.lo + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.node(i)).collect()
    }

    pub fn eta(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Modified cubic B-spline differential quadrature.
    #[default]
    Dqm,
    /// Second-order central differences.
    Fdm,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Dqm => "dqm",
            Scheme::Fdm => "fdm",
        })
    }
}

/// How the two end nodes are closed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTreatment {
    /// The equation itself is collocated at the end nodes; the boundary
    /// functions only enter through the initial data. This is the closure
    /// that reproduces the published reference tables.
    #[default]
    Collocation,
    /// End rows of `L` replaced by identity rows and the boundary values
    /// written into the right-hand side.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub boundary: BoundaryTreatment,
    #[serde(default)]
    pub history: HistoryForm,
    #[serde(default)]
    pub b_source: BSource,
}

#[derive(Debug, Clone)]
enum Factor {
    Standard(LuFactorization),
    Extended(DdLu),
}

/// Factored time-independent operator.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    pub scheme: Scheme,
    pub boundary: BoundaryTreatment,
    matrix: DenseMatrix,
    interior: DenseMatrix,
    factor: Factor,
}

impl SystemOperator {
    /// The operator actually solved (after any boundary-row replacement).
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// `(1 + c·d)·I − d·P` before boundary-row replacement.
    pub fn interior(&self) -> &DenseMatrix {
        &self.interior
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            Factor::Standard(f) => f.solve(rhs),
            Factor::Extended(f) => f.solve(rhs),
        }
    }

    /// `‖L·u − rhs‖∞`
    pub fn residual(&self, u: &[f64], rhs: &[f64]) -> Result<f64> {
        let lu = self.matrix.matvec(u)?;
        Ok(lu
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn replace_end_rows(l: &mut DdMatrix) {
    let n = l.rows();
    for &i in &[0, n - 1] {
        for j in 0..n {
            l[(i, j)] = if i == j { Dd::ONE } else { Dd::ZERO };
        }
    }
}

/// DQM operator. Assembled and factored in double-double.
pub fn assemble_operator(
    p: &ProblemSpec,
    mesh: &Mesh,
    w: &WeightMatrices,
    d: f64,
    boundary: BoundaryTreatment,
) -> Result<SystemOperator> {
    if w.intervals() != mesh.intervals {
        return Err(Error::ShapeMismatch {
            op: "assemble_operator",
            left: (mesh.intervals + 1, mesh.intervals + 1),
            right: (w.intervals() + 1, w.intervals() + 1),
        });
    }
    let n = mesh.intervals + 1;
    let c = &p.coeffs;
    let d = Dd::new(d);
    let inv_h = Dd::new(mesh.intervals as f64) / Dd::new(mesh.hi - mesh.lo);
    let diag = Dd::ONE + Dd::new(c.c) * d;
    let identity = DdMatrix::identity(n);
    let mut l = DdMatrix::combine(&[
        (diag, &identity),
        (-(Dd::new(c.a) * d * inv_h * inv_h), w.y_ext()),
        (-(Dd::new(c.b) * d * inv_h), w.x_ext()),
    ]);
    let interior = l.to_f64();
    if boundary == BoundaryTreatment::Dirichlet {
        replace_end_rows(&mut l);
    }
    let factor = DdLu::factor(&l)?;
    Ok(SystemOperator {
        scheme: Scheme::Dqm,
        boundary,
        matrix: l.to_f64(),
        interior,
        factor: Factor::Extended(factor),
    })
}

/// Central-difference operator; rows `1..M` read
/// `[−d(a/h² − b/2h), 1 + cd + 2ad/h², −d(a/h² + b/2h)]`. End rows are
/// always Dirichlet.
pub fn assemble_operator_fdm(p: &ProblemSpec, mesh: &Mesh, d: f64) -> Result<SystemOperator> {
    let m = mesh.intervals;
    let h = mesh.h();
    let c = &p.coeffs;
    let mut l = DenseMatrix::identity(m + 1).scale(1.0 + c.c * d);
    let diff = c.a / (h * h);
    let adv = c.b / (2.0 * h);
    for i in 1..m {
        l[(i, i - 1)] -= d * (diff - adv);
        l[(i, i)] += d * 2.0 * diff;
        l[(i, i + 1)] -= d * (diff + adv);
    }
    let interior = l.clone();
    for &i in &[0, m] {
        l.row_mut(i).fill(0.0);
        l[(i, i)] = 1.0;
    }
    let factor = lu_factor(&l)?;
    Ok(SystemOperator {
        scheme: Scheme::Fdm,
        boundary: BoundaryTreatment::Dirichlet,
        matrix: l,
        interior,
        factor: Factor::Standard(factor),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HistoryMeta {
    pub problem: String,
    pub mesh: Option<Mesh>,
    pub alpha: f64,
    pub scheme: Scheme,
}

/// All time levels `U⁰..U^k`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionHistory {
    width: usize,
    values: Vec<f64>,
    pub meta: HistoryMeta,
}

impl SolutionHistory {
    /// Empty history for vectors of `intervals + 1` entries.
    pub fn new(intervals: usize) -> Self {
        Self {
            width: intervals + 1,
            values: Vec::new(),
            meta: HistoryMeta::default(),
        }
    }

    pub fn with_capacity(intervals: usize, levels: usize) -> Self {
        let mut h = Self::new(intervals);
        h.values.reserve(levels * h.width);
        h
    }

    pub fn push(&mut self, level: &[f64]) -> Result<()> {
        if level.len() != self.width {
            return Err(Error::ShapeMismatch {
                op: "history push",
                left: (self.width, 1),
                right: (level.len(), 1),
            });
        }
        self.values.extend_from_slice(level);
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn last(&self) -> &[f64] {
        self.level(self.levels() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.width)
    }
}

/// Runs all `N` steps. Source terms are sampled at `η_{k+1}`.
pub fn march(
    p: &ProblemSpec,
    mesh: &Mesh,
    op: &SystemOperator,
    w: &L1Weights,
    form: HistoryForm,
) -> Result<SolutionHistory> {
    if op.dim() != mesh.intervals + 1 || w.steps() < mesh.steps {
        return Err(Error::ShapeMismatch {
            op: "march",
            left: (mesh.intervals + 1, mesh.steps),
            right: (op.dim(), w.steps()),
        });
    }
    let nodes = mesh.nodes();
    let m = mesh.intervals;
    let mut history = SolutionHistory::with_capacity(m, mesh.steps + 1);
    let u0: Vec<f64> = nodes.iter().map(|&s| (p.initial)(s)).collect();
    history.push(&u0)?;

    for k in 0..mesh.steps {
        let eta = mesh.eta(k + 1);
        let mut rhs = history_rhs(&history, w, k, form)?;
        for (r, &s) in rhs.iter_mut().zip(&nodes) {
            *r += w.d * (p.source)(s, eta);
        }
        if op.boundary == BoundaryTreatment::Dirichlet {
            rhs[0] = (p.left_bc)(eta);
            rhs[m] = (p.right_bc)(eta);
        }
        let mut next = op.solve(&rhs)?;
        if op.boundary == BoundaryTreatment::Dirichlet {
            // identity rows: exact up to pivoting round-off, so pin them
            next[0] = rhs[0];
            next[m] = rhs[m];
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k + 1 });
        }
        history.push(&next)?;
    }
    history.meta = HistoryMeta {
        problem: p.key.clone(),
        mesh: Some(*mesh),
        alpha: p.coeffs.alpha,
        scheme: op.scheme,
    };
    Ok(history)
}

/// Everything produced by one run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Mesh,
    pub l1: L1Weights,
    pub operator: SystemOperator,
    pub history: SolutionHistory,
}

impl Solution {
    pub fn final_level(&self) -> &[f64] {
        self.history.last()
    }
}

/// Builds weights and operator, then marches.
pub fn solve(
    p: &ProblemSpec,
    intervals: usize,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Solution> {
    let mesh = Mesh::for_problem(p, intervals, steps)?;
    let l1 = l1_weights(p.coeffs.alpha, steps, mesh.dt())?;
    let operator = match opts.scheme {
        Scheme::Dqm => {
            if intervals < MIN_INTERVALS {
                return Err(Error::param("M", intervals as f64, "DQM needs M >= 8"));
            }
            let w = WeightMatrices::new(intervals, opts.b_source)?;
            let c = &p.coeffs;
            let h = mesh.h();
            let p_norm = w
                .y()
                .scale(c.a / (h * h))
                .add_scaled(c.b / h, w.x())?
                .inf_norm();
            if l1.d * p_norm >= 1.0 + c.c * l1.d {
                log::warn!(
                    "sufficient stability condition fails: d·‖P‖∞ = {:.3e} >= 1 + c·d = {:.6} (M = {}, N = {}, alpha = {})",
                    l1.d * p_norm,
                    1.0 + c.c * l1.d,
                    intervals,
                    steps,
                    c.alpha
                );
            }
            assemble_operator(p, &mesh, &w, l1.d, opts.boundary)?
        }
        Scheme::Fdm => assemble_operator_fdm(p, &mesh, l1.d)?,
    };
    let history = march(p, &mesh, &operator, &l1, opts.history)?;
    Ok(Solution {
        mesh,
        l1,
        operator,
        history,
    })
}
