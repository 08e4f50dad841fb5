//! Sufficient stability condition for the implicit operator.
//!
//! With `P = (a/h²)Y + (b/h)X` the operator is `L = (1+cd)·(I − Q)`,
//! `Q = d/(1+cd)·P`. If `d‖P‖∞ < 1+cd` the Neumann series for `(I − Q)⁻¹`
//! converges and `‖L⁻¹‖∞ ≤ 1/((1+cd) − d‖P‖∞)`. `‖P‖∞` itself is bounded
//! through Varah's estimate on `Aᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::numerics::{lu_factor, matmul, DenseMatrix};
use crate::solver::{assemble_operator, BoundaryTreatment, Mesh, SystemOperator};
use crate::weights::{assemble_a, assemble_b, WeightMatrices};

/// Empirical inverses are only formed up to this many intervals.
pub const EMPIRICAL_MAX_INTERVALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarahConstants {
    pub beta: f64,
    pub r_x: f64,
    pub r_y: f64,
}

/// `β` = smallest column dominance of `A`, `R_X = ‖Bᵀ‖∞/β`, `R_Y = R_X²`.
pub fn varah_constants(a: &DenseMatrix, b: &DenseMatrix) -> Result<VarahConstants> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op: "varah_constants",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = a.rows();
    let beta = (0..n)
        .map(|k| {
            let off: f64 = (0..n).filter(|&l| l != k).map(|l| a[(l, k)].abs()).sum();
            a[(k, k)].abs() - off
        })
        .fold(f64::INFINITY, f64::min);
    if !(beta > 0.0) {
        return Err(Error::DominanceLost { beta });
    }
    let r_x = b.one_norm() / beta;
    Ok(VarahConstants {
        beta,
        r_x,
        r_y: r_x * r_x,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub alpha: f64,
    pub intervals: usize,
    pub steps: usize,
    pub d: f64,
    pub beta: f64,
    pub r_x: f64,
    pub r_y: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub p_norm: f64,
    /// `(|a|/h²)·R_Y + (|b|/h)·R_X`
    pub p_bound: f64,
    pub threshold: f64,
    pub q_norm: f64,
    pub condition_ok: bool,
    pub theoretical_bound: Option<f64>,
    /// `‖L⁻¹‖∞` of the operator before boundary-row replacement.
    pub empirical_inverse_norm: Option<f64>,
    /// `‖L⁻¹‖∞` after boundary-row replacement.
    pub empirical_inverse_norm_replaced: Option<f64>,
}

impl StabilityReport {
    /// `None` when there is nothing to check.
    pub fn bound_holds(&self) -> Option<bool> {
        match (self.theoretical_bound, self.empirical_inverse_norm) {
            (Some(t), Some(e)) => Some(e <= t * (1.0 + 1e-12)),
            _ => None,
        }
    }

    pub fn lemma_holds(&self) -> bool {
        let slack = 1.0 + 1e-12;
        self.x_norm <= self.r_x * slack
            && self.y_norm <= self.r_y * slack
            && self.p_norm <= self.p_bound * slack
    }
}

/// `P = (a/h²)Y + (b/h)X` in physical scaling.
pub fn p_matrix(p: &ProblemSpec, mesh: &Mesh, w: &WeightMatrices) -> Result<DenseMatrix> {
    let h = mesh.h();
    w.y()
        .scale(p.coeffs.a / (h * h))
        .add_scaled(p.coeffs.b / h, w.x())
}

/// `Q = d/(1+cd)·P`.
pub fn q_matrix(p: &ProblemSpec, mesh: &Mesh, w: &WeightMatrices, d: f64) -> Result<DenseMatrix> {
    Ok(p_matrix(p, mesh, w)?.scale(d / (1.0 + p.coeffs.c * d)))
}

fn inverse_norm(op: &SystemOperator) -> Result<f64> {
    let n = op.dim();
    let mut row_sums = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.solve(&e)?;
        e[j] = 0.0;
        for (s, v) in row_sums.iter_mut().zip(col) {
            *s += v.abs();
        }
    }
    Ok(row_sums.into_iter().fold(0.0, f64::max))
}

pub fn check_stability(
    p: &ProblemSpec,
    mesh: &Mesh,
    w: &WeightMatrices,
    d: f64,
) -> Result<StabilityReport> {
    let m = mesh.intervals;
    let h = mesh.h();
    let c = &p.coeffs;
    let v = varah_constants(&assemble_a(m)?, &assemble_b(m)?)?;
    let p_norm = p_matrix(p, mesh, w)?.inf_norm();
    let threshold = 1.0 + c.c * d;
    let condition_ok = d * p_norm < threshold;
    let (empirical, replaced) = if m <= EMPIRICAL_MAX_INTERVALS {
        let pre = assemble_operator(p, mesh, w, d, BoundaryTreatment::Collocation)?;
        let post = assemble_operator(p, mesh, w, d, BoundaryTreatment::Dirichlet)?;
        (Some(inverse_norm(&pre)?), Some(inverse_norm(&post)?))
    } else {
        (None, None)
    };
    Ok(StabilityReport {
        alpha: c.alpha,
        intervals: m,
        steps: mesh.steps,
        d,
        beta: v.beta,
        r_x: v.r_x,
        r_y: v.r_y,
        x_norm: w.x().inf_norm(),
        y_norm: w.y().inf_norm(),
        p_norm,
        p_bound: c.a.abs() / (h * h) * v.r_y + c.b.abs() / h * v.r_x,
        threshold,
        q_norm: d * p_norm / threshold,
        condition_ok,
        theoretical_bound: condition_ok.then(|| 1.0 / (threshold - d * p_norm)),
        empirical_inverse_norm: empirical,
        empirical_inverse_norm_replaced: replaced,
    })
}

/// `‖(I − Q)⁻¹ − Σ_{k=0}^{n} Q^k‖∞`.
pub fn neumann_partial_sum_check(q: &DenseMatrix, n_terms: usize) -> Result<f64> {
    let norm = q.inf_norm();
    if !q.is_square() {
        return Err(Error::ShapeMismatch {
            op: "neumann_partial_sum_check",
            left: q.shape(),
            right: q.shape(),
        });
    }
    if norm >= 1.0 {
        return Err(Error::param("‖Q‖∞", norm, "Neumann series needs ‖Q‖∞ < 1"));
    }
    let n = q.rows();
    let identity = DenseMatrix::identity(n);
    let inv = lu_factor(&identity.add_scaled(-1.0, q)?)?.inverse()?;
    let mut sum = identity.clone();
    let mut power = identity;
    for _ in 0..n_terms {
        power = matmul(&power, q)?;
        sum = sum.add_scaled(1.0, &power)?;
    }
    Ok(inv.add_scaled(-1.0, &sum)?.inf_norm())
}
