//! Differential-quadrature weights from a boundary-modified cubic B-spline
//! basis.
//!
//! Requiring the quadrature rule `u'(sᵢ) ≈ Σⱼ X[i][j]·u(sⱼ)` to be exact on
//! every basis function `C̃ₖ` gives `A·Xᵀ = B` with `A[k][j] = C̃ₖ(sⱼ)` and
//! `B[k][i] = C̃ₖ'(sᵢ)`. Second-derivative weights are `Y = X·X`. Both are
//! kept at unit spacing; the operator applies `1/h` and `1/h²`.
//!
//! `A` and `B` have rational entries and are built exactly; `X` and `Y` are
//! computed in double-double and rounded to `f64` for the public view.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matmul, Dd, DdLu, DdMatrix, DenseMatrix};

/// Smallest supported number of intervals: four modified rows per side.
pub const MIN_INTERVALS: usize = 8;

type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// Standard cubic B-spline `Cⱼ` centred on `sⱼ = origin + j·h`, scaled so
/// its nodal values are `(1, 4, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBSpline {
    pub j: i64,
    pub h: f64,
    pub origin: f64,
}

impl CubicBSpline {
    pub fn new(j: i64, h: f64, origin: f64) -> Self {
        Self { j, h, origin }
    }

    fn local(&self, s: f64) -> f64 {
        (s - self.origin) / self.h - self.j as f64
    }

    pub fn value(&self, s: f64) -> f64 {
        let t = self.local(s);
        match t {
            t if (-2.0..-1.0).contains(&t) => (t + 2.0).powi(3),
            t if (-1.0..0.0).contains(&t) => (t + 2.0).powi(3) - 4.0 * (t + 1.0).powi(3),
            t if (0.0..1.0).contains(&t) => (2.0 - t).powi(3) - 4.0 * (1.0 - t).powi(3),
            t if (1.0..2.0).contains(&t) => (2.0 - t).powi(3),
            _ => 0.0,
        }
    }

    pub fn first_derivative(&self, s: f64) -> f64 {
        let t = self.local(s);
        let d = match t {
            t if (-2.0..-1.0).contains(&t) => 3.0 * (t + 2.0).powi(2),
            t if (-1.0..0.0).contains(&t) => 3.0 * (t + 2.0).powi(2) - 12.0 * (t + 1.0).powi(2),
            t if (0.0..1.0).contains(&t) => -3.0 * (2.0 - t).powi(2) + 12.0 * (1.0 - t).powi(2),
            t if (1.0..2.0).contains(&t) => -3.0 * (2.0 - t).powi(2),
            _ => 0.0,
        };
        d / self.h
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let t = self.local(s);
        let d = match t {
            t if (-2.0..-1.0).contains(&t) => 6.0 * (t + 2.0),
            t if (-1.0..0.0).contains(&t) => 6.0 * (t + 2.0) - 24.0 * (t + 1.0),
            t if (0.0..1.0).contains(&t) => 6.0 * (2.0 - t) - 24.0 * (1.0 - t),
            t if (1.0..2.0).contains(&t) => 6.0 * (2.0 - t),
            _ => 0.0,
        };
        d / (self.h * self.h)
    }
}

/// `C̃ₖ` as a combination of standard splines: `(spline index, weight)`.
///
/// The third left-boundary function uses `C₋₁, C₀, C₁` with weights
/// `88/37, −21/37, −4/37`, the mirror image of its right-boundary partner.
pub fn modified_terms(k: usize, m: usize) -> Vec<(i64, Q)> {
    let left = |k: usize| -> Vec<(i64, Q)> {
        match k {
            0 => vec![(0, q(1, 1)), (-1, q(4, 1))],
            1 => vec![(1, q(1, 1)), (-1, q(-7, 2)), (0, q(5, 8))],
            2 => vec![
                (2, q(1, 1)),
                (-1, q(88, 37)),
                (0, q(-21, 37)),
                (1, q(-4, 37)),
            ],
            3 => vec![(3, q(1, 1)), (-1, q(-1, 1)), (0, q(1, 4)), (2, q(-1, 4))],
            j => vec![(j as i64, q(1, 1))],
        }
    };
    if k <= m / 2 {
        left(k)
    } else {
        let mm = m as i64;
        left(m - k).into_iter().map(|(i, w)| (mm - i, w)).collect()
    }
}

/// `C̃ⱼ(s)` on the mesh `sᵢ = i·h`, `i = 0..=m`.
pub fn modified_basis_eval(j: usize, s: f64, m: usize, h: f64) -> f64 {
    modified_terms(j, m)
        .iter()
        .map(|&(i, w)| q_to_f64(w) * CubicBSpline::new(i, h, 0.0).value(s))
        .sum()
}

pub fn modified_basis_derivative(j: usize, s: f64, m: usize, h: f64) -> f64 {
    modified_terms(j, m)
        .iter()
        .map(|&(i, w)| q_to_f64(w) * CubicBSpline::new(i, h, 0.0).first_derivative(s))
        .sum()
}

fn q_to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

fn q_to_dd(v: Q) -> Dd {
    Dd::ratio(*v.numer(), *v.denom())
}

/// Exact nodal value `Cⱼ(sᵢ)` at unit spacing.
fn node_value(j: i64, i: i64) -> Q {
    match (i - j).abs() {
        0 => q(4, 1),
        1 => q(1, 1),
        _ => q(0, 1),
    }
}

/// Exact nodal derivative `Cⱼ'(sᵢ)` at unit spacing.
fn node_slope(j: i64, i: i64) -> Q {
    match i - j {
        -1 => q(3, 1),
        1 => q(-3, 1),
        _ => q(0, 1),
    }
}

pub type RationalMatrix = Vec<Vec<Q>>;

fn check_size(m: usize) -> Result<()> {
    if m < MIN_INTERVALS {
        return Err(Error::param(
            "M",
            m as f64,
            "modified spline weights need at least 8 intervals",
        ));
    }
    Ok(())
}

fn mirrored(m: usize, top: &[&[Q]], interior: [Q; 3], odd: bool) -> RationalMatrix {
    let n = m + 1;
    let mut out = vec![vec![q(0, 1); n]; n];
    for (k, row) in top.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[k][j] = v;
            out[m - k][m - j] = if odd { -v } else { v };
        }
    }
    for (i, row) in out.iter_mut().enumerate().take(m - 3).skip(4) {
        row[i - 1] = interior[0];
        row[i] = interior[1];
        row[i + 1] = interior[2];
    }
    out
}

/// The nodal-value matrix `A` entry by entry as tabulated.
pub fn tabulated_a(m: usize) -> Result<RationalMatrix> {
    check_size(m)?;
    let top: [&[Q]; 4] = [
        &[q(8, 1), q(1, 1)],
        &[q(0, 1), q(37, 8), q(1, 1)],
        &[q(0, 1), q(0, 1), q(144, 37), q(1, 1)],
        &[q(0, 1), q(0, 1), q(0, 1), q(15, 4), q(1, 1)],
    ];
    Ok(mirrored(m, &top, [q(1, 1), q(4, 1), q(1, 1)], false))
}

/// The nodal-derivative matrix `B` entry by entry as tabulated.
pub fn tabulated_b(m: usize) -> Result<RationalMatrix> {
    check_size(m)?;
    let top: [&[Q]; 4] = [
        &[q(-12, 1), q(-3, 1)],
        &[q(27, 2), q(-15, 8), q(-3, 1)],
        &[q(-276, 37), q(174, 37), q(12, 37), q(-3, 1)],
        &[q(3, 1), q(-3, 2), q(3, 1), q(3, 4), q(-3, 1)],
    ];
    Ok(mirrored(m, &top, [q(3, 1), q(0, 1), q(-3, 1)], true))
}

fn from_basis(m: usize, nodal: fn(i64, i64) -> Q) -> Result<RationalMatrix> {
    check_size(m)?;
    Ok((0..=m)
        .map(|k| {
            let terms = modified_terms(k, m);
            (0..=m as i64)
                .map(|i| terms.iter().map(|&(j, w)| w * nodal(j, i)).sum())
                .collect()
        })
        .collect())
}

/// `A` regenerated from the modified basis: `A[k][i] = C̃ₖ(sᵢ)`.
pub fn a_from_basis(m: usize) -> Result<RationalMatrix> {
    from_basis(m, node_value)
}

/// `B` regenerated from the modified basis: `B[k][i] = C̃ₖ'(sᵢ)`.
pub fn b_from_basis(m: usize) -> Result<RationalMatrix> {
    from_basis(m, node_slope)
}

fn to_dense(r: &RationalMatrix) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = r
        .iter()
        .map(|row| row.iter().map(|&v| q_to_f64(v)).collect())
        .collect();
    DenseMatrix::from_rows(&rows).expect("rational entries are finite")
}

fn to_dd(r: &RationalMatrix) -> DdMatrix {
    let n = r.len();
    let mut out = DdMatrix::zeros(n, n);
    for (i, row) in r.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[(i, j)] = q_to_dd(v);
        }
    }
    out
}

pub fn assemble_a(m: usize) -> Result<DenseMatrix> {
    Ok(to_dense(&tabulated_a(m)?))
}

pub fn assemble_b(m: usize) -> Result<DenseMatrix> {
    Ok(to_dense(&tabulated_b(m)?))
}

/// Which `B` feeds the weight computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BSource {
    /// Entries as tabulated.
    #[default]
    Tabulated,
    /// Entries recomputed from the modified-basis derivatives at the nodes.
    Regenerated,
}

fn x_dd(m: usize, source: BSource) -> Result<DdMatrix> {
    let a = to_dd(&tabulated_a(m)?);
    let b = match source {
        BSource::Tabulated => tabulated_b(m)?,
        BSource::Regenerated => b_from_basis(m)?,
    };
    Ok(DdLu::factor(&a)?.solve_matrix(&to_dd(&b))?.transpose())
}

/// Unit-spacing first-derivative weights `X = (A⁻¹B)ᵀ`.
pub fn compute_x(m: usize) -> Result<DenseMatrix> {
    Ok(x_dd(m, BSource::Tabulated)?.to_f64())
}

/// Unit-spacing second-derivative weights `Y = X·X`.
pub fn compute_y(x: &DenseMatrix) -> Result<DenseMatrix> {
    if !x.is_square() {
        return Err(Error::ShapeMismatch {
            op: "compute_y",
            left: x.shape(),
            right: x.shape(),
        });
    }
    matmul(x, x)
}

/// `X` and `Y` for `m` intervals at unit spacing.
#[derive(Debug, Clone)]
pub struct WeightMatrices {
    m: usize,
    x: DenseMatrix,
    y: DenseMatrix,
    x_ext: DdMatrix,
    y_ext: DdMatrix,
}

impl WeightMatrices {
    pub fn new(m: usize, source: BSource) -> Result<Self> {
        let x_ext = x_dd(m, source)?;
        let y_ext = x_ext.matmul(&x_ext)?;
        Ok(Self {
            m,
            x: x_ext.to_f64(),
            y: y_ext.to_f64(),
            x_ext,
            y_ext,
        })
    }

    /// Number of intervals; matrices are `(m+1)×(m+1)`.
    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub(crate) fn x_ext(&self) -> &DdMatrix {
        &self.x_ext
    }

    pub(crate) fn y_ext(&self) -> &DdMatrix {
        &self.y_ext
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(m: usize) -> Vec<f64> {
        (0..=m).map(|i| i as f64).collect()
    }

    #[test]
    fn spline_node_table() {
        for h in [1.0, 0.1, 0.025] {
            let c = CubicBSpline::new(3, h, 0.0);
            let at = |k: i64| (3 + k) as f64 * h;
            let vals: Vec<f64> = (-2..=2).map(|k| c.value(at(k))).collect();
            let d1: Vec<f64> = (-2..=2).map(|k| c.first_derivative(at(k)) * h).collect();
            let d2: Vec<f64> = (-2..=2)
                .map(|k| c.second_derivative(at(k)) * h * h)
                .collect();
            let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
            assert!(close(&vals, &[0.0, 1.0, 4.0, 1.0, 0.0]), "{vals:?}");
            assert!(close(&d1, &[0.0, 3.0, 0.0, -3.0, 0.0]), "{d1:?}");
            assert!(close(&d2, &[0.0, 6.0, -12.0, 6.0, 0.0]), "{d2:?}");
        }
    }

    #[test]
    fn spline_is_c2_at_knots() {
        let c = CubicBSpline::new(0, 1.0, 0.0);
        let e = 1e-7;
        for knot in [-1.0, 0.0, 1.0] {
            assert!((c.value(knot - e) - c.value(knot + e)).abs() < 1e-5);
            assert!((c.first_derivative(knot - e) - c.first_derivative(knot + e)).abs() < 1e-5);
            assert!((c.second_derivative(knot - e) - c.second_derivative(knot + e)).abs() < 1e-5);
        }
    }

    #[test]
    fn a_corner_entries() {
        let a = assemble_a(12).unwrap();
        assert_eq!((a[(0, 0)], a[(0, 1)]), (8.0, 1.0));
        assert_eq!((a[(5, 4)], a[(5, 5)], a[(5, 6)]), (1.0, 4.0, 1.0));
        assert_eq!((a[(12, 12)], a[(12, 11)]), (8.0, 1.0));
        assert_eq!(a[(1, 1)], 37.0 / 8.0);
        assert_eq!(a[(9, 8)], 1.0);
        assert_eq!(a[(9, 9)], 15.0 / 4.0);
    }

    #[test]
    fn b_corner_entries() {
        let b = assemble_b(12).unwrap();
        assert_eq!((b[(0, 0)], b[(0, 1)]), (-12.0, -3.0));
        assert_eq!((b[(6, 5)], b[(6, 6)], b[(6, 7)]), (3.0, 0.0, -3.0));
        assert_eq!((b[(12, 12)], b[(12, 11)]), (12.0, 3.0));
        // Mirrored third row from the bottom.
        let row: Vec<f64> = (8..=12).map(|j| b[(9, j)]).collect();
        assert_eq!(row, vec![3.0, -0.75, -3.0, 1.5, -3.0]);
    }

    #[test]
    fn small_meshes_rejected() {
        assert!(assemble_a(7).is_err());
        assert!(assemble_b(4).is_err());
        assert!(WeightMatrices::new(6, BSource::Tabulated).is_err());
    }

    #[test]
    fn modified_basis_nodal_values() {
        let m = 12;
        assert!((modified_basis_eval(0, 0.0, m, 1.0) - 8.0).abs() < 1e-12);
        assert!((modified_basis_eval(1, 1.0, m, 1.0) - 37.0 / 8.0).abs() < 1e-12);
        let interior: Vec<f64> = (5..=7)
            .map(|i| modified_basis_eval(6, i as f64, m, 1.0))
            .collect();
        assert_eq!(interior, vec![1.0, 4.0, 1.0]);
    }

    #[test]
    fn tabulated_matrices_match_basis_exactly() {
        for m in [8, 12, 20, 41] {
            assert_eq!(
                tabulated_a(m).unwrap(),
                a_from_basis(m).unwrap(),
                "A, M = {m}"
            );
            assert_eq!(
                tabulated_b(m).unwrap(),
                b_from_basis(m).unwrap(),
                "B, M = {m}"
            );
        }
    }

    #[test]
    fn boundary_rows_match_float_basis() {
        for m in [12, 20] {
            let a = assemble_a(m).unwrap();
            let b = assemble_b(m).unwrap();
            for k in (0..4).chain(m - 3..=m) {
                for i in 0..=m {
                    let s = i as f64;
                    assert!((a[(k, i)] - modified_basis_eval(k, s, m, 1.0)).abs() < 1e-12);
                    assert!((b[(k, i)] - modified_basis_derivative(k, s, m, 1.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn persymmetry() {
        let a = assemble_a(16).unwrap();
        let b = assemble_b(16).unwrap();
        assert_eq!(a.reversed(), a);
        assert_eq!(b.reversed(), b.scale(-1.0));
    }

    #[test]
    fn x_row_sums_and_linears() {
        let x = compute_x(12).unwrap();
        let ones = x.matvec(&[1.0; 13]).unwrap();
        assert!(ones.iter().all(|v| v.abs() < 1e-10));
        let d = x.matvec(&nodes(12)).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-9));
        let sq: Vec<f64> = nodes(12).iter().map(|s| s * s).collect();
        let d = x.matvec(&sq).unwrap();
        assert!(d
            .iter()
            .zip(nodes(12))
            .all(|(v, s)| (v - 2.0 * s).abs() < 1e-8));
    }

    #[test]
    fn y_second_derivatives() {
        let x = compute_x(12).unwrap();
        let y = compute_y(&x).unwrap();
        assert!(y.matvec(&[1.0; 13]).unwrap().iter().all(|v| v.abs() < 1e-9));
        let sq: Vec<f64> = nodes(12).iter().map(|s| s * s).collect();
        assert!(y
            .matvec(&sq)
            .unwrap()
            .iter()
            .all(|v| (v - 2.0).abs() < 1e-7));
        let cube: Vec<f64> = nodes(12).iter().map(|s| s * s * s).collect();
        let d = y.matvec(&cube).unwrap();
        assert!(d
            .iter()
            .zip(nodes(12))
            .all(|(v, s)| (v - 6.0 * s).abs() < 1e-6));
    }

    #[test]
    fn a_x_transpose_equals_b() {
        let a = assemble_a(12).unwrap();
        let b = assemble_b(12).unwrap();
        let ax = matmul(&a, &compute_x(12).unwrap().transpose()).unwrap();
        let scale = a.inf_norm() * compute_x(12).unwrap().inf_norm() + b.inf_norm();
        assert!(ax.max_abs_diff(&b) <= 1e-10 * scale);
    }

    #[test]
    fn regenerated_b_gives_same_weights() {
        let p = WeightMatrices::new(20, BSource::Tabulated).unwrap();
        let r = WeightMatrices::new(20, BSource::Regenerated).unwrap();
        assert_eq!(p.x(), r.x());
    }

    #[test]
    fn y_is_not_symmetric_to_rounding() {
        let w = WeightMatrices::new(10, BSource::Tabulated).unwrap();
        let y64 = compute_y(w.x()).unwrap();
        assert!(w.y().max_abs_diff(&y64) < 1e-12);
        assert!(compute_y(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
