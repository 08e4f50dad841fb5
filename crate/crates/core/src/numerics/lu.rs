use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot below `PIVOT_TOL · ‖M‖∞` is singular.
const PIVOT_TOL: f64 = 1e-14;

/// `P·M = L·U` with partial pivoting; `L` unit lower and `U` upper share
/// storage.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactorization> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            op: "lu_factor",
            left: m.shape(),
            right: (m.cols(), m.rows()),
        });
    }
    let n = m.rows();
    let threshold = PIVOT_TOL * m.inf_norm();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;

    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if pivot <= threshold {
            return Err(Error::Singular {
                column: k,
                pivot,
                threshold,
            });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    Ok(LuFactorization { lu, perm, sign })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn determinant(&self) -> f64 {
        (0..self.dim()).map(|i| self.lu[(i, i)]).product::<f64>() * self.sign
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::ShapeMismatch {
                op: "solve",
                left: (n, n),
                right: (rhs.len(), 1),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Solves `M·Z = rhs` column by column.
    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.dim();
        if rhs.rows() != n {
            return Err(Error::ShapeMismatch {
                op: "solve_matrix",
                left: (n, n),
                right: rhs.shape(),
            });
        }
        let mut out = DenseMatrix::zeros(n, rhs.cols());
        let mut col = vec![0.0; n];
        for j in 0..rhs.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rhs[(i, j)];
            }
            let x = self.solve(&col)?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        self.solve_matrix(&DenseMatrix::identity(self.dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matmul;
    use proptest::prelude::*;

    #[test]
    fn identity_solve_is_identity_map() {
        let f = lu_factor(&DenseMatrix::identity(4)).unwrap();
        let v = vec![1.0, -2.0, 3.5, 0.25];
        assert_eq!(f.solve(&v).unwrap(), v);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = lu_factor(&m).unwrap().solve(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_singular() {
        assert!(matches!(
            lu_factor(&DenseMatrix::zeros(3, 3)),
            Err(Error::Singular { column: 0, .. })
        ));
    }

    #[test]
    fn rank_deficient_is_singular() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(lu_factor(&m).is_err());
    }

    #[test]
    fn wrong_rhs_length() {
        let f = lu_factor(&DenseMatrix::identity(3)).unwrap();
        assert!(f.solve(&[1.0, 2.0]).is_err());
        assert!(f.solve_matrix(&DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn non_square_rejected() {
        assert!(lu_factor(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn determinant_with_pivoting() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = lu_factor(&m).unwrap();
        assert_eq!(f.sign(), -1.0);
        assert_eq!(f.determinant(), -1.0);
    }

    fn well_conditioned(n: usize, entries: Vec<f64>) -> DenseMatrix {
        // Random entries in [-1, 1] plus a dominant diagonal.
        let mut m = DenseMatrix::from_vec(n, n, entries).unwrap();
        for i in 0..n {
            m[(i, i)] += n as f64;
        }
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn solve_round_trip_20x20(
            entries in prop::collection::vec(-1.0f64..1.0, 400),
            rhs in prop::collection::vec(-10.0f64..10.0, 20),
        ) {
            let m = well_conditioned(20, entries);
            let x = lu_factor(&m).unwrap().solve(&rhs).unwrap();
            let back = m.matvec(&x).unwrap();
            let err = back.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = m.inf_norm() * crate::numerics::inf_norm_vec(&x)
                + crate::numerics::inf_norm_vec(&rhs);
            prop_assert!(err <= 1e-10 * scale);
        }

        #[test]
        fn reconstruction(entries in prop::collection::vec(-1.0f64..1.0, 64)) {
            let m = DenseMatrix::from_vec(8, 8, entries).unwrap();
            if let Ok(f) = lu_factor(&m) {
                let inv = f.inverse().unwrap();
                let i = matmul(&m, &inv).unwrap();
                // Only meaningful when the matrix is not nearly singular.
                let cond = m.inf_norm() * inv.inf_norm();
                prop_assume!(cond < 1e8);
                prop_assert!(i.max_abs_diff(&DenseMatrix::identity(8)) < 1e-14 * cond.max(1.0) * 8.0);
            }
        }

        #[test]
        fn norms_are_submultiplicative(
            a in prop::collection::vec(-5.0f64..5.0, 36),
            b in prop::collection::vec(-5.0f64..5.0, 36),
        ) {
            let a = DenseMatrix::from_vec(6, 6, a).unwrap();
            let b = DenseMatrix::from_vec(6, 6, b).unwrap();
            let ab = matmul(&a, &b).unwrap();
            prop_assert!(ab.inf_norm() <= a.inf_norm() * b.inf_norm() * (1.0 + 1e-12));
            prop_assert!(ab.one_norm() <= a.one_norm() * b.one_norm() * (1.0 + 1e-12));
        }
    }
}
