//! Double-double ("dd") arithmetic: an unevaluated sum `hi + lo` of two
//! `f64` giving roughly 106 bits of significand.
//!
//! The collocation operator without Dirichlet rows has two near-null modes
//! (the homogeneous solutions of the elliptic part), which pushes its
//! condition number to ~1e12 at M = 80. Rounding the entries of `L` to
//! `f64` then moves the discrete solution by tens of percent, so the
//! weights, the operator and its factorization are carried in dd. The
//! right-hand sides and the stored history stay in `f64`.

use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    /// `num / den` correctly rounded to dd.
    pub fn ratio(num: i64, den: i64) -> Self {
        Dd::new(num as f64) / Dd::new(den as f64)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::new(v)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Row-major dense matrix of [`Dd`].
#[derive(Debug, Clone, PartialEq)]
pub struct DdMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Dd::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Dd::ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_f64(&self) -> DenseMatrix {
        DenseMatrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v.to_f64()).collect(),
        )
        .expect("finite dd entries")
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, b: &DdMatrix) -> Result<DdMatrix> {
        if self.cols != b.rows {
            return Err(Error::ShapeMismatch {
                op: "dd matmul",
                left: (self.rows, self.cols),
                right: (b.rows, b.cols),
            });
        }
        let mut c = Self::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.hi == 0.0 {
                    continue;
                }
                for j in 0..b.cols {
                    c[(i, j)] = c[(i, j)] + aik * b[(k, j)];
                }
            }
        }
        Ok(c)
    }

    /// `Σ kᵢ·Mᵢ` over matrices of equal shape.
    pub fn combine(terms: &[(Dd, &DdMatrix)]) -> DdMatrix {
        let (rows, cols) = terms.first().map_or((0, 0), |(_, m)| (m.rows, m.cols));
        let mut out = Self::zeros(rows, cols);
        for (k, m) in terms {
            assert_eq!((m.rows, m.cols), (rows, cols), "combine: shape mismatch");
            for (o, v) in out.data.iter_mut().zip(&m.data) {
                *o = *o + *k * *v;
            }
        }
        out
    }

    fn inf_norm_f64(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .map(|v| v.hi.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DdMatrix {
    type Output = Dd;
    fn index(&self, (i, j): (usize, usize)) -> &Dd {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DdMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Dd {
        &mut self.data[i * self.cols + j]
    }
}

/// LU with partial pivoting in dd arithmetic.
#[derive(Debug, Clone)]
pub struct DdLu {
    lu: DdMatrix,
    perm: Vec<usize>,
}

impl DdLu {
    pub fn factor(m: &DdMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::ShapeMismatch {
                op: "dd lu_factor",
                left: (m.rows, m.cols),
                right: (m.cols, m.rows),
            });
        }
        let n = m.rows;
        let threshold = 1e-14 * m.inf_norm_f64();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if lu[(i, k)].hi.abs() > lu[(p, k)].hi.abs() {
                    p = i;
                }
            }
            let pivot = lu[(p, k)].hi.abs();
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
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.hi == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_dd(&self, rhs: &[Dd]) -> Result<Vec<Dd>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::ShapeMismatch {
                op: "dd solve",
                left: (n, n),
                right: (rhs.len(), 1),
            });
        }
        let mut x: Vec<Dd> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves with an `f64` right-hand side and rounds the result to `f64`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let r: Vec<Dd> = rhs.iter().map(|&v| Dd::new(v)).collect();
        Ok(self.solve_dd(&r)?.into_iter().map(Dd::to_f64).collect())
    }

    pub fn solve_matrix(&self, rhs: &DdMatrix) -> Result<DdMatrix> {
        let n = self.dim();
        if rhs.rows != n {
            return Err(Error::ShapeMismatch {
                op: "dd solve_matrix",
                left: (n, n),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = DdMatrix::zeros(n, rhs.cols);
        for j in 0..rhs.cols {
            let col: Vec<Dd> = (0..n).map(|i| rhs[(i, j)]).collect();
            for (i, v) in self.solve_dd(&col)?.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_bits_lost_in_f64() {
        let tiny = Dd::new(1e-20);
        let s = Dd::ONE + tiny - Dd::ONE;
        assert_eq!(s.to_f64(), 1e-20);
    }

    #[test]
    fn division_round_trips() {
        let q = Dd::ratio(144, 37);
        let back = q * Dd::new(37.0) - Dd::new(144.0);
        assert!(back.to_f64().abs() < 1e-28);
    }

    #[test]
    fn third_is_more_accurate_than_f64() {
        let third = Dd::ratio(1, 3);
        let err = (third * Dd::new(3.0) - Dd::ONE).to_f64().abs();
        assert!(err < 1e-30);
    }

    #[test]
    fn lu_solve_matches_hand_elimination() {
        let mut m = DdMatrix::zeros(2, 2);
        m[(0, 0)] = Dd::new(2.0);
        m[(0, 1)] = Dd::new(1.0);
        m[(1, 0)] = Dd::new(1.0);
        m[(1, 1)] = Dd::new(3.0);
        let x = DdLu::factor(&m).unwrap().solve(&[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn singular_detected() {
        assert!(DdLu::factor(&DdMatrix::zeros(3, 3)).is_err());
    }
}
