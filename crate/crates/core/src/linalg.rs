//! Small dense matrices over `Scalar`, enough for determinants and
//! inverses of window compressions.

use crate::scalars::{FieldTag, Scalar, ScalarError};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Relative pivot size below which a complex matrix is treated as singular.
const COMPLEX_PIVOT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch")]
    Dimension,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

impl Matrix {
    pub fn zeros(field: FieldTag, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(field); rows * cols],
        }
    }

    pub fn identity(field: FieldTag, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one(field));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension);
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).try_mul(other.get(0, j))?;
                for k in 1..self.cols {
                    acc = acc.try_add(&self.get(i, k).try_mul(other.get(k, j))?)?;
                }
                data.push(acc);
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// Row index of the pivot for column `col` among rows `col..`.
    fn pivot(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in col..self.rows {
            let a = self.get(r, col);
            if a.is_zero() {
                continue;
            }
            let size = a.abs_at();
            if let Scalar::Rational(_) = a {
                return Some(r);
            }
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((r, size));
            }
        }
        best.map(|(r, _)| r)
    }

    fn scale_hint(&self) -> f64 {
        self.data.iter().map(Scalar::abs_at).fold(0.0, f64::max)
    }

    fn too_small(&self, pivot: &Scalar, scale: f64) -> bool {
        matches!(pivot, Scalar::Complex(_)) && pivot.abs_at() <= COMPLEX_PIVOT_FLOOR * scale
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> Result<Scalar, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension);
        }
        let field = self.data.first().map(Scalar::field).unwrap_or(FieldTag::ExactRational);
        let mut m = self.clone();
        let scale = self.scale_hint();
        let mut det = Scalar::one(field);
        for col in 0..m.rows {
            let Some(p) = m.pivot(col) else {
                return Ok(Scalar::zero(field));
            };
            if p != col {
                m.swap_rows(p, col);
                det = -&det;
            }
            let piv = m.get(col, col).clone();
            if m.too_small(&piv, scale) {
                return Ok(Scalar::zero(field));
            }
            det = det.try_mul(&piv)?;
            let inv = piv.inv()?;
            for r in col + 1..m.rows {
                let factor = m.get(r, col).try_mul(&inv)?;
                if factor.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = m.get(r, j).try_sub(&factor.try_mul(m.get(col, j))?)?;
                    m.set(r, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension);
        }
        let n = self.rows;
        let field = self.data.first().map(Scalar::field).unwrap_or(FieldTag::ExactRational);
        let scale = self.scale_hint();
        let mut m = self.clone();
        let mut inv = Matrix::identity(field, n);
        for col in 0..n {
            let p = m.pivot(col).ok_or(LinalgError::Singular)?;
            m.swap_rows(p, col);
            inv.swap_rows(p, col);
            let piv = m.get(col, col).clone();
            if m.too_small(&piv, scale) {
                return Err(LinalgError::Singular);
            }
            let pinv = piv.inv()?;
            for j in 0..n {
                let v = m.get(col, j).try_mul(&pinv)?;
                m.set(col, j, v);
                let w = inv.get(col, j).try_mul(&pinv)?;
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = m.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = m.get(r, j).try_sub(&factor.try_mul(m.get(col, j))?)?;
                    m.set(r, j, v);
                    let w = inv.get(r, j).try_sub(&factor.try_mul(inv.get(col, j))?)?;
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }
}
