use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Vector;
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { context: "matrix data", expected: rows * cols, found: data.len() });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { context: "matrix row length", expected: cols, found: bad.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vector::dim);
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.dim() != rows {
                return Err(Error::DimensionMismatch { context: "matrix column length", expected: rows, found: c.dim() });
            }
            for i in 0..rows {
                m.data[i * m.cols + j] = c[i];
            }
        }
        Ok(m)
    }

    /// Row-major fill from `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|n| f(n / cols, n % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Parses comma-separated rows of decimal literals.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse { row: i + 1, message: e.to_string() })?;
            let row = record
                .iter()
                .map(|field| field.parse::<f64>().map_err(|e| Error::Parse { row: i + 1, message: format!("`{field}`: {e}") }))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows).map_err(|e| match e {
            Error::DimensionMismatch { expected, found, .. } => Error::Parse {
                row: rows.iter().position(|r| r.len() != expected).map_or(0, |p| p + 1),
                message: format!("expected {expected} columns, found {found}"),
            },
            other => other,
        })
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector::from_raw(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.rows, |i| self.get(i, j))
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.rows, |i| {
            self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v.iter()).map(|(a, b)| a * b).sum()
        })
    }

    pub fn tmatvec(&self, w: &Vector) -> Vector {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let wi = w[i];
            for (o, a) in out.iter_mut().zip(&self.data[i * self.cols..(i + 1) * self.cols]) {
                *o += a * wi;
            }
        }
        Vector::from_raw(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| factor * x).collect() }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Matrix, b: f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "lincomb: shape mismatch");
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect() }
    }

    /// Sub-matrix selected by row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.data[a * cols.len() + b] = self.get(i, j);
            }
        }
        out
    }

    /// Rows `start..start + count`, all columns.
    pub(crate) fn row_block(&self, start: usize, count: usize) -> Matrix {
        let data = self.data[start * self.cols..(start + count) * self.cols].to_vec();
        Self { rows: count, cols: self.cols, data }
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub(crate) fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j));
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `Some(c)` when the matrix equals `c * I` to a relative tolerance.
    pub fn as_scalar_identity(&self, rel_tol: f64) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let c = self.get(0, 0);
        let tol = rel_tol * c.abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { c } else { 0.0 };
                if (self.get(i, j) - target).abs() > tol {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = m[(i, j)];
            }
        }
        out
    }

    /// Cholesky factorization; fails when the matrix is not SPD.
    pub fn cholesky(&self) -> Result<SpdFactor> {
        if self.rows != self.cols {
            return Err(Error::NotSpd);
        }
        let chol = nalgebra::Cholesky::new(self.to_nalgebra()).ok_or(Error::NotSpd)?;
        Ok(SpdFactor { matrix: self.clone(), chol })
    }

    /// General inverse by LU; fails on singular input.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                context: "inverse of non-square matrix",
                expected: self.rows,
                found: self.cols,
            });
        }
        self.to_nalgebra()
            .try_inverse()
            .map(|m| Self::from_nalgebra(&m))
            .ok_or_else(|| Error::InvalidParameter("singular matrix".into()))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let m = self.to_nalgebra();
        let sym = (&m + m.transpose()) * 0.5;
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Solves `self * x = rhs` for symmetric positive semidefinite input,
    /// returning the minimum-norm solution on the range.
    pub fn solve_psd_pinv(&self, rhs: &Vector) -> Vector {
        let m = self.to_nalgebra();
        let sym = (&m + m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        let cutoff = 1e-12 * eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let b = nalgebra::DVector::from_column_slice(rhs.as_slice());
        let coeffs = eig.eigenvectors.transpose() * b;
        let scaled = nalgebra::DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, &l)| if l > cutoff { c / l } else { 0.0 }),
        );
        let x = &eig.eigenvectors * scaled;
        Vector::from_raw(x.iter().copied().collect())
    }
}

/// Cached Cholesky factor for repeated SPD solves.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    matrix: Matrix,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    /// Direct solve followed by one step of iterative refinement.
    pub fn solve(&self, rhs: &Vector) -> Vector {
        let raw = |b: &Vector| {
            let x = self.chol.solve(&nalgebra::DVector::from_column_slice(b.as_slice()));
            Vector::from_raw(x.iter().copied().collect())
        };
        let x = raw(rhs);
        let residual = rhs - &self.matrix.matvec(&x);
        &x + &raw(&residual)
    }

    pub fn inverse(&self) -> Matrix {
        let inv = self.chol.inverse();
        let m = Matrix::from_nalgebra(&inv);
        // symmetrize to remove rounding asymmetry
        m.lincomb(0.5, &m.transpose(), 0.5)
    }
}
