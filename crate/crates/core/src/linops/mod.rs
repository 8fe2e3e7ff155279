//! Dense vectors and composable linear operators with exact adjoints.
//!
//! Operators are immutable trees; composite kinds share their children
//! through cheap clones, so building `[B_1; ...; B_J]` or `-B^t` never
//! copies matrix data.

mod matrix;
mod vector;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use matrix::{Matrix, SpdFactor};
pub use vector::Vector;

use crate::error::{Error, Result};

/// Linear operator between Euclidean spaces.
#[derive(Clone, Debug)]
pub enum LinOp {
    Dense(Arc<Matrix>),
    Identity(usize),
    /// `factor * I` on `R^dim`.
    Scale {
        dim: usize,
        factor: f64,
    },
    /// Stacked rows `[A_1; ...; A_J]`, all sharing one domain.
    VStack(Vec<LinOp>),
    /// Block row `[A_1, ..., A_J]`, all sharing one codomain.
    HCat(Vec<LinOp>),
    BlockDiag(Vec<LinOp>),
    /// `(Du)_i = u_{i+1} - u_i` for `i < d`, and `(Du)_d = 0`.
    ForwardDiff(usize),
    /// `outer ∘ inner`.
    Compose(Box<LinOp>, Box<LinOp>),
    Adjoint(Box<LinOp>),
    /// Injection `R^m -> R^dim` placing entry `i` at `indices[i]`.
    Select {
        dim: usize,
        indices: Vec<usize>,
    },
    /// `I_k ⊗ column`, mapping `R^k -> R^{k * column.dim()}`.
    Kron {
        k: usize,
        column: Vector,
    },
}

impl LinOp {
    pub fn dense(matrix: Matrix) -> Self {
        LinOp::Dense(Arc::new(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        LinOp::Identity(dim)
    }

    pub fn scale(dim: usize, factor: f64) -> Self {
        LinOp::Scale { dim, factor }
    }

    pub fn forward_diff(dim: usize) -> Self {
        LinOp::ForwardDiff(dim)
    }

    pub fn vstack(blocks: Vec<LinOp>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::Empty)?;
        let dim = first.domain_dim();
        for b in &blocks {
            check_dim("vstack domain", dim, b.domain_dim())?;
        }
        Ok(LinOp::VStack(blocks))
    }

    pub fn hcat(blocks: Vec<LinOp>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::Empty)?;
        let dim = first.codomain_dim();
        for b in &blocks {
            check_dim("hcat codomain", dim, b.codomain_dim())?;
        }
        Ok(LinOp::HCat(blocks))
    }

    pub fn block_diag(blocks: Vec<LinOp>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Empty);
        }
        Ok(LinOp::BlockDiag(blocks))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: LinOp, inner: LinOp) -> Result<Self> {
        check_dim("composition", outer.domain_dim(), inner.codomain_dim())?;
        Ok(LinOp::Compose(Box::new(outer), Box::new(inner)))
    }

    /// Coordinate injection `R^{indices.len()} -> R^dim`.
    pub fn select(dim: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidParameter(format!("index {bad} out of range for dimension {dim}")));
        }
        Ok(LinOp::Select { dim, indices })
    }

    pub fn kron_column(k: usize, column: Vector) -> Self {
        LinOp::Kron { k, column }
    }

    /// The adjoint operator, simplified for self-adjoint kinds.
    pub fn transpose(&self) -> LinOp {
        match self {
            LinOp::Identity(_) | LinOp::Scale { .. } => self.clone(),
            LinOp::Adjoint(inner) => (**inner).clone(),
            other => LinOp::Adjoint(Box::new(other.clone())),
        }
    }

    /// `factor * self`.
    pub fn scaled(&self, factor: f64) -> LinOp {
        match self {
            LinOp::Identity(dim) => LinOp::scale(*dim, factor),
            LinOp::Scale { dim, factor: f } => LinOp::scale(*dim, f * factor),
            other => LinOp::Compose(Box::new(LinOp::scale(other.codomain_dim(), factor)), Box::new(other.clone())),
        }
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            LinOp::Dense(m) => m.cols(),
            LinOp::Identity(d) | LinOp::Scale { dim: d, .. } | LinOp::ForwardDiff(d) => *d,
            LinOp::VStack(bs) => bs[0].domain_dim(),
            LinOp::HCat(bs) | LinOp::BlockDiag(bs) => bs.iter().map(LinOp::domain_dim).sum(),
            LinOp::Compose(_, inner) => inner.domain_dim(),
            LinOp::Adjoint(op) => op.codomain_dim(),
            LinOp::Select { indices, .. } => indices.len(),
            LinOp::Kron { k, .. } => *k,
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            LinOp::Dense(m) => m.rows(),
            LinOp::Identity(d) | LinOp::Scale { dim: d, .. } | LinOp::ForwardDiff(d) => *d,
            LinOp::VStack(bs) | LinOp::BlockDiag(bs) => bs.iter().map(LinOp::codomain_dim).sum(),
            LinOp::HCat(bs) => bs[0].codomain_dim(),
            LinOp::Compose(outer, _) => outer.codomain_dim(),
            LinOp::Adjoint(op) => op.domain_dim(),
            LinOp::Select { dim, .. } => *dim,
            LinOp::Kron { k, column } => k * column.dim(),
        }
    }

    /// `Some(c)` when the operator is `c * I`.
    pub fn scalar_factor(&self) -> Option<f64> {
        match self {
            LinOp::Identity(_) => Some(1.0),
            LinOp::Scale { factor, .. } => Some(*factor),
            _ => None,
        }
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        check_dim("operator apply", self.domain_dim(), v.dim())?;
        Ok(self.forward(v))
    }

    pub fn apply_adjoint(&self, w: &Vector) -> Result<Vector> {
        check_dim("operator adjoint apply", self.codomain_dim(), w.dim())?;
        Ok(self.backward(w))
    }

    /// `self · a`, one column at a time; `a.rows()` must equal `domain_dim`.
    pub(crate) fn forward_columns(&self, a: &Matrix) -> Matrix {
        if let LinOp::Dense(m) = self {
            return m.matmul(a);
        }
        let mut out = Matrix::zeros(self.codomain_dim(), a.cols());
        for j in 0..a.cols() {
            let col = self.forward(&a.column(j));
            for i in 0..col.dim() {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    /// Apply without the dimension check; callers guarantee `v.dim() == domain_dim`.
    pub(crate) fn forward(&self, v: &Vector) -> Vector {
        match self {
            LinOp::Dense(m) => m.matvec(v),
            LinOp::Identity(_) => v.clone(),
            LinOp::Scale { factor, .. } => v.scale(*factor),
            LinOp::VStack(bs) => {
                let parts: Vec<Vector> = bs.iter().map(|b| b.forward(v)).collect();
                Vector::concat(&parts)
            }
            LinOp::HCat(bs) => {
                let sizes: Vec<usize> = bs.iter().map(LinOp::domain_dim).collect();
                let blocks = v.split(&sizes);
                let mut acc = Vector::zeros(self.codomain_dim());
                for (b, x) in bs.iter().zip(&blocks) {
                    acc = &acc + &b.forward(x);
                }
                acc
            }
            LinOp::BlockDiag(bs) => {
                let sizes: Vec<usize> = bs.iter().map(LinOp::domain_dim).collect();
                let parts: Vec<Vector> = bs.iter().zip(v.split(&sizes)).map(|(b, x)| b.forward(&x)).collect();
                Vector::concat(&parts)
            }
            LinOp::ForwardDiff(d) => Vector::from_fn(*d, |i| if i + 1 < *d { v[i + 1] - v[i] } else { 0.0 }),
            LinOp::Compose(outer, inner) => outer.forward(&inner.forward(v)),
            LinOp::Adjoint(op) => op.backward(v),
            LinOp::Select { dim, indices } => {
                let mut out = vec![0.0; *dim];
                for (x, &i) in v.iter().zip(indices) {
                    out[i] += x;
                }
                Vector::from_raw(out)
            }
            LinOp::Kron { k, column } => {
                let m = column.dim();
                Vector::from_fn(k * m, |r| v[r / m] * column[r % m])
            }
        }
    }

    pub(crate) fn backward(&self, w: &Vector) -> Vector {
        match self {
            LinOp::Dense(m) => m.tmatvec(w),
            LinOp::Identity(_) => w.clone(),
            LinOp::Scale { factor, .. } => w.scale(*factor),
            LinOp::VStack(bs) => {
                let sizes: Vec<usize> = bs.iter().map(LinOp::codomain_dim).collect();
                let mut acc = Vector::zeros(self.domain_dim());
                for (b, y) in bs.iter().zip(w.split(&sizes)) {
                    acc = &acc + &b.backward(&y);
                }
                acc
            }
            LinOp::HCat(bs) => {
                let parts: Vec<Vector> = bs.iter().map(|b| b.backward(w)).collect();
                Vector::concat(&parts)
            }
            LinOp::BlockDiag(bs) => {
                let sizes: Vec<usize> = bs.iter().map(LinOp::codomain_dim).collect();
                let parts: Vec<Vector> = bs.iter().zip(w.split(&sizes)).map(|(b, y)| b.backward(&y)).collect();
                Vector::concat(&parts)
            }
            LinOp::ForwardDiff(d) => {
                let d = *d;
                Vector::from_fn(d, |i| {
                    let from_left = if i >= 1 { w[i - 1] } else { 0.0 };
                    let own = if i + 1 < d { w[i] } else { 0.0 };
                    from_left - own
                })
            }
            LinOp::Compose(outer, inner) => inner.backward(&outer.backward(w)),
            LinOp::Adjoint(op) => op.forward(w),
            LinOp::Select { indices, .. } => w.gather(indices),
            LinOp::Kron { k, column } => {
                let m = column.dim();
                Vector::from_fn(*k, |i| (0..m).map(|r| w[i * m + r] * column[r]).sum())
            }
        }
    }

    /// Dense matrix of the operator.
    pub fn to_dense(&self) -> Matrix {
        if let LinOp::Dense(m) = self {
            return (**m).clone();
        }
        let (rows, cols) = (self.codomain_dim(), self.domain_dim());
        let mut out = Matrix::zeros(rows, cols);
        for j in 0..cols {
            let col = self.forward(&Vector::unit(cols, j));
            for i in 0..rows {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    /// Cholesky factorization of a symmetric positive definite operator.
    pub fn factor_spd(&self) -> Result<SpdFactor> {
        if self.domain_dim() != self.codomain_dim() {
            return Err(Error::NotSpd);
        }
        let dense = self.to_dense();
        if dense.asymmetry() > 1e-10 * (1.0 + dense.frobenius_norm()) {
            return Err(Error::NotSpd);
        }
        dense.cholesky()
    }

    /// Solves `self * x = rhs` for symmetric positive definite `self`.
    pub fn solve_spd(&self, rhs: &Vector) -> Result<Vector> {
        check_dim("spd solve", self.codomain_dim(), rhs.dim())?;
        match self.scalar_factor() {
            Some(c) if c > 0.0 => Ok(rhs.scale(1.0 / c)),
            Some(_) => Err(Error::NotSpd),
            None => Ok(self.factor_spd()?.solve(rhs)),
        }
    }

    /// Dense `self^t * self`.
    pub fn gram(&self) -> Matrix {
        let d = self.to_dense();
        d.transpose().matmul(&d)
    }

    /// Operator 2-norm by power iteration on `A^t A` from a seeded start.
    pub fn norm_estimate(&self, seed: u64, tol: f64, max_iter: usize) -> f64 {
        if let Some(c) = self.scalar_factor() {
            return c.abs();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.domain_dim();
        let mut x = Vector::from_fn(n, |_| rng.gen_range(-1.0..1.0));
        let norm = x.norm();
        if norm == 0.0 {
            return 0.0;
        }
        x = x.scale(1.0 / norm);
        let mut sigma_sq = 0.0;
        for _ in 0..max_iter {
            let y = self.backward(&self.forward(&x));
            let next = y.norm();
            if next == 0.0 {
                return 0.0;
            }
            x = y.scale(1.0 / next);
            let converged = (next - sigma_sq).abs() <= tol * next;
            sigma_sq = next;
            if converged {
                break;
            }
        }
        sigma_sq.sqrt()
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, found })
    }
}
