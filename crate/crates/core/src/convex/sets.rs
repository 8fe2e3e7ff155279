use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{check_dim, Matrix, Vector};

/// Absolute tolerance of every membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Tolerance for deciding whether a dual vector lies in a cone or subspace
/// when evaluating support functions.
const SUPPORT_TOL: f64 = 1e-9;

/// Closed convex set with an exact projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    /// Coordinate box; bounds may be infinite.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `{u : (normal, u) <= offset}`.
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    Affine(AffineSubspace),
    /// `{u : ‖u‖_∞ <= radius}`.
    LinfBall {
        dim: usize,
        radius: f64,
    },
    /// `{u : ‖u‖_1 <= radius}`.
    L1Ball {
        dim: usize,
        radius: f64,
    },
    /// Probability simplex in `R^dim`.
    Simplex {
        dim: usize,
    },
}

/// `M + {point}` with orthonormal bases for `M` and `M^⊥`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSubspace {
    point: Vector,
    directions: Vec<Vector>,
    normals: Vec<Vector>,
}

impl AffineSubspace {
    /// Affine span of `point + span(basis)`.
    pub fn from_basis(point: Vector, basis: &[Vector]) -> Result<Self> {
        for b in basis {
            check_dim("affine basis vector", point.dim(), b.dim())?;
        }
        let directions = orthonormalize(basis, &[]);
        let units: Vec<Vector> = (0..point.dim()).map(|i| Vector::unit(point.dim(), i)).collect();
        let normals = orthonormalize(&units, &directions);
        Ok(Self { point, directions, normals })
    }

    /// Solution set of `rows * u = rhs`; fails when inconsistent.
    pub fn from_equations(rows: &Matrix, rhs: &Vector) -> Result<Self> {
        check_dim("affine right-hand side", rows.rows(), rhs.dim())?;
        let n = rows.cols();
        // minimum-norm solution u = R^t (R R^t)^+ rhs
        let rrt = rows.matmul(&rows.transpose());
        let y = rrt.solve_psd_pinv(rhs);
        let point = rows.tmatvec(&y);
        let residual = (&rows.matvec(&point) - rhs).norm_inf();
        if residual > 1e-9 * (1.0 + rhs.norm_inf()) {
            return Err(Error::InvalidParameter(format!("inconsistent affine equations (residual {residual:.3e})")));
        }
        let row_vectors: Vec<Vector> = (0..rows.rows()).map(|i| rows.row(i)).collect();
        let normals = orthonormalize(&row_vectors, &[]);
        let units: Vec<Vector> = (0..n).map(|i| Vector::unit(n, i)).collect();
        let directions = orthonormalize(&units, &normals);
        Ok(Self { point, directions, normals })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn point(&self) -> &Vector {
        &self.point
    }

    /// Orthonormal basis of the direction space `M`.
    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    /// Orthonormal basis of `M^⊥`.
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    /// Same directions through a different point.
    pub fn through(&self, point: Vector) -> Result<Self> {
        check_dim("affine point", self.dim(), point.dim())?;
        Ok(Self { point, directions: self.directions.clone(), normals: self.normals.clone() })
    }

    /// Orthogonal projection onto `M^⊥` (no offset).
    pub fn project_normal(&self, v: &Vector) -> Vector {
        self.normals.iter().fold(Vector::zeros(v.dim()), |acc, n| acc.axpy(n.dot(v), n))
    }

    /// Coefficients of `v` in the normal basis.
    pub fn normal_coordinates(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.normals.len(), |i| self.normals[i].dot(v))
    }

    /// Matrix whose columns are the normal basis vectors.
    pub fn normal_matrix(&self) -> Option<Matrix> {
        if self.normals.is_empty() {
            None
        } else {
            Matrix::from_columns(&self.normals).ok()
        }
    }

    fn project(&self, v: &Vector) -> Vector {
        let offset = v - &self.point;
        v - &self.project_normal(&offset)
    }
}

/// Modified Gram-Schmidt of `candidates` against an existing orthonormal set.
fn orthonormalize(candidates: &[Vector], existing: &[Vector]) -> Vec<Vector> {
    let mut basis: Vec<Vector> = existing.to_vec();
    let mut out = Vec::new();
    for c in candidates {
        let mut w = c.clone();
        for _ in 0..2 {
            for b in &basis {
                w = w.axpy(-b.dot(&w), b);
            }
        }
        let norm = w.norm();
        if norm > 1e-10 * (1.0 + c.norm()) {
            let unit = w.scale(1.0 / norm);
            basis.push(unit.clone());
            out.push(unit);
        }
    }
    out
}

impl ConvexSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::Empty);
        }
        if lo.iter().zip(&hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h) {
            return Err(Error::InvalidParameter("box bounds must satisfy lo <= hi".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 || !offset.is_finite() {
            return Err(Error::InvalidParameter("halfspace needs a nonzero normal and finite offset".into()));
        }
        Ok(ConvexSet::HalfSpace { normal, offset })
    }

    pub fn linf_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("l-infinity radius must be positive, got {radius}")));
        }
        Ok(ConvexSet::LinfBall { dim, radius })
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("l1 radius must be positive, got {radius}")));
        }
        Ok(ConvexSet::L1Ball { dim, radius })
    }

    /// Unit ball of the `s`-norm; only `s = 1` and `s = ∞` are available.
    pub fn norm_ball(s: f64, dim: usize) -> Result<Self> {
        if s == 1.0 {
            ConvexSet::l1_ball(dim, 1.0)
        } else if s == f64::INFINITY {
            ConvexSet::linf_ball(dim, 1.0)
        } else {
            Err(Error::Unsupported { operation: "norm ball", kind: format!("{s}-norm"), supported: "s = 1, s = infinity" })
        }
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        Ok(ConvexSet::Simplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::HalfSpace { normal, .. } => normal.dim(),
            ConvexSet::Affine(a) => a.dim(),
            ConvexSet::LinfBall { dim, .. } | ConvexSet::L1Ball { dim, .. } | ConvexSet::Simplex { dim } => *dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexSet::Box { .. } => "box",
            ConvexSet::HalfSpace { .. } => "halfspace",
            ConvexSet::Affine(_) => "affine",
            ConvexSet::LinfBall { .. } => "linf-ball",
            ConvexSet::L1Ball { .. } => "l1-ball",
            ConvexSet::Simplex { .. } => "simplex",
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, ConvexSet::Affine(_))
    }

    pub fn project(&self, v: &Vector) -> Result<Vector> {
        check_dim("projection", self.dim(), v.dim())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => Vector::from_fn(v.dim(), |i| v[i].clamp(lo[i], hi[i])),
            ConvexSet::HalfSpace { normal, offset } => {
                let excess = normal.dot(v) - offset;
                if excess <= 0.0 {
                    v.clone()
                } else {
                    v.axpy(-excess / normal.norm_sq(), normal)
                }
            }
            ConvexSet::Affine(a) => a.project(v),
            ConvexSet::LinfBall { radius, .. } => v.map(|x| x.clamp(-radius, *radius)),
            ConvexSet::L1Ball { radius, .. } => {
                if v.norm1() <= *radius {
                    v.clone()
                } else {
                    // project |v| onto the scaled simplex and restore signs
                    let magnitudes = project_simplex(&v.map(|x| x.abs() / radius));
                    Vector::from_fn(v.dim(), |i| v[i].signum() * radius * magnitudes[i])
                }
            }
            ConvexSet::Simplex { .. } => project_simplex(v),
        })
    }

    pub fn contains(&self, v: &Vector) -> Result<bool> {
        check_dim("membership", self.dim(), v.dim())?;
        let tol = MEMBERSHIP_TOL;
        Ok(match self {
            ConvexSet::Box { lo, hi } => (0..v.dim()).all(|i| v[i] >= lo[i] - tol && v[i] <= hi[i] + tol),
            ConvexSet::HalfSpace { normal, offset } => (normal.dot(v) - offset) / normal.norm() <= tol,
            ConvexSet::Affine(a) => a.normal_coordinates(&(v - &a.point)).norm_inf() <= tol,
            ConvexSet::LinfBall { radius, .. } => v.norm_inf() <= radius + tol,
            ConvexSet::L1Ball { radius, .. } => v.norm1() <= radius + tol,
            ConvexSet::Simplex { .. } => v.iter().all(|&x| x >= -tol) && (v.sum() - 1.0).abs() <= tol,
        })
    }

    /// Support function `sup_{u in K} (p, u)`, possibly `+∞`.
    pub fn support(&self, p: &Vector) -> Result<f64> {
        check_dim("support function", self.dim(), p.dim())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => {
                let mut total = 0.0;
                for i in 0..p.dim() {
                    let term = if p[i] > 0.0 {
                        p[i] * hi[i]
                    } else if p[i] < 0.0 {
                        p[i] * lo[i]
                    } else {
                        0.0
                    };
                    if term == f64::INFINITY {
                        return Ok(f64::INFINITY);
                    }
                    total += term;
                }
                total
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let lambda = p.dot(normal) / normal.norm_sq();
                let off_cone = p.axpy(-lambda, normal).norm();
                if off_cone <= SUPPORT_TOL * (1.0 + p.norm()) && lambda >= -SUPPORT_TOL * (1.0 + p.norm()) {
                    lambda.max(0.0) * offset
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Affine(a) => {
                let along = Vector::from_fn(a.directions.len(), |i| a.directions[i].dot(p));
                if along.norm_inf() <= SUPPORT_TOL * (1.0 + p.norm()) {
                    p.dot(&a.point)
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::LinfBall { radius, .. } => radius * p.norm1(),
            ConvexSet::L1Ball { radius, .. } => radius * p.norm_inf(),
            ConvexSet::Simplex { .. } => p.max(),
        })
    }

    /// Restriction of a coordinate-separable set to the given coordinates.
    pub fn restrict(&self, indices: &[usize]) -> Result<ConvexSet> {
        match self {
            ConvexSet::Box { lo, hi } => {
                Ok(ConvexSet::Box { lo: indices.iter().map(|&i| lo[i]).collect(), hi: indices.iter().map(|&i| hi[i]).collect() })
            }
            ConvexSet::LinfBall { radius, .. } => ConvexSet::linf_ball(indices.len(), *radius),
            other => Err(Error::Unsupported {
                operation: "coordinate restriction",
                kind: other.kind_name().into(),
                supported: "box, linf-ball",
            }),
        }
    }
}

/// Euclidean projection onto the probability simplex by sorting.
fn project_simplex(v: &Vector) -> Vector {
    let mut sorted: Vec<f64> = v.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}
