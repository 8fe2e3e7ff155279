use crate::error::{Error, Result};
use crate::linops::{check_dim, LinOp, Matrix, Vector};

use super::entropy::prox_neg_entropy;
use super::minimize::minimize;
use super::sets::{AffineSubspace, ConvexSet};

/// Proper closed convex function on `R^n`, possibly taking the value `+∞`.
///
/// Composite kinds wrap other functions, so conjugates and proximal maps are
/// computed structurally wherever a rule exists.
#[derive(Clone, Debug)]
pub enum ConvexFn {
    /// `½(Au, u) - (f, u) + c` with `A` symmetric positive semidefinite.
    Quadratic {
        op: LinOp,
        linear: Vector,
        constant: f64,
    },
    /// `(α/2)‖u - center‖²`.
    SquaredDistance {
        alpha: f64,
        center: Vector,
    },
    /// `weight * ‖u‖_1`.
    L1 {
        weight: f64,
        dim: usize,
    },
    Indicator(ConvexSet),
    /// Support function `σ_K`.
    Support(ConvexSet),
    /// `log Σ exp(u_i)` on `R^k`.
    LogSumExp {
        k: usize,
    },
    /// `Σ p_i log p_i` restricted to the probability simplex.
    NegEntropy {
        k: usize,
    },
    /// `(c, u)`.
    Linear {
        c: Vector,
    },
    /// `F(Au + shift)`.
    Precompose {
        inner: Box<ConvexFn>,
        op: LinOp,
        shift: Vector,
    },
    Sum(Vec<ConvexFn>),
    /// `F(u) + (c, u)`.
    Tilt {
        inner: Box<ConvexFn>,
        c: Vector,
    },
    /// `F(u - shift)`.
    Translate {
        inner: Box<ConvexFn>,
        shift: Vector,
    },
    /// `s * F(u)` with `s > 0`.
    Scaled {
        inner: Box<ConvexFn>,
        s: f64,
    },
    /// `Σ F_j(u_j)` over consecutive coordinate blocks.
    Separable(Vec<ConvexFn>),
}

/// `a + b` with `+∞` absorbing.
fn ext_add(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY || b == f64::INFINITY {
        f64::INFINITY
    } else {
        a + b
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}

impl ConvexFn {
    pub fn quadratic(op: LinOp, linear: Vector, constant: f64) -> Result<Self> {
        check_dim("quadratic operator", op.domain_dim(), op.codomain_dim())?;
        check_dim("quadratic linear term", op.domain_dim(), linear.dim())?;
        Ok(ConvexFn::Quadratic { op, linear, constant })
    }

    pub fn squared_distance(alpha: f64, center: Vector) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(ConvexFn::SquaredDistance { alpha, center })
    }

    /// `½‖u‖²` on `R^dim`.
    pub fn half_norm_sq(dim: usize) -> Self {
        ConvexFn::SquaredDistance { alpha: 1.0, center: Vector::zeros(dim) }
    }

    pub fn l1(weight: f64, dim: usize) -> Result<Self> {
        positive("l1 weight", weight)?;
        Ok(ConvexFn::L1 { weight, dim })
    }

    pub fn linear(c: Vector) -> Self {
        ConvexFn::Linear { c }
    }

    pub fn precompose(inner: ConvexFn, op: LinOp, shift: Option<Vector>) -> Result<Self> {
        check_dim("precomposition", inner.dim(), op.codomain_dim())?;
        let shift = shift.unwrap_or_else(|| Vector::zeros(inner.dim()));
        check_dim("precomposition shift", inner.dim(), shift.dim())?;
        Ok(ConvexFn::Precompose { inner: Box::new(inner), op, shift })
    }

    pub fn sum(terms: Vec<ConvexFn>) -> Result<Self> {
        let first = terms.first().ok_or(Error::Empty)?;
        for t in &terms {
            check_dim("sum of functions", first.dim(), t.dim())?;
        }
        Ok(ConvexFn::Sum(terms))
    }

    pub fn tilt(inner: ConvexFn, c: Vector) -> Result<Self> {
        check_dim("tilt", inner.dim(), c.dim())?;
        Ok(ConvexFn::Tilt { inner: Box::new(inner), c })
    }

    pub fn translate(inner: ConvexFn, shift: Vector) -> Result<Self> {
        check_dim("translation", inner.dim(), shift.dim())?;
        Ok(ConvexFn::Translate { inner: Box::new(inner), shift })
    }

    pub fn scaled(inner: ConvexFn, s: f64) -> Result<Self> {
        positive("scale", s)?;
        Ok(ConvexFn::Scaled { inner: Box::new(inner), s })
    }

    pub fn separable(blocks: Vec<ConvexFn>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Empty);
        }
        Ok(ConvexFn::Separable(blocks))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFn::Quadratic { linear, .. } => linear.dim(),
            ConvexFn::SquaredDistance { center, .. } => center.dim(),
            ConvexFn::L1 { dim, .. } => *dim,
            ConvexFn::Indicator(set) | ConvexFn::Support(set) => set.dim(),
            ConvexFn::LogSumExp { k } | ConvexFn::NegEntropy { k } => *k,
            ConvexFn::Linear { c } | ConvexFn::Tilt { c, .. } => c.dim(),
            ConvexFn::Precompose { op, .. } => op.domain_dim(),
            ConvexFn::Sum(terms) => terms[0].dim(),
            ConvexFn::Translate { shift, .. } => shift.dim(),
            ConvexFn::Scaled { inner, .. } => inner.dim(),
            ConvexFn::Separable(blocks) => blocks.iter().map(ConvexFn::dim).sum(),
        }
    }

    pub fn kind_name(&self) -> String {
        match self {
            ConvexFn::Quadratic { .. } => "quadratic".into(),
            ConvexFn::SquaredDistance { .. } => "squared-distance".into(),
            ConvexFn::L1 { .. } => "l1".into(),
            ConvexFn::Indicator(set) => format!("indicator({})", set.kind_name()),
            ConvexFn::Support(set) => format!("support({})", set.kind_name()),
            ConvexFn::LogSumExp { .. } => "log-sum-exp".into(),
            ConvexFn::NegEntropy { .. } => "neg-entropy".into(),
            ConvexFn::Linear { .. } => "linear".into(),
            ConvexFn::Precompose { inner, .. } => format!("precompose({})", inner.kind_name()),
            ConvexFn::Sum(_) => "sum".into(),
            ConvexFn::Tilt { inner, .. } => format!("tilt({})", inner.kind_name()),
            ConvexFn::Translate { inner, .. } => format!("translate({})", inner.kind_name()),
            ConvexFn::Scaled { inner, .. } => format!("scaled({})", inner.kind_name()),
            ConvexFn::Separable(_) => "separable".into(),
        }
    }

    fn block_sizes(blocks: &[ConvexFn]) -> Vec<usize> {
        blocks.iter().map(ConvexFn::dim).collect()
    }

    /// Function value, `+∞` outside the domain.
    pub fn eval(&self, u: &Vector) -> Result<f64> {
        check_dim("function evaluation", self.dim(), u.dim())?;
        Ok(match self {
            ConvexFn::Quadratic { op, linear, constant } => 0.5 * op.forward(u).dot(u) - linear.dot(u) + constant,
            ConvexFn::SquaredDistance { alpha, center } => 0.5 * alpha * u.dist(center).powi(2),
            ConvexFn::L1 { weight, .. } => weight * u.norm1(),
            ConvexFn::Indicator(set) => {
                if set.contains(u)? {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexFn::Support(set) => set.support(u)?,
            ConvexFn::LogSumExp { .. } => log_sum_exp(u),
            ConvexFn::NegEntropy { k } => {
                if (ConvexSet::Simplex { dim: *k }).contains(u)? {
                    u.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum()
                } else {
                    f64::INFINITY
                }
            }
            ConvexFn::Linear { c } => c.dot(u),
            ConvexFn::Precompose { inner, op, shift } => inner.eval(&(&op.forward(u) + shift))?,
            ConvexFn::Sum(terms) => {
                let mut total = 0.0;
                for t in terms {
                    total = ext_add(total, t.eval(u)?);
                }
                total
            }
            ConvexFn::Tilt { inner, c } => ext_add(inner.eval(u)?, c.dot(u)),
            ConvexFn::Translate { inner, shift } => inner.eval(&(u - shift))?,
            ConvexFn::Scaled { inner, s } => {
                let value = inner.eval(u)?;
                if value == f64::INFINITY {
                    value
                } else {
                    s * value
                }
            }
            ConvexFn::Separable(blocks) => {
                let parts = u.split(&Self::block_sizes(blocks));
                let mut total = 0.0;
                for (f, part) in blocks.iter().zip(&parts) {
                    total = ext_add(total, f.eval(part)?);
                }
                total
            }
        })
    }

    pub fn is_smooth(&self) -> bool {
        match self {
            ConvexFn::Quadratic { .. }
            | ConvexFn::SquaredDistance { .. }
            | ConvexFn::LogSumExp { .. }
            | ConvexFn::Linear { .. } => true,
            ConvexFn::L1 { .. } | ConvexFn::Indicator(_) | ConvexFn::Support(_) | ConvexFn::NegEntropy { .. } => false,
            ConvexFn::Precompose { inner, .. }
            | ConvexFn::Tilt { inner, .. }
            | ConvexFn::Translate { inner, .. }
            | ConvexFn::Scaled { inner, .. } => inner.is_smooth(),
            ConvexFn::Sum(terms) | ConvexFn::Separable(terms) => terms.iter().all(ConvexFn::is_smooth),
        }
    }

    /// True when the Hessian exists and is constant.
    pub fn is_quadratic(&self) -> bool {
        match self {
            ConvexFn::Quadratic { .. } | ConvexFn::SquaredDistance { .. } | ConvexFn::Linear { .. } => true,
            ConvexFn::Precompose { inner, .. }
            | ConvexFn::Tilt { inner, .. }
            | ConvexFn::Translate { inner, .. }
            | ConvexFn::Scaled { inner, .. } => inner.is_quadratic(),
            ConvexFn::Sum(terms) | ConvexFn::Separable(terms) => terms.iter().all(ConvexFn::is_quadratic),
            _ => false,
        }
    }

    fn not_differentiable(&self) -> Error {
        Error::NotDifferentiable { kind: self.kind_name() }
    }

    pub fn grad(&self, u: &Vector) -> Result<Vector> {
        check_dim("gradient", self.dim(), u.dim())?;
        Ok(match self {
            ConvexFn::Quadratic { op, linear, .. } => &op.forward(u) - linear,
            ConvexFn::SquaredDistance { alpha, center } => (u - center).scale(*alpha),
            ConvexFn::LogSumExp { .. } => softmax(u),
            ConvexFn::Linear { c } => c.clone(),
            ConvexFn::Precompose { inner, op, shift } => op.backward(&inner.grad(&(&op.forward(u) + shift))?),
            ConvexFn::Sum(terms) => {
                let mut g = Vector::zeros(u.dim());
                for t in terms {
                    g = &g + &t.grad(u)?;
                }
                g
            }
            ConvexFn::Tilt { inner, c } => &inner.grad(u)? + c,
            ConvexFn::Translate { inner, shift } => inner.grad(&(u - shift))?,
            ConvexFn::Scaled { inner, s } => inner.grad(u)?.scale(*s),
            ConvexFn::Separable(blocks) => {
                let parts = u.split(&Self::block_sizes(blocks));
                let grads = blocks.iter().zip(&parts).map(|(f, p)| f.grad(p)).collect::<Result<Vec<_>>>()?;
                Vector::concat(&grads)
            }
            _ => return Err(self.not_differentiable()),
        })
    }

    /// Dense Hessian at `u`.
    pub fn hessian(&self, u: &Vector) -> Result<Matrix> {
        check_dim("hessian", self.dim(), u.dim())?;
        let n = u.dim();
        Ok(match self {
            ConvexFn::Quadratic { op, .. } => op.to_dense(),
            ConvexFn::SquaredDistance { alpha, .. } => Matrix::identity(n).scale(*alpha),
            ConvexFn::LogSumExp { .. } => {
                let s = softmax(u);
                let mut h = Matrix::diagonal(s.as_slice());
                for i in 0..n {
                    for j in 0..n {
                        h.set(i, j, h.get(i, j) - s[i] * s[j]);
                    }
                }
                h
            }
            ConvexFn::Linear { .. } => Matrix::zeros(n, n),
            ConvexFn::Precompose { inner, op, shift } => inner.hessian_along(&(&op.forward(u) + shift), &op.to_dense())?,
            ConvexFn::Sum(terms) => {
                let mut h = Matrix::zeros(n, n);
                for t in terms {
                    h = h.add(&t.hessian(u)?);
                }
                h
            }
            ConvexFn::Tilt { inner, .. } => inner.hessian(u)?,
            ConvexFn::Translate { inner, shift } => inner.hessian(&(u - shift))?,
            ConvexFn::Scaled { inner, s } => inner.hessian(u)?.scale(*s),
            ConvexFn::Separable(blocks) => {
                let parts = u.split(&Self::block_sizes(blocks));
                let mut h = Matrix::zeros(n, n);
                let mut start = 0;
                for (f, p) in blocks.iter().zip(&parts) {
                    h.set_block(start, start, &f.hessian(p)?);
                    start += p.dim();
                }
                h
            }
            _ => return Err(self.not_differentiable()),
        })
    }

    /// `Aᵗ∇²F(u)A` without forming the full Hessian where the structure allows.
    pub(crate) fn hessian_along(&self, u: &Vector, a: &Matrix) -> Result<Matrix> {
        check_dim("hessian", self.dim(), u.dim())?;
        check_dim("hessian directions", self.dim(), a.rows())?;
        match self {
            ConvexFn::Precompose { inner, op, shift } => inner.hessian_along(&(&op.forward(u) + shift), &op.forward_columns(a)),
            ConvexFn::Sum(terms) => {
                let mut h = Matrix::zeros(a.cols(), a.cols());
                for t in terms {
                    h = h.add(&t.hessian_along(u, a)?);
                }
                Ok(h)
            }
            ConvexFn::Tilt { inner, .. } => inner.hessian_along(u, a),
            ConvexFn::Translate { inner, shift } => inner.hessian_along(&(u - shift), a),
            ConvexFn::Scaled { inner, s } => Ok(inner.hessian_along(u, a)?.scale(*s)),
            ConvexFn::Separable(blocks) => {
                let mut h = Matrix::zeros(a.cols(), a.cols());
                let mut start = 0;
                for (f, p) in blocks.iter().zip(u.split(&Self::block_sizes(blocks))) {
                    h = h.add(&f.hessian_along(&p, &a.row_block(start, p.dim()))?);
                    start += p.dim();
                }
                Ok(h)
            }
            _ => Ok(a.transpose().matmul(&self.hessian(u)?).matmul(a)),
        }
    }

    /// Structural strong-convexity modulus; zero when none is known.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            ConvexFn::Quadratic { op, .. } => match op.scalar_factor() {
                Some(c) => c.max(0.0),
                None => op.to_dense().symmetric_eigenvalues()[0].max(0.0),
            },
            ConvexFn::SquaredDistance { alpha, .. } => *alpha,
            ConvexFn::NegEntropy { .. } => 1.0,
            ConvexFn::Precompose { inner, op, .. } => match op.scalar_factor() {
                Some(s) => s * s * inner.strong_convexity(),
                None => 0.0,
            },
            ConvexFn::Tilt { inner, .. } | ConvexFn::Translate { inner, .. } => inner.strong_convexity(),
            ConvexFn::Scaled { inner, s } => s * inner.strong_convexity(),
            ConvexFn::Sum(terms) => terms.iter().map(ConvexFn::strong_convexity).sum(),
            ConvexFn::Separable(blocks) => blocks.iter().map(ConvexFn::strong_convexity).fold(f64::INFINITY, f64::min),
            _ => 0.0,
        }
    }

    /// Structural Lipschitz constant of the gradient, when smooth.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            ConvexFn::Quadratic { op, .. } => Some(match op.scalar_factor() {
                Some(c) => c.abs(),
                None => *op.to_dense().symmetric_eigenvalues().last().unwrap_or(&0.0),
            }),
            ConvexFn::SquaredDistance { alpha, .. } => Some(*alpha),
            ConvexFn::LogSumExp { .. } => Some(1.0),
            ConvexFn::Linear { .. } => Some(0.0),
            ConvexFn::Precompose { inner, op, .. } => {
                let norm = op.norm_estimate(0, 1e-10, 1000);
                inner.smoothness().map(|l| l * norm * norm)
            }
            ConvexFn::Tilt { inner, .. } | ConvexFn::Translate { inner, .. } => inner.smoothness(),
            ConvexFn::Scaled { inner, s } => inner.smoothness().map(|l| s * l),
            ConvexFn::Sum(terms) => terms.iter().map(ConvexFn::smoothness).sum(),
            ConvexFn::Separable(blocks) => blocks.iter().map(ConvexFn::smoothness).try_fold(0.0_f64, |m, l| l.map(|l| m.max(l))),
            _ => None,
        }
    }

    /// `argmin_u ½‖u - v‖² + t F(u)`.
    pub fn prox(&self, v: &Vector, t: f64) -> Result<Vector> {
        check_dim("proximal map", self.dim(), v.dim())?;
        positive("prox step", t)?;
        Ok(match self {
            ConvexFn::Quadratic { op, linear, .. } => {
                let rhs = v.axpy(t, linear);
                match op.scalar_factor() {
                    Some(c) => rhs.scale(1.0 / (1.0 + t * c)),
                    None => {
                        let shifted = Matrix::identity(v.dim()).add(&op.to_dense().scale(t));
                        shifted.cholesky()?.solve(&rhs)
                    }
                }
            }
            ConvexFn::SquaredDistance { alpha, center } => v.axpy(t * alpha, center).scale(1.0 / (1.0 + t * alpha)),
            ConvexFn::L1 { weight, .. } => {
                let thr = t * weight;
                v.map(|x| x.signum() * (x.abs() - thr).max(0.0))
            }
            ConvexFn::Indicator(set) => set.project(v)?,
            // Moreau: prox_{tσ_K}(v) = v - t P_K(v / t)
            ConvexFn::Support(set) => v.axpy(-t, &set.project(&v.scale(1.0 / t))?),
            ConvexFn::LogSumExp { k } => prox_conjugate_via_moreau(&ConvexFn::NegEntropy { k: *k }, v, t)?,
            ConvexFn::NegEntropy { .. } => prox_neg_entropy(v, t)?,
            ConvexFn::Linear { c } => v.axpy(-t, c),
            ConvexFn::Precompose { inner, op, shift } => match op.scalar_factor() {
                Some(s) if s != 0.0 => {
                    let w = inner.prox(&v.scale(s).axpy(1.0, shift), s * s * t)?;
                    (&w - shift).scale(1.0 / s)
                }
                _ => {
                    return Err(Error::Unsupported {
                        operation: "proximal map",
                        kind: format!("precomposition with a non-scalar operator ({})", inner.kind_name()),
                        supported: "precomposition with identity or scalar multiples",
                    })
                }
            },
            ConvexFn::Tilt { inner, c } => inner.prox(&v.axpy(-t, c), t)?,
            ConvexFn::Translate { inner, shift } => &inner.prox(&(v - shift), t)? + shift,
            ConvexFn::Scaled { inner, s } => inner.prox(v, s * t)?,
            ConvexFn::Separable(blocks) => {
                let parts = v.split(&Self::block_sizes(blocks));
                let out = blocks.iter().zip(&parts).map(|(f, p)| f.prox(p, t)).collect::<Result<Vec<_>>>()?;
                Vector::concat(&out)
            }
            ConvexFn::Sum(_) => {
                return Err(Error::Unsupported {
                    operation: "proximal map",
                    kind: self.kind_name(),
                    supported: "every kind except sums and non-scalar precompositions",
                })
            }
        })
    }

    /// Fenchel conjugate `F*(p) = sup_u (p, u) - F(u)`.
    pub fn conjugate(&self) -> Result<ConvexFn> {
        let n = self.dim();
        Ok(match self {
            ConvexFn::Quadratic { op, linear, constant } => {
                let inv = match op.scalar_factor() {
                    Some(c) if c > 0.0 => LinOp::scale(n, 1.0 / c),
                    Some(_) => return Err(Error::NotSpd),
                    None => LinOp::dense(op.factor_spd()?.inverse()),
                };
                let inv_f = inv.forward(linear);
                ConvexFn::Quadratic { linear: -&inv_f, constant: 0.5 * inv_f.dot(linear) - constant, op: inv }
            }
            ConvexFn::SquaredDistance { alpha, center } => ConvexFn::Tilt {
                inner: Box::new(ConvexFn::SquaredDistance { alpha: 1.0 / alpha, center: Vector::zeros(n) }),
                c: center.clone(),
            },
            ConvexFn::L1 { weight, dim } => ConvexFn::Indicator(ConvexSet::LinfBall { dim: *dim, radius: *weight }),
            ConvexFn::Indicator(set) => match set {
                ConvexSet::LinfBall { dim, radius } => ConvexFn::L1 { weight: *radius, dim: *dim },
                _ => ConvexFn::Support(set.clone()),
            },
            ConvexFn::Support(set) => ConvexFn::Indicator(set.clone()),
            ConvexFn::LogSumExp { k } => ConvexFn::NegEntropy { k: *k },
            ConvexFn::NegEntropy { k } => ConvexFn::LogSumExp { k: *k },
            ConvexFn::Linear { c } => ConvexFn::Indicator(ConvexSet::Affine(AffineSubspace::from_basis(c.clone(), &[])?)),
            ConvexFn::Precompose { inner, op, shift } => match op.scalar_factor() {
                // G(u) = F(su + b)  =>  G*(p) = F*(p / s) - (p, b) / s
                Some(s) if s != 0.0 => ConvexFn::Tilt {
                    inner: Box::new(ConvexFn::Precompose {
                        inner: Box::new(inner.conjugate()?),
                        op: LinOp::scale(n, 1.0 / s),
                        shift: Vector::zeros(n),
                    }),
                    c: shift.scale(-1.0 / s),
                },
                _ => {
                    return Err(Error::Unsupported {
                        operation: "conjugate",
                        kind: format!("precomposition with a non-scalar operator ({})", inner.kind_name()),
                        supported: "precomposition with identity or scalar multiples",
                    })
                }
            },
            ConvexFn::Tilt { inner, c } => ConvexFn::Translate { inner: Box::new(inner.conjugate()?), shift: c.clone() },
            ConvexFn::Translate { inner, shift } => ConvexFn::Tilt { inner: Box::new(inner.conjugate()?), c: shift.clone() },
            ConvexFn::Scaled { inner, s } => ConvexFn::Scaled {
                inner: Box::new(ConvexFn::Precompose {
                    inner: Box::new(inner.conjugate()?),
                    op: LinOp::scale(n, 1.0 / s),
                    shift: Vector::zeros(n),
                }),
                s: *s,
            },
            ConvexFn::Separable(blocks) => {
                ConvexFn::Separable(blocks.iter().map(ConvexFn::conjugate).collect::<Result<Vec<_>>>()?)
            }
            ConvexFn::Sum(_) => {
                return Err(Error::Unsupported {
                    operation: "conjugate",
                    kind: self.kind_name(),
                    supported: "every kind except sums and non-scalar precompositions",
                })
            }
        })
    }

    /// `∇F*(p)`, the maximizer of `(p, u) - F(u)`.
    pub fn grad_conjugate(&self, p: &Vector) -> Result<Vector> {
        check_dim("conjugate gradient", self.dim(), p.dim())?;
        if let ConvexFn::LogSumExp { k } = self {
            if !p.iter().all(|&x| x > 0.0) || !(ConvexSet::Simplex { dim: *k }).contains(p)? {
                return Err(Error::NotDifferentiable { kind: "neg-entropy off the open simplex".into() });
            }
            return Ok(p.map(f64::ln));
        }
        if let Ok(conj) = self.conjugate() {
            if conj.is_smooth() {
                return conj.grad(p);
            }
        }
        let objective = ConvexFn::tilt(self.clone(), -p)?;
        minimize(Some(&objective), None, &Vector::zeros(p.dim()))
    }

    /// Restriction of a coordinate-separable function to a subset of coordinates.
    pub fn restrict(&self, indices: &[usize]) -> Result<ConvexFn> {
        let unsupported = || Error::Unsupported {
            operation: "coordinate restriction",
            kind: self.kind_name(),
            supported: "l1, squared-distance, linear, box and linf-ball indicators/supports, separable sums",
        };
        Ok(match self {
            ConvexFn::L1 { weight, .. } => ConvexFn::L1 { weight: *weight, dim: indices.len() },
            ConvexFn::SquaredDistance { alpha, center } => {
                ConvexFn::SquaredDistance { alpha: *alpha, center: center.gather(indices) }
            }
            ConvexFn::Linear { c } => ConvexFn::Linear { c: c.gather(indices) },
            ConvexFn::Indicator(set) => ConvexFn::Indicator(set.restrict(indices)?),
            ConvexFn::Support(set) => ConvexFn::Support(set.restrict(indices)?),
            ConvexFn::Tilt { inner, c } => ConvexFn::Tilt { inner: Box::new(inner.restrict(indices)?), c: c.gather(indices) },
            ConvexFn::Translate { inner, shift } => {
                ConvexFn::Translate { inner: Box::new(inner.restrict(indices)?), shift: shift.gather(indices) }
            }
            ConvexFn::Scaled { inner, s } => ConvexFn::Scaled { inner: Box::new(inner.restrict(indices)?), s: *s },
            ConvexFn::Sum(terms) => ConvexFn::Sum(terms.iter().map(|t| t.restrict(indices)).collect::<Result<_>>()?),
            ConvexFn::Separable(blocks) => {
                // indices must be a run of whole consecutive blocks
                let mut selected = Vec::new();
                let mut cursor = 0;
                let mut start = 0;
                for block in blocks {
                    let len = block.dim();
                    let range: Vec<usize> = (start..start + len).collect();
                    if indices.len() >= cursor + len && indices[cursor..cursor + len] == range[..] {
                        selected.push(block.clone());
                        cursor += len;
                    } else if indices[cursor..].iter().any(|i| range.contains(i)) {
                        return Err(unsupported());
                    }
                    start += len;
                }
                if cursor != indices.len() {
                    return Err(unsupported());
                }
                match selected.len() {
                    0 => return Err(Error::Empty),
                    1 => selected.pop().expect("one block"),
                    _ => ConvexFn::Separable(selected),
                }
            }
            _ => return Err(unsupported()),
        })
    }
}

fn log_sum_exp(u: &Vector) -> f64 {
    let m = u.max();
    m + u.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(u: &Vector) -> Vector {
    let m = u.max();
    let e = u.map(|x| (x - m).exp());
    let total = e.sum();
    e.scale(1.0 / total)
}

/// `prox_{tF*}(v) = v - t prox_{F/t}(v / t)`.
pub fn prox_conjugate_via_moreau(f: &ConvexFn, v: &Vector, t: f64) -> Result<Vector> {
    positive("prox step", t)?;
    let inner = f.prox(&v.scale(1.0 / t), 1.0 / t)?;
    Ok(v.axpy(-t, &inner))
}

/// Bregman distance `F(u) - F(w) - (∇F(w), u - w)`.
pub fn bregman(f: &ConvexFn, u: &Vector, w: &Vector) -> Result<f64> {
    let grad = f.grad(w)?;
    Ok(f.eval(u)? - f.eval(w)? - grad.dot(&(u - w)))
}

/// Fenchel-Young residual `F(u) + F*(p) - (u, p) >= 0`.
///
/// Fails when either value is infinite, since the residual then does not
/// certify `p ∈ ∂F(u)`.
pub fn fenchel_young_residual(f: &ConvexFn, u: &Vector, p: &Vector) -> Result<f64> {
    let primal = f.eval(u)?;
    let dual = f.conjugate()?.eval(p)?;
    if !primal.is_finite() || !dual.is_finite() {
        return Err(Error::InfiniteValue(format!("F(u) = {primal}, F*(p) = {dual} for {}", f.kind_name())));
    }
    Ok(primal + dual - u.dot(p))
}
