//! Bundled instances: 1-D total-variation denoising, multinomial logistic
//! regression, and seeded quadratic generators.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::admm::{Block, ConstrainedProblem, SharingProblem};
use crate::convex::{AffineSubspace, ConvexFn, ConvexSet};
use crate::correction::{Decomposition, Energy};
use crate::duality::PrimalDualProblem;
use crate::error::{Error, Result};
use crate::linops::{LinOp, Matrix, Vector};
use crate::projsplit::{MultiConvexProblem, MultiLinearProblem, PocsProblem, SplitTerm};

/// `min (α/2)‖u - f‖² + ‖Du‖_1` with `D` the forward difference (last row zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RofInstance {
    f: Vector,
    alpha: f64,
}

impl RofInstance {
    pub fn new(f: Vector, alpha: f64) -> Result<Self> {
        if f.dim() < 2 {
            return Err(Error::InvalidParameter(format!("signal length must be at least 2, got {}", f.dim())));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
        }
        Ok(Self { f, alpha })
    }

    /// Three-level step signal plus uniform noise in `[-noise, noise]`.
    pub fn noisy(seed: u64, d: usize, alpha: f64, noise: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels = [0.0, 1.0, 0.4];
        let f = Vector::from_fn(d, |i| levels[(3 * i / d.max(1)).min(2)] + noise * rng.gen_range(-1.0..=1.0));
        Self::new(f, alpha)
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn f(&self) -> &Vector {
        &self.f
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gradient(&self) -> LinOp {
        LinOp::forward_diff(self.dim())
    }

    pub fn objective(&self, u: &Vector) -> Result<f64> {
        Ok(0.5 * self.alpha * u.dist(&self.f).powi(2) + self.gradient().apply(u)?.norm1())
    }

    fn check_split(&self, d1: usize) -> Result<()> {
        if d1 == 0 || d1 >= self.dim() {
            return Err(Error::InvalidParameter(format!("split index must satisfy 1 <= d1 < {}, got {d1}", self.dim())));
        }
        Ok(())
    }

    /// Index sets `{0..d1}` and `{d1..d}`.
    fn halves(&self, d1: usize) -> Result<Vec<Vec<usize>>> {
        self.check_split(d1)?;
        Ok(vec![(0..d1).collect(), (d1..self.dim()).collect()])
    }
}

/// `F = (α/2)‖· - f‖²`, `G = ‖·‖_1`, `B = D`; recovery `u = f - Dᵗp/α`.
pub fn rof_primal_dual(inst: &RofInstance) -> Result<PrimalDualProblem> {
    PrimalDualProblem::new(
        ConvexFn::squared_distance(inst.alpha, inst.f.clone())?,
        ConvexFn::l1(1.0, inst.dim())?,
        inst.gradient(),
    )
}

/// `(1/2α)‖Dᵗp‖² - (Df, p)` plus the indicator of `‖p‖_∞ <= 1`.
pub fn rof_dual_energy(inst: &RofInstance) -> Result<Energy> {
    let dual = rof_primal_dual(inst)?.dual()?;
    Energy::composite(ConvexFn::precompose(dual.g, dual.b, None)?, dual.f)
}

/// Nonoverlapping split of the dual space at `d1` (the first block holds `d1` entries).
pub fn rof_decomposition(inst: &RofInstance, d1: usize) -> Result<Decomposition> {
    Decomposition::index_blocks(inst.dim(), inst.halves(d1)?)
}

/// Primal splitting `G_j = ‖·‖_1` on `(Du)|_{V_j}`.
pub fn rof_splitting(inst: &RofInstance, d1: usize) -> Result<MultiConvexProblem> {
    let terms = inst
        .halves(d1)?
        .into_iter()
        .map(|block| {
            let size = block.len();
            let restrict = LinOp::select(inst.dim(), block)?.transpose();
            Ok(SplitTerm { g: ConvexFn::l1(1.0, size)?, b: LinOp::compose(restrict, inst.gradient())? })
        })
        .collect::<Result<Vec<_>>>()?;
    MultiConvexProblem::new(ConvexFn::squared_distance(inst.alpha, inst.f.clone())?, terms)
}

/// Primal unknowns touched by `(Du)|_{V_j}` for each half of the split.
///
/// The first set extends one entry past `d1`, so the primal subproblems
/// overlap on that entry.
pub fn rof_primal_supports(inst: &RofInstance, d1: usize) -> Result<Vec<Vec<usize>>> {
    let d = inst.gradient().to_dense();
    Ok(inst
        .halves(d1)?
        .iter()
        .map(|rows| (0..inst.dim()).filter(|&c| rows.iter().any(|&r| d.get(r, c) != 0.0)).collect())
        .collect())
}

/// One labelled sample; `label` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vector,
    pub label: usize,
}

/// Multinomial logistic regression with parameters `θ = [w_1; b_1; …; w_k; b_k]`.
///
/// The objective is kept in its `N`-scaled form
/// `Σ_j LSE_k(X_jᵗθ) - x̂ᵗθ + (Nα/2)‖θ‖²`, which has the same minimizer as
/// the sample-averaged loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticInstance {
    features: usize,
    classes: usize,
    samples: Vec<Sample>,
    alpha: f64,
}

impl LogisticInstance {
    pub fn new(features: usize, classes: usize, samples: Vec<Sample>, alpha: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty);
        }
        if classes == 0 {
            return Err(Error::InvalidParameter("at least one class is required".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
        }
        for (n, s) in samples.iter().enumerate() {
            if s.x.dim() != features {
                return Err(Error::DimensionMismatch { context: "sample features", expected: features, found: s.x.dim() });
            }
            if !(1..=classes).contains(&s.label) {
                return Err(Error::InvalidParameter(format!("label {} of sample {} outside 1..={classes}", s.label, n + 1)));
            }
        }
        Ok(Self { features, classes, samples, alpha })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Length of `θ`.
    pub fn dim(&self) -> usize {
        (self.features + 1) * self.classes
    }

    /// `X_j = I_k ⊗ [x_j; 1]`, applied without densifying.
    pub fn design(&self, j: usize) -> LinOp {
        let s = &self.samples[j];
        let column = Vector::concat(&[s.x.clone(), Vector::filled(1, 1.0)]);
        LinOp::kron_column(self.classes, column)
    }

    /// `x̂ = Σ_j X_j e_{y_j}`.
    pub fn aggregate(&self) -> Vector {
        let mut total = Vector::zeros(self.dim());
        for (j, s) in self.samples.iter().enumerate() {
            let picked = self.design(j).forward(&Vector::unit(self.classes, s.label - 1));
            total = &total + &picked;
        }
        total
    }

    /// `F(θ) = (Nα/2)‖θ‖² - x̂ᵗθ`.
    pub fn regularizer(&self) -> Result<ConvexFn> {
        let n = self.len() as f64;
        ConvexFn::quadratic(LinOp::scale(self.dim(), n * self.alpha), self.aggregate(), 0.0)
    }

    pub fn objective(&self, theta: &Vector) -> Result<f64> {
        let mut total = self.regularizer()?.eval(theta)?;
        let lse = ConvexFn::LogSumExp { k: self.classes };
        for j in 0..self.len() {
            total += lse.eval(&self.design(j).apply_adjoint(theta)?)?;
        }
        Ok(total)
    }

    /// `F` plus one `LSE_k ∘ X_jᵗ` term per sample.
    pub fn problem(&self) -> Result<MultiConvexProblem> {
        let terms = (0..self.len())
            .map(|j| SplitTerm { g: ConvexFn::LogSumExp { k: self.classes }, b: self.design(j).transpose() })
            .collect();
        MultiConvexProblem::new(self.regularizer()?, terms)
    }

    /// Reads numeric feature columns followed by an integer label in `1..=k`.
    ///
    /// With `classes = None`, `k` is the largest label present.
    pub fn from_csv_reader(reader: impl Read, alpha: f64, classes: Option<usize>, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        let mut features = None;
        for record in rdr.records() {
            let record = record
                .map_err(|e| Error::Parse { row: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
            let row = record.position().map_or(samples.len() + 1, |p| p.line() as usize);
            let parse_err = |message: String| Error::Parse { row, message };
            if record.len() < 2 {
                return Err(parse_err(format!("expected features and a label, found {} field(s)", record.len())));
            }
            let width = *features.get_or_insert(record.len() - 1);
            if record.len() - 1 != width {
                return Err(parse_err(format!("expected {} feature(s), found {}", width, record.len() - 1)));
            }
            let x = record
                .iter()
                .take(width)
                .map(|field| field.parse::<f64>().map_err(|e| parse_err(format!("feature `{field}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let field = &record[width];
            let label: usize = field.parse().map_err(|_| parse_err(format!("label `{field}` is not a positive integer")))?;
            let x = Vector::new(x).map_err(|e| parse_err(e.to_string()))?;
            samples.push((row, Sample { x, label }));
        }
        if samples.is_empty() {
            return Err(Error::Empty);
        }
        let k = classes.unwrap_or_else(|| samples.iter().map(|(_, s)| s.label).max().unwrap_or(0));
        if let Some((row, s)) = samples.iter().find(|(_, s)| !(1..=k).contains(&s.label)) {
            return Err(Error::InvalidParameter(format!("label {} on row {row} outside 1..={k}", s.label)));
        }
        Self::new(features.unwrap_or(0), k, samples.into_iter().map(|(_, s)| s).collect(), alpha)
    }
}

/// Loads a logistic instance and builds its splitting problem.
pub fn logistic_from_csv(
    path: impl AsRef<Path>,
    alpha: f64,
    classes: Option<usize>,
    has_header: bool,
) -> Result<(LogisticInstance, MultiConvexProblem)> {
    let instance = LogisticInstance::from_csv_reader(std::fs::File::open(path)?, alpha, classes, has_header)?;
    let problem = instance.problem()?;
    Ok((instance, problem))
}

/// Seeded generator of SPD test problems with a prescribed condition number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticInstance {
    pub seed: u64,
    pub dim: usize,
    pub blocks: usize,
    pub cond: f64,
}

impl QuadraticInstance {
    pub fn new(seed: u64, dim: usize, blocks: usize, cond: f64) -> Result<Self> {
        if dim == 0 || blocks == 0 {
            return Err(Error::InvalidParameter(format!("dim and block count must be positive, got {dim} and {blocks}")));
        }
        if !(cond >= 1.0 && cond.is_finite()) {
            return Err(Error::InvalidParameter(format!("condition number must be at least 1, got {cond}")));
        }
        Ok(Self { seed, dim, blocks, cond })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `Qᵗ diag(λ) Q` with `λ` log-spaced on `[1, cond]` and `Q` a product of
    /// Householder reflections; `cond = 1` gives the identity exactly.
    pub fn spd(&self, rng: &mut ChaCha8Rng) -> Matrix {
        let n = self.dim;
        if self.cond == 1.0 {
            return Matrix::identity(n);
        }
        let spectrum: Vec<f64> = (0..n).map(|i| if n == 1 { 1.0 } else { self.cond.powf(i as f64 / (n - 1) as f64) }).collect();
        let mut a = Matrix::diagonal(&spectrum);
        for _ in 0..n {
            let v = random_vector(rng, n);
            let scale = 2.0 / v.norm_sq().max(f64::MIN_POSITIVE);
            let h = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - scale * v[i] * v[j]);
            a = h.matmul(&a).matmul(&h);
        }
        a.add(&a.transpose()).scale(0.5)
    }

    /// `A_j` SPD, `α = 1`, random `f`.
    pub fn multi_linear(&self) -> Result<MultiLinearProblem> {
        let mut rng = self.rng();
        let ops = (0..self.blocks).map(|_| LinOp::dense(self.spd(&mut rng))).collect();
        MultiLinearProblem::new(ops, 1.0, random_vector(&mut rng, self.dim))
    }

    fn quadratic_block(&self, rng: &mut ChaCha8Rng) -> Result<Block> {
        let f = ConvexFn::quadratic(LinOp::dense(self.spd(rng)), random_vector(rng, self.dim), 0.0)?;
        Block::new(f, LinOp::dense(random_matrix(rng, self.dim, self.dim)))
    }

    /// `Σ F_j(u_j)` subject to `Σ B_ju_j = g`, quadratic `F_j`, `β = 1`.
    pub fn constrained(&self) -> Result<ConstrainedProblem> {
        let mut rng = self.rng();
        let blocks = (0..self.blocks).map(|_| self.quadratic_block(&mut rng)).collect::<Result<_>>()?;
        ConstrainedProblem::new(blocks, random_vector(&mut rng, self.dim), 1.0)
    }

    /// Quadratic sharing terms, `β = 1`.
    pub fn sharing(&self) -> Result<SharingProblem> {
        let mut rng = self.rng();
        let terms = (0..self.blocks).map(|_| self.quadratic_block(&mut rng)).collect::<Result<_>>()?;
        SharingProblem::new(terms, random_vector(&mut rng, self.dim), 1.0)
    }

    /// Random hyperplanes through a common point `ū`.
    pub fn pocs(&self) -> Result<PocsProblem> {
        let mut rng = self.rng();
        let common = random_vector(&mut rng, self.dim);
        let sets = (0..self.blocks)
            .map(|_| {
                let normal = random_matrix(&mut rng, 1, self.dim);
                let rhs = normal.matvec(&common);
                Ok(ConvexSet::Affine(AffineSubspace::from_equations(&normal, &rhs)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = random_vector(&mut rng, self.dim).scale(2.0);
        PocsProblem::new(f, sets)?.with_common_point(common)
    }

    /// Quadratic `F`, an `ℓ1` term on forward differences, and
    /// squared-distance terms composed with random matrices.
    pub fn multi_convex(&self) -> Result<MultiConvexProblem> {
        let mut rng = self.rng();
        let f = ConvexFn::quadratic(LinOp::dense(self.spd(&mut rng)), random_vector(&mut rng, self.dim), 0.0)?;
        let terms = (0..self.blocks)
            .map(|j| {
                if j == 0 {
                    Ok(SplitTerm { g: ConvexFn::l1(0.3, self.dim)?, b: LinOp::forward_diff(self.dim) })
                } else {
                    let center = random_vector(&mut rng, self.dim);
                    Ok(SplitTerm {
                        g: ConvexFn::squared_distance(1.5, center)?,
                        b: LinOp::dense(random_matrix(&mut rng, self.dim, self.dim)),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        MultiConvexProblem::new(f, terms)
    }
}

pub(crate) fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_| rng.gen_range(-1.0..1.0))
}

pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}
