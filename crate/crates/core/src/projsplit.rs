//! Alternating projections and operator splitting.
//!
//! Every method here is the primal image of a subspace correction method on
//! a dual energy; the `*_dual` constructors build those energies so that
//! paired runs can be compared iterate by iterate.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::convex::{minimize_composite, ConvexFn, ConvexSet};
use crate::correction::{BlockOrder, Decomposition, Energy, SolverConfig};
use crate::duality::PrimalDualProblem;
use crate::error::{Error, Result};
use crate::linops::{check_dim, LinOp, Matrix, SpdFactor, Vector};
use crate::trace::{state, Flow, Recorder, Substep, Trace};

/// Distance from the common point to each affine set accepted as membership.
const COMMON_POINT_TOL: f64 = 1e-10;

/// Projection of `f` onto `K_1 ∩ ... ∩ K_J`.
#[derive(Clone, Debug)]
pub struct PocsProblem {
    f: Vector,
    sets: Vec<ConvexSet>,
    common_point: Option<Vector>,
}

impl PocsProblem {
    pub fn new(f: Vector, sets: Vec<ConvexSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Empty);
        }
        for set in &sets {
            check_dim("set dimension", f.dim(), set.dim())?;
        }
        Ok(Self { f, sets, common_point: None })
    }

    /// Registers `ū ∈ ∩K_j` for all-affine problems, enabling [`PocsProblem::affine_dual`].
    pub fn with_common_point(mut self, point: Vector) -> Result<Self> {
        check_dim("common point", self.f.dim(), point.dim())?;
        for (j, set) in self.sets.iter().enumerate() {
            if !set.is_affine() {
                return Err(Error::InvalidParameter(format!("set {j} is a {}, not affine", set.kind_name())));
            }
            let gap = set.project(&point)?.dist(&point);
            if gap > COMMON_POINT_TOL {
                return Err(Error::InvalidParameter(format!("common point is {gap:.3e} away from set {j}")));
            }
        }
        self.common_point = Some(point);
        Ok(self)
    }

    pub fn f(&self) -> &Vector {
        &self.f
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn common_point(&self) -> Option<&Vector> {
        self.common_point.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `½‖u - f‖² + Σχ_{K_j}(u)` as `F(u) + G(Bu)` with `B = [I; ...; I]`.
    pub fn primal_dual(&self) -> Result<PrimalDualProblem> {
        let n = self.dim();
        PrimalDualProblem::new(
            ConvexFn::squared_distance(1.0, self.f.clone())?,
            ConvexFn::separable(self.sets.iter().cloned().map(ConvexFn::Indicator).collect())?,
            LinOp::vstack(vec![LinOp::identity(n); self.len()])?,
        )
    }

    /// The same problem as a sum of indicators under `F = ½‖· - f‖²`.
    pub fn as_multi_convex(&self) -> Result<MultiConvexProblem> {
        let n = self.dim();
        MultiConvexProblem::new(
            ConvexFn::squared_distance(1.0, self.f.clone())?,
            self.sets.iter().map(|k| SplitTerm { g: ConvexFn::Indicator(k.clone()), b: LinOp::identity(n) }).collect(),
        )
    }

    /// `min_{p ∈ ΣV_j} ½‖p - (f - ū)‖²` with `V_j` the normal space of `K_j`.
    pub fn affine_dual(&self) -> Result<(Energy, Decomposition)> {
        let ubar = self
            .common_point
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("the affine dual needs a common point of all sets".into()))?;
        let injections =
            self.sets
                .iter()
                .enumerate()
                .map(|(j, set)| match set {
                    ConvexSet::Affine(a) => a.normal_matrix().map(LinOp::dense).ok_or_else(|| {
                        Error::InvalidParameter(format!("set {j} is the whole space; its normal space is trivial"))
                    }),
                    _ => Err(Error::InvalidParameter(format!("set {j} is not an affine subspace"))),
                })
                .collect::<Result<Vec<_>>>()?;
        let energy = Energy::smooth(ConvexFn::squared_distance(1.0, &self.f - ubar)?);
        Ok((energy, Decomposition::from_injections(self.dim(), injections)?))
    }

    /// `min ½‖Σp_j - f‖² + Σσ_{K_j}(p_j)` on `V^J`, split into its factors.
    pub fn product_dual(&self) -> Result<(Energy, Decomposition)> {
        let n = self.dim();
        let smooth = ConvexFn::precompose(
            ConvexFn::squared_distance(1.0, self.f.clone())?,
            LinOp::hcat(vec![LinOp::identity(n); self.len()])?,
            None,
        )?;
        let supports = ConvexFn::separable(self.sets.iter().cloned().map(ConvexFn::Support).collect())?;
        Ok((Energy::composite(smooth, supports)?, Decomposition::contiguous(&vec![n; self.len()])?))
    }

    fn distance_to_sets(&self, u: &Vector) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for set in &self.sets {
            worst = worst.max(set.project(u)?.dist(u));
        }
        Ok(worst)
    }

    fn objective(&self, u: &Vector) -> f64 {
        0.5 * u.dist(&self.f).powi(2)
    }

    fn metrics(&self, u: &Vector) -> Result<BTreeMap<String, f64>> {
        Ok(BTreeMap::from([("infeasibility".to_string(), self.distance_to_sets(u)?)]))
    }
}

fn check_positive_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step τ must be positive, got {tau}")))
    }
}

/// Cyclic projections from `u⁰ = f`.
pub fn von_neumann(problem: &PocsProblem, cfg: &SolverConfig) -> Result<Trace> {
    let mut u = problem.f.clone();
    let mut rec = Recorder::new("von_neumann", cfg.tol, state([("u", u.clone())]), problem.objective(&u));
    for _ in 0..cfg.max_iters {
        let mut current = u.clone();
        let mut substeps = Vec::with_capacity(problem.len());
        for (j, set) in problem.sets.iter().enumerate() {
            current = set.project(&current)?;
            substeps.push(Substep { block: j, state: state([("u", current.clone())]) });
        }
        let flow = rec.record(
            state([("u", current.clone())]),
            problem.objective(&current),
            problem.metrics(&current)?,
            substeps,
            &u,
            &current,
        );
        u = current;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Row-action sweeps `u ← u + ((f_i - a_i·u)/‖a_i‖²) a_i` for `Au = f`.
pub fn kaczmarz(a: &Matrix, rhs: &Vector, u0: &Vector, cfg: &SolverConfig) -> Result<Trace> {
    check_dim("right-hand side", a.rows(), rhs.dim())?;
    check_dim("initial iterate", a.cols(), u0.dim())?;
    let rows: Vec<Vector> = (0..a.rows()).map(|i| a.row(i)).collect();
    if let Some(i) = rows.iter().position(|r| r.norm_sq() == 0.0) {
        return Err(Error::InvalidParameter(format!("row {i} is zero")));
    }
    let residual = |u: &Vector| (&a.matvec(u) - rhs).norm();
    let mut u = u0.clone();
    let mut rec = Recorder::new("kaczmarz", cfg.tol, state([("u", u.clone())]), residual(&u));
    for _ in 0..cfg.max_iters {
        let mut current = u.clone();
        let mut substeps = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            current = current.axpy((rhs[i] - row.dot(&current)) / row.norm_sq(), row);
            substeps.push(Substep { block: i, state: state([("u", current.clone())]) });
        }
        let r = residual(&current);
        let metrics = BTreeMap::from([("residual".to_string(), r)]);
        let flow = rec.record(state([("u", current.clone())]), r, metrics, substeps, &u, &current);
        u = current;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Cyclic projections with correction terms `q_j`, from `u⁰ = f`, `q⁰ = 0`.
pub fn dykstra(problem: &PocsProblem, cfg: &SolverConfig) -> Result<Trace> {
    let n = problem.dim();
    let mut u = problem.f.clone();
    let mut q = vec![Vector::zeros(n); problem.len()];
    let mut rec = Recorder::new("dykstra", cfg.tol, state([("u", u.clone()), ("q", Vector::concat(&q))]), problem.objective(&u));
    for _ in 0..cfg.max_iters {
        let before = Vector::concat([&u].into_iter().chain(&q));
        let mut current = u.clone();
        let mut substeps = Vec::with_capacity(problem.len());
        for (j, set) in problem.sets.iter().enumerate() {
            let next = set.project(&(&current + &q[j]))?;
            q[j] = &q[j] + &(&current - &next);
            current = next;
            substeps.push(Substep { block: j, state: state([("u", current.clone()), ("q", Vector::concat(&q))]) });
        }
        u = current;
        let after = Vector::concat([&u].into_iter().chain(&q));
        let flow = rec.record(
            state([("u", u.clone()), ("q", Vector::concat(&q))]),
            problem.objective(&u),
            problem.metrics(&u)?,
            substeps,
            &before,
            &after,
        );
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// `u⁺ = (1 - τJ)u + τ Σ proj_{K_j}(u)` from `u⁰ = f`.
pub fn parallel_von_neumann(problem: &PocsProblem, cfg: &SolverConfig) -> Result<Trace> {
    check_positive_tau(cfg.tau)?;
    let count = problem.len() as f64;
    let mut u = problem.f.clone();
    let mut rec = Recorder::new("parallel_von_neumann", cfg.tol, state([("u", u.clone())]), problem.objective(&u));
    for _ in 0..cfg.max_iters {
        let projections = problem.sets.par_iter().map(|k| k.project(&u)).collect::<Result<Vec<_>>>()?;
        let next = u.scale(1.0 - cfg.tau * count).axpy(cfg.tau, &Vector::sum_of(u.dim(), &projections));
        let flow = rec.record(state([("u", next.clone())]), problem.objective(&next), problem.metrics(&next)?, vec![], &u, &next);
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// `u_j = proj_{K_j}(u + q_j)`, `q_j += τ(u - u_j)`, `u⁺ = (1 - τJ)u + τΣu_j`.
pub fn parallel_dykstra(problem: &PocsProblem, cfg: &SolverConfig) -> Result<Trace> {
    check_positive_tau(cfg.tau)?;
    let (n, count) = (problem.dim(), problem.len() as f64);
    let mut u = problem.f.clone();
    let mut q = vec![Vector::zeros(n); problem.len()];
    let mut rec =
        Recorder::new("parallel_dykstra", cfg.tol, state([("u", u.clone()), ("q", Vector::concat(&q))]), problem.objective(&u));
    for _ in 0..cfg.max_iters {
        let before = Vector::concat([&u].into_iter().chain(&q));
        let local = problem.sets.par_iter().zip(&q).map(|(k, qj)| k.project(&(&u + qj))).collect::<Result<Vec<_>>>()?;
        for (qj, uj) in q.iter_mut().zip(&local) {
            *qj = qj.axpy(cfg.tau, &(&u - uj));
        }
        u = u.scale(1.0 - cfg.tau * count).axpy(cfg.tau, &Vector::sum_of(n, &local));
        let after = Vector::concat([&u].into_iter().chain(&q));
        let flow = rec.record(
            state([("u", u.clone()), ("q", Vector::concat(&q))]),
            problem.objective(&u),
            problem.metrics(&u)?,
            vec![],
            &before,
            &after,
        );
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// `(ΣA_j + αI)u = f` with symmetric positive definite `A_j`.
#[derive(Clone, Debug)]
pub struct MultiLinearProblem {
    ops: Vec<LinOp>,
    alpha: f64,
    f: Vector,
    shifted: Vec<SpdFactor>,
}

impl MultiLinearProblem {
    pub fn new(ops: Vec<LinOp>, alpha: f64, f: Vector) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Empty);
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
        }
        let n = f.dim();
        let mut shifted = Vec::with_capacity(ops.len());
        for a in &ops {
            check_dim("operator", n, a.domain_dim())?;
            a.factor_spd()?;
            shifted.push(a.to_dense().add(&Matrix::identity(n).scale(alpha)).cholesky()?);
        }
        Ok(Self { ops, alpha, f, shifted })
    }

    pub fn ops(&self) -> &[LinOp] {
        &self.ops
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f(&self) -> &Vector {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Direct solve of `(ΣA_j + αI)u = f`.
    pub fn solution(&self) -> Result<Vector> {
        let n = self.dim();
        let mut total = Matrix::identity(n).scale(self.alpha);
        for a in &self.ops {
            total = total.add(&a.to_dense());
        }
        Ok(total.cholesky()?.solve(&self.f))
    }

    pub fn objective(&self, u: &Vector) -> f64 {
        let quad: f64 = self.ops.iter().map(|a| a.forward(u).dot(u)).sum();
        0.5 * quad + 0.5 * self.alpha * u.norm_sq() - self.f.dot(u)
    }

    /// `(1/2α)‖Σp_j - f‖² + ½Σ(A_j⁻¹p_j, p_j)` on `V^J`.
    pub fn dual_energy(&self) -> Result<(Energy, Decomposition)> {
        let n = self.dim();
        let coupling = ConvexFn::precompose(
            ConvexFn::squared_distance(1.0 / self.alpha, self.f.clone())?,
            LinOp::hcat(vec![LinOp::identity(n); self.ops.len()])?,
            None,
        )?;
        let inverses = self
            .ops
            .iter()
            .map(|a| ConvexFn::quadratic(LinOp::dense(a.factor_spd()?.inverse()), Vector::zeros(n), 0.0))
            .collect::<Result<Vec<_>>>()?;
        let energy = Energy::smooth(ConvexFn::sum(vec![coupling, ConvexFn::separable(inverses)?])?);
        Ok((energy, Decomposition::contiguous(&vec![n; self.ops.len()])?))
    }
}

/// Cyclic solves `u^{n+j/J} = (A_j + αI)⁻¹(f - Σ_{i≠j} A_i u_i)`, each `u_i`
/// the latest iterate produced by block `i`.
///
/// `warm[j]` plays the role of `u^{-1+(j+1)/J}`; zeros when omitted. The state
/// `last` stacks the latest iterate of every block.
pub fn pr_linear(problem: &MultiLinearProblem, cfg: &SolverConfig, warm: Option<&[Vector]>) -> Result<Trace> {
    let (n, count) = (problem.dim(), problem.ops.len());
    let mut last: Vec<Vector> = match warm {
        Some(w) => {
            check_dim("warm starts", count, w.len())?;
            for x in w {
                check_dim("warm start", n, x.dim())?;
            }
            w.to_vec()
        }
        None => vec![Vector::zeros(n); count],
    };
    let mut images: Vec<Vector> = problem.ops.iter().zip(&last).map(|(a, x)| a.forward(x)).collect();
    let mut u = last[count - 1].clone();
    let mut rec =
        Recorder::new("pr_linear", cfg.tol, state([("u", u.clone()), ("last", Vector::concat(&last))]), problem.objective(&u));
    for _ in 0..cfg.max_iters {
        let mut substeps = Vec::with_capacity(count);
        for j in 0..count {
            let mut rhs = problem.f.clone();
            for (i, image) in images.iter().enumerate() {
                if i != j {
                    rhs = &rhs - image;
                }
            }
            last[j] = problem.shifted[j].solve(&rhs);
            images[j] = problem.ops[j].forward(&last[j]);
            substeps.push(Substep { block: j, state: state([("u", last[j].clone())]) });
        }
        let next = last[count - 1].clone();
        let residual = {
            let mut r = next.scale(problem.alpha);
            for a in &problem.ops {
                r = &r + &a.forward(&next);
            }
            (&r - &problem.f).norm()
        };
        let metrics = BTreeMap::from([("residual".to_string(), residual)]);
        let flow = rec.record(
            state([("u", next.clone()), ("last", Vector::concat(&last))]),
            problem.objective(&next),
            metrics,
            substeps,
            &u,
            &next,
        );
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// One term `G_j(B_j u)`.
#[derive(Clone, Debug)]
pub struct SplitTerm {
    pub g: ConvexFn,
    pub b: LinOp,
}

/// `min F(u) + Σ G_j(B_j u)` with `F` smooth and strongly convex.
#[derive(Clone, Debug)]
pub struct MultiConvexProblem {
    f: ConvexFn,
    terms: Vec<SplitTerm>,
}

impl MultiConvexProblem {
    pub fn new(f: ConvexFn, terms: Vec<SplitTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty);
        }
        if !f.is_smooth() || f.strong_convexity() <= 0.0 {
            return Err(Error::InvalidParameter(format!("F must be smooth and strongly convex, got {}", f.kind_name())));
        }
        for t in &terms {
            check_dim("term operator domain", f.dim(), t.b.domain_dim())?;
            check_dim("term operator codomain", t.g.dim(), t.b.codomain_dim())?;
        }
        Ok(Self { f, terms })
    }

    /// `F = (α/2)‖·‖²` with the given terms.
    pub fn special(alpha: f64, terms: Vec<SplitTerm>) -> Result<Self> {
        let dim = terms.first().ok_or(Error::Empty)?.b.domain_dim();
        Self::new(ConvexFn::squared_distance(alpha, Vector::zeros(dim))?, terms)
    }

    pub fn f(&self) -> &ConvexFn {
        &self.f
    }

    pub fn terms(&self) -> &[SplitTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Dimensions of the dual blocks `W_j`.
    pub fn dual_sizes(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.b.codomain_dim()).collect()
    }

    pub fn objective(&self, u: &Vector) -> Result<f64> {
        let mut total = self.f.eval(u)?;
        for t in &self.terms {
            let value = t.g.eval(&t.b.apply(u)?)?;
            if value == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += value;
        }
        Ok(total)
    }

    pub fn primal_dual(&self) -> Result<PrimalDualProblem> {
        PrimalDualProblem::new(
            self.f.clone(),
            ConvexFn::separable(self.terms.iter().map(|t| t.g.clone()).collect())?,
            LinOp::vstack(self.terms.iter().map(|t| t.b.clone()).collect())?,
        )
    }

    /// `F*(-ΣB_jᵗp_j) + ΣG_j*(p_j)` on `∏W_j`.
    pub fn dual_energy(&self) -> Result<(Energy, Decomposition)> {
        let stacked = LinOp::hcat(self.terms.iter().map(|t| t.b.transpose()).collect())?.scaled(-1.0);
        let coupling = ConvexFn::precompose(self.f.conjugate()?, stacked, None)?;
        let conjugates = ConvexFn::separable(self.terms.iter().map(|t| t.g.conjugate()).collect::<Result<Vec<_>>>()?)?;
        let energy = Energy::from_fn(ConvexFn::sum(vec![coupling, conjugates])?)?;
        Ok((energy, Decomposition::contiguous(&self.dual_sizes())?))
    }

    /// `∇F*(-ΣB_jᵗp_j)` for stacked `p`.
    pub fn recover(&self, p: &Vector) -> Result<Vector> {
        let parts = p.split(&self.dual_sizes());
        let mut total = Vector::zeros(self.dim());
        for (t, pj) in self.terms.iter().zip(&parts) {
            total = &total - &t.b.apply_adjoint(pj)?;
        }
        self.f.grad_conjugate(&total)
    }

    /// Stacked shifts `v_j = -B_jᵗp_j`.
    pub fn shifts(&self, p: &Vector) -> Result<Vector> {
        let parts = p.split(&self.dual_sizes());
        let shifts = self.terms.iter().zip(&parts).map(|(t, pj)| Ok(-&t.b.apply_adjoint(pj)?)).collect::<Result<Vec<_>>>()?;
        Ok(Vector::concat(&shifts))
    }

    /// `argmin D_F(u; anchor) + (v_j, u) + G_j(B_j u)`.
    fn shifted_step(&self, j: usize, anchor: &Vector, shift: &Vector, iteration: usize) -> Result<Vector> {
        let solve = || -> Result<Vector> {
            let tilt = shift - &self.f.grad(anchor)?;
            let local = ConvexFn::tilt(self.f.clone(), tilt)?;
            minimize_composite(&local, &self.terms[j].g, &self.terms[j].b, anchor)
        };
        solve().map_err(|e| Error::LocalSolve { block: j, iteration, reason: e.to_string() })
    }

    /// True when `F` is quadratic with Hessian `cI`, so `∇F*(Σv)` has the
    /// closed relaxation form.
    fn scalar_quadratic(&self) -> Result<bool> {
        Ok(self.f.is_quadratic() && self.f.hessian(&Vector::zeros(self.dim()))?.as_scalar_identity(1e-12).is_some())
    }

    fn initial_shifts(&self, v0: Option<&[Vector]>) -> Result<Vec<Vector>> {
        let n = self.dim();
        match v0 {
            Some(v) => {
                check_dim("initial shifts", self.len(), v.len())?;
                for x in v {
                    check_dim("initial shift", n, x.dim())?;
                }
                Ok(v.to_vec())
            }
            None => Ok(vec![Vector::zeros(n); self.len()]),
        }
    }
}

/// Cyclic Bregman-proximal steps with gradient shifts `v_j`.
///
/// Records `u`, stacked `v`, and the fractional iterates of each sweep. With
/// `cfg.permutation` random, each sweep visits the terms in a seeded order.
pub fn generalized_pr(problem: &MultiConvexProblem, cfg: &SolverConfig, u0: &Vector, v0: Option<&[Vector]>) -> Result<Trace> {
    check_dim("initial iterate", problem.dim(), u0.dim())?;
    let mut v = problem.initial_shifts(v0)?;
    let mut u = u0.clone();
    let mut order = BlockOrder::new(cfg, problem.len());
    let mut rec =
        Recorder::new("generalized_pr", cfg.tol, state([("u", u.clone()), ("v", Vector::concat(&v))]), problem.objective(&u)?);
    for n in 0..cfg.max_iters {
        let perm = order.next_sweep();
        let mut current = u.clone();
        let mut substeps = Vec::with_capacity(problem.len());
        for &j in &perm {
            let next = problem.shifted_step(j, &current, &v[j], n + 1)?;
            v[j] = &(&v[j] + &problem.f.grad(&next)?) - &problem.f.grad(&current)?;
            current = next;
            substeps.push(Substep { block: j, state: state([("u", current.clone()), ("v", Vector::concat(&v))]) });
        }
        if order.is_random() {
            rec.push_permutation(perm);
        }
        let flow = rec.record(
            state([("u", current.clone()), ("v", Vector::concat(&v))]),
            problem.objective(&current)?,
            BTreeMap::new(),
            substeps,
            &u,
            &current,
        );
        u = current;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Generalized PR for differentiable `G_j`, with the shift of term `j`
/// rebuilt as `-B_jᵗ∇G_j(B_j w_j)` from the iterate `w_j` that term produced in
/// the previous sweep (`warm[j]` before the first sweep).
pub fn generalized_pr_gradient_shift(
    problem: &MultiConvexProblem,
    cfg: &SolverConfig,
    u0: &Vector,
    warm: &[Vector],
) -> Result<Trace> {
    check_dim("warm starts", problem.len(), warm.len())?;
    if let Some(j) = problem.terms.iter().position(|t| !t.g.is_smooth()) {
        return Err(Error::NotDifferentiable { kind: format!("term {j} ({})", problem.terms[j].g.kind_name()) });
    }
    let shift_at = |j: usize, w: &Vector| -> Result<Vector> {
        let t = &problem.terms[j];
        Ok(-&t.b.apply_adjoint(&t.g.grad(&t.b.apply(w)?)?)?)
    };
    let mut last = warm.to_vec();
    let mut u = u0.clone();
    let mut rec = Recorder::new("generalized_pr_gradient_shift", cfg.tol, state([("u", u.clone())]), problem.objective(&u)?);
    for n in 0..cfg.max_iters {
        let mut current = u.clone();
        let mut substeps = Vec::with_capacity(problem.len());
        for (j, previous) in last.iter_mut().enumerate() {
            let shift = shift_at(j, previous)?;
            current = problem.shifted_step(j, &current, &shift, n + 1)?;
            *previous = current.clone();
            substeps.push(Substep { block: j, state: state([("u", current.clone())]) });
        }
        let flow =
            rec.record(state([("u", current.clone())]), problem.objective(&current)?, BTreeMap::new(), substeps, &u, &current);
        u = current;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Relaxed cyclic splitting: hat iterates `û_j` from `û_0 = u`, shifts
/// `v_j += τ(∇F(û_j) - ∇F(û_{j-1}))`, then `u⁺ = ∇F*(Σv)`.
///
/// When `F` is quadratic with Hessian `cI` the final step is taken as
/// `u⁺ = (1-τ)u + τû_J`. Substeps hold the hat iterates.
pub fn generalized_dr(problem: &MultiConvexProblem, cfg: &SolverConfig, u0: &Vector, v0: Option<&[Vector]>) -> Result<Trace> {
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("relaxation τ must lie in (0, 1], got {}", cfg.tau)));
    }
    check_dim("initial iterate", problem.dim(), u0.dim())?;
    let simplified = problem.scalar_quadratic()?;
    let mut v = problem.initial_shifts(v0)?;
    let mut u = u0.clone();
    let mut rec =
        Recorder::new("generalized_dr", cfg.tol, state([("u", u.clone()), ("v", Vector::concat(&v))]), problem.objective(&u)?);
    for n in 0..cfg.max_iters {
        let mut hat = u.clone();
        let mut substeps = Vec::with_capacity(problem.len());
        for j in 0..problem.len() {
            let next = problem.shifted_step(j, &hat, &v[j], n + 1)?;
            let change = &problem.f.grad(&next)? - &problem.f.grad(&hat)?;
            v[j] = v[j].axpy(cfg.tau, &change);
            hat = next;
            substeps.push(Substep { block: j, state: state([("u", hat.clone()), ("v", Vector::concat(&v))]) });
        }
        let next = if simplified {
            u.lincomb(1.0 - cfg.tau, &hat, cfg.tau)
        } else {
            problem.f.grad_conjugate(&Vector::sum_of(problem.dim(), &v))?
        };
        let flow = rec.record(
            state([("u", next.clone()), ("v", Vector::concat(&v))]),
            problem.objective(&next)?,
            BTreeMap::new(),
            substeps,
            &u,
            &next,
        );
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Parallel splitting: `u_j` from the shared anchor `u`, shifts
/// `v_j += τ(∇F(u_j) - ∇F(u))`, then `u⁺ = ∇F*(Σv)`, or
/// `u⁺ = (1-τJ)u + τΣu_j` when `F` is quadratic with Hessian `cI`.
pub fn parallel_dr(problem: &MultiConvexProblem, cfg: &SolverConfig, u0: &Vector, v0: Option<&[Vector]>) -> Result<Trace> {
    check_positive_tau(cfg.tau)?;
    check_dim("initial iterate", problem.dim(), u0.dim())?;
    let simplified = problem.scalar_quadratic()?;
    let (n, count) = (problem.dim(), problem.len());
    let mut v = problem.initial_shifts(v0)?;
    let mut u = u0.clone();
    let mut rec =
        Recorder::new("parallel_dr", cfg.tol, state([("u", u.clone()), ("v", Vector::concat(&v))]), problem.objective(&u)?);
    for it in 0..cfg.max_iters {
        let local = (0..count).into_par_iter().map(|j| problem.shifted_step(j, &u, &v[j], it + 1)).collect::<Result<Vec<_>>>()?;
        let anchor_grad = problem.f.grad(&u)?;
        for (vj, uj) in v.iter_mut().zip(&local) {
            *vj = vj.axpy(cfg.tau, &(&problem.f.grad(uj)? - &anchor_grad));
        }
        let next = if simplified {
            u.scale(1.0 - cfg.tau * count as f64).axpy(cfg.tau, &Vector::sum_of(n, &local))
        } else {
            problem.f.grad_conjugate(&Vector::sum_of(n, &v))?
        };
        let flow = rec.record(
            state([("u", next.clone()), ("v", Vector::concat(&v))]),
            problem.objective(&next)?,
            BTreeMap::new(),
            vec![],
            &u,
            &next,
        );
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}
