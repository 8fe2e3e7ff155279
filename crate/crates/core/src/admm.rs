//! Multiplier methods for `min ΣF_j(u_j)` subject to `ΣB_j u_j = g`.
//!
//! Covers the plain, symmetrized and randomly permuted ADMM sweeps, their
//! inexact-Uzawa smoothers on quadratic problems, the two-block method with
//! its Douglas-Rachford dual, and the sharing-problem variants obtained by
//! dualizing the multi-block splittings.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{fenchel_young_residual, minimize, minimize_composite, ConvexFn};
use crate::correction::{BlockOrder, Decomposition, Energy, PermutationMode, SolverConfig};
use crate::error::{Error, Result};
use crate::linops::{check_dim, LinOp, Matrix, Vector};
use crate::projsplit::{MultiConvexProblem, SplitTerm};
use crate::trace::{state, Flow, Recorder, Substep, Trace};

/// Symmetry tolerance for smoother operators.
const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as nonnegative in the Uzawa conditions.
const EIGEN_TOL: f64 = 1e-10;
/// Largest block count for which the permutation average is enumerated.
const MAX_ENUMERATED_BLOCKS: usize = 4;

/// One block `F_j(u_j)` with coupling operator `B_j : V_j → W`.
#[derive(Clone, Debug)]
pub struct Block {
    pub f: ConvexFn,
    pub b: LinOp,
}

impl Block {
    pub fn new(f: ConvexFn, b: LinOp) -> Result<Self> {
        check_dim("block function", b.domain_dim(), f.dim())?;
        Ok(Self { f, b })
    }

    /// `argmin F(u) + (λ, Bu) + (β/2)‖Bu - target‖²`.
    fn argmin(&self, multiplier: &Vector, target: &Vector, beta: f64, x0: &Vector) -> Result<Vector> {
        let penalty = ConvexFn::precompose(
            ConvexFn::tilt(ConvexFn::squared_distance(beta, target.clone())?, multiplier.clone())?,
            self.b.clone(),
            None,
        )?;
        if self.f.is_smooth() {
            minimize(Some(&ConvexFn::sum(vec![self.f.clone(), penalty])?), None, x0)
        } else {
            minimize(Some(&penalty), Some(&self.f), x0)
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("penalty β must be positive, got {beta}")))
    }
}

fn check_blocks(blocks: &[Block], g: &Vector) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::Empty);
    }
    for block in blocks {
        check_dim("block codomain", g.dim(), block.b.codomain_dim())?;
    }
    Ok(())
}

/// `min ΣF_j(u_j)` subject to `ΣB_j u_j = g`, with penalty `β`.
#[derive(Clone, Debug)]
pub struct ConstrainedProblem {
    blocks: Vec<Block>,
    g: Vector,
    beta: f64,
}

impl ConstrainedProblem {
    pub fn new(blocks: Vec<Block>, g: Vector, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        check_blocks(&blocks, &g)?;
        Ok(Self { blocks, g, beta })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn g(&self) -> &Vector {
        &self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.blocks.clone(), self.g.clone(), beta)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Dimensions of the blocks `V_j`.
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.b.domain_dim()).collect()
    }

    pub fn dim(&self) -> usize {
        self.sizes().iter().sum()
    }

    fn images(&self, parts: &[Vector]) -> Result<Vec<Vector>> {
        self.blocks.iter().zip(parts).map(|(b, u)| b.b.apply(u)).collect()
    }

    /// `ΣB_j u_j - g` for stacked `u`.
    pub fn constraint_gap(&self, u: &Vector) -> Result<Vector> {
        check_dim("stacked iterate", self.dim(), u.dim())?;
        let images = self.images(&u.split(&self.sizes()))?;
        Ok(&Vector::sum_of(self.g.dim(), &images) - &self.g)
    }

    pub fn objective(&self, u: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for (block, part) in self.blocks.iter().zip(u.split(&self.sizes())) {
            total += block.f.eval(&part)?;
        }
        Ok(total)
    }

    /// Fenchel-Young residuals `F_j(u_j) + F_j*(-B_jᵗλ) + (B_jᵗλ, u_j)` per block.
    pub fn stationarity(&self, u: &Vector, lambda: &Vector) -> Result<Vec<f64>> {
        self.blocks
            .iter()
            .zip(u.split(&self.sizes()))
            .map(|(block, part)| fenchel_young_residual(&block.f, &part, &-&block.b.apply_adjoint(lambda)?))
            .collect()
    }

    fn quadratic_parts(&self) -> Result<Vec<(Matrix, Vector)>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(j, block)| match &block.f {
                ConvexFn::Quadratic { op, linear, .. } => Ok((op.to_dense(), linear.clone())),
                ConvexFn::SquaredDistance { alpha, center } => {
                    Ok((Matrix::identity(center.dim()).scale(*alpha), center.scale(*alpha)))
                }
                other => Err(Error::Unsupported {
                    operation: "quadratic assembly",
                    kind: format!("block {j}: {}", other.kind_name()),
                    supported: "quadratic or squared-distance blocks",
                }),
            })
            .collect()
    }

    /// Dense `Ã_β = diag(A_j) + βB̃ᵗB̃`, `B̃` and `f̃_β` of a quadratic problem.
    pub fn saddle_system(&self) -> Result<SaddleSystem> {
        let parts = self.quadratic_parts()?;
        let sizes = self.sizes();
        let n = self.dim();
        let coupling = LinOp::hcat(self.blocks.iter().map(|b| b.b.clone()).collect())?.to_dense();
        let mut a = coupling.transpose().matmul(&coupling).scale(self.beta);
        let mut offset = 0;
        let mut rhs = Vec::with_capacity(n);
        let bt_g = coupling.tmatvec(&self.g).scale(self.beta);
        for ((block, linear), size) in parts.iter().zip(&sizes) {
            let mut diag = Matrix::zeros(n, n);
            diag.set_block(offset, offset, block);
            a = a.add(&diag);
            rhs.extend((0..*size).map(|i| linear[i] + bt_g[offset + i]));
            offset += size;
        }
        Ok(SaddleSystem { a_beta: a, coupling, f_beta: Vector::new(rhs)?, g: self.g.clone(), sizes })
    }

    /// Direct solve of the saddle system for quadratic problems.
    pub fn kkt_solution(&self) -> Result<(Vector, Vector)> {
        let system = self.saddle_system()?;
        let (n, m) = (system.a_beta.rows(), system.g.dim());
        let mut full = Matrix::zeros(n + m, n + m);
        full.set_block(0, 0, &system.a_beta);
        full.set_block(0, n, &system.coupling.transpose());
        full.set_block(n, 0, &system.coupling);
        let rhs = Vector::concat([&system.f_beta, &system.g]);
        let solution = full.inverse()?.matvec(&rhs);
        Ok((solution.segment(0, n), solution.segment(n, m)))
    }

    fn initial(&self, u0: &Vector, lambda0: &Vector) -> Result<()> {
        check_dim("initial iterate", self.dim(), u0.dim())?;
        check_dim("initial multiplier", self.g.dim(), lambda0.dim())
    }
}

/// Dense pieces of the saddle system of a quadratic constrained problem.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub a_beta: Matrix,
    pub coupling: Matrix,
    pub f_beta: Vector,
    pub g: Vector,
    pub sizes: Vec<usize>,
}

impl SaddleSystem {
    fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.sizes
            .iter()
            .map(|s| {
                let range = start..start + s;
                start += s;
                range
            })
            .collect()
    }

    /// Block lower-triangular part of `Ã_β` (diagonal included) with respect
    /// to the visiting order `order`.
    fn lower_part(&self, order: &[usize]) -> Matrix {
        let ranges = self.block_ranges();
        let mut position = vec![0; order.len()];
        for (pos, &j) in order.iter().enumerate() {
            position[j] = pos;
        }
        let n = self.a_beta.rows();
        let mut lower = Matrix::zeros(n, n);
        for (i, ri) in ranges.iter().enumerate() {
            for (j, rj) in ranges.iter().enumerate() {
                if position[j] <= position[i] {
                    let idx_i: Vec<usize> = ri.clone().collect();
                    let idx_j: Vec<usize> = rj.clone().collect();
                    lower.set_block(ri.start, rj.start, &self.a_beta.select(&idx_i, &idx_j));
                }
            }
        }
        lower
    }

    fn block_diagonal(&self) -> Matrix {
        let n = self.a_beta.rows();
        let mut diag = Matrix::zeros(n, n);
        for r in self.block_ranges() {
            let idx: Vec<usize> = r.clone().collect();
            diag.set_block(r.start, r.start, &self.a_beta.select(&idx, &idx));
        }
        diag
    }
}

/// Smoother choices that reproduce the ADMM variants on quadratic problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoother {
    /// `R_V = (L + D)⁻¹`.
    Plain,
    /// `R_V = (L + D)⁻ᵗ D (L + D)⁻¹`.
    Symmetrized,
    /// `R_V` averaged over all block orders.
    RandomAverage,
}

/// Primal and multiplier smoothers `(R_V, R_W)` of an inexact Uzawa step.
#[derive(Clone, Debug)]
pub struct UzawaSmootherPair {
    pub r_v: Matrix,
    pub r_w: Matrix,
    pub symmetric_v: bool,
    pub symmetric_w: bool,
}

impl UzawaSmootherPair {
    pub fn new(r_v: Matrix, r_w: Matrix) -> Self {
        let symmetric_v = r_v.asymmetry() <= SYMMETRY_TOL;
        let symmetric_w = r_w.asymmetry() <= SYMMETRY_TOL;
        Self { r_v, r_w, symmetric_v, symmetric_w }
    }

    /// The smoothers matching `smoother` on the quadratic problem, with `R_W = βI`.
    pub fn for_admm(problem: &ConstrainedProblem, smoother: Smoother) -> Result<Self> {
        let system = problem.saddle_system()?;
        let count = problem.len();
        let forward: Vec<usize> = (0..count).collect();
        let r_v = match smoother {
            Smoother::Plain => system.lower_part(&forward).inverse()?,
            Smoother::Symmetrized => {
                let inv = system.lower_part(&forward).inverse()?;
                inv.transpose().matmul(&system.block_diagonal()).matmul(&inv)
            }
            Smoother::RandomAverage => {
                if count > MAX_ENUMERATED_BLOCKS {
                    return Err(Error::InvalidParameter(format!(
                        "permutation averaging is enumerated for at most {MAX_ENUMERATED_BLOCKS} blocks, got {count}"
                    )));
                }
                let orders = permutations(count);
                let n = system.a_beta.rows();
                let mut total = Matrix::zeros(n, n);
                for order in &orders {
                    total = total.add(&system.lower_part(order).inverse()?);
                }
                total.scale(1.0 / orders.len() as f64)
            }
        };
        let m = problem.g().dim();
        Ok(Self::new(r_v, Matrix::identity(m).scale(problem.beta())))
    }

    /// `u ← u + R_V(f̃_β - Ã_βu - B̃ᵗλ)`, `λ ← λ + R_W(B̃u - g)`.
    pub fn step(&self, system: &SaddleSystem, u: &Vector, lambda: &Vector) -> (Vector, Vector) {
        let residual = &(&system.f_beta - &system.a_beta.matvec(u)) - &system.coupling.tmatvec(lambda);
        let u_next = u + &self.r_v.matvec(&residual);
        let lambda_next = lambda + &self.r_w.matvec(&(&system.coupling.matvec(&u_next) - &system.g));
        (u_next, lambda_next)
    }
}

/// All orderings of `0..count`, in lexicographic order.
fn permutations(count: usize) -> Vec<Vec<usize>> {
    if count == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..count {
        for rest in permutations(count - 1) {
            let mut order = vec![first];
            order.extend(rest.into_iter().map(|k| if k >= first { k + 1 } else { k }));
            out.push(order);
        }
    }
    out
}

/// Outcome of the two sufficient conditions for inexact Uzawa convergence.
#[derive(Clone, Debug, Serialize)]
pub struct UzawaReport {
    pub symmetric_v: bool,
    pub symmetric_w: bool,
    /// Smallest eigenvalue of `sym(R_V⁻¹) - Ã_β`.
    pub primal_margin: f64,
    /// Smallest eigenvalue of `sym(R_W⁻¹) - B̃Ã_β⁻¹B̃ᵗ`.
    pub multiplier_margin: f64,
    pub primal_condition: bool,
    pub multiplier_condition: bool,
    /// Both smoothers symmetric and both conditions met.
    pub guaranteed: bool,
}

/// Checks `(Ã_βu, u) <= (R_V⁻¹u, u)` and `(B̃Ã_β⁻¹B̃ᵗλ, λ) <= (R_W⁻¹λ, λ)`.
pub fn uzawa_check_quadratic(problem: &ConstrainedProblem, smoother: &UzawaSmootherPair) -> Result<UzawaReport> {
    let system = problem.saddle_system()?;
    let n = system.a_beta.rows();
    check_dim("R_V", n, smoother.r_v.rows())?;
    check_dim("R_W", system.g.dim(), smoother.r_w.rows())?;
    let primal_margin = min_eigenvalue(&smoother.r_v.inverse()?.sub(&system.a_beta));
    let schur = system.coupling.matmul(&system.a_beta.cholesky()?.inverse()).matmul(&system.coupling.transpose());
    let multiplier_margin = min_eigenvalue(&smoother.r_w.inverse()?.sub(&schur));
    let primal_condition = primal_margin >= -EIGEN_TOL;
    let multiplier_condition = multiplier_margin >= -EIGEN_TOL;
    Ok(UzawaReport {
        symmetric_v: smoother.symmetric_v,
        symmetric_w: smoother.symmetric_w,
        primal_margin,
        multiplier_margin,
        primal_condition,
        multiplier_condition,
        guaranteed: smoother.symmetric_v && smoother.symmetric_w && primal_condition && multiplier_condition,
    })
}

fn min_eigenvalue(m: &Matrix) -> f64 {
    m.symmetric_eigenvalues().first().copied().unwrap_or(0.0)
}

/// Block visiting pattern of one ADMM iteration.
enum Sweep {
    Forward,
    ForwardBackward,
    Random,
}

fn constraint_metrics(gap: &Vector) -> BTreeMap<String, f64> {
    BTreeMap::from([("constraint_residual".to_string(), gap.norm())])
}

fn admm_run(
    name: &str,
    problem: &ConstrainedProblem,
    sweep: Sweep,
    cfg: &SolverConfig,
    u0: &Vector,
    lambda0: &Vector,
) -> Result<Trace> {
    problem.initial(u0, lambda0)?;
    let sizes = problem.sizes();
    let mut parts = u0.split(&sizes);
    let mut images = problem.images(&parts)?;
    let mut lambda = lambda0.clone();
    let random_cfg = SolverConfig { permutation: PermutationMode::RandomEachSweep, ..cfg.clone() };
    let mut order = BlockOrder::new(if matches!(sweep, Sweep::Random) { &random_cfg } else { cfg }, problem.len());
    let count = problem.len();
    let mut rec = Recorder::new(name, cfg.tol, state([("u", u0.clone()), ("lambda", lambda.clone())]), problem.objective(u0)?)
        .watch_divergence("constraint_residual");
    for n in 0..cfg.max_iters {
        let before = Vector::concat(parts.iter().chain([&lambda]));
        let visits: Vec<usize> = match sweep {
            Sweep::Forward => (0..count).collect(),
            Sweep::ForwardBackward => (0..count).chain((0..count).rev()).collect(),
            Sweep::Random => order.next_sweep(),
        };
        for &j in &visits {
            let others = images.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, w)| w);
            let target = &problem.g - &Vector::sum_of(problem.g.dim(), others);
            parts[j] = problem.blocks[j].argmin(&lambda, &target, problem.beta, &parts[j]).map_err(|e| Error::LocalSolve {
                block: j,
                iteration: n + 1,
                reason: e.to_string(),
            })?;
            images[j] = problem.blocks[j].b.apply(&parts[j])?;
        }
        if matches!(sweep, Sweep::Random) {
            rec.push_permutation(visits);
        }
        let gap = &Vector::sum_of(problem.g.dim(), &images) - &problem.g;
        lambda = lambda.axpy(problem.beta, &gap);
        let u = Vector::concat(&parts);
        let after = Vector::concat(parts.iter().chain([&lambda]));
        let flow = rec.record(
            state([("u", u.clone()), ("lambda", lambda.clone())]),
            problem.objective(&u)?,
            constraint_metrics(&gap),
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

/// Cyclic minimization of the augmented Lagrangian over `u_1, ..., u_J`,
/// then `λ⁺ = λ + β(ΣB_ju_j - g)`.
pub fn admm_plain(problem: &ConstrainedProblem, cfg: &SolverConfig, u0: &Vector, lambda0: &Vector) -> Result<Trace> {
    admm_run("admm_plain", problem, Sweep::Forward, cfg, u0, lambda0)
}

/// A forward sweep `1..J` and a backward sweep `J..1` before each multiplier update.
pub fn admm_symmetrized(problem: &ConstrainedProblem, cfg: &SolverConfig, u0: &Vector, lambda0: &Vector) -> Result<Trace> {
    admm_run("admm_symmetrized", problem, Sweep::ForwardBackward, cfg, u0, lambda0)
}

/// Blocks visited in a fresh seeded random order each iteration; the orders
/// are stored in [`Trace::permutations`].
pub fn admm_random_permuted(problem: &ConstrainedProblem, cfg: &SolverConfig, u0: &Vector, lambda0: &Vector) -> Result<Trace> {
    admm_run("admm_random_permuted", problem, Sweep::Random, cfg, u0, lambda0)
}

fn check_two_block(problem: &ConstrainedProblem) -> Result<()> {
    let second = problem.blocks.get(1).map(|b| &b.b);
    let minus_identity = problem.len() == 2
        && second.is_some_and(|b| {
            b.domain_dim() == b.codomain_dim()
                && b.to_dense().sub(&Matrix::identity(b.domain_dim()).scale(-1.0)).frobenius_norm() == 0.0
        });
    if minus_identity {
        Ok(())
    } else {
        Err(Error::InvalidParameter("two-block ADMM needs exactly two blocks with B₂ = -I".into()))
    }
}

/// Plain ADMM on `F_1(u_1) + F_2(u_2)` subject to `B_1u_1 - u_2 = g`; records
/// `u1`, `u2` and `lambda`.
pub fn admm_two_block(
    problem: &ConstrainedProblem,
    cfg: &SolverConfig,
    u1: &Vector,
    u2: &Vector,
    lambda0: &Vector,
) -> Result<Trace> {
    check_two_block(problem)?;
    let mut trace = admm_run("admm_two_block", problem, Sweep::Forward, cfg, &Vector::concat([u1, u2]), lambda0)?;
    let sizes = problem.sizes();
    for record in &mut trace.records {
        let parts = record.get("u")?.split(&sizes);
        record.state.remove("u");
        record.state.insert("u1".into(), parts[0].clone());
        record.state.insert("u2".into(), parts[1].clone());
    }
    Ok(trace)
}

/// Douglas-Rachford on `F_1*(-B_1ᵗp) + F_2*(p) + (g, p)`:
/// `p⁺ = argmin F_1*(-B_1ᵗp) + (g, p) + (1/2β)‖p + q - 2r‖²`,
/// `q⁺ = p⁺ + q - r`, `r⁺ = prox_{βF_2*}(q⁺)`.
pub fn dr_dual_two_block(
    problem: &ConstrainedProblem,
    cfg: &SolverConfig,
    p0: &Vector,
    q0: &Vector,
    r0: &Vector,
) -> Result<Trace> {
    check_two_block(problem)?;
    let m = problem.g.dim();
    check_dim("initial p", m, p0.dim())?;
    check_dim("initial q", m, q0.dim())?;
    check_dim("initial r", m, r0.dim())?;
    let beta = problem.beta;
    let first = &problem.blocks[0];
    let second = &problem.blocks[1].f;
    let conj_first = first.f.conjugate()?;
    let neg_bt = first.b.transpose().scaled(-1.0);
    let value =
        |p: &Vector| -> Result<f64> { Ok(conj_first.eval(&neg_bt.apply(p)?)? + second.conjugate()?.eval(p)? + problem.g.dot(p)) };
    let (mut p, mut q, mut r) = (p0.clone(), q0.clone(), r0.clone());
    let mut rec =
        Recorder::new("dr_dual_two_block", cfg.tol, state([("p", p.clone()), ("q", q.clone()), ("r", r.clone())]), value(&p)?);
    for n in 0..cfg.max_iters {
        let before = Vector::concat([&p, &q, &r]);
        let center = &r.scale(2.0) - &q;
        let local = ConvexFn::tilt(ConvexFn::squared_distance(1.0 / beta, center)?, problem.g.clone())?;
        p = minimize_composite(&local, &conj_first, &neg_bt, &p).map_err(|e| Error::LocalSolve {
            block: 0,
            iteration: n + 1,
            reason: e.to_string(),
        })?;
        q = &(&p + &q) - &r;
        r = crate::convex::prox_conjugate_via_moreau(second, &q, beta).map_err(|e| Error::LocalSolve {
            block: 1,
            iteration: n + 1,
            reason: e.to_string(),
        })?;
        let after = Vector::concat([&p, &q, &r]);
        let flow = rec.record(
            state([("p", p.clone()), ("q", q.clone()), ("r", r.clone())]),
            value(&p)?,
            BTreeMap::new(),
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

/// Proximal point iteration on the dual of a one-block problem:
/// `p⁺ = argmin F*(-Bᵗp) + (g, p) + (1/2β)‖p - p⁽ⁿ⁾‖²`.
pub fn proximal_point_dual(problem: &ConstrainedProblem, cfg: &SolverConfig, p0: &Vector) -> Result<Trace> {
    if problem.len() != 1 {
        return Err(Error::InvalidParameter(format!("the proximal point dual needs one block, got {}", problem.len())));
    }
    check_dim("initial p", problem.g.dim(), p0.dim())?;
    let block = &problem.blocks[0];
    let conj = block.f.conjugate()?;
    let neg_bt = block.b.transpose().scaled(-1.0);
    let value = |p: &Vector| -> Result<f64> { Ok(conj.eval(&neg_bt.apply(p)?)? + problem.g.dot(p)) };
    let mut p = p0.clone();
    let mut rec = Recorder::new("proximal_point_dual", cfg.tol, state([("p", p.clone())]), value(&p)?);
    for n in 0..cfg.max_iters {
        let local = ConvexFn::tilt(ConvexFn::squared_distance(1.0 / problem.beta, p.clone())?, problem.g.clone())?;
        let next = minimize_composite(&local, &conj, &neg_bt, &p).map_err(|e| Error::LocalSolve {
            block: 0,
            iteration: n + 1,
            reason: e.to_string(),
        })?;
        let flow = rec.record(state([("p", next.clone())]), value(&next)?, BTreeMap::new(), vec![], &p, &next);
        p = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// `min Σ_{j<J} F_j(u_j) + (β/2)‖Σ_{j<J} B_ju_j - g‖²`: the constrained
/// problem whose last block is `(β/2)‖u_J‖²` with `B_J = -I`.
#[derive(Clone, Debug)]
pub struct SharingProblem {
    terms: Vec<Block>,
    g: Vector,
    beta: f64,
}

impl SharingProblem {
    pub fn new(terms: Vec<Block>, g: Vector, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        check_blocks(&terms, &g)?;
        Ok(Self { terms, g, beta })
    }

    pub fn terms(&self) -> &[Block] {
        &self.terms
    }

    pub fn g(&self) -> &Vector {
        &self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.b.domain_dim()).collect()
    }

    /// Stacked `B_ju_j`.
    fn images(&self, parts: &[Vector]) -> Result<Vec<Vector>> {
        self.terms.iter().zip(parts).map(|(t, u)| t.b.apply(u)).collect()
    }

    pub fn objective(&self, u: &Vector) -> Result<f64> {
        let parts = u.split(&self.sizes());
        let mut total = 0.0;
        for (t, part) in self.terms.iter().zip(&parts) {
            total += t.f.eval(part)?;
        }
        let coupled = &Vector::sum_of(self.g.dim(), &self.images(&parts)?) - &self.g;
        Ok(total + 0.5 * self.beta * coupled.norm_sq())
    }

    /// The equivalent constrained problem with the explicit last block.
    pub fn as_constrained(&self) -> Result<ConstrainedProblem> {
        let m = self.g.dim();
        let mut blocks = self.terms.clone();
        blocks.push(Block::new(ConvexFn::squared_distance(self.beta, Vector::zeros(m))?, LinOp::scale(m, -1.0))?);
        ConstrainedProblem::new(blocks, self.g.clone(), self.beta)
    }

    /// The sharing objective as an energy on `∏V_j` with one block per term.
    pub fn energy(&self) -> Result<(Energy, Decomposition)> {
        let coupling = ConvexFn::precompose(
            ConvexFn::squared_distance(self.beta, self.g.clone())?,
            LinOp::hcat(self.terms.iter().map(|t| t.b.clone()).collect())?,
            None,
        )?;
        let local = ConvexFn::separable(self.terms.iter().map(|t| t.f.clone()).collect())?;
        Ok((Energy::from_fn(ConvexFn::sum(vec![coupling, local])?)?, Decomposition::contiguous(&self.sizes())?))
    }

    /// The dual `(1/2β)‖p‖² + (g, p) + ΣF_j*(-B_jᵗp)` as a splitting problem.
    pub fn dual_splitting(&self) -> Result<MultiConvexProblem> {
        let m = self.g.dim();
        let f = ConvexFn::tilt(ConvexFn::squared_distance(1.0 / self.beta, Vector::zeros(m))?, self.g.clone())?;
        let terms = self
            .terms
            .iter()
            .map(|t| Ok(SplitTerm { g: t.f.conjugate()?, b: t.b.transpose().scaled(-1.0) }))
            .collect::<Result<Vec<_>>>()?;
        MultiConvexProblem::new(f, terms)
    }

    /// Multiplier `β(ΣB_jw_j - g)` and stacked `B_jw_j` of a stacked `w`.
    pub fn multiplier_image(&self, w: &Vector) -> Result<(Vector, Vector)> {
        let images = self.images(&w.split(&self.sizes()))?;
        let lambda = (&Vector::sum_of(self.g.dim(), &images) - &self.g).scale(self.beta);
        Ok((lambda, Vector::concat(&images)))
    }

    fn initial(&self, v0: &[Vector], lambda0: &Vector) -> Result<()> {
        check_dim("initial v", self.len(), v0.len())?;
        for v in v0 {
            check_dim("initial v block", self.g.dim(), v.dim())?;
        }
        check_dim("initial multiplier", self.g.dim(), lambda0.dim())
    }

    fn solve_term(&self, j: usize, multiplier: &Vector, target: &Vector, x0: &Vector, iteration: usize) -> Result<Vector> {
        self.terms[j].argmin(multiplier, target, self.beta, x0).map_err(|e| Error::LocalSolve {
            block: j,
            iteration,
            reason: e.to_string(),
        })
    }
}

fn consensus_metrics(images: &[Vector], v: &[Vector]) -> BTreeMap<String, f64> {
    let residual = images.iter().zip(v).map(|(a, b)| a.dist(b).powi(2)).sum::<f64>().sqrt();
    BTreeMap::from([("consensus_residual".to_string(), residual)])
}

/// Dualization-based ADMM for the sharing problem.
///
/// Hat multipliers `λ̂_0 = λ`, `û_j = argmin F_j + (λ̂_{j-1}, B_ju) + (β/2)‖B_ju - v_j‖²`,
/// `λ̂_j = λ̂_{j-1} + β(B_jû_j - v_j)`, then `v_j⁺ = (1-τ)v_j + τB_jû_j` and
/// `λ⁺ = (1-τ)λ + τλ̂_{J-1}`. Record 0 stores zero for `u`; substeps hold
/// `û_j` (as `u_hat`) and `λ̂_j`.
pub fn admm_dualization_based(problem: &SharingProblem, cfg: &SolverConfig, v0: &[Vector], lambda0: &Vector) -> Result<Trace> {
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("relaxation τ must lie in (0, 1], got {}", cfg.tau)));
    }
    problem.initial(v0, lambda0)?;
    let sizes = problem.sizes();
    let mut v = v0.to_vec();
    let mut lambda = lambda0.clone();
    let mut parts: Vec<Vector> = sizes.iter().map(|&s| Vector::zeros(s)).collect();
    let mut rec = Recorder::new(
        "admm_dualization_based",
        cfg.tol,
        state([("u", Vector::concat(&parts)), ("v", Vector::concat(&v)), ("lambda", lambda.clone())]),
        problem.objective(&Vector::concat(&parts))?,
    )
    .watch_divergence("consensus_residual");
    for n in 0..cfg.max_iters {
        let before = Vector::concat(v.iter().chain([&lambda]));
        let mut hat = lambda.clone();
        let mut images = Vec::with_capacity(problem.len());
        let mut substeps = Vec::with_capacity(problem.len());
        for j in 0..problem.len() {
            parts[j] = problem.solve_term(j, &hat, &v[j], &parts[j], n + 1)?;
            let image = problem.terms[j].b.apply(&parts[j])?;
            hat = hat.axpy(problem.beta, &(&image - &v[j]));
            images.push(image);
            substeps.push(Substep { block: j, state: state([("u_hat", parts[j].clone()), ("lambda", hat.clone())]) });
        }
        let metrics = consensus_metrics(&images, &v);
        for (vj, image) in v.iter_mut().zip(&images) {
            *vj = vj.lincomb(1.0 - cfg.tau, image, cfg.tau);
        }
        lambda = lambda.lincomb(1.0 - cfg.tau, &hat, cfg.tau);
        let u = Vector::concat(&parts);
        let after = Vector::concat(v.iter().chain([&lambda]));
        let flow = rec.record(
            state([("u", u.clone()), ("v", Vector::concat(&v)), ("lambda", lambda.clone())]),
            problem.objective(&u)?,
            metrics,
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

/// Dualization-based parallel ADMM for the sharing problem:
/// `u_j = argmin F_j + (λ, B_ju) + (β/2)‖B_ju - v_j‖²` for all `j` at once,
/// `v_j⁺ = (1-τ)v_j + τB_ju_j`, `λ⁺ = λ + τβΣ(B_ju_j - v_j)`.
pub fn admm_dualization_parallel(problem: &SharingProblem, cfg: &SolverConfig, v0: &[Vector], lambda0: &Vector) -> Result<Trace> {
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("step τ must be positive, got {}", cfg.tau)));
    }
    problem.initial(v0, lambda0)?;
    let sizes = problem.sizes();
    let mut v = v0.to_vec();
    let mut lambda = lambda0.clone();
    let mut parts: Vec<Vector> = sizes.iter().map(|&s| Vector::zeros(s)).collect();
    let mut rec = Recorder::new(
        "admm_dualization_parallel",
        cfg.tol,
        state([("u", Vector::concat(&parts)), ("v", Vector::concat(&v)), ("lambda", lambda.clone())]),
        problem.objective(&Vector::concat(&parts))?,
    )
    .watch_divergence("consensus_residual");
    for n in 0..cfg.max_iters {
        let before = Vector::concat(v.iter().chain([&lambda]));
        parts = (0..problem.len())
            .into_par_iter()
            .map(|j| problem.solve_term(j, &lambda, &v[j], &parts[j], n + 1))
            .collect::<Result<Vec<_>>>()?;
        let images = problem.images(&parts)?;
        let metrics = consensus_metrics(&images, &v);
        let mismatch = images.iter().zip(&v).fold(Vector::zeros(problem.g.dim()), |acc, (a, b)| &acc + &(a - b));
        lambda = lambda.axpy(cfg.tau * problem.beta, &mismatch);
        for (vj, image) in v.iter_mut().zip(&images) {
            *vj = vj.lincomb(1.0 - cfg.tau, image, cfg.tau);
        }
        let u = Vector::concat(&parts);
        let after = Vector::concat(v.iter().chain([&lambda]));
        let flow = rec.record(
            state([("u", u.clone()), ("v", Vector::concat(&v)), ("lambda", lambda.clone())]),
            problem.objective(&u)?,
            metrics,
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

/// Three scalar blocks with columns `(1,1,1)`, `(1,1,2)`, `(1,2,2)`, zero
/// objectives, `g = 0` and `β = 1`: plain ADMM from `u = (1,1,1)`, `λ = 0`
/// diverges on it.
pub fn divergence_witness() -> Result<ConstrainedProblem> {
    let columns = [[1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [1.0, 2.0, 2.0]];
    let blocks = columns
        .iter()
        .map(|c| Block::new(ConvexFn::linear(Vector::zeros(1)), LinOp::dense(Matrix::from_columns(&[Vector::new(c.to_vec())?])?)))
        .collect::<Result<Vec<_>>>()?;
    ConstrainedProblem::new(blocks, Vector::zeros(3), 1.0)
}

/// The sharing problem with the witness columns as its terms.
pub fn divergence_witness_sharing() -> Result<SharingProblem> {
    let witness = divergence_witness()?;
    SharingProblem::new(witness.blocks.clone(), witness.g.clone(), witness.beta)
}
