//! Parallel and successive subspace correction over a space decomposition
//! `V = Σ P_j V_j`, plus the expanded product-space formulation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::convex::{minimize, ConvexFn};
use crate::error::{Error, Result};
use crate::linops::{check_dim, LinOp, Vector};
use crate::trace::{state, Flow, Recorder, Substep, Trace};

/// Energy `S + N` with `S` smooth and `N` handled through proximal maps.
///
/// For subspace problems `N` must be separable along the index blocks of the
/// decomposition, so it is restricted block by block.
#[derive(Clone, Debug)]
pub struct Energy {
    pub smooth: Option<ConvexFn>,
    pub nonsmooth: Option<ConvexFn>,
}

impl Energy {
    pub fn smooth(smooth: ConvexFn) -> Self {
        Self { smooth: Some(smooth), nonsmooth: None }
    }

    pub fn composite(smooth: ConvexFn, nonsmooth: ConvexFn) -> Result<Self> {
        check_dim("energy terms", smooth.dim(), nonsmooth.dim())?;
        Ok(Self { smooth: Some(smooth), nonsmooth: Some(nonsmooth) })
    }

    /// Splits a function into smooth and nonsmooth summands.
    pub fn from_fn(f: ConvexFn) -> Result<Self> {
        if f.is_smooth() {
            return Ok(Self::smooth(f));
        }
        let terms = match f {
            ConvexFn::Sum(terms) => terms,
            other => return Ok(Self { smooth: None, nonsmooth: Some(other) }),
        };
        let (smooth, rough): (Vec<_>, Vec<_>) = terms.into_iter().partition(ConvexFn::is_smooth);
        let collect = |mut parts: Vec<ConvexFn>| -> Result<Option<ConvexFn>> {
            Ok(match parts.len() {
                0 => None,
                1 => parts.pop(),
                _ => Some(ConvexFn::sum(parts)?),
            })
        };
        Ok(Self { smooth: collect(smooth)?, nonsmooth: collect(rough)? })
    }

    pub fn dim(&self) -> usize {
        self.smooth.as_ref().or(self.nonsmooth.as_ref()).map_or(0, ConvexFn::dim)
    }

    pub fn eval(&self, u: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for part in [&self.smooth, &self.nonsmooth].into_iter().flatten() {
            let value = part.eval(u)?;
            if value == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += value;
        }
        Ok(total)
    }
}

/// Space decomposition given by injections `P_j: V_j -> V`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    dim: usize,
    injections: Vec<LinOp>,
    /// Coordinate blocks when `V` is the direct product of the `V_j`.
    blocks: Option<Vec<Vec<usize>>>,
}

impl Decomposition {
    /// Direct-product decomposition by index sets partitioning `0..dim`.
    pub fn index_blocks(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "index blocks must partition 0..{dim}; index {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("index {missing} is not covered by any block")));
        }
        let injections = blocks.iter().map(|b| LinOp::select(dim, b.clone())).collect::<Result<_>>()?;
        Ok(Self { dim, injections, blocks: Some(blocks) })
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&len| {
                let block: Vec<usize> = (start..start + len).collect();
                start += len;
                block
            })
            .collect();
        Self::index_blocks(start, blocks)
    }

    /// General (possibly overlapping) decomposition.
    pub fn from_injections(dim: usize, injections: Vec<LinOp>) -> Result<Self> {
        if injections.is_empty() {
            return Err(Error::Empty);
        }
        for p in &injections {
            check_dim("injection codomain", dim, p.codomain_dim())?;
        }
        Ok(Self { dim, injections, blocks: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.injections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }

    pub fn injections(&self) -> &[LinOp] {
        &self.injections
    }

    pub fn blocks(&self) -> Option<&[Vec<usize>]> {
        self.blocks.as_deref()
    }

    pub fn is_direct(&self) -> bool {
        self.blocks.is_some()
    }

    /// `Σ P_j w_j`, summed in ascending `j`.
    pub fn combine(&self, parts: &[Vector]) -> Result<Vector> {
        check_dim("corrections", self.len(), parts.len())?;
        let mut out = Vector::zeros(self.dim);
        for (p, w) in self.injections.iter().zip(parts) {
            out = &out + &p.apply(w)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LocalSolver {
    /// One proximal step; needs a local Hessian of the form `cI`.
    ClosedForm,
    /// Quadratic model with the restricted Hessian at the current iterate.
    QuadraticSurrogate,
    /// Exact local minimization by the inner Newton/proximal solver.
    #[default]
    ProximalNewton,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PermutationMode {
    #[default]
    Fixed,
    RandomEachSweep,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub tau: f64,
    pub max_iters: usize,
    /// Relative step tolerance; `0` runs exactly `max_iters` iterations.
    pub tol: f64,
    pub seed: u64,
    pub permutation: PermutationMode,
    /// Allows parallel steps `τ > 1/J`.
    pub allow_large_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tau: 1.0, max_iters: 1000, tol: 1e-12, seed: 0, permutation: PermutationMode::Fixed, allow_large_step: false }
    }
}

impl SolverConfig {
    pub fn iterations(max_iters: usize) -> Self {
        Self { max_iters, tol: 0.0, ..Self::default() }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// Seeded block orders, one per sweep.
pub(crate) struct BlockOrder {
    rng: Option<ChaCha8Rng>,
    order: Vec<usize>,
}

impl BlockOrder {
    pub fn new(cfg: &SolverConfig, count: usize) -> Self {
        let rng = (cfg.permutation == PermutationMode::RandomEachSweep).then(|| ChaCha8Rng::seed_from_u64(cfg.seed));
        Self { rng, order: (0..count).collect() }
    }

    pub fn is_random(&self) -> bool {
        self.rng.is_some()
    }

    pub fn next_sweep(&mut self) -> Vec<usize> {
        if let Some(rng) = self.rng.as_mut() {
            self.order.sort_unstable();
            self.order.shuffle(rng);
        }
        self.order.clone()
    }
}

/// Minimizes `w ↦ E(u + P_j w)` from `w = 0`.
fn local_correction(energy: &Energy, decomp: &Decomposition, j: usize, u: &Vector, solver: LocalSolver) -> Result<Vector> {
    let injection = &decomp.injections[j];
    let local_dim = injection.domain_dim();
    let smooth =
        energy.smooth.as_ref().map(|s| ConvexFn::precompose(s.clone(), injection.clone(), Some(u.clone()))).transpose()?;
    let nonsmooth = match (&energy.nonsmooth, decomp.blocks()) {
        (None, _) => None,
        (Some(n), Some(blocks)) => {
            let block = &blocks[j];
            Some(ConvexFn::translate(n.restrict(block)?, -&u.gather(block))?)
        }
        (Some(n), None) => {
            return Err(Error::Unsupported {
                operation: "subspace restriction",
                kind: n.kind_name(),
                supported: "nonsmooth terms on index-block decompositions",
            })
        }
    };
    let zero = Vector::zeros(local_dim);
    match solver {
        LocalSolver::ProximalNewton => minimize(smooth.as_ref(), nonsmooth.as_ref(), &zero),
        LocalSolver::ClosedForm => {
            let s = smooth.as_ref().ok_or_else(|| Error::InvalidParameter("closed-form step needs a smooth part".into()))?;
            let c = s.hessian(&zero)?.as_scalar_identity(1e-12).filter(|&c| c > 0.0).ok_or_else(|| {
                Error::InvalidParameter("closed-form step needs a local Hessian of the form cI with c > 0".into())
            })?;
            let anchor = s.grad(&zero)?.scale(-1.0 / c);
            match &nonsmooth {
                Some(n) => n.prox(&anchor, 1.0 / c),
                None => Ok(anchor),
            }
        }
        LocalSolver::QuadraticSurrogate => {
            let s = smooth.as_ref().ok_or_else(|| Error::InvalidParameter("quadratic surrogate needs a smooth part".into()))?;
            let model = ConvexFn::quadratic(LinOp::dense(s.hessian(&zero)?), -&s.grad(&zero)?, 0.0)?;
            minimize(Some(&model), nonsmooth.as_ref(), &zero)
        }
    }
}

fn solve_block(
    energy: &Energy,
    decomp: &Decomposition,
    j: usize,
    u: &Vector,
    solver: LocalSolver,
    iteration: usize,
) -> Result<Vector> {
    local_correction(energy, decomp, j, u, solver).map_err(|e| Error::LocalSolve { block: j, iteration, reason: e.to_string() })
}

fn check_start(energy: &Energy, decomp: &Decomposition, u0: &Vector) -> Result<()> {
    check_dim("energy domain", decomp.dim(), energy.dim())?;
    check_dim("initial iterate", decomp.dim(), u0.dim())
}

/// Parallel subspace correction: `u⁺ = u + τ Σ P_j w_j`.
///
/// Steps `τ > 1/J` need `cfg.allow_large_step`; the initial record then
/// carries the sampled strengthened-convexity margin (negative means the
/// inequality failed on some sample).
pub fn psc(energy: &Energy, decomp: &Decomposition, solver: LocalSolver, cfg: &SolverConfig, u0: &Vector) -> Result<Trace> {
    if cfg.tau.is_nan() || cfg.tau < 0.0 {
        return Err(Error::InvalidParameter(format!("step τ must be nonnegative, got {}", cfg.tau)));
    }
    let large = cfg.tau > 1.0 / decomp.len() as f64 + 1e-15;
    if large && !cfg.allow_large_step {
        return Err(Error::InvalidParameter(format!(
            "step τ = {} exceeds 1/J = {}; set allow_large_step to override",
            cfg.tau,
            1.0 / decomp.len() as f64
        )));
    }
    let margin = if large { Some(strengthened_convexity(energy, decomp, cfg.tau, cfg.seed, 100)?) } else { None };
    let mut trace = parallel_correction("psc", energy, decomp, solver, cfg, u0)?;
    if let Some(m) = margin {
        trace.records[0].metrics.insert("strengthened_convexity_margin".into(), m);
    }
    Ok(trace)
}

fn parallel_correction(
    name: &str,
    energy: &Energy,
    decomp: &Decomposition,
    solver: LocalSolver,
    cfg: &SolverConfig,
    u0: &Vector,
) -> Result<Trace> {
    check_start(energy, decomp, u0)?;
    let mut u = u0.clone();
    let mut rec = Recorder::new(name, cfg.tol, state([("u", u.clone())]), energy.eval(&u)?);
    for n in 0..cfg.max_iters {
        let corrections = (0..decomp.len())
            .into_par_iter()
            .map(|j| solve_block(energy, decomp, j, &u, solver, n + 1))
            .collect::<Result<Vec<_>>>()?;
        let next = u.axpy(cfg.tau, &decomp.combine(&corrections)?);
        let flow = rec.record(state([("u", next.clone())]), energy.eval(&next)?, BTreeMap::new(), vec![], &u, &next);
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// One sweep of successive corrections from `u`; returns the fractional iterates.
fn sweep(
    energy: &Energy,
    decomp: &Decomposition,
    solver: LocalSolver,
    order: &[usize],
    u: &Vector,
    iteration: usize,
) -> Result<Vec<Vector>> {
    let mut current = u.clone();
    let mut fractional = Vec::with_capacity(order.len());
    for &j in order {
        let w = solve_block(energy, decomp, j, &current, solver, iteration)?;
        current = &current + &decomp.injections[j].apply(&w)?;
        fractional.push(current.clone());
    }
    Ok(fractional)
}

/// Successive subspace correction; records `u^{n+j/J}` as substeps.
pub fn ssc(energy: &Energy, decomp: &Decomposition, solver: LocalSolver, cfg: &SolverConfig, u0: &Vector) -> Result<Trace> {
    relaxed_sweeps("ssc", energy, decomp, solver, cfg, 1.0, u0)
}

/// `p⁺ = (1-τ)p + τp̂` with `p̂` one SSC sweep from `p`; the substeps hold the sweep.
pub fn relaxed_ssc(
    energy: &Energy,
    decomp: &Decomposition,
    solver: LocalSolver,
    cfg: &SolverConfig,
    p0: &Vector,
) -> Result<Trace> {
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("relaxation τ must lie in (0, 1], got {}", cfg.tau)));
    }
    relaxed_sweeps("relaxed_ssc", energy, decomp, solver, cfg, cfg.tau, p0)
}

fn relaxed_sweeps(
    name: &str,
    energy: &Energy,
    decomp: &Decomposition,
    solver: LocalSolver,
    cfg: &SolverConfig,
    tau: f64,
    u0: &Vector,
) -> Result<Trace> {
    check_start(energy, decomp, u0)?;
    let mut order = BlockOrder::new(cfg, decomp.len());
    let mut u = u0.clone();
    let mut rec = Recorder::new(name, cfg.tol, state([("u", u.clone())]), energy.eval(&u)?);
    for n in 0..cfg.max_iters {
        let perm = order.next_sweep();
        let fractional = sweep(energy, decomp, solver, &perm, &u, n + 1)?;
        let hat = fractional.last().expect("at least one block").clone();
        let next = if tau == 1.0 { hat } else { u.lincomb(1.0 - tau, &hat, tau) };
        let substeps = perm.iter().zip(fractional).map(|(&j, w)| Substep { block: j, state: state([("u", w)]) }).collect();
        if order.is_random() {
            rec.push_permutation(perm);
        }
        let flow = rec.record(state([("u", next.clone())]), energy.eval(&next)?, BTreeMap::new(), substeps, &u, &next);
        u = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(rec.finish())
}

/// Energy on `∏ V_j` given by `Ẽ(ũ) = E(Σ P_j ũ_j)`, with the summation operator.
pub fn expand_problem(energy: &Energy, decomp: &Decomposition) -> Result<(Energy, LinOp)> {
    let sum = LinOp::hcat(decomp.injections.clone())?;
    let smooth = energy.smooth.as_ref().map(|s| ConvexFn::precompose(s.clone(), sum.clone(), None)).transpose()?;
    let nonsmooth = match (&energy.nonsmooth, decomp.blocks()) {
        (None, _) => None,
        (Some(n), Some(blocks)) => {
            let parts = blocks.iter().map(|b| n.restrict(b)).collect::<Result<Vec<_>>>()?;
            Some(if parts.len() == 1 { parts.into_iter().next().expect("one block") } else { ConvexFn::separable(parts)? })
        }
        (Some(n), None) => {
            return Err(Error::Unsupported {
                operation: "expansion",
                kind: n.kind_name(),
                supported: "nonsmooth terms on index-block decompositions",
            })
        }
    };
    Ok((Energy { smooth, nonsmooth }, sum))
}

/// Relaxed block Jacobi on a product space with consecutive blocks of `sizes`:
/// `ũ⁺ = (1-τ)ũ + τû`. No step-size guard applies.
pub fn block_jacobi(expanded: &Energy, sizes: &[usize], solver: LocalSolver, cfg: &SolverConfig, u0: &Vector) -> Result<Trace> {
    let blocks = Decomposition::contiguous(sizes)?;
    parallel_correction("block_jacobi", expanded, &blocks, solver, cfg, u0)
}

/// Block Gauss-Seidel on a product space with consecutive blocks of `sizes`.
pub fn block_gauss_seidel(
    expanded: &Energy,
    sizes: &[usize],
    solver: LocalSolver,
    cfg: &SolverConfig,
    u0: &Vector,
) -> Result<Trace> {
    let blocks = Decomposition::contiguous(sizes)?;
    relaxed_sweeps("block_gauss_seidel", expanded, &blocks, solver, cfg, 1.0, u0)
}

/// Smallest sampled margin of
/// `(1-τJ)E(v) + τΣE(v + P_j w_j) - E(v + τΣP_j w_j)` over points where all
/// terms are finite.
pub fn strengthened_convexity(energy: &Energy, decomp: &Decomposition, tau: f64, seed: u64, samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let count = decomp.len() as f64;
    for _ in 0..samples {
        let v = Vector::from_fn(decomp.dim(), |_| rng.gen_range(-1.0..1.0));
        let ws: Vec<Vector> =
            decomp.injections.iter().map(|p| Vector::from_fn(p.domain_dim(), |_| rng.gen_range(-1.0..1.0))).collect();
        let mut lhs = (1.0 - tau * count) * energy.eval(&v)?;
        for (p, w) in decomp.injections.iter().zip(&ws) {
            lhs += tau * energy.eval(&(&v + &p.apply(w)?))?;
        }
        let rhs = energy.eval(&v.axpy(tau, &decomp.combine(&ws)?))?;
        if lhs.is_finite() && rhs.is_finite() {
            worst = worst.min(lhs - rhs);
        }
    }
    Ok(worst)
}
