//! Primal-dual pairs `min F(u) + G(Bu)` / `min F*(-Bᵗp) + G*(p)` and the
//! harness that checks iterate relations between a primal run and a dual run.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::convex::ConvexFn;
use crate::error::{Error, Result};
use crate::linops::{check_dim, LinOp, Vector};
use crate::trace::{State, Trace};

/// Seed, tolerance and step cap of the power iteration behind `‖B‖`.
const NORM_SEED: u64 = 0;
const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug)]
pub struct PrimalDualProblem {
    pub f: ConvexFn,
    pub g: ConvexFn,
    pub b: LinOp,
}

impl PrimalDualProblem {
    pub fn new(f: ConvexFn, g: ConvexFn, b: LinOp) -> Result<Self> {
        check_dim("primal space", f.dim(), b.domain_dim())?;
        check_dim("dual space", g.dim(), b.codomain_dim())?;
        Ok(Self { f, g, b })
    }

    /// Fails unless `F` is finite at `witness`.
    pub fn check_proper(&self, witness: &Vector) -> Result<()> {
        let value = self.f.eval(witness)?;
        if value.is_finite() {
            Ok(())
        } else {
            Err(Error::InfiniteValue(format!("F is +inf at the supplied witness ({})", self.f.kind_name())))
        }
    }

    /// The dual written in primal form: `F' = G*`, `G' = F*`, `B' = -Bᵗ`.
    pub fn dual(&self) -> Result<PrimalDualProblem> {
        Ok(PrimalDualProblem { f: self.g.conjugate()?, g: self.f.conjugate()?, b: self.b.transpose().scaled(-1.0) })
    }

    pub fn primal_value(&self, u: &Vector) -> Result<f64> {
        Ok(self.f.eval(u)? + self.g.eval(&self.b.apply(u)?)?)
    }

    /// Dual objective `F*(-Bᵗp) + G*(p)`, minimized by the dual solution.
    pub fn dual_value(&self, p: &Vector) -> Result<f64> {
        let bt_p = self.b.apply_adjoint(p)?;
        Ok(self.f.conjugate()?.eval(&-&bt_p)? + self.g.conjugate()?.eval(p)?)
    }

    /// `u = ∇F*(-Bᵗp)`.
    pub fn recover_primal(&self, p: &Vector) -> Result<Vector> {
        if self.f.strong_convexity() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "primal recovery needs a strongly convex F, got {}",
                self.f.kind_name()
            )));
        }
        let bt_p = self.b.apply_adjoint(p)?;
        self.f.grad_conjugate(&-&bt_p)
    }

    /// `[F(u) + G(Bu)] - [-F*(-Bᵗp) - G*(p)]`.
    pub fn duality_gap(&self, u: &Vector, p: &Vector) -> Result<f64> {
        let bt_p = self.b.apply_adjoint(p)?;
        let terms = [
            ("F(u)", self.f.eval(u)?),
            ("G(Bu)", self.g.eval(&self.b.apply(u)?)?),
            ("F*(-Bᵗp)", self.f.conjugate()?.eval(&-&bt_p)?),
            ("G*(p)", self.g.conjugate()?.eval(p)?),
        ];
        if let Some((name, value)) = terms.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InfiniteValue(format!("{name} = {value}")));
        }
        Ok(terms.iter().map(|(_, v)| v).sum())
    }
}

/// `(‖B‖/μ)‖p - p*‖`, which bounds `‖∇F*(-Bᵗp) - ∇F*(-Bᵗp*)‖` for `μ`-strongly convex `F`.
pub fn error_transfer_bound(problem: &PrimalDualProblem, p: &Vector, p_star: &Vector, mu: f64) -> Result<f64> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidParameter(format!("strong convexity modulus must be positive, got {mu}")));
    }
    let norm = problem.b.norm_estimate(NORM_SEED, NORM_TOL, NORM_MAX_ITER);
    Ok(norm / mu * p.dist(p_star))
}

type Check = dyn Fn(&State, &State) -> Result<f64> + Send + Sync;

/// Named identity between a primal state and a dual state.
#[derive(Clone)]
pub struct Relation {
    pub name: String,
    check: Arc<Check>,
    /// Also compare the fractional iterates of each sweep.
    pub substeps: bool,
}

impl Relation {
    pub fn new(name: impl Into<String>, check: impl Fn(&State, &State) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), check: Arc::new(check), substeps: false }
    }

    /// `‖primal[key] - map(dual)‖`.
    pub fn matches(
        name: impl Into<String>,
        primal_key: &'static str,
        map: impl Fn(&State) -> Result<Vector> + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, move |primal, dual| {
            let lhs = primal.get(primal_key).ok_or_else(|| Error::MissingState(primal_key.into()))?;
            let rhs = map(dual)?;
            check_dim("relation", lhs.dim(), rhs.dim())?;
            Ok(lhs.dist(&rhs))
        })
    }

    /// `‖primal[primal_key] - dual[dual_key]‖`.
    pub fn equal(primal_key: &'static str, dual_key: &'static str) -> Self {
        Self::matches(format!("primal {primal_key} = dual {dual_key}"), primal_key, move |dual| lookup(dual, dual_key).cloned())
    }

    pub fn with_substeps(mut self) -> Self {
        self.substeps = true;
        self
    }

    pub fn eval(&self, primal: &State, dual: &State) -> Result<f64> {
        (self.check)(primal, dual)
    }
}

impl std::fmt::Debug for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Relation").field("name", &self.name).field("substeps", &self.substeps).finish()
    }
}

pub fn lookup<'a>(state: &'a State, key: &str) -> Result<&'a Vector> {
    state.get(key).ok_or_else(|| Error::MissingState(key.into()))
}

/// Identities certified by one pairing.
#[derive(Clone, Debug)]
pub struct RelationSpec {
    pub theorem_id: String,
    /// Checked on the initial records only; a failure is an error.
    pub hypotheses: Vec<Relation>,
    /// Checked on every record after the initial one.
    pub relations: Vec<Relation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualizationReport {
    pub theorem_id: String,
    pub iterations: usize,
    pub residuals: Vec<BTreeMap<String, f64>>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Evaluates every relation along two traces of equal length.
pub fn verify_dualization(primal: &Trace, dual: &Trace, spec: &RelationSpec, tol: f64) -> Result<DualizationReport> {
    if primal.records.len() != dual.records.len() {
        return Err(Error::TraceLengthMismatch { primal: primal.records.len(), dual: dual.records.len() });
    }
    let iterations = primal.iterations();
    if iterations == 0 {
        return Err(Error::InvalidParameter("no iterations to compare: the residual list would be empty".into()));
    }
    let (p0, d0) = (&primal.records[0], &dual.records[0]);
    for hypothesis in &spec.hypotheses {
        let residual = hypothesis.eval(&p0.state, &d0.state)?;
        if residual.is_nan() || residual > tol {
            return Err(Error::InitialMismatch { relation: hypothesis.name.clone(), residual });
        }
    }
    let mut residuals = Vec::with_capacity(iterations);
    let mut max_residual: f64 = 0.0;
    for (p, d) in primal.records.iter().zip(&dual.records).skip(1) {
        let mut row = BTreeMap::new();
        for relation in &spec.relations {
            let mut value = relation.eval(&p.state, &d.state)?;
            if relation.substeps {
                if p.substeps.len() != d.substeps.len() {
                    return Err(Error::MissingState(format!(
                        "substeps of iteration {}: primal has {}, dual has {}",
                        p.iter,
                        p.substeps.len(),
                        d.substeps.len()
                    )));
                }
                for (ps, ds) in p.substeps.iter().zip(&d.substeps) {
                    value = value.max(relation.eval(&ps.state, &ds.state)?);
                }
            }
            // NaN must fail the comparison rather than vanish in max
            max_residual = if value.is_nan() { f64::NAN } else { max_residual.max(value) };
            row.insert(relation.name.clone(), value);
        }
        residuals.push(row);
    }
    Ok(DualizationReport { theorem_id: spec.theorem_id.clone(), iterations, residuals, pass: max_residual <= tol, max_residual })
}
