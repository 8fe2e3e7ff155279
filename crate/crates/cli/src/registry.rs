//! Bundled problems and the table of algorithms that can run on them.

use dualkit::admm::{
    admm_dualization_based, admm_dualization_parallel, admm_plain, admm_random_permuted, admm_symmetrized, divergence_witness,
    divergence_witness_sharing, proximal_point_dual, ConstrainedProblem, SharingProblem,
};
use dualkit::convex::{AffineSubspace, ConvexSet};
use dualkit::correction::{psc, relaxed_ssc, ssc, Decomposition, Energy, LocalSolver, PermutationMode, SolverConfig};
use dualkit::problems::{
    logistic_from_csv, rof_decomposition, rof_dual_energy, rof_splitting, LogisticInstance, QuadraticInstance, RofInstance,
    Sample,
};
use dualkit::projsplit::{
    dykstra, generalized_dr, generalized_pr, parallel_dr, parallel_dykstra, parallel_von_neumann, pr_linear, von_neumann,
    MultiConvexProblem, MultiLinearProblem, PocsProblem,
};
use dualkit::trace::Trace;
use dualkit::{Matrix, Vector};

use crate::config::{Algorithm, Permutation, ProblemSpec, RunConfig, SolverParams};
use crate::error::CliError;

/// Problem ids with one-line descriptions, in listing order.
pub const PROBLEMS: [(&str, &str); 12] = [
    ("two-lines", "projection of (3, -1) onto the lines y = x and x + 2y = 3 (limit (1, 1))"),
    ("box-halfspace", "projection onto [0, 1]² ∩ {x + y <= 1}; default target (2, 0.5) with limit (1, 0)"),
    ("pocs-random", "seeded random hyperplanes through a common point"),
    ("multi-linear", "seeded min Σ(A_ju, u)/2 + (α/2)‖u‖² - (f, u) with SPD A_j"),
    ("multi-convex", "seeded quadratic F with an ℓ1 term on differences and squared-distance terms"),
    ("rof", "1-D total-variation denoising of a noisy step signal; dual split at `split`"),
    ("logistic-csv", "multinomial logistic regression on a CSV file (features..., label in 1..=k)"),
    ("logistic-xor", "two-class logistic regression on the four XOR points"),
    ("constrained", "seeded multi-block quadratic with a linear coupling constraint"),
    ("sharing", "seeded sharing problem with quadratic terms"),
    ("divergence-witness", "three scalar blocks on which plain ADMM diverges"),
    ("divergence-witness-sharing", "the divergence witness as a sharing problem"),
];

impl Algorithm {
    pub const ALL: [Algorithm; 17] = [
        Algorithm::VonNeumann,
        Algorithm::Dykstra,
        Algorithm::ParallelVonNeumann,
        Algorithm::ParallelDykstra,
        Algorithm::Ssc,
        Algorithm::Psc,
        Algorithm::RelaxedSsc,
        Algorithm::PrLinear,
        Algorithm::GeneralizedPr,
        Algorithm::GeneralizedDr,
        Algorithm::ParallelDr,
        Algorithm::AdmmPlain,
        Algorithm::AdmmSymmetrized,
        Algorithm::AdmmRandomPermuted,
        Algorithm::ProximalPointDual,
        Algorithm::AdmmDualizationBased,
        Algorithm::AdmmDualizationParallel,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::VonNeumann => "von_neumann",
            Algorithm::Dykstra => "dykstra",
            Algorithm::ParallelVonNeumann => "parallel_von_neumann",
            Algorithm::ParallelDykstra => "parallel_dykstra",
            Algorithm::Ssc => "ssc",
            Algorithm::Psc => "psc",
            Algorithm::RelaxedSsc => "relaxed_ssc",
            Algorithm::PrLinear => "pr_linear",
            Algorithm::GeneralizedPr => "generalized_pr",
            Algorithm::GeneralizedDr => "generalized_dr",
            Algorithm::ParallelDr => "parallel_dr",
            Algorithm::AdmmPlain => "admm_plain",
            Algorithm::AdmmSymmetrized => "admm_symmetrized",
            Algorithm::AdmmRandomPermuted => "admm_random_permuted",
            Algorithm::ProximalPointDual => "proximal_point_dual",
            Algorithm::AdmmDualizationBased => "admm_dualization_based",
            Algorithm::AdmmDualizationParallel => "admm_dualization_parallel",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Algorithm::VonNeumann => "cyclic alternating projections",
            Algorithm::Dykstra => "Dykstra projections with correction vectors",
            Algorithm::ParallelVonNeumann => "averaged projections",
            Algorithm::ParallelDykstra => "parallel Dykstra projections",
            Algorithm::Ssc => "successive subspace correction on the dual energy",
            Algorithm::Psc => "parallel subspace correction on the dual energy",
            Algorithm::RelaxedSsc => "relaxed successive subspace correction on the dual energy",
            Algorithm::PrLinear => "Peaceman-Rachford for a sum of linear operators",
            Algorithm::GeneralizedPr => "generalized Peaceman-Rachford splitting",
            Algorithm::GeneralizedDr => "generalized Douglas-Rachford splitting",
            Algorithm::ParallelDr => "parallel Douglas-Rachford splitting",
            Algorithm::AdmmPlain => "ADMM with a forward block sweep",
            Algorithm::AdmmSymmetrized => "ADMM with a forward and a backward sweep",
            Algorithm::AdmmRandomPermuted => "ADMM with a seeded random block order per iteration",
            Algorithm::ProximalPointDual => "proximal point method on the dual of a one-block problem",
            Algorithm::AdmmDualizationBased => "dualization-based ADMM for sharing problems",
            Algorithm::AdmmDualizationParallel => "parallel dualization-based ADMM for sharing problems",
        }
    }

    pub fn accepts(self) -> &'static str {
        match self {
            Algorithm::VonNeumann | Algorithm::Dykstra | Algorithm::ParallelVonNeumann | Algorithm::ParallelDykstra => {
                "two-lines, box-halfspace, pocs-random"
            }
            Algorithm::Ssc | Algorithm::Psc | Algorithm::RelaxedSsc => "every problem except constrained and divergence-witness",
            Algorithm::PrLinear => "multi-linear",
            Algorithm::GeneralizedPr | Algorithm::GeneralizedDr | Algorithm::ParallelDr => {
                "projection, multi-convex, rof, logistic and sharing problems"
            }
            Algorithm::AdmmPlain | Algorithm::AdmmSymmetrized | Algorithm::AdmmRandomPermuted => {
                "constrained, sharing, divergence-witness, divergence-witness-sharing"
            }
            Algorithm::ProximalPointDual => "constrained with blocks = 1",
            Algorithm::AdmmDualizationBased | Algorithm::AdmmDualizationParallel => "sharing, divergence-witness-sharing",
        }
    }

    fn is_parallel(self) -> bool {
        matches!(
            self,
            Algorithm::ParallelVonNeumann
                | Algorithm::ParallelDykstra
                | Algorithm::Psc
                | Algorithm::ParallelDr
                | Algorithm::AdmmDualizationParallel
        )
    }

    fn is_relaxed(self) -> bool {
        matches!(self, Algorithm::RelaxedSsc | Algorithm::GeneralizedDr | Algorithm::AdmmDualizationBased)
    }

    /// `1/J` for parallel methods, `0.5` for relaxed ones, `1` otherwise.
    fn default_tau(self, blocks: usize) -> f64 {
        if self.is_parallel() {
            1.0 / blocks.max(1) as f64
        } else if self.is_relaxed() {
            0.5
        } else {
            1.0
        }
    }
}

impl ProblemSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ProblemSpec::TwoLines => "two-lines",
            ProblemSpec::BoxHalfspace { .. } => "box-halfspace",
            ProblemSpec::PocsRandom { .. } => "pocs-random",
            ProblemSpec::MultiLinear { .. } => "multi-linear",
            ProblemSpec::MultiConvex { .. } => "multi-convex",
            ProblemSpec::Rof { .. } => "rof",
            ProblemSpec::LogisticCsv { .. } => "logistic-csv",
            ProblemSpec::LogisticXor { .. } => "logistic-xor",
            ProblemSpec::Constrained { .. } => "constrained",
            ProblemSpec::Sharing { .. } => "sharing",
            ProblemSpec::DivergenceWitness => "divergence-witness",
            ProblemSpec::DivergenceWitnessSharing => "divergence-witness-sharing",
        }
    }
}

/// Projection of `(3, -1)` onto the intersection of `y = x` and `x + 2y = 3`.
pub fn two_lines() -> dualkit::Result<PocsProblem> {
    let line = |row: [f64; 2], rhs: f64| -> dualkit::Result<ConvexSet> {
        Ok(ConvexSet::Affine(AffineSubspace::from_equations(&Matrix::from_rows(&[row.to_vec()])?, &Vector::new(vec![rhs])?)?))
    };
    PocsProblem::new(Vector::new(vec![3.0, -1.0])?, vec![line([1.0, -1.0], 0.0)?, line([1.0, 2.0], 3.0)?])
}

/// Projection of `f` onto `[0, 1]² ∩ {x + y <= 1}`.
pub fn box_halfspace(f: [f64; 2]) -> dualkit::Result<PocsProblem> {
    let square = ConvexSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0])?;
    let below = ConvexSet::halfspace(Vector::new(vec![1.0, 1.0])?, 1.0)?;
    PocsProblem::new(Vector::new(f.to_vec())?, vec![square, below])
}

/// Points `(0,0), (1,1)` in class 1 and `(0,1), (1,0)` in class 2.
pub fn xor_logistic(alpha: f64) -> dualkit::Result<LogisticInstance> {
    let points = [([0.0, 0.0], 1), ([1.0, 1.0], 1), ([0.0, 1.0], 2), ([1.0, 0.0], 2)];
    let samples = points
        .iter()
        .map(|(x, label)| Ok(Sample { x: Vector::new(x.to_vec())?, label: *label }))
        .collect::<dualkit::Result<Vec<_>>>()?;
    LogisticInstance::new(2, 2, samples, alpha)
}

/// Dual energy, its decomposition and a feasible start.
struct DualForm {
    energy: Energy,
    decomp: Decomposition,
    p0: Vector,
}

/// A splitting problem with a start `p0` in its dual space; the primal start
/// is `u0 = ∇F*(-ΣB_jᵗp_j⁰)` with matching shifts.
struct Splitting {
    problem: MultiConvexProblem,
    p0: Vector,
    dual: DualForm,
}

impl Splitting {
    fn new(problem: MultiConvexProblem, p0: Vector) -> dualkit::Result<Self> {
        let (energy, decomp) = problem.dual_energy()?;
        Ok(Self { dual: DualForm { energy, decomp, p0: p0.clone() }, problem, p0 })
    }

    fn zero_start(problem: MultiConvexProblem) -> dualkit::Result<Self> {
        let p0 = Vector::zeros(problem.dual_sizes().iter().sum());
        Self::new(problem, p0)
    }
}

enum Prepared {
    Projection(PocsProblem),
    MultiLinear(MultiLinearProblem),
    Splitting(Box<Splitting>),
    Constrained { problem: ConstrainedProblem, u0: Vector },
    Sharing(SharingProblem),
}

fn prepare(spec: &ProblemSpec, beta: Option<f64>) -> Result<Prepared, CliError> {
    let prepared = match spec {
        ProblemSpec::TwoLines => Prepared::Projection(two_lines()?),
        ProblemSpec::BoxHalfspace { f } => Prepared::Projection(box_halfspace(*f)?),
        ProblemSpec::PocsRandom { seed, dim, sets } => {
            Prepared::Projection(QuadraticInstance::new(*seed, *dim, *sets, 1.0)?.pocs()?)
        }
        ProblemSpec::MultiLinear { seed, dim, blocks, cond } => {
            Prepared::MultiLinear(QuadraticInstance::new(*seed, *dim, *blocks, *cond)?.multi_linear()?)
        }
        ProblemSpec::MultiConvex { seed, dim, blocks, cond } => Prepared::Splitting(Box::new(Splitting::zero_start(
            QuadraticInstance::new(*seed, *dim, *blocks, *cond)?.multi_convex()?,
        )?)),
        ProblemSpec::Rof { seed, d, alpha, noise, split } => {
            let inst = RofInstance::noisy(*seed, *d, *alpha, *noise)?;
            let d1 = split.unwrap_or(d / 2);
            let problem = rof_splitting(&inst, d1)?;
            let p0 = Vector::zeros(inst.dim());
            let dual = DualForm { energy: rof_dual_energy(&inst)?, decomp: rof_decomposition(&inst, d1)?, p0: p0.clone() };
            Prepared::Splitting(Box::new(Splitting { problem, p0, dual }))
        }
        ProblemSpec::LogisticCsv { path, alpha, classes, header } => {
            let (inst, problem) = logistic_from_csv(path, *alpha, *classes, *header)?;
            Prepared::Splitting(Box::new(logistic_splitting(&inst, problem)?))
        }
        ProblemSpec::LogisticXor { alpha } => {
            let inst = xor_logistic(*alpha)?;
            let problem = inst.problem()?;
            Prepared::Splitting(Box::new(logistic_splitting(&inst, problem)?))
        }
        ProblemSpec::Constrained { seed, dim, blocks, cond } => {
            let problem = QuadraticInstance::new(*seed, *dim, *blocks, *cond)?.constrained()?;
            let u0 = Vector::zeros(problem.dim());
            Prepared::Constrained { problem, u0 }
        }
        ProblemSpec::Sharing { seed, dim, blocks, cond } => {
            Prepared::Sharing(QuadraticInstance::new(*seed, *dim, *blocks, *cond)?.sharing()?)
        }
        ProblemSpec::DivergenceWitness => {
            let problem = divergence_witness()?;
            let u0 = Vector::filled(problem.dim(), 1.0);
            Prepared::Constrained { problem, u0 }
        }
        ProblemSpec::DivergenceWitnessSharing => Prepared::Sharing(divergence_witness_sharing()?),
    };
    let Some(beta) = beta else { return Ok(prepared) };
    match prepared {
        Prepared::Constrained { problem, u0 } => Ok(Prepared::Constrained { problem: problem.with_beta(beta)?, u0 }),
        Prepared::Sharing(problem) => {
            Ok(Prepared::Sharing(SharingProblem::new(problem.terms().to_vec(), problem.g().clone(), beta)?))
        }
        _ => Err(CliError::Setting(format!("`beta` does not apply to problem `{}`", spec.id()))),
    }
}

/// The simplex-entropy conjugate is finite only on the simplex, so the dual
/// starts from the uniform distribution for every sample.
fn logistic_splitting(inst: &LogisticInstance, problem: MultiConvexProblem) -> dualkit::Result<Splitting> {
    let k = inst.classes();
    Splitting::new(problem, Vector::filled(inst.len() * k, 1.0 / k as f64))
}

impl Prepared {
    fn dual_form(&self) -> dualkit::Result<Option<DualForm>> {
        Ok(Some(match self {
            Prepared::Projection(problem) => {
                let (energy, decomp) = problem.product_dual()?;
                let p0 = Vector::zeros(energy.dim());
                DualForm { energy, decomp, p0 }
            }
            Prepared::MultiLinear(problem) => {
                let (energy, decomp) = problem.dual_energy()?;
                let p0 = Vector::zeros(energy.dim());
                DualForm { energy, decomp, p0 }
            }
            Prepared::Splitting(s) => {
                DualForm { energy: s.dual.energy.clone(), decomp: s.dual.decomp.clone(), p0: s.dual.p0.clone() }
            }
            Prepared::Sharing(problem) => {
                let (energy, decomp) = problem.energy()?;
                let p0 = Vector::zeros(energy.dim());
                DualForm { energy, decomp, p0 }
            }
            Prepared::Constrained { .. } => return Ok(None),
        }))
    }

    fn splitting(&self) -> dualkit::Result<Option<Splitting>> {
        Ok(Some(match self {
            Prepared::Projection(problem) => Splitting::zero_start(problem.as_multi_convex()?)?,
            Prepared::Splitting(s) => Splitting::new(s.problem.clone(), s.p0.clone())?,
            Prepared::Sharing(problem) => Splitting::zero_start(problem.dual_splitting()?)?,
            Prepared::MultiLinear(_) | Prepared::Constrained { .. } => return Ok(None),
        }))
    }

    fn constrained(&self) -> dualkit::Result<Option<(ConstrainedProblem, Vector)>> {
        Ok(match self {
            Prepared::Constrained { problem, u0 } => Some((problem.clone(), u0.clone())),
            Prepared::Sharing(problem) => {
                let problem = problem.as_constrained()?;
                let u0 = Vector::zeros(problem.dim());
                Some((problem, u0))
            }
            _ => None,
        })
    }
}

fn solver_config(params: &SolverParams, algorithm: Algorithm, blocks: usize) -> SolverConfig {
    SolverConfig {
        tau: params.tau.unwrap_or_else(|| algorithm.default_tau(blocks)),
        max_iters: params.max_iters,
        tol: params.tol,
        seed: params.seed,
        permutation: match params.permutation {
            Permutation::Fixed => PermutationMode::Fixed,
            Permutation::Random => PermutationMode::RandomEachSweep,
        },
        allow_large_step: false,
    }
}

/// Builds the configured problem and runs the configured algorithm on it.
pub fn execute(config: &RunConfig) -> Result<Trace, CliError> {
    let prepared = prepare(&config.problem, config.solver.beta)?;
    let algorithm = config.algorithm;
    let params = &config.solver;
    let reject = || CliError::Incompatible { algorithm, problem: config.problem.id(), accepts: algorithm.accepts() };
    let solver = LocalSolver::default();
    let trace = match algorithm {
        Algorithm::VonNeumann | Algorithm::Dykstra | Algorithm::ParallelVonNeumann | Algorithm::ParallelDykstra => {
            let Prepared::Projection(problem) = &prepared else { return Err(reject()) };
            let cfg = solver_config(params, algorithm, problem.len());
            match algorithm {
                Algorithm::VonNeumann => von_neumann(problem, &cfg),
                Algorithm::Dykstra => dykstra(problem, &cfg),
                Algorithm::ParallelVonNeumann => parallel_von_neumann(problem, &cfg),
                _ => parallel_dykstra(problem, &cfg),
            }
        }
        Algorithm::PrLinear => {
            let Prepared::MultiLinear(problem) = &prepared else { return Err(reject()) };
            pr_linear(problem, &solver_config(params, algorithm, problem.ops().len()), None)
        }
        Algorithm::Ssc | Algorithm::Psc | Algorithm::RelaxedSsc => {
            let dual = prepared.dual_form()?.ok_or_else(reject)?;
            let cfg = solver_config(params, algorithm, dual.decomp.len());
            match algorithm {
                Algorithm::Ssc => ssc(&dual.energy, &dual.decomp, solver, &cfg, &dual.p0),
                Algorithm::Psc => psc(&dual.energy, &dual.decomp, solver, &cfg, &dual.p0),
                _ => relaxed_ssc(&dual.energy, &dual.decomp, solver, &cfg, &dual.p0),
            }
        }
        Algorithm::GeneralizedPr | Algorithm::GeneralizedDr | Algorithm::ParallelDr => {
            let split = prepared.splitting()?.ok_or_else(reject)?;
            let problem = &split.problem;
            let u0 = problem.recover(&split.p0)?;
            let v0 = problem.shifts(&split.p0)?.split(&vec![problem.dim(); problem.len()]);
            let cfg = solver_config(params, algorithm, problem.len());
            match algorithm {
                Algorithm::GeneralizedPr => generalized_pr(problem, &cfg, &u0, Some(&v0)),
                Algorithm::GeneralizedDr => generalized_dr(problem, &cfg, &u0, Some(&v0)),
                _ => parallel_dr(problem, &cfg, &u0, Some(&v0)),
            }
        }
        Algorithm::AdmmPlain | Algorithm::AdmmSymmetrized | Algorithm::AdmmRandomPermuted | Algorithm::ProximalPointDual => {
            let (problem, u0) = prepared.constrained()?.ok_or_else(reject)?;
            let lambda0 = Vector::zeros(problem.g().dim());
            let cfg = solver_config(params, algorithm, problem.len());
            match algorithm {
                Algorithm::AdmmPlain => admm_plain(&problem, &cfg, &u0, &lambda0),
                Algorithm::AdmmSymmetrized => admm_symmetrized(&problem, &cfg, &u0, &lambda0),
                Algorithm::AdmmRandomPermuted => admm_random_permuted(&problem, &cfg, &u0, &lambda0),
                _ => proximal_point_dual(&problem, &cfg, &lambda0),
            }
        }
        Algorithm::AdmmDualizationBased | Algorithm::AdmmDualizationParallel => {
            let Prepared::Sharing(problem) = &prepared else { return Err(reject()) };
            let w0 = Vector::zeros(problem.sizes().iter().sum());
            let (lambda0, images) = problem.multiplier_image(&w0)?;
            let v0 = images.split(&vec![problem.g().dim(); problem.len()]);
            let cfg = solver_config(params, algorithm, problem.len());
            if algorithm == Algorithm::AdmmDualizationBased {
                admm_dualization_based(problem, &cfg, &v0, &lambda0)
            } else {
                admm_dualization_parallel(problem, &cfg, &v0, &lambda0)
            }
        }
    };
    Ok(trace?)
}
