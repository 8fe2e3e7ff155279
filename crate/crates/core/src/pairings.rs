//! Registry of primal/dual method pairs.
//!
//! Each pair builds a seeded instance, runs a primal method and its dual
//! counterpart for the same number of iterations, and names the identities
//! that tie the two traces together.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admm::{
    admm_dualization_based, admm_dualization_parallel, admm_plain, admm_two_block, dr_dual_two_block, proximal_point_dual, Block,
    ConstrainedProblem, SharingProblem,
};
use crate::convex::{fenchel_young_residual, ConvexFn, ConvexSet};
use crate::correction::{psc, relaxed_ssc, ssc, LocalSolver, SolverConfig};
use crate::duality::{
    error_transfer_bound, lookup, verify_dualization, DualizationReport, PrimalDualProblem, Relation, RelationSpec,
};
use crate::error::{Error, Result};
use crate::linops::{LinOp, Vector};
use crate::problems::{random_matrix, random_vector, QuadraticInstance};
use crate::projsplit::{
    dykstra, generalized_dr, generalized_pr, parallel_dr, parallel_dykstra, parallel_von_neumann, pr_linear, von_neumann,
    PocsProblem,
};
use crate::trace::{State, Trace};

/// Condition number of generated quadratic parts.
const PAIR_COND: f64 = 4.0;
/// Iteration cap and step tolerance of the runs that estimate limits.
const LIMIT_ITERS: usize = 5000;
const LIMIT_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairInfo {
    pub id: &'static str,
    pub primal: &'static str,
    pub dual: &'static str,
    pub summary: &'static str,
}

pub const PAIRS: [PairInfo; 14] = [
    PairInfo {
        id: "neumann-ssc",
        primal: "von_neumann",
        dual: "ssc",
        summary: "alternating projections onto affine sets = SSC on the dual with u = f - p",
    },
    PairInfo {
        id: "dykstra-ssc",
        primal: "dykstra",
        dual: "ssc",
        summary: "Dykstra projections = SSC on the product dual with u = f - Σp_j, q_j = p_j",
    },
    PairInfo {
        id: "parallel-neumann-psc",
        primal: "parallel_von_neumann",
        dual: "psc",
        summary: "averaged projections onto affine sets = PSC on the dual",
    },
    PairInfo {
        id: "parallel-dykstra-psc",
        primal: "parallel_dykstra",
        dual: "psc",
        summary: "parallel Dykstra = PSC on the product dual",
    },
    PairInfo {
        id: "prlinear-gs",
        primal: "pr_linear",
        dual: "ssc",
        summary: "Peaceman-Rachford for a sum of linear operators = block Gauss-Seidel on the dual",
    },
    PairInfo {
        id: "genpr-ssc",
        primal: "generalized_pr",
        dual: "ssc",
        summary: "generalized Peaceman-Rachford = SSC on the Fenchel dual, including substeps",
    },
    PairInfo {
        id: "gendr-rssc",
        primal: "generalized_dr",
        dual: "relaxed_ssc",
        summary: "generalized Douglas-Rachford = relaxed SSC on the Fenchel dual",
    },
    PairInfo {
        id: "pardr-psc",
        primal: "parallel_dr",
        dual: "psc",
        summary: "parallel Douglas-Rachford = PSC on the Fenchel dual",
    },
    PairInfo {
        id: "admm2-dr",
        primal: "admm_two_block",
        dual: "dr_dual_two_block",
        summary: "two-block ADMM = Douglas-Rachford on the dual with λ = r",
    },
    PairInfo {
        id: "admmJ-gendr",
        primal: "admm_dualization_based",
        dual: "generalized_dr",
        summary: "dualization-based ADMM = generalized Douglas-Rachford on the multiplier problem",
    },
    PairInfo {
        id: "admmJ-rssc",
        primal: "admm_dualization_based",
        dual: "relaxed_ssc",
        summary: "dualization-based ADMM = relaxed SSC on the sharing problem",
    },
    PairInfo {
        id: "paradmm-pardr",
        primal: "admm_dualization_parallel",
        dual: "parallel_dr",
        summary: "parallel dualization-based ADMM = parallel Douglas-Rachford on the multiplier problem",
    },
    PairInfo {
        id: "paradmm-psc",
        primal: "admm_dualization_parallel",
        dual: "psc",
        summary: "parallel dualization-based ADMM = PSC on the sharing problem",
    },
    PairInfo {
        id: "alm-ppa",
        primal: "admm_plain (one block)",
        dual: "proximal_point_dual",
        summary: "augmented Lagrangian method = proximal point method on the dual",
    },
];

pub fn pair_info(id: &str) -> Result<&'static PairInfo> {
    PAIRS.iter().find(|p| p.id == id).ok_or_else(|| {
        let known: Vec<&str> = PAIRS.iter().map(|p| p.id).collect();
        Error::InvalidParameter(format!("unknown pair id `{id}`; known ids: {}", known.join(", ")))
    })
}

type Runner = Box<dyn Fn(&SolverConfig) -> Result<Trace> + Send + Sync>;
type Extract = Box<dyn Fn(&State) -> Result<Vector> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Primal,
    Dual,
}

/// Data for `‖u - u*‖ <= (‖B‖/μ)‖p - p*‖`.
struct Transfer {
    problem: PrimalDualProblem,
    mu: f64,
    u: (Side, Extract),
    p: (Side, Extract),
}

struct Setup {
    tau: f64,
    primal: Runner,
    dual: Runner,
    spec: RelationSpec,
    transfer: Option<Transfer>,
}

/// Primal and dual traces of one seeded pairing.
pub struct PairedRun {
    pub primal: Trace,
    pub dual: Trace,
    pub spec: RelationSpec,
}

fn key(name: &'static str) -> Extract {
    Box::new(move |s: &State| lookup(s, name).cloned())
}

fn starts(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Dimension in `3..=6` and block count in `2..=4`, varying with the seed.
fn shape(seed: u64) -> (usize, usize) {
    (3 + (seed % 4) as usize, 2 + (seed % 3) as usize)
}

fn build(id: &str, seed: u64) -> Result<Setup> {
    let info = pair_info(id)?;
    let (dim, blocks) = shape(seed);
    let quad = QuadraticInstance::new(seed, dim, blocks, PAIR_COND)?;
    let spec = |hypotheses: Vec<Relation>, relations: Vec<Relation>| RelationSpec {
        theorem_id: info.id.to_string(),
        hypotheses,
        relations,
    };
    match info.id {
        "neumann-ssc" | "parallel-neumann-psc" => {
            let problem = quad.pocs()?;
            let parallel = info.id == "parallel-neumann-psc";
            let (energy, decomp) = problem.affine_dual()?;
            let f = problem.f().clone();
            let relation = || {
                let f = f.clone();
                Relation::matches("u = f - p", "u", move |d| Ok(&f - lookup(d, "u")?))
            };
            let transfer = Transfer {
                problem: PrimalDualProblem::new(
                    ConvexFn::squared_distance(1.0, f.clone())?,
                    ConvexFn::sum(problem.sets().iter().cloned().map(ConvexFn::Indicator).collect())?,
                    LinOp::identity(dim),
                )?,
                mu: 1.0,
                u: (Side::Primal, key("u")),
                p: (Side::Dual, key("u")),
            };
            let primal_problem = problem.clone();
            let zero = Vector::zeros(dim);
            Ok(Setup {
                tau: if parallel { 1.0 / blocks as f64 } else { 1.0 },
                primal: Box::new(move |cfg| {
                    if parallel {
                        parallel_von_neumann(&primal_problem, cfg)
                    } else {
                        von_neumann(&primal_problem, cfg)
                    }
                }),
                dual: Box::new(move |cfg| {
                    if parallel {
                        psc(&energy, &decomp, LocalSolver::ClosedForm, cfg, &zero)
                    } else {
                        ssc(&energy, &decomp, LocalSolver::ClosedForm, cfg, &zero)
                    }
                }),
                spec: spec(vec![relation()], vec![if parallel { relation() } else { relation().with_substeps() }]),
                transfer: Some(transfer),
            })
        }
        "dykstra-ssc" | "parallel-dykstra-psc" => {
            let parallel = info.id == "parallel-dykstra-psc";
            let problem = convex_sets(seed, dim)?;
            let count = problem.len();
            let (energy, decomp) = problem.product_dual()?;
            let f = problem.f().clone();
            let split = vec![dim; count];
            let projection = {
                let f = f.clone();
                let split = split.clone();
                move || {
                    let (f, split) = (f.clone(), split.clone());
                    Relation::matches("u = f - Σp_j", "u", move |d| {
                        let total = Vector::sum_of(f.dim(), &lookup(d, "u")?.split(&split));
                        Ok(&f - &total)
                    })
                }
            };
            let correction = || Relation::equal("q", "u");
            let (mut relations, hypotheses) = (vec![projection(), correction()], vec![projection(), correction()]);
            if !parallel {
                relations = relations.into_iter().map(Relation::with_substeps).collect();
            }
            let transfer =
                Transfer { problem: problem.primal_dual()?, mu: 1.0, u: (Side::Primal, key("u")), p: (Side::Dual, key("u")) };
            let zero = Vector::zeros(dim * count);
            Ok(Setup {
                tau: if parallel { 1.0 / count as f64 } else { 1.0 },
                primal: Box::new(move |cfg| if parallel { parallel_dykstra(&problem, cfg) } else { dykstra(&problem, cfg) }),
                dual: Box::new(move |cfg| {
                    if parallel {
                        psc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &zero)
                    } else {
                        ssc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &zero)
                    }
                }),
                spec: spec(hypotheses, relations),
                transfer: Some(transfer),
            })
        }
        "prlinear-gs" => {
            let problem = quad.multi_linear()?;
            let mut rng = starts(seed);
            let warm: Vec<Vector> = (0..blocks).map(|_| random_vector(&mut rng, dim)).collect();
            let p0 = Vector::concat(&problem.ops().iter().zip(&warm).map(|(a, w)| a.apply(w)).collect::<Result<Vec<_>>>()?);
            let (energy, decomp) = problem.dual_energy()?;
            let (alpha, f, ops) = (problem.alpha(), problem.f().clone(), problem.ops().to_vec());
            let split = vec![dim; blocks];
            let recovery = {
                let split = split.clone();
                Relation::matches("u = (f - Σp_j)/α", "u", move |d| {
                    let total = Vector::sum_of(f.dim(), &lookup(d, "u")?.split(&split));
                    Ok((&f - &total).scale(1.0 / alpha))
                })
            };
            let images = Relation::new("A_j w_j = p_j", move |a, d| {
                let last = lookup(a, "last")?.split(&split);
                let mapped = ops.iter().zip(&last).map(|(op, w)| op.apply(w)).collect::<Result<Vec<_>>>()?;
                Ok(Vector::concat(&mapped).dist(lookup(d, "u")?))
            });
            let transfer = Transfer {
                problem: PrimalDualProblem::new(
                    ConvexFn::quadratic(LinOp::scale(dim, alpha), problem.f().clone(), 0.0)?,
                    ConvexFn::separable(
                        problem
                            .ops()
                            .iter()
                            .map(|a| ConvexFn::quadratic(a.clone(), Vector::zeros(dim), 0.0))
                            .collect::<Result<_>>()?,
                    )?,
                    LinOp::vstack(vec![LinOp::identity(dim); blocks])?,
                )?,
                mu: alpha,
                u: (Side::Primal, key("u")),
                p: (Side::Dual, key("u")),
            };
            Ok(Setup {
                tau: 1.0,
                primal: Box::new(move |cfg| pr_linear(&problem, cfg, Some(&warm))),
                dual: Box::new(move |cfg| ssc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &p0)),
                spec: spec(vec![], vec![recovery, images]),
                transfer: Some(transfer),
            })
        }
        "genpr-ssc" | "gendr-rssc" | "pardr-psc" => {
            let problem = quad.multi_convex()?;
            let mut rng = starts(seed);
            // the ℓ1 term's conjugate is finite on the ball of radius 0.3
            let p0 = Vector::concat(
                &(0..blocks).map(|j| random_vector(&mut rng, dim).scale(if j == 0 { 0.2 } else { 1.0 })).collect::<Vec<_>>(),
            );
            let u0 = problem.recover(&p0)?;
            let v0 = problem.shifts(&p0)?.split(&vec![dim; blocks]);
            let (energy, decomp) = problem.dual_energy()?;
            let image = |name: &'static str, with_shift: bool| {
                let problem = problem.clone();
                Relation::new(name, move |a, d| {
                    let p = lookup(d, "u")?;
                    let mut gap = lookup(a, "u")?.dist(&problem.recover(p)?);
                    if with_shift {
                        gap = gap.max(lookup(a, "v")?.dist(&problem.shifts(p)?));
                    }
                    Ok(gap)
                })
            };
            let records = image("(u, v) = (∇F*(-ΣB_jᵗp_j), -B_jᵗp_j)", true);
            let (tau, relations) = match info.id {
                "genpr-ssc" => (1.0, vec![records.with_substeps()]),
                "gendr-rssc" => (0.6, vec![records, image("û = ∇F*(-ΣB_jᵗp̂_j)", false).with_substeps()]),
                _ => (1.0 / blocks as f64, vec![records]),
            };
            let transfer = Transfer {
                problem: problem.primal_dual()?,
                mu: problem.f().strong_convexity(),
                u: (Side::Primal, key("u")),
                p: (Side::Dual, key("u")),
            };
            let hypotheses = vec![image("(u, v) = (∇F*(-ΣB_jᵗp_j), -B_jᵗp_j)", true)];
            let kind = info.id;
            Ok(Setup {
                tau,
                primal: Box::new(move |cfg| match kind {
                    "genpr-ssc" => generalized_pr(&problem, cfg, &u0, Some(&v0)),
                    "gendr-rssc" => generalized_dr(&problem, cfg, &u0, Some(&v0)),
                    _ => parallel_dr(&problem, cfg, &u0, Some(&v0)),
                }),
                dual: Box::new(move |cfg| match kind {
                    "genpr-ssc" => ssc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &p0),
                    "gendr-rssc" => relaxed_ssc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &p0),
                    _ => psc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &p0),
                }),
                spec: spec(hypotheses, relations),
                transfer: Some(transfer),
            })
        }
        "admm2-dr" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = dim - 1;
            let smooth = ConvexFn::quadratic(LinOp::dense(quad.spd(&mut rng)), random_vector(&mut rng, dim), 0.0)?;
            let first = Block::new(smooth, LinOp::dense(random_matrix(&mut rng, m, dim)))?;
            let second = Block::new(ConvexFn::l1(0.4, m)?, LinOp::scale(m, -1.0))?;
            let problem = ConstrainedProblem::new(vec![first.clone(), second], random_vector(&mut rng, m), 1.7)?;
            let beta = problem.beta();
            let mut rng = starts(seed);
            let (p0, q0, r0) = (random_vector(&mut rng, m), random_vector(&mut rng, m), random_vector(&mut rng, m));
            let u1 = random_vector(&mut rng, dim);
            let u2 = (&q0 - &r0).scale(1.0 / beta);
            let split =
                Relation::matches("u2 = (q - r)/β", "u2", move |d| Ok((lookup(d, "q")? - lookup(d, "r")?).scale(1.0 / beta)));
            let multiplier = Relation::equal("lambda", "r");
            let block = first.clone();
            let membership = Relation::new("-B1ᵗp ∈ ∂F1(u1)", move |a, d| {
                let p = lookup(d, "p")?;
                Ok(fenchel_young_residual(&block.f, lookup(a, "u1")?, &-&block.b.apply_adjoint(p)?)?.abs())
            });
            let transfer = Transfer {
                problem: PrimalDualProblem::new(first.f.clone(), ConvexFn::half_norm_sq(m), first.b.clone())?,
                mu: first.f.strong_convexity(),
                u: (Side::Primal, key("u1")),
                p: (Side::Dual, key("p")),
            };
            let (dual_problem, lambda0) = (problem.clone(), r0.clone());
            Ok(Setup {
                tau: 1.0,
                primal: Box::new(move |cfg| admm_two_block(&problem, cfg, &u1, &u2, &lambda0)),
                dual: Box::new(move |cfg| dr_dual_two_block(&dual_problem, cfg, &p0, &q0, &r0)),
                spec: spec(vec![], vec![split, multiplier, membership]),
                transfer: Some(transfer),
            })
        }
        "admmJ-gendr" | "paradmm-pardr" => {
            let parallel = info.id == "paradmm-pardr";
            let problem = quad.sharing()?;
            let (_, v0, lambda0) = sharing_start(&problem, seed)?;
            let splitting = problem.dual_splitting()?;
            let records = || Relation::equal("v", "v");
            let multiplier = || Relation::equal("lambda", "u");
            let mut relations = vec![records(), multiplier()];
            if !parallel {
                relations.push(Relation::equal("lambda", "u").with_substeps());
                let terms = problem.terms().to_vec();
                relations.push(
                    Relation::new("-B_jᵗλ̂_j ∈ ∂F_j(û_j)", move |a, _| {
                        // records carry no hat minimizer; the check applies to substeps
                        let Some(u_hat) = a.get("u_hat") else { return Ok(0.0) };
                        let hat = lookup(a, "lambda")?;
                        let block = a.get("block").map_or(0, |b| b[0] as usize);
                        let term = &terms[block];
                        Ok(fenchel_young_residual(&term.f, u_hat, &-&term.b.apply_adjoint(hat)?)?.abs())
                    })
                    .with_substeps(),
                );
            }
            let tau = if parallel { 1.0 / blocks as f64 } else { 0.5 };
            Ok(Setup {
                tau,
                primal: Box::new({
                    let (v0, lambda0) = (v0.clone(), lambda0.clone());
                    move |cfg| {
                        let trace = if parallel {
                            admm_dualization_parallel(&problem, cfg, &v0, &lambda0)?
                        } else {
                            admm_dualization_based(&problem, cfg, &v0, &lambda0)?
                        };
                        Ok(tag_blocks(trace))
                    }
                }),
                dual: Box::new(move |cfg| {
                    if parallel {
                        parallel_dr(&splitting, cfg, &lambda0, Some(&v0))
                    } else {
                        generalized_dr(&splitting, cfg, &lambda0, Some(&v0))
                    }
                }),
                spec: spec(vec![records(), multiplier()], relations),
                transfer: None,
            })
        }
        "admmJ-rssc" | "paradmm-psc" => {
            let parallel = info.id == "paradmm-psc";
            let problem = quad.sharing()?;
            let (w0, v0, lambda0) = sharing_start(&problem, seed)?;
            let (energy, decomp) = problem.energy()?;
            let image = || {
                let problem = problem.clone();
                Relation::new("(λ, v) = (β(ΣB_jw_j - g), B_jw_j)", move |a, d| {
                    let (lambda, images) = problem.multiplier_image(lookup(d, "u")?)?;
                    Ok(lookup(a, "lambda")?.dist(&lambda).max(lookup(a, "v")?.dist(&images)))
                })
            };
            let splitting = problem.dual_splitting()?;
            let transfer = Transfer {
                problem: splitting.primal_dual()?,
                mu: splitting.f().strong_convexity(),
                u: (Side::Primal, key("lambda")),
                p: (Side::Dual, key("u")),
            };
            let tau = if parallel { 1.0 / blocks as f64 } else { 0.5 };
            let spec = spec(vec![image()], vec![image()]);
            Ok(Setup {
                tau,
                primal: Box::new(move |cfg| {
                    if parallel {
                        admm_dualization_parallel(&problem, cfg, &v0, &lambda0)
                    } else {
                        admm_dualization_based(&problem, cfg, &v0, &lambda0)
                    }
                }),
                dual: Box::new(move |cfg| {
                    if parallel {
                        psc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &w0)
                    } else {
                        relaxed_ssc(&energy, &decomp, LocalSolver::ProximalNewton, cfg, &w0)
                    }
                }),
                spec,
                transfer: Some(transfer),
            })
        }
        "alm-ppa" => {
            let single = QuadraticInstance::new(seed, dim, 1, PAIR_COND)?.constrained()?;
            let problem = single.with_beta(0.5 + (seed % 5) as f64 * 0.5)?;
            let block = problem.blocks()[0].clone();
            let mut rng = starts(seed);
            let p0 = random_vector(&mut rng, problem.g().dim());
            let u0 = Vector::zeros(dim);
            let transfer = Transfer {
                problem: PrimalDualProblem::new(
                    block.f.clone(),
                    ConvexFn::half_norm_sq(block.b.codomain_dim()),
                    block.b.clone(),
                )?,
                mu: block.f.strong_convexity(),
                u: (Side::Primal, key("u")),
                p: (Side::Dual, key("p")),
            };
            let dual_problem = problem.clone();
            let start = p0.clone();
            Ok(Setup {
                tau: 1.0,
                primal: Box::new(move |cfg| admm_plain(&problem, cfg, &u0, &p0)),
                dual: Box::new(move |cfg| proximal_point_dual(&dual_problem, cfg, &start)),
                spec: spec(vec![Relation::equal("lambda", "p")], vec![Relation::equal("lambda", "p")]),
                transfer: Some(transfer),
            })
        }
        other => Err(Error::InvalidParameter(format!("pair `{other}` has no instance builder"))),
    }
}

/// Stores each substep's block index in its state so per-block checks can find their term.
fn tag_blocks(mut trace: Trace) -> Trace {
    for record in &mut trace.records {
        for sub in &mut record.substeps {
            sub.state.insert("block".into(), Vector::filled(1, sub.block as f64));
        }
    }
    trace
}

/// A box, a halfspace and an `ℓ1` ball sharing an interior point, with `f` outside.
fn convex_sets(seed: u64, dim: usize) -> Result<PocsProblem> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = random_vector(&mut rng, dim).scale(0.5);
    let lo: Vec<f64> = (0..dim).map(|i| centre[i] - rng.gen_range(0.2..1.0)).collect();
    let hi: Vec<f64> = (0..dim).map(|i| centre[i] + rng.gen_range(0.2..1.0)).collect();
    let normal = random_vector(&mut rng, dim);
    let offset = normal.dot(&centre) + 0.3;
    let sets =
        vec![ConvexSet::boxed(lo, hi)?, ConvexSet::halfspace(normal, offset)?, ConvexSet::l1_ball(dim, centre.norm1() + 0.5)?];
    PocsProblem::new(random_vector(&mut rng, dim).scale(3.0), sets)
}

/// `w⁰`, and the matching `v_j⁰ = B_jw_j⁰`, `λ⁰ = β(ΣB_jw_j⁰ - g)`.
fn sharing_start(problem: &SharingProblem, seed: u64) -> Result<(Vector, Vec<Vector>, Vector)> {
    let mut rng = starts(seed);
    let w0 = random_vector(&mut rng, problem.sizes().iter().sum());
    let (lambda0, images) = problem.multiplier_image(&w0)?;
    let split = vec![problem.g().dim(); problem.len()];
    Ok((w0, images.split(&split), lambda0))
}

fn config(iters: usize, tau: f64) -> SolverConfig {
    SolverConfig::iterations(iters).with_tau(tau)
}

/// Runs both sides of a pairing for `iters` iterations; the two runs go on
/// separate rayon tasks.
pub fn paired_run(id: &str, seed: u64, iters: usize) -> Result<PairedRun> {
    let setup = build(id, seed)?;
    let cfg = config(iters, setup.tau);
    let (primal, dual) = rayon::join(|| (setup.primal)(&cfg), || (setup.dual)(&cfg));
    Ok(PairedRun { primal: primal?, dual: dual?, spec: setup.spec })
}

/// Relation residuals of one seeded pairing.
pub fn run_pair(id: &str, seed: u64, iters: usize, tol: f64) -> Result<DualizationReport> {
    let run = paired_run(id, seed, iters)?;
    verify_dualization(&run.primal, &run.dual, &run.spec, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub pair: String,
    /// `(‖B‖/μ)‖p⁽ⁿ⁾ - p*‖` for `n >= 1`.
    pub bounds: Vec<f64>,
    /// `‖u⁽ⁿ⁾ - u*‖` for `n >= 1`.
    pub errors: Vec<f64>,
    /// Smallest `bound - error`.
    pub min_slack: f64,
}

/// Checks the error-transfer bound along a paired run.
///
/// `p*` is the limit of a long run of the side that carries `p`, and
/// `u* = ∇F*(-Bᵗp*)`. Returns `None` for pairings whose traces do not carry
/// a dual iterate `p` (the multiplier-problem splittings).
pub fn error_transfer(id: &str, seed: u64, iters: usize) -> Result<Option<TransferReport>> {
    let setup = build(id, seed)?;
    let Some(transfer) = &setup.transfer else { return Ok(None) };
    let cfg = config(iters, setup.tau);
    let (primal, dual) = rayon::join(|| (setup.primal)(&cfg), || (setup.dual)(&cfg));
    let (primal, dual) = (primal?, dual?);
    let long = SolverConfig { max_iters: LIMIT_ITERS, tol: LIMIT_TOL, ..cfg };
    let limit = match transfer.p.0 {
        Side::Primal => (setup.primal)(&long)?,
        Side::Dual => (setup.dual)(&long)?,
    };
    let p_star = (transfer.p.1)(&limit.last().state)?;
    let u_star = transfer.problem.recover_primal(&p_star)?;
    let pick = |side: Side| if side == Side::Primal { &primal } else { &dual };
    let (mut bounds, mut errors) = (Vec::new(), Vec::new());
    for n in 1..pick(Side::Primal).records.len() {
        let u = (transfer.u.1)(&pick(transfer.u.0).records[n].state)?;
        let p = (transfer.p.1)(&pick(transfer.p.0).records[n].state)?;
        bounds.push(error_transfer_bound(&transfer.problem, &p, &p_star, transfer.mu)?);
        errors.push(u.dist(&u_star));
    }
    let min_slack = bounds.iter().zip(&errors).map(|(b, e)| b - e).fold(f64::INFINITY, f64::min);
    Ok(Some(TransferReport { pair: id.to_string(), bounds, errors, min_slack }))
}
