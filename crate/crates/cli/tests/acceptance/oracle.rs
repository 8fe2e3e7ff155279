use dualkit::admm::{
    admm_dualization_based, admm_dualization_parallel, admm_plain, admm_random_permuted, admm_symmetrized, proximal_point_dual,
    Block, ConstrainedProblem, SharingProblem,
};
use dualkit::convex::ConvexFn;
use dualkit::correction::{psc, ssc, Decomposition, Energy, LocalSolver, PermutationMode, SolverConfig};
use dualkit::projsplit::{generalized_dr, pr_linear, MultiConvexProblem, MultiLinearProblem, SplitTerm};
use dualkit::trace::Trace;
use dualkit::{LinOp, Vector};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::support::{from_na, lu_solve, random_na, random_spd_na, rng, to_matrix, Outcome, Tally};

const SEEDS: u64 = 5;
const TOL: f64 = 1e-6;

fn config(max_iters: usize, tau: f64) -> SolverConfig {
    SolverConfig { tau, max_iters, tol: 1e-14, ..SolverConfig::default() }
}

fn final_state(trace: &Trace, key: &str) -> dualkit::Result<Vector> {
    trace.final_state(key).cloned()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    random_na(rng, n, 1).column(0).into_owned()
}

fn dense(m: &DMatrix<f64>) -> LinOp {
    LinOp::dense(to_matrix(m))
}

/// `½(Au, u) - (f, u)` with the data kept for the oracle.
struct Quadratic {
    a: DMatrix<f64>,
    f: DVector<f64>,
}

impl Quadratic {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        Self { a: random_spd_na(rng, n, 0.5), f: random_vec(rng, n) }
    }

    fn convex_fn(&self) -> ConvexFn {
        ConvexFn::quadratic(dense(&self.a), from_na(&self.f), 0.0).unwrap()
    }
}

fn block_diag(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for p in parts {
        out.view_mut((at, at), (p.nrows(), p.ncols())).copy_from(p);
        at += p.nrows();
    }
    out
}

fn subspace_correction(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let mut rng = rng(seed);
    let q = Quadratic::random(&mut rng, 8);
    let exact = from_na(&lu_solve(&q.a, &q.f));
    let energy = Energy::smooth(q.convex_fn());
    let decomp = Decomposition::contiguous(&[3, 3, 2])?;
    let start = Vector::zeros(8);
    for (name, trace) in [
        ("ssc", ssc(&energy, &decomp, LocalSolver::ProximalNewton, &config(5000, 1.0), &start)?),
        ("psc", psc(&energy, &decomp, LocalSolver::ProximalNewton, &config(20000, 1.0 / 3.0), &start)?),
    ] {
        let err = final_state(&trace, "u")?.dist(&exact);
        tally.check(err <= TOL, || format!("{name} seed {seed}: error {err:.2e} after {} iterations", trace.iterations()));
    }
    Ok(())
}

fn linear_pr(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let mut rng = rng(seed);
    let (n, alpha) = (6, 1.5);
    let ops: Vec<DMatrix<f64>> = (0..3).map(|_| random_spd_na(&mut rng, n, 0.1)).collect();
    let f = random_vec(&mut rng, n);
    let total = ops.iter().fold(DMatrix::identity(n, n) * alpha, |acc, a| acc + a);
    let exact = from_na(&lu_solve(&total, &f));
    let problem = MultiLinearProblem::new(ops.iter().map(dense).collect(), alpha, from_na(&f))?;
    let trace = pr_linear(&problem, &config(5000, 1.0), None)?;
    let err = final_state(&trace, "u")?.dist(&exact);
    tally.check(err <= TOL, || format!("pr_linear seed {seed}: error {err:.2e}"));
    Ok(())
}

/// `F` quadratic and `G_j = (α_j/2)‖· - c_j‖²`, so the minimizer solves one linear system.
fn generalized_dr_run(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let mut rng = rng(seed);
    let n = 5;
    let q = Quadratic::random(&mut rng, n);
    let mut system = q.a.clone();
    let mut rhs = q.f.clone();
    let mut terms = Vec::new();
    for j in 0..3 {
        let (m, alpha) = (4, 0.5 + j as f64);
        let b = random_na(&mut rng, m, n);
        let c = random_vec(&mut rng, m);
        system += b.transpose() * &b * alpha;
        rhs += b.transpose() * &c * alpha;
        terms.push(SplitTerm { g: ConvexFn::squared_distance(alpha, from_na(&c))?, b: dense(&b) });
    }
    let exact = from_na(&lu_solve(&system, &rhs));
    let problem = MultiConvexProblem::new(q.convex_fn(), terms)?;
    let p0 = Vector::zeros(problem.dual_sizes().iter().sum());
    let u0 = problem.recover(&p0)?;
    let v0 = problem.shifts(&p0)?.split(&vec![n; problem.len()]);
    let trace = generalized_dr(&problem, &config(5000, 0.5), &u0, Some(&v0))?;
    let err = final_state(&trace, "u")?.dist(&exact);
    tally.check(err <= TOL, || format!("generalized_dr seed {seed}: error {err:.2e}"));
    Ok(())
}

/// Blocks `½(A_ju_j, u_j) - (f_j, u_j)` with coupling `ΣB_ju_j = g`.
struct Coupled {
    quads: Vec<Quadratic>,
    couplings: Vec<DMatrix<f64>>,
    g: DVector<f64>,
}

impl Coupled {
    fn random(rng: &mut ChaCha8Rng, count: usize, size: usize, m: usize) -> Self {
        let quads = (0..count).map(|_| Quadratic::random(rng, size)).collect();
        let couplings = (0..count).map(|_| random_na(rng, m, size)).collect();
        Self { quads, couplings, g: random_vec(rng, m) }
    }

    fn blocks(&self) -> Vec<Block> {
        self.quads.iter().zip(&self.couplings).map(|(q, b)| Block::new(q.convex_fn(), dense(b)).unwrap()).collect()
    }

    fn stacked(&self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let a = block_diag(&self.quads.iter().map(|q| &q.a).collect::<Vec<_>>());
        let b = DMatrix::from_fn(self.g.len(), a.nrows(), |i, j| {
            let size = self.quads[0].f.len();
            self.couplings[j / size][(i, j % size)]
        });
        let f = DVector::from_iterator(a.nrows(), self.quads.iter().flat_map(|q| q.f.iter().copied()));
        (a, b, f)
    }

    /// `[A Bᵗ; B 0][u; λ] = [f; g]`.
    fn kkt(&self) -> (Vector, Vector) {
        let (a, b, f) = self.stacked();
        let (n, m) = (a.nrows(), b.nrows());
        let mut system = DMatrix::zeros(n + m, n + m);
        system.view_mut((0, 0), (n, n)).copy_from(&a);
        system.view_mut((0, n), (n, m)).copy_from(&b.transpose());
        system.view_mut((n, 0), (m, n)).copy_from(&b);
        let rhs = DVector::from_iterator(n + m, f.iter().chain(self.g.iter()).copied());
        let x = lu_solve(&system, &rhs);
        (from_na(&x.rows(0, n).into_owned()), from_na(&x.rows(n, m).into_owned()))
    }

    /// Minimizer of `Σ F_j(u_j) + (β/2)‖Bu - g‖²`.
    fn sharing_minimizer(&self, beta: f64) -> Vector {
        let (a, b, f) = self.stacked();
        from_na(&lu_solve(&(a + b.transpose() * &b * beta), &(f + b.transpose() * &self.g * beta)))
    }
}

fn admm_family(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let mut rng = rng(seed);
    let beta = 1.0;
    let mut check = |name: &str, trace: &Trace, key: &str, exact: &Vector| -> dualkit::Result<()> {
        let err = final_state(trace, key)?.dist(exact);
        tally.check(err <= TOL, || format!("{name} seed {seed}: {key} error {err:.2e} after {} iterations", trace.iterations()));
        Ok(())
    };

    let two = Coupled::random(&mut rng, 2, 2, 3);
    let problem = ConstrainedProblem::new(two.blocks(), from_na(&two.g), beta)?;
    let (u, lambda) = two.kkt();
    let trace = admm_plain(&problem, &config(20000, 1.0), &Vector::zeros(4), &Vector::zeros(3))?;
    check("admm_plain", &trace, "u", &u)?;
    check("admm_plain", &trace, "lambda", &lambda)?;

    let three = Coupled::random(&mut rng, 3, 2, 4);
    let problem = ConstrainedProblem::new(three.blocks(), from_na(&three.g), beta)?;
    let (u, lambda) = three.kkt();
    let (u0, l0) = (Vector::zeros(6), Vector::zeros(4));
    let trace = admm_symmetrized(&problem, &config(20000, 1.0), &u0, &l0)?;
    check("admm_symmetrized", &trace, "u", &u)?;
    check("admm_symmetrized", &trace, "lambda", &lambda)?;
    let random = SolverConfig { permutation: PermutationMode::RandomEachSweep, seed, ..config(20000, 1.0) };
    let trace = admm_random_permuted(&problem, &random, &u0, &l0)?;
    check("admm_random_permuted", &trace, "u", &u)?;
    check("admm_random_permuted", &trace, "lambda", &lambda)?;

    let one = Coupled::random(&mut rng, 1, 3, 3);
    let problem = ConstrainedProblem::new(one.blocks(), from_na(&one.g), 2.0)?;
    let (_, lambda) = one.kkt();
    let trace = proximal_point_dual(&problem, &config(20000, 1.0), &Vector::zeros(3))?;
    check("proximal_point_dual", &trace, "p", &lambda)?;

    let shared = Coupled::random(&mut rng, 3, 2, 3);
    let problem = SharingProblem::new(shared.blocks(), from_na(&shared.g), beta)?;
    let u = shared.sharing_minimizer(beta);
    let (lambda0, images) = problem.multiplier_image(&Vector::zeros(6))?;
    let v0 = images.split(&[3, 3, 3]);
    let trace = admm_dualization_based(&problem, &config(20000, 0.5), &v0, &lambda0)?;
    check("admm_dualization_based", &trace, "u", &u)?;
    let trace = admm_dualization_parallel(&problem, &config(20000, 1.0 / 3.0), &v0, &lambda0)?;
    check("admm_dualization_parallel", &trace, "u", &u)?;
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    for seed in 0..SEEDS {
        for (name, run) in [
            ("subspace correction", subspace_correction as fn(u64, &mut Tally) -> dualkit::Result<()>),
            ("linear PR", linear_pr),
            ("generalized DR", generalized_dr_run),
            ("ADMM", admm_family),
        ] {
            if let Err(e) = run(300 + seed, &mut tally) {
                tally.check(false, || format!("{name} seed {seed}: {e}"));
            }
        }
    }
    tally.outcome(format!("{SEEDS} seeds, ‖u - u*‖ <= {TOL:e} against direct LU solves"))
}
