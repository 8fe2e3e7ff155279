use dualkit::admm::{
    admm_dualization_based, admm_plain, divergence_witness, divergence_witness_sharing, uzawa_check_quadratic, Block,
    ConstrainedProblem, Smoother, UzawaSmootherPair,
};
use dualkit::convex::ConvexFn;
use dualkit::correction::SolverConfig;
use dualkit::problems::QuadraticInstance;
use dualkit::trace::Status;
use dualkit::{LinOp, Matrix, Vector};
use nalgebra::DMatrix;

use crate::support::{from_matrix, Outcome, Tally};

const MARGIN_TOL: f64 = 1e-10;
const AGREE_TOL: f64 = 1e-8;

/// Dense saddle data rebuilt from the block functions and couplings.
struct Saddle {
    a_beta: DMatrix<f64>,
    coupling: DMatrix<f64>,
    beta: f64,
    ranges: Vec<std::ops::Range<usize>>,
}

impl Saddle {
    fn new(problem: &ConstrainedProblem) -> dualkit::Result<Self> {
        let blocks = problem.blocks();
        let mut ranges = Vec::new();
        let mut start = 0;
        for block in blocks {
            ranges.push(start..start + block.f.dim());
            start += block.f.dim();
        }
        let m = problem.g().dim();
        let mut coupling = DMatrix::zeros(m, start);
        let mut a_beta = DMatrix::zeros(start, start);
        for (block, range) in blocks.iter().zip(&ranges) {
            let size = range.len();
            coupling.view_mut((0, range.start), (m, size)).copy_from(&from_matrix(&block.b.to_dense()));
            let hessian = from_matrix(&block.f.hessian(&Vector::zeros(size))?);
            a_beta.view_mut((range.start, range.start), (size, size)).copy_from(&hessian);
        }
        a_beta += coupling.transpose() * &coupling * problem.beta();
        Ok(Self { a_beta, coupling, beta: problem.beta(), ranges })
    }

    /// Blocks of `Ã_β` on or below the diagonal in the order `order`.
    fn lower(&self, order: &[usize]) -> DMatrix<f64> {
        let n = self.a_beta.nrows();
        let mut out = DMatrix::zeros(n, n);
        for (pi, &i) in order.iter().enumerate() {
            for &j in &order[..=pi] {
                let (ri, rj) = (&self.ranges[i], &self.ranges[j]);
                out.view_mut((ri.start, rj.start), (ri.len(), rj.len()))
                    .copy_from(&self.a_beta.view((ri.start, rj.start), (ri.len(), rj.len())));
            }
        }
        out
    }

    fn smoother(&self, kind: Smoother) -> DMatrix<f64> {
        let forward: Vec<usize> = (0..self.ranges.len()).collect();
        let inv = |m: DMatrix<f64>| m.try_inverse().expect("invertible block triangle");
        match kind {
            Smoother::Plain => inv(self.lower(&forward)),
            Smoother::Symmetrized => {
                let l = inv(self.lower(&forward));
                let mut diag = DMatrix::zeros(self.a_beta.nrows(), self.a_beta.ncols());
                for r in &self.ranges {
                    diag.view_mut((r.start, r.start), (r.len(), r.len()))
                        .copy_from(&self.a_beta.view((r.start, r.start), (r.len(), r.len())));
                }
                l.transpose() * diag * l
            }
            Smoother::RandomAverage => {
                let orders = orders(self.ranges.len());
                let total = orders
                    .iter()
                    .map(|o| inv(self.lower(o)))
                    .fold(DMatrix::zeros(self.a_beta.nrows(), self.a_beta.ncols()), |a, b| a + b);
                total / orders.len() as f64
            }
        }
    }

    /// Smallest eigenvalues of `sym(R_V⁻¹) - Ã_β` and `(βI)⁻¹ - B̃Ã_β⁻¹B̃ᵗ`.
    fn margins(&self, r_v: &DMatrix<f64>) -> (f64, f64) {
        let inv = r_v.clone().try_inverse().expect("invertible smoother");
        let primal = (&inv + inv.transpose()) / 2.0 - &self.a_beta;
        let schur = &self.coupling * self.a_beta.clone().try_inverse().expect("SPD Ã_β") * self.coupling.transpose();
        let m = self.coupling.nrows();
        let multiplier = DMatrix::identity(m, m) / self.beta - schur;
        (min_eigenvalue(primal), min_eigenvalue(multiplier))
    }
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.min()
}

/// Every ordering of `0..count`, built by insertion.
fn orders(count: usize) -> Vec<Vec<usize>> {
    (0..count).fold(vec![vec![]], |acc, k| {
        acc.iter()
            .flat_map(|o: &Vec<usize>| {
                (0..=o.len()).map(move |at| {
                    let mut next = o.clone();
                    next.insert(at, k);
                    next
                })
            })
            .collect()
    })
}

fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn quadratic_checks(seed: u64, tally: &mut Tally, worst_average: &mut f64) -> dualkit::Result<()> {
    let problem = QuadraticInstance::new(seed, 4, 3, 10.0)?.constrained()?;
    let saddle = Saddle::new(&problem)?;
    for kind in [Smoother::Plain, Smoother::Symmetrized, Smoother::RandomAverage] {
        let pair = UzawaSmootherPair::for_admm(&problem, kind)?;
        let report = uzawa_check_quadratic(&problem, &pair)?;
        let oracle = saddle.smoother(kind);
        let off = max_abs(&from_matrix(&pair.r_v), &oracle);
        tally.check(off <= AGREE_TOL, || format!("seed {seed} {kind:?}: R_V differs from the oracle by {off:.2e}"));
        let (primal, multiplier) = saddle.margins(&oracle);
        let drift = (primal - report.primal_margin).abs().max((multiplier - report.multiplier_margin).abs());
        tally.check(drift <= AGREE_TOL, || format!("seed {seed} {kind:?}: margins differ from the oracle by {drift:.2e}"));
        match kind {
            Smoother::Plain => {
                tally.check(!report.symmetric_v && !report.guaranteed, || format!("seed {seed}: plain smoother not flagged"));
            }
            _ => {
                if kind == Smoother::RandomAverage {
                    *worst_average = worst_average.min(primal);
                }
                tally.check(report.symmetric_v && report.symmetric_w, || format!("seed {seed} {kind:?}: flagged nonsymmetric"));
                tally.check(primal >= -MARGIN_TOL, || format!("seed {seed} {kind:?}: primal margin {primal:.3e}"));
                tally.check(multiplier >= -MARGIN_TOL, || format!("seed {seed} {kind:?}: multiplier margin {multiplier:.3e}"));
            }
        }
    }
    Ok(())
}

/// Two scalar blocks `½u_j²` with `B = [1 1]`, `β = 1`.
fn two_scalar_blocks() -> dualkit::Result<f64> {
    let block = || Block::new(ConvexFn::half_norm_sq(1), LinOp::dense(Matrix::identity(1)));
    let problem = ConstrainedProblem::new(vec![block()?, block()?], Vector::zeros(1), 1.0)?;
    let saddle = Saddle::new(&problem)?;
    Ok(saddle.margins(&saddle.smoother(Smoother::RandomAverage)).0)
}

fn witness_checks(tally: &mut Tally) -> dualkit::Result<()> {
    let witness = divergence_witness()?;
    let trace = admm_plain(&witness, &SolverConfig::iterations(100_000), &Vector::filled(3, 1.0), &Vector::zeros(3))?;
    let residual = trace.last().metrics["constraint_residual"];
    tally.check(trace.status == Status::Diverged && residual > 1e6, || {
        format!("plain ADMM on the witness: {:?}, residual {residual:.2e}", trace.status)
    });

    let sharing = divergence_witness_sharing()?;
    let (lambda0, images) = sharing.multiplier_image(&Vector::filled(3, 1.0))?;
    let v0 = images.split(&[3, 3, 3]);
    let cfg = SolverConfig { tau: 0.5, max_iters: 100_000, tol: 1e-12, ..SolverConfig::default() };
    let trace = admm_dualization_based(&sharing, &cfg, &v0, &lambda0)?;
    let u = trace.final_state("u")?;
    let objective = sharing.objective(u)?;
    tally.check(trace.status == Status::Converged && objective <= 1e-10, || {
        format!("dualization-based ADMM on the sharing witness: {:?}, objective {objective:.2e}", trace.status)
    });
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    let mut worst_average = f64::INFINITY;
    for seed in 0..10 {
        if let Err(e) = quadratic_checks(800 + seed, &mut tally, &mut worst_average) {
            tally.check(false, || format!("seed {seed}: {e}"));
        }
    }
    if let Err(e) = witness_checks(&mut tally) {
        tally.check(false, || format!("witness: {e}"));
    }
    let counterexample = match two_scalar_blocks() {
        Ok(margin) => format!("{margin:.4}"),
        Err(e) => e.to_string(),
    };
    tally.outcome(format!(
        "10 seeded 3-block quadratics, margins >= -{MARGIN_TOL:e}; worst averaged-smoother primal margin {worst_average:.3e}; \
         two scalar blocks give {counterexample}"
    ))
}
