use dualkit::correction::{ssc, LocalSolver, SolverConfig};
use dualkit::problems::{LogisticInstance, Sample};
use dualkit::projsplit::generalized_pr;
use dualkit::Vector;
use dualkit_cli::registry::xor_logistic;
use rand::Rng;

use crate::support::{rng, uniform, Outcome, Tally};

const PAIRED_ITERS: usize = 30;
const IDENTITY_TOL: f64 = 1e-6;
const OBJECTIVE_TOL: f64 = 1e-6;

fn random_instance(seed: u64, n: usize, d: usize, k: usize, alpha: f64) -> LogisticInstance {
    let mut rng = rng(seed);
    let samples = (0..n)
        .map(|_| {
            let x = uniform(&mut rng, d, 2.0);
            let label = rng.gen_range(1..=k);
            Sample { x, label }
        })
        .collect();
    LogisticInstance::new(d, k, samples, alpha).unwrap()
}

/// Scores `s_c = (w_c, x) + b_c` for `θ = [w_1; b_1; …; w_k; b_k]`.
fn scores(theta: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    let width = x.len() + 1;
    (0..k)
        .map(|c| {
            theta[c * width..c * width + x.len()].iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + theta[c * width + x.len()]
        })
        .collect()
}

/// `Σ_j [log Σ_c exp(s_c) - s_{y_j}] + (Nα/2)‖θ‖²` and its gradient.
fn objective_and_gradient(inst: &LogisticInstance, theta: &[f64]) -> (f64, Vec<f64>) {
    let k = inst.classes();
    let width = inst.features() + 1;
    let reg = inst.len() as f64 * inst.alpha();
    let mut value = 0.5 * reg * theta.iter().map(|t| t * t).sum::<f64>();
    let mut grad: Vec<f64> = theta.iter().map(|t| reg * t).collect();
    for sample in inst.samples() {
        let x = sample.x.as_slice();
        let s = scores(theta, x, k);
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = s.iter().map(|si| (si - top).exp()).sum();
        value += top + total.ln() - s[sample.label - 1];
        for c in 0..k {
            let weight = (s[c] - top).exp() / total - if c + 1 == sample.label { 1.0 } else { 0.0 };
            for (i, xi) in x.iter().chain(std::iter::once(&1.0)).enumerate() {
                grad[c * width + i] += weight * xi;
            }
        }
    }
    (value, grad)
}

/// Gradient descent with step `1/L`, `L = Nα + Σ‖[x_j; 1]‖²`.
fn gradient_descent(inst: &LogisticInstance) -> (f64, Vec<f64>) {
    let lipschitz = inst.len() as f64 * inst.alpha() + inst.samples().iter().map(|s| s.x.norm_sq() + 1.0).sum::<f64>();
    let mut theta = vec![0.0; inst.dim()];
    for _ in 0..200_000 {
        let (_, grad) = objective_and_gradient(inst, &theta);
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-11 {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= g / lipschitz;
        }
    }
    (objective_and_gradient(inst, &theta).0, theta)
}

fn check_instance(name: &str, inst: &LogisticInstance, tally: &mut Tally) -> dualkit::Result<()> {
    let problem = inst.problem()?;
    let k = inst.classes();
    let p0 = Vector::filled(inst.len() * k, 1.0 / k as f64);
    let u0 = problem.recover(&p0)?;
    let v0 = problem.shifts(&p0)?.split(&vec![problem.dim(); problem.len()]);
    let (energy, decomp) = problem.dual_energy()?;

    // primal incremental proximal run against dual block coordinate descent
    let cfg = SolverConfig::iterations(PAIRED_ITERS);
    let primal = generalized_pr(&problem, &cfg, &u0, Some(&v0))?;
    let dual = ssc(&energy, &decomp, LocalSolver::ProximalNewton, &cfg, &p0)?;
    let mut worst: f64 = 0.0;
    for (a, b) in primal.records.iter().zip(&dual.records) {
        let p = b.get("u")?;
        worst = worst.max(a.get("u")?.dist(&problem.recover(p)?)).max(a.get("v")?.dist(&problem.shifts(p)?));
        for (sa, sb) in a.substeps.iter().zip(&b.substeps) {
            worst = worst.max(sa.state["u"].dist(&problem.recover(&sb.state["u"])?));
        }
    }
    let paired = primal.records.len() == PAIRED_ITERS + 1 && dual.records.len() == PAIRED_ITERS + 1;
    tally.check(paired && worst <= IDENTITY_TOL, || format!("{name}: primal/dual identity gap {worst:.2e}"));

    // the hand-written objective agrees with the library's
    let probe = uniform(&mut rng(7), inst.dim(), 1.0);
    let (mine, _) = objective_and_gradient(inst, probe.as_slice());
    let theirs = inst.objective(&probe)?;
    tally.check((mine - theirs).abs() <= 1e-10 * (1.0 + mine.abs()), || format!("{name}: objective {mine} vs {theirs}"));

    let (best, _) = gradient_descent(inst);
    let long = SolverConfig { max_iters: 5000, tol: 1e-13, ..SolverConfig::default() };
    let limit = ssc(&energy, &decomp, LocalSolver::ProximalNewton, &long, &p0)?;
    let theta = problem.recover(limit.final_state("u")?)?;
    let excess = inst.objective(&theta)? - best;
    tally.check(excess.abs() <= OBJECTIVE_TOL, || format!("{name}: dual-recovered objective excess {excess:.2e}"));
    let primal_limit = generalized_pr(&problem, &long, &u0, Some(&v0))?;
    let excess = inst.objective(primal_limit.final_state("u")?)? - best;
    tally.check(excess.abs() <= OBJECTIVE_TOL, || format!("{name}: primal objective excess {excess:.2e}"));
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    let instances = [
        ("xor".to_string(), xor_logistic(0.1).unwrap()),
        ("N=30 d=3 k=3".to_string(), random_instance(81, 30, 3, 3, 0.05)),
        ("N=50 d=5 k=2".to_string(), random_instance(82, 50, 5, 2, 0.02)),
    ];
    for (name, inst) in &instances {
        if let Err(e) = check_instance(name, inst, &mut tally) {
            tally.check(false, || format!("{name}: {e}"));
        }
    }
    tally.outcome(format!(
        "{} datasets; identity <= {IDENTITY_TOL:e}, objective vs gradient descent <= {OBJECTIVE_TOL:e}",
        instances.len()
    ))
}
