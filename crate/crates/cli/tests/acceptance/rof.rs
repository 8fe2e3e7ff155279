use dualkit::correction::{psc, ssc, LocalSolver, SolverConfig};
use dualkit::problems::{rof_decomposition, rof_dual_energy, rof_primal_dual, rof_splitting, RofInstance};
use dualkit::projsplit::generalized_pr;
use dualkit::Vector;

use crate::support::{Outcome, Tally};

fn limit(tau: f64) -> SolverConfig {
    SolverConfig { tau, max_iters: 20000, tol: 1e-15, ..SolverConfig::default() }
}

/// `f - Dᵗp/α` with `(Dᵗp)_i = p_{i-1} - p_i` over the first `d - 1` entries.
fn recovery(f: &Vector, p: &Vector, alpha: f64) -> Vector {
    let d = f.dim();
    Vector::from_fn(d, |i| {
        let before = if i > 0 { p[i - 1] } else { 0.0 };
        let here = if i + 1 < d { p[i] } else { 0.0 };
        f[i] - (before - here) / alpha
    })
}

fn check_instance(seed: u64, d: usize, alpha: f64, tally: &mut Tally) -> dualkit::Result<()> {
    let name = format!("seed {seed} d {d} α {alpha}");
    let inst = RofInstance::noisy(seed, d, alpha, 0.2)?;
    let pd = rof_primal_dual(&inst)?;
    let split = d / 2;
    let energy = rof_dual_energy(&inst)?;
    let decomp = rof_decomposition(&inst, split)?;
    let p0 = Vector::zeros(d);
    let sequential = ssc(&energy, &decomp, LocalSolver::ProximalNewton, &limit(1.0), &p0)?;
    let parallel = psc(&energy, &decomp, LocalSolver::ProximalNewton, &limit(0.5), &p0)?;
    let (p_ssc, p_psc) = (sequential.final_state("u")?, parallel.final_state("u")?);
    let apart = p_ssc.dist(p_psc);
    tally.check(apart <= 1e-6, || format!("{name}: SSC and PSC limits differ by {apart:.2e}"));

    let splitting = rof_splitting(&inst, split)?;
    let start = Vector::zeros(splitting.dual_sizes().iter().sum());
    let u0 = splitting.recover(&start)?;
    let v0 = splitting.shifts(&start)?.split(&vec![d; splitting.len()]);
    let primal = generalized_pr(&splitting, &limit(1.0), &u0, Some(&v0))?;
    let u = primal.final_state("u")?;

    let gap = pd.duality_gap(u, p_ssc)?;
    tally.check(gap.abs() <= 1e-6, || format!("{name}: duality gap {gap:.2e}"));
    let recovered = recovery(inst.f(), p_ssc, alpha);
    let residual = u.dist(&recovered);
    tally.check(residual <= 1e-8, || format!("{name}: recovery residual {residual:.2e}"));
    let library = pd.recover_primal(p_ssc)?.dist(&recovered);
    tally.check(library <= 1e-12, || format!("{name}: library recovery off by {library:.2e}"));
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    let cases = [(1, 16, 2.0), (2, 32, 4.0), (3, 32, 12.0), (4, 48, 6.0)];
    for (seed, d, alpha) in cases {
        if let Err(e) = check_instance(seed, d, alpha, &mut tally) {
            tally.check(false, || format!("seed {seed}: {e}"));
        }
    }
    tally.outcome(format!("{} noisy step signals: gap <= 1e-6, recovery <= 1e-8, SSC vs PSC <= 1e-6", cases.len()))
}
