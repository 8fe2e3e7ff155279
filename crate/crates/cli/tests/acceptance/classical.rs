use dualkit::convex::{ConvexFn, ConvexSet};
use dualkit::correction::SolverConfig;
use dualkit::projsplit::{generalized_dr, generalized_pr, MultiConvexProblem, SplitTerm};
use dualkit::{LinOp, Vector};
use rand::Rng;

use crate::support::{rng, uniform, Outcome, Tally};

const ITERS: usize = 50;
const TOL: f64 = 1e-10;
const DIM: usize = 4;

/// `F = ‖·‖²`, `G_1 = λ‖·‖_1`, `G_2` the indicator of `[lo, hi]`, `B_j = I`.
struct Classical {
    weight: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Classical {
    fn random(seed: u64) -> Self {
        let mut rng = rng(seed);
        let weight = rng.gen_range(0.2..1.5);
        let lo: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..0.0)).collect();
        let hi = lo.iter().map(|l| l + rng.gen_range(0.3..2.0)).collect();
        Self { weight, lo, hi }
    }

    fn problem(&self) -> MultiConvexProblem {
        MultiConvexProblem::special(
            2.0,
            vec![
                SplitTerm { g: ConvexFn::l1(self.weight, DIM).unwrap(), b: LinOp::identity(DIM) },
                SplitTerm {
                    g: ConvexFn::Indicator(ConvexSet::boxed(self.lo.clone(), self.hi.clone()).unwrap()),
                    b: LinOp::identity(DIM),
                },
            ],
        )
        .unwrap()
    }

    /// `prox_{Ḡ_j}(w) = argmin ½‖x - w/2‖² + G_j(x)/2`, written out by hand.
    fn prox(&self, j: usize, w: &[f64]) -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| {
                let x = wi / 2.0;
                if j == 0 {
                    let t = self.weight / 2.0;
                    x.signum() * (x.abs() - t).max(0.0)
                } else {
                    x.clamp(self.lo[i], self.hi[i])
                }
            })
            .collect()
    }

    fn reflect(&self, j: usize, w: &[f64]) -> Vec<f64> {
        self.prox(j, w).iter().zip(w).map(|(p, wi)| 2.0 * p - wi).collect()
    }
}

fn dist(a: &Vector, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn peaceman_rachford(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let inst = Classical::random(seed);
    let mut rng = rng(seed + 1);
    let v0 = vec![uniform(&mut rng, DIM, 2.0), uniform(&mut rng, DIM, 2.0)];
    let u0 = (&v0[0] + &v0[1]).scale(0.5);
    let trace = generalized_pr(&inst.problem(), &SolverConfig::iterations(ITERS), &u0, Some(&v0))?;
    // v⁺ = (2prox_{Ḡ_2} - I)(2prox_{Ḡ_1} - I)v with v = 2u - v_1
    let mut w = v0[1].as_slice().to_vec();
    let mut worst: f64 = 0.0;
    for record in &trace.records[1..] {
        w = inst.reflect(1, &inst.reflect(0, &w));
        let induced = record.get("u")?.scale(2.0).axpy(-1.0, &record.get("v")?.segment(0, DIM));
        worst = worst.max(dist(&induced, &w));
    }
    tally.check(trace.records.len() == ITERS + 1 && worst <= TOL, || format!("PR seed {seed}: gap {worst:.2e}"));
    Ok(())
}

fn douglas_rachford(seed: u64, tally: &mut Tally) -> dualkit::Result<()> {
    let inst = Classical::random(seed);
    let mut rng = rng(seed + 1);
    let v0 = vec![uniform(&mut rng, DIM, 2.0), uniform(&mut rng, DIM, 2.0)];
    let u0 = (&v0[0] + &v0[1]).scale(0.5);
    let cfg = SolverConfig::iterations(ITERS).with_tau(0.5);
    let trace = generalized_dr(&inst.problem(), &cfg, &u0, Some(&v0))?;
    // v⁺ = v + prox_{Ḡ_2}(2prox_{Ḡ_1}(v) - v) - prox_{Ḡ_1}(v), i.e. ½(I + R_2R_1)v
    let mut w = v0[1].as_slice().to_vec();
    let mut worst: f64 = 0.0;
    for record in &trace.records[1..] {
        let x = inst.prox(0, &w);
        let reflected: Vec<f64> = x.iter().zip(&w).map(|(a, b)| 2.0 * a - b).collect();
        let y = inst.prox(1, &reflected);
        w = w.iter().zip(x.iter().zip(&y)).map(|(wi, (xi, yi))| wi + yi - xi).collect();
        worst = worst.max(dist(&record.get("v")?.segment(DIM, DIM), &w));
    }
    tally.check(trace.records.len() == ITERS + 1 && worst <= TOL, || format!("DR seed {seed}: gap {worst:.2e}"));
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    for seed in 0..5 {
        for run in [peaceman_rachford, douglas_rachford] {
            if let Err(e) = run(70 + seed, &mut tally) {
                tally.check(false, || format!("seed {seed}: {e}"));
            }
        }
    }
    tally.outcome(format!("PR and DR on 5 seeded instances, {ITERS} iterations, tol {TOL:e}"))
}
