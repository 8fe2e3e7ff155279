use std::time::Instant;

use dualkit::convex::{fenchel_young_residual, AffineSubspace, ConvexFn, ConvexSet};
use dualkit::{LinOp, Matrix, Vector};
use rand::Rng;

use crate::support::{rng, uniform, v, Outcome, Tally};

const SAMPLES: usize = 100;
const FD_STEP: f64 = 1e-6;

fn family() -> Vec<ConvexFn> {
    let spd = LinOp::dense(Matrix::from_rows(&[vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.1], vec![0.0, 0.1, 0.5]]).unwrap());
    let plane = AffineSubspace::from_equations(&Matrix::from_rows(&[vec![1.0, 2.0, -1.0]]).unwrap(), &v(&[0.5])).unwrap();
    let unit_box = ConvexSet::boxed(vec![0.0; 3], vec![1.0; 3]).unwrap();
    vec![
        ConvexFn::quadratic(spd, v(&[1.0, 0.0, -1.0]), 0.2).unwrap(),
        ConvexFn::squared_distance(0.7, v(&[1.0, 2.0, 3.0])).unwrap(),
        ConvexFn::l1(0.8, 3).unwrap(),
        ConvexFn::Indicator(ConvexSet::boxed(vec![-1.0, 0.0, f64::NEG_INFINITY], vec![1.0, 2.0, 0.5]).unwrap()),
        ConvexFn::Indicator(ConvexSet::halfspace(v(&[1.0, -2.0, 0.5]), 0.3).unwrap()),
        ConvexFn::Indicator(ConvexSet::Affine(plane)),
        ConvexFn::Indicator(ConvexSet::linf_ball(3, 0.7).unwrap()),
        ConvexFn::Indicator(ConvexSet::l1_ball(3, 1.5).unwrap()),
        ConvexFn::Indicator(ConvexSet::simplex(3).unwrap()),
        ConvexFn::Support(unit_box.clone()),
        ConvexFn::Support(ConvexSet::halfspace(v(&[1.0, 1.0, 0.0]), 1.0).unwrap()),
        ConvexFn::LogSumExp { k: 3 },
        ConvexFn::NegEntropy { k: 3 },
        ConvexFn::linear(v(&[0.5, -0.5, 1.0])),
        ConvexFn::tilt(ConvexFn::l1(1.0, 3).unwrap(), v(&[0.2, 0.0, -0.3])).unwrap(),
        ConvexFn::translate(ConvexFn::LogSumExp { k: 3 }, v(&[1.0, 0.0, 0.0])).unwrap(),
        ConvexFn::scaled(ConvexFn::NegEntropy { k: 3 }, 2.0).unwrap(),
        ConvexFn::separable(vec![ConvexFn::l1(0.5, 1).unwrap(), ConvexFn::squared_distance(2.0, v(&[1.0, -1.0])).unwrap()])
            .unwrap(),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn finite_difference(f: &ConvexFn, u: &Vector) -> Vector {
    Vector::from_fn(u.dim(), |i| {
        let e = Vector::unit(u.dim(), i);
        (f.eval(&u.axpy(FD_STEP, &e)).unwrap() - f.eval(&u.axpy(-FD_STEP, &e)).unwrap()) / (2.0 * FD_STEP)
    })
}

/// Five properties per sample; errors count as failed checks.
fn check_kind(f: &ConvexFn, seed: u64, tally: &mut Tally) {
    let kind = f.kind_name();
    let conj = match f.conjugate() {
        Ok(c) => c,
        Err(e) => return tally.check(false, || format!("{kind}: conjugate: {e}")),
    };
    let biconj = match conj.conjugate() {
        Ok(c) => c,
        Err(e) => return tally.check(false, || format!("{kind}: biconjugate: {e}")),
    };
    let mut rng = rng(seed);
    let n = f.dim();
    for sample in 0..SAMPLES {
        let x = uniform(&mut rng, n, 5.0);
        let y = uniform(&mut rng, n, 5.0);
        let t = rng.gen_range(0.1..5.0);
        let label = |what: &str| format!("{kind} #{sample}: {what}");
        let result = (|| -> dualkit::Result<()> {
            // Moreau: prox_{tF}(x) + t prox_{F*/t}(x/t) = x
            let z = f.prox(&x, t)?;
            let z_conj = conj.prox(&x.scale(1.0 / t), 1.0 / t)?;
            let gap = z.axpy(t, &z_conj).dist(&x);
            tally.check(gap <= 1e-8 * (1.0 + x.norm()), || label(&format!("Moreau gap {gap:.2e}")));

            // prox optimality: (x - z)/t ∈ ∂F(z), certified by a zero Fenchel-Young residual
            let p = (&x - &z).scale(1.0 / t);
            let fy = fenchel_young_residual(f, &z, &p)?;
            tally.check(fy.abs() <= 1e-7 * (1.0 + z.norm() * p.norm()), || label(&format!("prox FY residual {fy:.2e}")));
            let objective = |w: &Vector| -> dualkit::Result<f64> { Ok(f.eval(w)? + 0.5 * w.dist(&x).powi(2) / t) };
            let best = objective(&z)?;
            let dir = uniform(&mut rng, n, 1.0);
            let nearby = objective(&z.axpy(1e-3, &dir))?.min(objective(&z.axpy(-1e-3, &dir))?);
            tally.check(best <= nearby + 1e-12 * (1.0 + best.abs()), || label("prox beaten by a perturbation"));

            // Fenchel-Young nonnegativity at u ∈ dom F, q ∈ dom F*
            let u = f.prox(&y, 1.0)?;
            let q = &x - &f.prox(&x, 1.0)?;
            let fy = fenchel_young_residual(f, &u, &q)?;
            tally.check(fy >= -1e-10 * (1.0 + u.norm() * q.norm()), || label(&format!("negative FY {fy:.2e}")));

            // conjugate pair round trip: F** = F on dom F
            let (value, back) = (f.eval(&u)?, biconj.eval(&u)?);
            tally.check(rel(value, back) <= 1e-8, || label(&format!("F** {back} vs F {value}")));
            if f.is_smooth() {
                let g = f.grad(&u)?;
                let fd = finite_difference(f, &u);
                let err = g.dist(&fd) / g.norm().max(1.0);
                tally.check(err <= 1e-5, || label(&format!("gradient vs finite difference {err:.2e}")));
                if f.strong_convexity() > 0.0 {
                    let inverse = f.grad_conjugate(&g)?;
                    tally.check(inverse.dist(&u) <= 1e-8 * (1.0 + u.norm()), || label("∇F*(∇F(u)) != u"));
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            tally.check(false, || label(&format!("error: {e}")));
        }
    }
}

pub fn check() -> Outcome {
    let start = Instant::now();
    let functions = family();
    let mut tally = Tally::default();
    for (i, f) in functions.iter().enumerate() {
        check_kind(f, 1000 + i as u64, &mut tally);
    }
    let elapsed = start.elapsed().as_secs_f64();
    tally.check(elapsed < 10.0, || format!("runtime {elapsed:.1}s exceeds 10s"));
    tally.outcome(format!("{} function kinds x {SAMPLES} samples", functions.len()))
}
