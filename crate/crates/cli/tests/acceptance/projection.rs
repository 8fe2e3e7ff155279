use dualkit::convex::{AffineSubspace, ConvexSet};
use dualkit::correction::SolverConfig;
use dualkit::projsplit::{dykstra, von_neumann, PocsProblem};
use dualkit::{Matrix, Vector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::support::{from_na, lu_solve, random_na, rng, Outcome, Tally};

const LIMIT_TOL: f64 = 1e-6;
const SAME_TOL: f64 = 1e-10;

fn long_run() -> SolverConfig {
    SolverConfig { max_iters: 20000, tol: 1e-14, ..SolverConfig::default() }
}

/// `f - Nᵗ(NNᵗ)⁻¹(Nf - b)`, the projection onto `{Nx = b}`.
fn affine_projection(n: &DMatrix<f64>, b: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
    let y = lu_solve(&(n * n.transpose()), &(n * f - b));
    f - n.transpose() * y
}

/// Linear constraints `(a, c)` meaning `(a, x) <= c`.
type Constraint = (DVector<f64>, f64);

/// Projection onto a polytope in the plane by enumerating active sets of at
/// most two constraints and keeping the nearest feasible candidate.
fn polytope_projection(constraints: &[Constraint], f: &DVector<f64>) -> DVector<f64> {
    let feasible = |x: &DVector<f64>| constraints.iter().all(|(a, c)| a.dot(x) <= c + 1e-12);
    let mut candidates = vec![f.clone()];
    for i in 0..constraints.len() {
        let (a, c) = &constraints[i];
        candidates.push(f - a * ((a.dot(f) - c) / a.norm_squared()));
        for (a2, c2) in &constraints[i + 1..] {
            let n = DMatrix::from_rows(&[a.transpose(), a2.transpose()]);
            if n.determinant().abs() > 1e-12 {
                candidates.push(affine_projection(&n, &DVector::from_vec(vec![*c, *c2]), f));
            }
        }
    }
    candidates.into_iter().filter(feasible).min_by(|x, y| (x - f).norm().total_cmp(&(y - f).norm())).expect("nonempty polytope")
}

struct Instance {
    name: String,
    problem: PocsProblem,
    exact: Vector,
    affine: bool,
}

fn affine_instance(seed: u64) -> Instance {
    let mut rng = rng(seed);
    let dim = if seed.is_multiple_of(2) { 2 } else { 3 };
    let normals = random_na(&mut rng, 2, dim);
    let rhs = random_na(&mut rng, 2, 1).column(0).into_owned();
    let f = random_na(&mut rng, dim, 1).column(0).into_owned() * 3.0;
    let sets = (0..2)
        .map(|i| {
            let row = Matrix::from_rows(&[normals.row(i).iter().copied().collect()]).unwrap();
            ConvexSet::Affine(AffineSubspace::from_equations(&row, &Vector::new(vec![rhs[i]]).unwrap()).unwrap())
        })
        .collect();
    let exact = from_na(&affine_projection(&normals, &rhs, &f));
    Instance {
        name: format!("affine-{dim}d seed {seed}"),
        problem: PocsProblem::new(from_na(&f), sets).unwrap(),
        exact,
        affine: true,
    }
}

fn box_halfspace_instance(seed: u64) -> Instance {
    let mut rng = rng(seed);
    let lo = [rng.gen_range(-1.0..0.0), rng.gen_range(-1.0..0.0)];
    let hi = [lo[0] + rng.gen_range(0.5..2.0), lo[1] + rng.gen_range(0.5..2.0)];
    let normal = DVector::from_vec(vec![rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)]);
    // offset through the box centre so the intersection has interior
    let centre = DVector::from_vec(vec![(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]);
    let offset = normal.dot(&centre);
    let f = DVector::from_vec(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]) + &centre;
    let unit = |i: usize, s: f64| DVector::from_fn(2, |k, _| if k == i { s } else { 0.0 });
    let constraints = [
        (unit(0, 1.0), hi[0]),
        (unit(1, 1.0), hi[1]),
        (unit(0, -1.0), -lo[0]),
        (unit(1, -1.0), -lo[1]),
        (normal.clone(), offset),
    ];
    let exact = from_na(&polytope_projection(&constraints, &f));
    let sets = vec![ConvexSet::boxed(lo.to_vec(), hi.to_vec()).unwrap(), ConvexSet::halfspace(from_na(&normal), offset).unwrap()];
    Instance {
        name: format!("box-halfspace seed {seed}"),
        problem: PocsProblem::new(from_na(&f), sets).unwrap(),
        exact,
        affine: false,
    }
}

fn check_instance(inst: &Instance, tally: &mut Tally) -> dualkit::Result<()> {
    let name = &inst.name;
    let limit = dykstra(&inst.problem, &long_run())?;
    let err = limit.final_state("u")?.dist(&inst.exact);
    tally.check(err <= LIMIT_TOL, || format!("{name}: Dykstra error {err:.2e}"));
    if inst.affine {
        let cyclic = von_neumann(&inst.problem, &long_run())?;
        let err = cyclic.final_state("u")?.dist(&inst.exact);
        tally.check(err <= LIMIT_TOL, || format!("{name}: von Neumann error {err:.2e}"));
        let cfg = SolverConfig::iterations(100);
        let (a, b) = (dykstra(&inst.problem, &cfg)?, von_neumann(&inst.problem, &cfg)?);
        let gap = a
            .records
            .iter()
            .zip(&b.records)
            .map(|(x, y)| Ok(x.get("u")?.dist(y.get("u")?)))
            .collect::<dualkit::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        tally.check(gap <= SAME_TOL, || format!("{name}: Dykstra and von Neumann differ by {gap:.2e}"));
    }
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    let instances: Vec<Instance> =
        (0..5).map(|s| affine_instance(40 + s)).chain((0..5).map(|s| box_halfspace_instance(50 + s))).collect();
    for inst in &instances {
        if let Err(e) = check_instance(inst, &mut tally) {
            tally.check(false, || format!("{}: {e}", inst.name));
        }
    }
    tally.outcome(format!("{} analytic instances (5 affine, 5 box ∩ halfspace)", instances.len()))
}
