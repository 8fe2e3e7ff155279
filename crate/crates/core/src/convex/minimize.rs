//! Inner solver for `min S(x) + G(x)` with `S` smooth and `G` prox-friendly.

use crate::error::{Error, Result};
use crate::linops::{LinOp, Vector};

use super::function::ConvexFn;

const GRAD_TOL: f64 = 1e-10;
const ACCEPT_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 200;
const FISTA_MAX_ITER: usize = 200_000;
const FISTA_TOL: f64 = 1e-12;
/// Iterations without a new best residual before FISTA gives up on rounding noise.
const STALL_LIMIT: usize = 2_000;

/// Minimizes `smooth + nonsmooth` starting from `x0`.
///
/// * no nonsmooth term, or a smooth one: damped Newton on the sum;
/// * quadratic `smooth` with Hessian `cI`: one proximal step (exact);
/// * other quadratic `smooth`: FISTA with adaptive restart (unit step when
///   `smooth` is affine).
pub fn minimize(smooth: Option<&ConvexFn>, nonsmooth: Option<&ConvexFn>, x0: &Vector) -> Result<Vector> {
    match (smooth, nonsmooth) {
        (None, None) => Err(Error::InvalidParameter("nothing to minimize".into())),
        (Some(s), None) => newton(s, x0),
        (None, Some(g)) if g.is_smooth() => newton(g, x0),
        (Some(s), Some(g)) if g.is_smooth() => newton(&ConvexFn::sum(vec![s.clone(), g.clone()])?, x0),
        (Some(s), Some(g)) if s.is_quadratic() => {
            let hessian = s.hessian(x0)?;
            match hessian.as_scalar_identity(1e-12) {
                Some(c) if c > 0.0 => {
                    let anchor = x0.axpy(-1.0 / c, &s.grad(x0)?);
                    g.prox(&anchor, 1.0 / c)
                }
                _ => {
                    let lipschitz = *hessian.symmetric_eigenvalues().last().unwrap_or(&0.0);
                    // an affine smooth part takes unit proximal-gradient steps
                    fista(s, g, x0, if lipschitz > 0.0 { lipschitz } else { 1.0 })
                }
            }
        }
        (smooth, Some(g)) => Err(Error::Unsupported {
            operation: "minimization",
            kind: format!("{} + {}", smooth.map(ConvexFn::kind_name).unwrap_or_else(|| "nothing".into()), g.kind_name()),
            supported: "smooth objectives, or a quadratic plus a prox-friendly term",
        }),
    }
}

/// Damped Newton with Armijo backtracking and a pseudo-inverse fallback.
fn newton(f: &ConvexFn, x0: &Vector) -> Result<Vector> {
    let mut x = x0.clone();
    let mut grad = f.grad(&x)?;
    for _ in 0..NEWTON_MAX_ITER {
        let gnorm = grad.norm();
        if gnorm <= GRAD_TOL {
            return Ok(x);
        }
        let hessian = f.hessian(&x)?;
        let direction = match hessian.cholesky() {
            Ok(factor) => -&factor.solve(&grad),
            Err(_) => -&hessian.solve_psd_pinv(&grad),
        };
        let slope = grad.dot(&direction);
        if slope.is_nan() || slope >= 0.0 {
            break;
        }
        let fx = f.eval(&x)?;
        let mut step = 1.0;
        let accepted = loop {
            let trial = x.axpy(step, &direction);
            let ft = f.eval(&trial)?;
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                break Some(trial);
            }
            // near the optimum rounding hides decrease; fall back to gradient progress
            let gt = f.grad(&trial)?;
            if gt.is_finite() && gt.norm() < gnorm && ft.is_finite() && ft <= fx + 1e-12 * (1.0 + fx.abs()) {
                break Some(trial);
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        match accepted {
            Some(next) => {
                let moved = next.dist(&x);
                x = next;
                grad = f.grad(&x)?;
                if moved <= 1e-15 * (1.0 + x.norm()) {
                    break;
                }
            }
            None => break,
        }
    }
    let residual = grad.norm();
    if residual <= ACCEPT_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual })
    }
}

/// Accelerated proximal gradient with function-free adaptive restart.
fn fista(s: &ConvexFn, g: &ConvexFn, x0: &Vector, lipschitz: f64) -> Result<Vector> {
    let step = 1.0 / lipschitz;
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut momentum: f64 = 1.0;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for _ in 0..FISTA_MAX_ITER {
        let next = g.prox(&y.axpy(-step, &s.grad(&y)?), step)?;
        // gradient mapping at y
        let residual = lipschitz * next.dist(&y);
        if residual <= FISTA_TOL * (1.0 + next.norm()) {
            return Ok(next);
        }
        if residual < best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > STALL_LIMIT {
                break;
            }
        }
        let restart = (&y - &next).dot(&(&next - &x)) > 0.0;
        let next_momentum = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) };
        y = if restart { next.clone() } else { next.axpy((momentum - 1.0) / next_momentum, &(&next - &x)) };
        momentum = next_momentum;
        x = next;
    }
    if best <= ACCEPT_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: FISTA_MAX_ITER, residual: best })
    }
}

/// Minimizes `f(x) + g(Bx)`.
///
/// * smooth `g`: Newton on the sum;
/// * scalar `B` with quadratic `f`: reduces to [`minimize`] with a prox;
/// * quadratic strongly convex `f`: solves the dual `min f*(-Bᵗy) + g*(y)`
///   and returns `x = ∇f*(-Bᵗy)`.
pub fn minimize_composite(f: &ConvexFn, g: &ConvexFn, b: &LinOp, x0: &Vector) -> Result<Vector> {
    let composed = ConvexFn::precompose(g.clone(), b.clone(), None)?;
    if g.is_smooth() {
        return newton(&ConvexFn::sum(vec![f.clone(), composed])?, x0);
    }
    if b.scalar_factor().is_some() && f.is_quadratic() {
        return minimize(Some(f), Some(&composed), x0);
    }
    if f.is_quadratic() && f.strong_convexity() > 0.0 {
        let f_conj = f.conjugate()?;
        let smooth = ConvexFn::precompose(f_conj.clone(), b.transpose().scaled(-1.0), None)?;
        let y = minimize(Some(&smooth), Some(&g.conjugate()?), &Vector::zeros(b.codomain_dim()))?;
        return f_conj.grad(&-&b.apply_adjoint(&y)?);
    }
    Err(Error::Unsupported {
        operation: "composite minimization",
        kind: format!("{} + {}∘B", f.kind_name(), g.kind_name()),
        supported: "smooth g, scalar B, or strongly convex quadratic f",
    })
}
