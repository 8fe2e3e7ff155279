use std::any::Any;

use dualkit::Vector;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }
}

/// Collects named checks and reports the first few failures.
#[derive(Default)]
pub struct Tally {
    passed: usize,
    failures: Vec<String>,
}

impl Tally {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(what());
        }
    }

    pub fn outcome(self, summary: impl Into<String>) -> Outcome {
        let total = self.passed + self.failures.len();
        let mut detail = format!("{}; {}/{} checks", summary.into(), self.passed, total);
        if !self.failures.is_empty() {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            detail += &format!("; failures: {}", shown.join(" | "));
        }
        Outcome::new(self.failures.is_empty(), detail)
    }
}

pub fn panic_message(panic: &Box<dyn Any + Send>) -> String {
    panic
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_| rng.gen_range(-scale..scale))
}

pub fn v(data: &[f64]) -> Vector {
    Vector::new(data.to_vec()).unwrap()
}

pub fn from_na(x: &DVector<f64>) -> Vector {
    Vector::new(x.as_slice().to_vec()).unwrap()
}

/// Random `n × m` matrix with entries in `(-1, 1)`.
pub fn random_na(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
}

/// `MᵗM + shift·I` for a random square `M`.
pub fn random_spd_na(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let m = random_na(rng, n, n);
    m.transpose() * &m + DMatrix::identity(n, n) * shift
}

pub fn to_matrix(m: &DMatrix<f64>) -> dualkit::Matrix {
    dualkit::Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Dense LU solve; the direct oracle for every linear system below.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().lu().solve(b).expect("nonsingular oracle system")
}

pub fn from_matrix(m: &dualkit::Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}
