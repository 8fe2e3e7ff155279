//! Run configuration read from a JSON document. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub solver: SolverParams,
    /// Trace destination; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_cond() -> f64 {
    1.0
}

fn default_noise() -> f64 {
    0.2
}

fn default_box_target() -> [f64; 2] {
    [2.0, 0.5]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    TwoLines,
    BoxHalfspace {
        #[serde(default = "default_box_target")]
        f: [f64; 2],
    },
    PocsRandom {
        seed: u64,
        dim: usize,
        sets: usize,
    },
    MultiLinear {
        seed: u64,
        dim: usize,
        blocks: usize,
        #[serde(default = "default_cond")]
        cond: f64,
    },
    MultiConvex {
        seed: u64,
        dim: usize,
        blocks: usize,
        #[serde(default = "default_cond")]
        cond: f64,
    },
    Rof {
        seed: u64,
        d: usize,
        alpha: f64,
        #[serde(default = "default_noise")]
        noise: f64,
        /// First block length of the dual split; defaults to `d / 2`.
        #[serde(default)]
        split: Option<usize>,
    },
    LogisticCsv {
        /// Relative paths resolve against the config file's directory.
        path: PathBuf,
        alpha: f64,
        #[serde(default)]
        classes: Option<usize>,
        #[serde(default)]
        header: bool,
    },
    LogisticXor {
        alpha: f64,
    },
    Constrained {
        seed: u64,
        dim: usize,
        blocks: usize,
        #[serde(default = "default_cond")]
        cond: f64,
    },
    Sharing {
        seed: u64,
        dim: usize,
        blocks: usize,
        #[serde(default = "default_cond")]
        cond: f64,
    },
    DivergenceWitness,
    DivergenceWitnessSharing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    VonNeumann,
    Dykstra,
    ParallelVonNeumann,
    ParallelDykstra,
    Ssc,
    Psc,
    RelaxedSsc,
    PrLinear,
    GeneralizedPr,
    GeneralizedDr,
    ParallelDr,
    AdmmPlain,
    AdmmSymmetrized,
    AdmmRandomPermuted,
    ProximalPointDual,
    AdmmDualizationBased,
    AdmmDualizationParallel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Permutation {
    #[default]
    Fixed,
    Random,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Step or relaxation; defaults to `1/J` for parallel methods, `0.5` for
    /// relaxed ones and `1` otherwise.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Penalty parameter for ADMM-type problems.
    #[serde(default)]
    pub beta: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub permutation: Permutation,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tau: None, beta: None, max_iters: 1000, tol: 1e-10, seed: 0, permutation: Permutation::Fixed }
    }
}

// `max_iters`, `tol`, `seed` and `permutation` fall back field by field.
impl SolverParams {
    fn fill_defaults(raw: RawSolverParams) -> Self {
        let base = Self::default();
        Self {
            tau: raw.tau,
            beta: raw.beta,
            max_iters: raw.max_iters.unwrap_or(base.max_iters),
            tol: raw.tol.unwrap_or(base.tol),
            seed: raw.seed.unwrap_or(base.seed),
            permutation: raw.permutation.unwrap_or(base.permutation),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolverParams {
    tau: Option<f64>,
    beta: Option<f64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    permutation: Option<Permutation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemSpec,
    algorithm: Algorithm,
    #[serde(default)]
    solver: Option<RawSolverParams>,
    #[serde(default)]
    output: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|source| CliError::Config {
            path: origin.to_path_buf(),
            line: source.line(),
            column: source.column(),
            message: source.to_string(),
        })?;
        let mut config = RunConfig {
            problem: raw.problem,
            algorithm: raw.algorithm,
            solver: raw.solver.map(SolverParams::fill_defaults).unwrap_or_default(),
            output: raw.output,
        };
        if let ProblemSpec::LogisticCsv { path, .. } = &mut config.problem {
            if path.is_relative() {
                if let Some(dir) = origin.parent() {
                    *path = dir.join(&*path);
                }
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }
}
