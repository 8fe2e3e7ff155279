//! Iteration traces shared by every algorithm.
//!
//! Record `0` always holds the initial configuration, so a run of `n`
//! iterations has `n + 1` records.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::Vector;

/// Named iterates of one (possibly fractional) step.
pub type State = BTreeMap<String, Vector>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

/// Fractional iterate `(n, j)`: the state after block `j` of sweep `n + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Substep {
    pub block: usize,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub time_s: f64,
    pub state: State,
    /// Objective value; `None` when infinite or not defined.
    pub objective: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substeps: Vec<Substep>,
}

impl IterRecord {
    pub fn get(&self, key: &str) -> Result<&Vector> {
        self.state.get(key).ok_or_else(|| Error::MissingState(format!("{key} at iteration {}", self.iter)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub algorithm: String,
    pub records: Vec<IterRecord>,
    pub status: Status,
    /// Block order used in each sweep, when randomized.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub permutations: Vec<Vec<usize>>,
}

impl Trace {
    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn final_state(&self, key: &str) -> Result<&Vector> {
        self.last().get(key)
    }

    /// Writes one JSON object per record. `time_s` is the only field that
    /// varies between otherwise identical runs.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for (n, record) in self.records.iter().enumerate() {
            let mut line = serde_json::json!({
                "iter": record.iter,
                "time_s": record.time_s,
                "objective": record.objective,
                "residuals": record.metrics,
                "state": record.state,
            });
            if !record.substeps.is_empty() {
                line["substeps"] = serde_json::to_value(&record.substeps)?;
            }
            if n > 0 {
                if let Some(perm) = self.permutations.get(n - 1) {
                    line["permutation"] = serde_json::to_value(perm)?;
                }
            }
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn finite(value: f64) -> Option<f64> {
    value.is_finite().then_some(value)
}

/// Loop state handling records, stopping and divergence for one run.
pub(crate) struct Recorder {
    start: Instant,
    trace: Trace,
    tol: f64,
    watch: Option<Watch>,
}

/// Divergence monitor on a scalar metric.
struct Watch {
    metric: &'static str,
    previous: f64,
    growth_streak: usize,
}

/// Metric value beyond which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Consecutive increases of the watched metric that count as divergence.
pub const DIVERGENCE_STREAK: usize = 200;

#[derive(Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

impl Recorder {
    pub fn new(algorithm: impl Into<String>, tol: f64, initial: State, objective: f64) -> Self {
        let start = Instant::now();
        let record = IterRecord {
            iter: 0,
            time_s: 0.0,
            state: initial,
            objective: finite(objective),
            metrics: BTreeMap::new(),
            substeps: Vec::new(),
        };
        Self {
            start,
            trace: Trace {
                algorithm: algorithm.into(),
                records: vec![record],
                status: Status::MaxIters,
                permutations: Vec::new(),
            },
            tol,
            watch: None,
        }
    }

    /// Declares divergence when `metric` exceeds the threshold or grows for
    /// too many consecutive iterations.
    pub fn watch_divergence(mut self, metric: &'static str) -> Self {
        self.watch = Some(Watch { metric, previous: f64::INFINITY, growth_streak: 0 });
        self
    }

    pub fn push_permutation(&mut self, perm: Vec<usize>) {
        self.trace.permutations.push(perm);
    }

    /// Appends iteration `n + 1`; `progress` is the concatenation of the
    /// iterates used by the stopping rule, before and after the step.
    pub fn record(
        &mut self,
        state: State,
        objective: f64,
        mut metrics: BTreeMap<String, f64>,
        substeps: Vec<Substep>,
        previous: &Vector,
        current: &Vector,
    ) -> Flow {
        let step = current.dist(previous);
        metrics.insert("step".into(), step);
        let iter = self.trace.records.len();
        let finite_state = state.values().all(Vector::is_finite);
        let watched = self.watch.as_ref().and_then(|w| metrics.get(w.metric).copied());
        self.trace.records.push(IterRecord {
            iter,
            time_s: self.start.elapsed().as_secs_f64(),
            state,
            objective: finite(objective),
            metrics,
            substeps,
        });
        if !finite_state {
            self.trace.status = Status::Diverged;
            return Flow::Stop;
        }
        if let (Some(watch), Some(value)) = (self.watch.as_mut(), watched) {
            if !value.is_finite() || value > DIVERGENCE_THRESHOLD {
                self.trace.status = Status::Diverged;
                return Flow::Stop;
            }
            watch.growth_streak = if value > watch.previous { watch.growth_streak + 1 } else { 0 };
            watch.previous = value;
            if watch.growth_streak >= DIVERGENCE_STREAK {
                self.trace.status = Status::Diverged;
                return Flow::Stop;
            }
        }
        if self.tol > 0.0 && step <= self.tol * (1.0 + previous.norm()) {
            self.trace.status = Status::Converged;
            return Flow::Stop;
        }
        Flow::Continue
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}

/// Builds a [`State`] from `(name, vector)` pairs.
pub fn state<const N: usize>(entries: [(&str, Vector); N]) -> State {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
