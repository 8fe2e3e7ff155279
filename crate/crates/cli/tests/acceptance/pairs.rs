use std::time::Instant;

use dualkit::pairings::{error_transfer, run_pair, PAIRS};
use rayon::prelude::*;

use crate::support::{Outcome, Tally};

const SEEDS: u64 = 20;
const ITERS: usize = 30;
const TOL: f64 = 1e-8;
const SLACK: f64 = -1e-9;

fn jobs() -> Vec<(&'static str, u64)> {
    PAIRS.iter().flat_map(|p| (0..SEEDS).map(move |seed| (p.id, seed))).collect()
}

pub fn certification() -> Outcome {
    let start = Instant::now();
    let results: Vec<_> = jobs().into_par_iter().map(|(id, seed)| (id, seed, run_pair(id, seed, ITERS, TOL))).collect();
    let mut tally = Tally::default();
    let mut worst: f64 = 0.0;
    for (id, seed, result) in results {
        match result {
            Ok(report) => {
                worst = worst.max(report.max_residual);
                tally.check(report.pass, || format!("{id} seed {seed}: residual {:.2e}", report.max_residual));
            }
            Err(e) => tally.check(false, || format!("{id} seed {seed}: {e}")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    tally.check(elapsed < 60.0, || format!("runtime {elapsed:.1}s exceeds 60s"));
    tally.outcome(format!("{} pairs x {SEEDS} seeds, {ITERS} iterations, worst residual {worst:.2e} (tol {TOL:e})", PAIRS.len()))
}

pub fn transfer() -> Outcome {
    let results: Vec<_> = jobs().into_par_iter().map(|(id, seed)| (id, seed, error_transfer(id, seed, ITERS))).collect();
    let mut tally = Tally::default();
    let mut min_slack = f64::INFINITY;
    let mut skipped: Vec<&str> = Vec::new();
    for (id, seed, result) in results {
        match result {
            Ok(Some(report)) => {
                min_slack = min_slack.min(report.min_slack);
                tally.check(report.min_slack >= SLACK, || format!("{id} seed {seed}: slack {:.2e}", report.min_slack));
            }
            Ok(None) => {
                if !skipped.contains(&id) {
                    skipped.push(id);
                }
            }
            Err(e) => tally.check(false, || format!("{id} seed {seed}: {e}")),
        }
    }
    tally.outcome(format!(
        "min slack {min_slack:.2e} over {} pairs x {SEEDS} seeds; no dual sequence to bound for {}",
        PAIRS.len() - skipped.len(),
        skipped.join(", ")
    ))
}
