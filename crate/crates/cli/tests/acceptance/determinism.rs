use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

use crate::support::{Outcome, Tally};

/// One config per algorithm, plus seeded random block orders.
const CONFIGS: [&str; 20] = [
    r#"{"problem": {"id": "pocs-random", "seed": 3, "dim": 5, "sets": 4}, "algorithm": "von_neumann"}"#,
    r#"{"problem": {"id": "box-halfspace"}, "algorithm": "dykstra"}"#,
    r#"{"problem": {"id": "pocs-random", "seed": 4, "dim": 6, "sets": 5}, "algorithm": "parallel_von_neumann"}"#,
    r#"{"problem": {"id": "box-halfspace", "f": [1.5, 1.5]}, "algorithm": "parallel_dykstra"}"#,
    r#"{"problem": {"id": "rof", "seed": 2, "d": 32, "alpha": 4.0}, "algorithm": "ssc", "solver": {"max_iters": 200}}"#,
    r#"{"problem": {"id": "rof", "seed": 2, "d": 32, "alpha": 4.0, "split": 10}, "algorithm": "psc", "solver": {"max_iters": 200}}"#,
    r#"{"problem": {"id": "multi-convex", "seed": 5, "dim": 4, "blocks": 3}, "algorithm": "relaxed_ssc", "solver": {"max_iters": 200}}"#,
    r#"{"problem": {"id": "multi-linear", "seed": 6, "dim": 5, "blocks": 3}, "algorithm": "pr_linear"}"#,
    r#"{"problem": {"id": "logistic-xor", "alpha": 0.1}, "algorithm": "generalized_pr"}"#,
    r#"{"problem": {"id": "multi-convex", "seed": 7, "dim": 4, "blocks": 3}, "algorithm": "generalized_dr", "solver": {"max_iters": 200}}"#,
    r#"{"problem": {"id": "multi-convex", "seed": 8, "dim": 4, "blocks": 4}, "algorithm": "parallel_dr", "solver": {"max_iters": 200}}"#,
    r#"{"problem": {"id": "constrained", "seed": 9, "dim": 3, "blocks": 2}, "algorithm": "admm_plain", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "constrained", "seed": 10, "dim": 3, "blocks": 3}, "algorithm": "admm_symmetrized", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "constrained", "seed": 11, "dim": 3, "blocks": 4}, "algorithm": "admm_random_permuted",
        "solver": {"permutation": "random", "seed": 5, "max_iters": 300}}"#,
    r#"{"problem": {"id": "constrained", "seed": 12, "dim": 3, "blocks": 1}, "algorithm": "proximal_point_dual", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "sharing", "seed": 13, "dim": 3, "blocks": 3}, "algorithm": "admm_dualization_based", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "sharing", "seed": 14, "dim": 3, "blocks": 4}, "algorithm": "admm_dualization_parallel", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "sharing", "seed": 15, "dim": 3, "blocks": 3}, "algorithm": "ssc",
        "solver": {"permutation": "random", "seed": 9, "max_iters": 300}}"#,
    r#"{"problem": {"id": "sharing", "seed": 16, "dim": 3, "blocks": 4}, "algorithm": "psc", "solver": {"max_iters": 300}}"#,
    r#"{"problem": {"id": "divergence-witness"}, "algorithm": "admm_plain", "solver": {"max_iters": 2000}}"#,
];

/// `None` leaves the variable unset; the first two runs are back-to-back defaults.
const THREADS: [Option<&str>; 5] = [None, None, Some("1"), Some("3"), Some("8")];

/// Runs the binary and returns its exit code and trace bytes.
fn invoke(dir: &Path, config: &str, threads: Option<&str>, run: usize) -> Result<(i32, String), String> {
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, config).map_err(|e| e.to_string())?;
    let out = dir.join(format!("trace-{run}.jsonl"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualkit"));
    cmd.arg("run").arg("--config").arg(&config_path).arg("--out").arg(&out);
    match threads {
        Some(n) => cmd.env("DUALKIT_THREADS", n),
        None => cmd.env_remove("DUALKIT_THREADS"),
    };
    let output = cmd.output().map_err(|e| e.to_string())?;
    let code = output.status.code().ok_or("killed by a signal")?;
    let trace = std::fs::read_to_string(&out).map_err(|e| format!("exit {code}, no trace: {e}"))?;
    Ok((code, trace))
}

/// Drops every `"time_s":<number>` member, leaving all other bytes untouched.
fn strip_wall_clock(trace: &str) -> String {
    const KEY: &str = "\"time_s\":";
    let mut out = String::with_capacity(trace.len());
    let mut rest = trace;
    while let Some(at) = rest.find(KEY) {
        let value_end = rest[at + KEY.len()..].find([',', '}']).map_or(rest.len(), |i| at + KEY.len() + i);
        let (before, after) = (&rest[..at], &rest[value_end..]);
        // remove one adjoining comma so the member vanishes cleanly
        if let Some(tail) = after.strip_prefix(',') {
            out.push_str(before);
            rest = tail;
        } else {
            out.push_str(before.strip_suffix(',').unwrap_or(before));
            rest = after;
        }
    }
    out.push_str(rest);
    out
}

fn check_config(config: &str, tally: &mut Tally) -> Result<(), String> {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let label = config.split("\"algorithm\": ").nth(1).and_then(|s| s.split(',').next()).unwrap_or(config).trim_end_matches('}');
    let mut reference: Option<(i32, String)> = None;
    for (run, threads) in THREADS.iter().enumerate() {
        let (code, trace) = invoke(dir.path(), config, *threads, run)?;
        if !trace.contains("\"time_s\":") {
            return Err(format!("{label}: trace has no wall-clock field"));
        }
        let stripped = strip_wall_clock(&trace);
        match &reference {
            None => {
                tally.check(!stripped.is_empty() && code != 4, || format!("{label}: exit {code} with an empty trace"));
                reference = Some((code, stripped));
            }
            Some((first_code, first)) => {
                let same = *first_code == code && *first == stripped;
                tally.check(same, || format!("{label}: run {run} (threads {threads:?}) differs from the first"));
            }
        }
    }
    Ok(())
}

pub fn check() -> Outcome {
    let mut tally = Tally::default();
    for config in CONFIGS {
        if let Err(e) = check_config(config, &mut tally) {
            tally.check(false, || e);
        }
    }
    tally.outcome(format!(
        "{} configs covering every algorithm, {} invocations each (default twice, then 1, 3 and 8 threads), byte-compared without time_s",
        CONFIGS.len(),
        THREADS.len()
    ))
}
