use std::path::{Path, PathBuf};

use serde_json::json;

use super::{ExperimentReport, ExperimentSpec};
use crate::error::Result;
use crate::rng::PRNG_VERSION;

/// UTC time with millisecond resolution, usable as a directory name.
pub fn timestamp_now() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes `root/<experiment>/<timestamp>/{results.csv, summary.json,
/// manifest.json}` and returns the run directory. Only `manifest.json`
/// depends on the time of the run.
pub fn write_run(root: impl AsRef<Path>, spec: &ExperimentSpec, report: &ExperimentReport, timestamp: &str) -> Result<PathBuf> {
    let parent = root.as_ref().join(spec.kind.dir_name());
    let mut dir = parent.join(timestamp);
    let mut k = 1;
    while dir.exists() {
        dir = parent.join(format!("{timestamp}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("results.csv"), report.results_csv())?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "experiment": spec.kind,
            "spec": spec,
            "seed": spec.seed,
            "prng_version": PRNG_VERSION,
            "results": report,
        }),
    )?;
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "experiment": spec.kind,
            "timestamp": timestamp,
            "seed": spec.seed,
            "prng_version": PRNG_VERSION,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
            "files": ["results.csv", "summary.json"],
        }),
    )?;
    Ok(dir)
}
