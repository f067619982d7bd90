use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use super::{Aggregate, NoiseRow, Row, ScalingPoint, SweepResult};
use crate::error::{Error, Result};

pub const ROWS_HEADER: [&str; 6] = ["group", "n", "trial", "seed", "aligned_error", "iterations"];
pub const AGGREGATES_HEADER: [&str; 5] = ["group", "n", "mean_error", "std_error", "failed_trials"];
const NOISE_ROWS_HEADER: [&str; 8] = ["group", "n", "sigma", "samples", "trial", "seed", "aligned_error", "iterations"];
const NOISE_AGGREGATES_HEADER: [&str; 6] = ["group", "sigma", "samples", "mean_error", "std_error", "failed_trials"];
const SCALING_HEADER: [&str; 2] = ["sigma", "third_moment_std"];

/// Header first, even with no records.
fn write_csv<R: Serialize>(path: &Path, header: &[&str], records: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<R: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let found = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Malformed(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|rec| rec.map_err(|e| Error::csv(path, e))).collect()
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<Row>> {
    read_csv(path.as_ref(), &ROWS_HEADER)
}

pub fn read_aggregates(path: impl AsRef<Path>) -> Result<Vec<Aggregate>> {
    read_csv(path.as_ref(), &AGGREGATES_HEADER)
}

pub fn read_noise_rows(path: impl AsRef<Path>) -> Result<Vec<NoiseRow>> {
    read_csv(path.as_ref(), &NOISE_ROWS_HEADER)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

impl SweepResult {
    /// Row and aggregate tables for the sweep's kind.
    pub fn emit_csv(&self, dir: impl AsRef<Path>) -> Result<Vec<String>> {
        let dir = dir.as_ref();
        match &self.noise {
            None => {
                write_csv(&dir.join("rows.csv"), &ROWS_HEADER, &self.rows)?;
                write_csv(&dir.join("aggregates.csv"), &AGGREGATES_HEADER, &self.aggregates)?;
                Ok(vec!["rows.csv".into(), "aggregates.csv".into()])
            }
            Some(noise) => {
                write_csv(&dir.join("noise_rows.csv"), &NOISE_ROWS_HEADER, &noise.rows)?;
                write_csv(&dir.join("noise_aggregates.csv"), &NOISE_AGGREGATES_HEADER, &noise.aggregates)?;
                write_csv::<ScalingPoint>(&dir.join("noise_scaling.csv"), &SCALING_HEADER, &noise.scaling)?;
                Ok(vec!["noise_rows.csv".into(), "noise_aggregates.csv".into(), "noise_scaling.csv".into()])
            }
        }
    }

    pub fn emit_svg(&self, path: impl AsRef<Path>) -> Result<()> {
        self.chart().write(path)
    }

    fn summary(&self) -> serde_json::Value {
        let mut per_trial = Vec::new();
        for a in &self.aggregates {
            per_trial.push(json!({
                "group": a.group,
                "n": a.n,
                "mean_aligned_error": finite_or_null(a.mean_error),
                "std_aligned_error": finite_or_null(a.std_error),
                "failed_trials": a.failed_trials,
            }));
        }
        let averages: Vec<_> = self
            .aligned_averages
            .iter()
            .map(|a| json!({ "group": a.group, "n": a.n, "error_of_aligned_average": finite_or_null(a.error) }))
            .collect();
        let mut out = json!({ "per_trial_mean": per_trial, "aligned_average": averages });
        if let Some(noise) = &self.noise {
            out["noise"] = json!({
                "aggregates": noise.aggregates.iter().map(|a| json!({
                    "group": a.group,
                    "sigma": a.sigma,
                    "samples": a.samples,
                    "mean_aligned_error": finite_or_null(a.mean_error),
                    "failed_trials": a.failed_trials,
                })).collect::<Vec<_>>(),
                "scaling_slope": noise.scaling_slope.map_or(serde_json::Value::Null, finite_or_null),
            });
        }
        out
    }
}

/// Write every artifact of a sweep into `dir`: the CSV tables,
/// `figure.svg`, `summary.json` and `manifest.json`.
pub fn write_outputs(result: &SweepResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = result.emit_csv(dir)?;
    result.emit_svg(dir.join("figure.svg"))?;
    files.push("figure.svg".into());
    write_json(&dir.join("summary.json"), &result.summary())?;
    files.push("summary.json".into());
    let manifest = json!({
        "tool": "mra",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": result.spec.master_seed,
        "spec": result.spec,
        "files": files,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{aggregate, run_length_sweep, Execution, SweepSpec};
    use crate::group::Group;

    #[test]
    fn empty_tables_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.csv");
        write_csv::<Row>(&p, &ROWS_HEADER, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "group,n,trial,seed,aligned_error,iterations\n");
        assert!(read_rows(&p).unwrap().is_empty());
    }

    #[test]
    fn rows_round_trip_including_failures() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.csv");
        let rows = vec![
            Row { group: Group::Cyclic, n: 5, trial: 0, seed: u64::MAX, aligned_error: 0.1 + 0.2, iterations: 7 },
            Row { group: Group::Dihedral, n: 5, trial: 1, seed: 3, aligned_error: f64::NAN, iterations: 0 },
        ];
        write_csv(&p, &ROWS_HEADER, &rows).unwrap();
        let back = read_rows(&p).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].aligned_error.is_nan());
        assert_eq!(aggregate(&back)[1].failed_trials, 1);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_rows(&p), Err(Error::Malformed(_))));
    }

    #[test]
    fn full_output_directory() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SweepSpec::length_sweep(5, 6, 1, 2, Group::ALL.to_vec(), 4);
        let r = run_length_sweep(&spec, Execution::Parallel).unwrap();
        write_outputs(&r, dir.path()).unwrap();
        for f in ["rows.csv", "aggregates.csv", "figure.svg", "summary.json", "manifest.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(read_rows(dir.path().join("rows.csv")).unwrap(), r.rows);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        let spec_back: SweepSpec = serde_json::from_value(manifest["spec"].clone()).unwrap();
        assert_eq!(spec_back, spec);
    }
}
