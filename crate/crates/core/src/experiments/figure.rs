use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::bounds::{ratio_curve, write_ratio_csv, RatioCurveConfig, RatioRow};
use crate::error::Result;

/// Provenance record written next to every CLI output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub crate_version: String,
    pub master_seed: Option<u64>,
    pub derived_seeds: BTreeMap<String, u64>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start<P: Serialize>(command: &str, master_seed: Option<u64>, parameters: &P) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            derived_seeds: BTreeMap::new(),
            started_at: now(),
            finished_at: None,
            parameters: serde_json::to_value(parameters)?,
            outputs: Vec::new(),
        })
    }

    pub fn finish(&mut self, outputs: &[&Path]) {
        self.finished_at = Some(now());
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

/// `out` with `.manifest.json` appended to its file name.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// `N = 1000`, `σ² = 1`, `δ = 0.1` over a `d` grid reaching 100.
pub fn default_ratio_config() -> RatioCurveConfig {
    RatioCurveConfig::new(vec![2, 5, 10, 20, 30, 40, 60, 80, 100], vec![1, 5, 10, 20], 1000, 1.0, 0.1, 0)
}

/// Writes the ratio CSV to `out` and its manifest beside it.
pub fn run_ratio_figure(config: &RatioCurveConfig, out: &Path) -> Result<(Vec<RatioRow>, RunManifest)> {
    let mut manifest = RunManifest::start("ratio-curve", Some(config.seed), config)?;
    let rows = ratio_curve(config)?;
    let mut dims = config.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    for d in dims {
        manifest.derived_seeds.insert(format!("omega/d={d}"), config.frequency_seed(d));
    }
    write_ratio_csv(&rows, BufWriter::new(File::create(out)?))?;
    let mpath = manifest_path(out);
    manifest.finish(&[out, &mpath]);
    manifest.write(&mpath)?;
    Ok((rows, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_d_gives_single_row_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ratio.csv");
        let cfg = RatioCurveConfig::new(vec![30], vec![5], 200, 1.0, 0.1, 4);
        let (rows, manifest) = run_ratio_figure(&cfg, &out).unwrap();
        assert_eq!(rows.len(), 1);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("d,D,M_k,M_f,ratio,feasible\n"));
        let mpath = manifest_path(&out);
        assert!(mpath.ends_with("ratio.csv.manifest.json"));
        let back: RunManifest = serde_json::from_reader(File::open(mpath).unwrap()).unwrap();
        assert_eq!(back, manifest);
        assert_eq!(back.derived_seeds["omega/d=30"], cfg.frequency_seed(30));
        assert_eq!(back.parameters["n"], 200);
    }

    #[test]
    fn small_d_rows_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        let cfg = RatioCurveConfig::new(vec![3, 40], vec![10], 40, 1.0, 0.1, 2024);
        let (rows, _) = run_ratio_figure(&cfg, &out).unwrap();
        assert!(!rows[0].feasible);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",false"));
    }
}
