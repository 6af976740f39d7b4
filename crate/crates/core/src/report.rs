//! Output files: the summary table, JSON payloads, digests and manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{AggregateReport, Metric, RunMetrics};
use crate::protocol::{ExperimentConfig, ModelKind, ProtocolOutput, RunRecord, RunSeeds};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Single writer for an output directory; records a digest for every file.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ArtifactEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    /// Writes `manifest-<verb>.json`, which is itself not digested.
    pub fn finish(self, verb: &str, config: &ExperimentConfig, seeds: Vec<RunSeeds>, timings: Timings) -> Result<Manifest> {
        let manifest = Manifest {
            verb: verb.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds,
            artifacts: self.entries,
            timings,
        };
        let path = self.root.join(manifest_name(verb));
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn manifest_name(verb: &str) -> String {
    format!("manifest-{verb}.json")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub phases: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub verb: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<RunSeeds>,
    pub artifacts: Vec<ArtifactEntry>,
    pub timings: Timings,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub manifests: usize,
    pub verified: usize,
}

/// Recomputes the digest of every file listed by every manifest in `out`.
pub fn check_outputs(out: &Path) -> Result<CheckReport> {
    let read = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
    let mut manifests: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("manifest-") && n.ends_with(".json"))
        })
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(Error::MissingArtifacts(out.join("manifest-*.json")));
    }
    let mut report = CheckReport::default();
    for m in &manifests {
        let manifest = Manifest::load(m)?;
        for a in &manifest.artifacts {
            let path = out.join(&a.path);
            let bytes = fs::read(&path).map_err(|_| Error::MissingArtifacts(path.clone()))?;
            let digest = sha256_hex(&bytes);
            if digest != a.sha256 {
                return Err(Error::Data(format!(
                    "{} does not match its recorded digest (expected {}, found {digest})",
                    path.display(),
                    a.sha256
                )));
            }
            report.verified += 1;
        }
        report.manifests += 1;
    }
    Ok(report)
}

pub const TABLE_HEADER: [&str; 7] = ["Model", "Sensitivity", "FPR", "Specificity", "FNR", "Accuracy", "AUC"];

/// Summary table: one row per model, cells `mean (std)`.
pub fn table_csv(models: &[ModelKind], aggregates: &BTreeMap<ModelKind, AggregateReport>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for m in models {
        let agg = &aggregates[m];
        let mut row = vec![m.label().to_string()];
        row.extend(Metric::TABLE.iter().map(|&metric| agg.get(metric).cell(metric)));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seeds: RunSeeds,
    pub metrics: BTreeMap<ModelKind, RunMetrics>,
}

/// Deterministic metric payload: aggregates plus per-run values without
/// ROC points or timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub models: Vec<ModelKind>,
    pub repeats: usize,
    pub seed: u64,
    pub aggregates: BTreeMap<ModelKind, AggregateReport>,
    pub runs: Vec<RunSummary>,
}

pub fn metrics_report(out: &ProtocolOutput, seed: u64) -> MetricsReport {
    let strip = |r: &RunRecord| RunSummary {
        run: r.run,
        seeds: r.seeds,
        metrics: r
            .metrics
            .iter()
            .map(|(k, m)| {
                let mut m = m.clone();
                m.roc_points.clear();
                (*k, m)
            })
            .collect(),
    };
    MetricsReport {
        models: out.models.clone(),
        repeats: out.runs.len(),
        seed,
        aggregates: out.aggregates.clone(),
        runs: out.runs.iter().map(strip).collect(),
    }
}

pub fn run_file(run: usize) -> String {
    format!("runs/run_{run:02}.json")
}

pub fn model_file(run: usize) -> String {
    format!("models/run_{run:02}.json")
}
