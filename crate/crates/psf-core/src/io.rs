//! Run artifacts and their parsers.
//!
//! Every format a run writes can be read back with a function from this
//! module, losslessly: floats are written in shortest round-trip form.
//!
//! * **Signal CSV** (`finger,sample,time_s,x_mm,tension_N`) — the sampled
//!   per-finger series, long format, grouped by finger.
//! * **Annotation sidecar** (JSON) — sample rate, per-finger ground truth,
//!   and the object displacement series for the CSV next to it.
//! * **Detection report** (JSON) — per-finger contact events, slopes, and
//!   stiffness verdicts.
//! * **Event log** (JSON lines) — one controller event per line.
//! * **Run manifest** (JSON) — inputs, seed, and SHA-256 checksums of every
//!   artifact a run produced; timestamps are deliberately excluded so equal
//!   runs write byte-equal manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sim::{GraspSim, GroundTruth, SampledSignal};

/// Header line of the signal CSV.
pub const SIGNAL_CSV_HEADER: &str = "finger,sample,time_s,x_mm,tension_N";

// ---------------------------------------------------------------------------
// Signal CSV + annotation sidecar
// ---------------------------------------------------------------------------

/// A complete multi-finger recording: the unit a run writes and an analysis
/// reads. The CSV carries the sampled series; the sidecar carries everything
/// that is not a sample (rate, ground truth, object motion).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBundle {
    /// Sample rate (Hz), equal across fingers.
    pub rate: f64,
    /// Finger name → sampled signal, in recording order.
    pub fingers: Vec<(String, SampledSignal)>,
    /// Object displacement along its line of motion per sample (mm); empty
    /// for runs without an object or with a fixed one.
    pub object_s: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRow {
    finger: String,
    sample: usize,
    time_s: f64,
    x_mm: f64,
    #[serde(rename = "tension_N")]
    tension_n: f64,
}

/// Sidecar JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSidecar {
    pub rate: f64,
    /// Finger names in CSV order.
    pub fingers: Vec<String>,
    pub truth: BTreeMap<String, GroundTruth>,
    pub object_s: Vec<f64>,
}

impl SignalBundle {
    /// Bundles a finished grasp synthesis under the given finger names.
    pub fn from_sim(names: &[String], sim: &GraspSim) -> Result<Self> {
        if names.len() != sim.signals.len() {
            return Err(Error::InvalidParams(format!(
                "{} names for {} signals",
                names.len(),
                sim.signals.len()
            )));
        }
        let rate = sim.signals.first().map(|s| s.rate).unwrap_or(0.0);
        Ok(Self {
            rate,
            fingers: names.iter().cloned().zip(sim.signals.iter().cloned()).collect(),
            object_s: sim.object_s.clone(),
        })
    }

    /// Renders the signal CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (name, sig) in &self.fingers {
            for i in 0..sig.len() {
                w.serialize(SignalRow {
                    finger: name.clone(),
                    sample: i,
                    time_s: sig.time(i),
                    x_mm: sig.x[i],
                    tension_n: sig.tension[i],
                })?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(format!("signal csv utf-8: {e}")))
    }

    /// Renders the annotation sidecar.
    pub fn sidecar(&self) -> SignalSidecar {
        SignalSidecar {
            rate: self.rate,
            fingers: self.fingers.iter().map(|(n, _)| n.clone()).collect(),
            truth: self
                .fingers
                .iter()
                .map(|(n, s)| (n.clone(), s.truth.clone()))
                .collect(),
            object_s: self.object_s.clone(),
        }
    }

    /// Renders the sidecar as pretty JSON (newline-terminated).
    pub fn sidecar_json(&self) -> String {
        to_pretty_json(&self.sidecar())
    }

    /// Reconstructs a bundle from the CSV text and its sidecar JSON. Sample
    /// indices must count up from zero per finger and the finger set must
    /// match the sidecar exactly.
    pub fn parse(csv_text: &str, sidecar_json: &str) -> Result<Self> {
        let sidecar: SignalSidecar = serde_json::from_str(sidecar_json)
            .map_err(|e| Error::Parse(format!("annotation sidecar: {e}")))?;
        if sidecar.rate <= 0.0 || !sidecar.rate.is_finite() {
            return Err(Error::Parse(format!(
                "annotation sidecar: rate {} must be a positive number",
                sidecar.rate
            )));
        }

        let mut rdr = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
        {
            let got = rdr
                .headers()
                .map_err(|e| Error::Parse(format!("signal csv header: {e}")))?;
            let want: Vec<&str> = SIGNAL_CSV_HEADER.split(',').collect();
            if got.iter().collect::<Vec<_>>() != want {
                return Err(Error::Parse(format!(
                    "signal csv header: expected '{SIGNAL_CSV_HEADER}', got '{}'",
                    got.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }

        let mut order: Vec<String> = Vec::new();
        let mut series: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (line, row) in rdr.deserialize::<SignalRow>().enumerate() {
            // +2: one for the header, one for 1-based numbering.
            let row = row.map_err(|e| Error::Parse(format!("signal csv line {}: {e}", line + 2)))?;
            if !series.contains_key(&row.finger) {
                order.push(row.finger.clone());
            }
            let (xs, fs) = series.entry(row.finger.clone()).or_default();
            if row.sample != xs.len() {
                return Err(Error::Parse(format!(
                    "signal csv line {}: finger '{}' sample {} out of order (expected {})",
                    line + 2,
                    row.finger,
                    row.sample,
                    xs.len()
                )));
            }
            xs.push(row.x_mm);
            fs.push(row.tension_n);
        }

        if order != sidecar.fingers {
            return Err(Error::Parse(format!(
                "signal csv fingers {order:?} do not match sidecar {:?}",
                sidecar.fingers
            )));
        }

        let mut fingers = Vec::with_capacity(order.len());
        for name in order {
            let (x, tension) = series.remove(&name).expect("collected above");
            let truth = sidecar
                .truth
                .get(&name)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("sidecar missing truth for finger '{name}'")))?;
            fingers.push((
                name,
                SampledSignal { rate: sidecar.rate, x, tension, truth },
            ));
        }
        Ok(Self { rate: sidecar.rate, fingers, object_s: sidecar.object_s })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<[PathBuf; 2]> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.to_csv()?)?;
        std::fs::write(&json_path, self.sidecar_json())?;
        Ok([csv_path, json_path])
    }

    /// Loads a bundle saved by [`SignalBundle::save`], given the CSV path.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let json_path = csv_path.with_extension("json");
        let csv_text = std::fs::read_to_string(csv_path)?;
        let sidecar = std::fs::read_to_string(&json_path)?;
        Self::parse(&csv_text, &sidecar)
    }
}

// ---------------------------------------------------------------------------
// Generic JSON / JSON-lines helpers
// ---------------------------------------------------------------------------

/// Pretty JSON with a trailing newline (the form every JSON artifact uses).
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

/// Parses a JSON artifact, labeling errors with the artifact name.
pub fn from_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// One JSON document per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("artifact serializes"));
        out.push('\n');
    }
    out
}

/// Parses a JSON-lines artifact; blank lines are skipped, errors carry the
/// 1-based line number.
pub fn from_jsonl<T: DeserializeOwned>(what: &str, text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("{what} line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// SHA-256 of a byte string, lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(s, "{b:02x}").expect("hex digits");
    }
    s
}

/// What a run was and what it wrote. Contains no timestamps or host details,
/// so re-running the same command with the same seed reproduces the manifest
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Subcommand or operation name.
    pub command: String,
    /// Library version the artifacts were written by.
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Artifact file name → SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: None,
            config: None,
            seed: None,
            artifacts: BTreeMap::new(),
        }
    }

    /// Records an artifact that was just written.
    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
    }

    /// Writes an artifact file into `dir` and records its checksum.
    pub fn write_artifact(&mut self, dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        self.record(name, contents.as_bytes());
        Ok(path)
    }

    pub fn to_json(&self) -> String {
        to_pretty_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        from_json("run manifest", text)
    }

    /// Saves the manifest itself as `manifest.json` in `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, self.to_json())?;
        Ok(path)
    }

    /// Re-hashes every recorded artifact in `dir` and reports mismatches.
    pub fn verify_dir(&self, dir: &Path) -> Result<()> {
        for (name, want) in &self.artifacts {
            let bytes = std::fs::read(dir.join(name))?;
            let got = sha256_hex(&bytes);
            if got != *want {
                return Err(Error::Parse(format!(
                    "artifact '{name}' checksum mismatch: manifest {want}, file {got}"
                )));
            }
        }
        Ok(())
    }
}
