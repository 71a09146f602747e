//! Blind-grasp object recognition: feature extraction, k-NN classification,
//! dataset generation over a simulated object set, and the three-sweep blind
//! exploration protocol.
//!
//! A grasp is summarized by a 10-dimensional feature vector: nine joint
//! angles (four two-joint fingers + the single-joint thumb, fixed order) and
//! the global tension/excursion slope averaged over fingers with a distal
//! contact. Features are z-scored against the training set before Euclidean
//! k-NN (k = 3), since radians and N/mm are incommensurate.
//!
//! Objects are axisymmetric solids lying across the finger stations; each
//! digit grasps the circular cross-section ("slice") at its own station, so
//! a cylinder presents equal radii, a cone a linear radius gradient, and a
//! sphere a symmetric bulge. Slice radii stay within [16, 28] mm at the
//! standard placement: below ~16 mm a compliant slice's distal transition
//! falls under the detector's slope floor and the grasp yields no slope
//! feature (see the scenario module notes).

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::HandConfig;
use crate::control::{FingerPosture, PostureSnapshot};
use crate::detect::{
    detect_contacts, detect_disturbance, estimate_joint_angles,
    estimate_joint_angles_post_proximal, reference_for, slope_metrics, ContactKind,
    DetectorConfig, DisturbanceClass,
};
use crate::error::{Error, Result};
use crate::object::{Mobility, ObjectModel, Stiffness};
use crate::params::{FingerParams, FingerState};
use crate::sim::{
    inject_disturbance, ramp_schedule, simulate_grasp, DisturbanceEvent, DisturbanceKind,
    FingerSetup, HoldContext, SimOptions, Strategy,
};
use crate::solver::SolveConfig;

/// Feature dimension: nine joint angles + one averaged slope.
pub const FEATURE_DIM: usize = 10;

/// Canonical digit order for feature vectors and dataset grasps.
pub const FINGER_ORDER: [&str; 5] = ["index", "middle", "ring", "little", "thumb"];

/// Distance of each two-joint finger's plane along the object axis (mm).
pub const FINGER_STATIONS: [f64; 4] = [0.0, 12.0, 24.0, 36.0];

/// The opposing thumb's plane sits mid-span.
pub const THUMB_STATION: f64 = 18.0;

/// Slice center in each finger's base frame at the standard grasp placement
/// (mm); per-trial jitter moves it.
pub const SLICE_CENTER: [f64; 2] = [30.0, 30.0];

// ---------------------------------------------------------------------------
// Feature vector
// ---------------------------------------------------------------------------

/// Ten standardizable grasp features: `[θ1, θ2] × {index, middle, ring,
/// little}`, thumb `θ1`, then the averaged global slope (N/mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn zero() -> Self {
        Self([0.0; FEATURE_DIM])
    }

    /// The averaged-global-slope component.
    pub fn avg_slope(&self) -> f64 {
        self.0[FEATURE_DIM - 1]
    }
}

/// Builds the feature vector from a five-digit posture snapshot (canonical
/// digit order) and each digit's global slope (`None` = no distal contact).
/// The slope feature averages the `Some` entries; a grasp with no distal
/// contact anywhere has no features and errors with [`Error::NoGrasp`].
pub fn extract_features(
    posture: &PostureSnapshot,
    slopes: &[Option<f64>],
) -> Result<FeatureVector> {
    if posture.fingers.len() != FINGER_ORDER.len() || slopes.len() != FINGER_ORDER.len() {
        return Err(Error::InvalidParams(format!(
            "feature extraction needs {} digits in canonical order (got {} postures, {} slopes)",
            FINGER_ORDER.len(),
            posture.fingers.len(),
            slopes.len()
        )));
    }
    let contacting: Vec<f64> = slopes.iter().flatten().copied().collect();
    if contacting.is_empty() {
        return Err(Error::NoGrasp);
    }
    let mut v = [0.0; FEATURE_DIM];
    for (f, fp) in posture.fingers.iter().take(4).enumerate() {
        v[2 * f] = fp.theta1;
        v[2 * f + 1] = fp.theta2;
    }
    v[8] = posture.fingers[4].theta1;
    // Slopes below zero only arise from unloading transients; the feature is
    // a stiffness proxy and is floored accordingly.
    v[9] = (contacting.iter().sum::<f64>() / contacting.len() as f64).max(0.0);
    Ok(FeatureVector(v))
}

// ---------------------------------------------------------------------------
// Dataset + k-NN
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: String,
}

/// Training data: feature vectors with object labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub samples: Vec<LabeledSample>,
}

/// Dataset CSV header: nine angle columns, the slope, and the label.
pub const DATASET_CSV_HEADER: &str = "index_mcp,index_pip,middle_mcp,middle_pip,ring_mcp,\
ring_pip,little_mcp,little_pip,thumb_mcp,avg_slope,label";

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trial count per label.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for s in &self.samples {
            if s.label.is_empty() {
                return Err(Error::InvalidParams("dataset sample with empty label".into()));
            }
            if s.features.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "non-finite feature in sample labeled '{}'",
                    s.label
                )));
            }
        }
        Ok(())
    }

    /// Renders the dataset CSV (lossless float form).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(DATASET_CSV_HEADER.split(','))?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.features.0.iter().map(|v| ryu_format(*v)).collect();
            rec.push(s.label.clone());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(format!("dataset csv utf-8: {e}")))
    }

    /// Parses a dataset CSV written by [`LabeledDataset::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        {
            let got = rdr
                .headers()
                .map_err(|e| Error::Parse(format!("dataset csv header: {e}")))?;
            let want: Vec<&str> = DATASET_CSV_HEADER.split(',').collect();
            if got.iter().collect::<Vec<_>>() != want {
                return Err(Error::Parse(format!(
                    "dataset csv header mismatch: got '{}'",
                    got.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("dataset csv line {}: {e}", i + 2)))?;
            if rec.len() != FEATURE_DIM + 1 {
                return Err(Error::Parse(format!(
                    "dataset csv line {}: expected {} fields, got {}",
                    i + 2,
                    FEATURE_DIM + 1,
                    rec.len()
                )));
            }
            let mut v = [0.0; FEATURE_DIM];
            for (j, slot) in v.iter_mut().enumerate() {
                *slot = rec[j].parse::<f64>().map_err(|e| {
                    Error::Parse(format!("dataset csv line {}: field {}: {e}", i + 2, j + 1))
                })?;
            }
            samples.push(LabeledSample {
                features: FeatureVector(v),
                label: rec[FEATURE_DIM].to_string(),
            });
        }
        let ds = Self { samples };
        ds.validate()?;
        Ok(ds)
    }
}

/// Shortest round-trip float text (serde_json uses the same formatter, so
/// CSV and JSON artifacts agree on float spelling).
fn ryu_format(v: f64) -> String {
    let mut out = serde_json::to_string(&v).expect("finite float");
    if out == "-0.0" {
        out = "0.0".into();
    }
    out
}

/// Per-dimension z-scoring fit on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl Standardizer {
    /// Fits mean/std per dimension; a collapsed dimension gets unit scale so
    /// it simply stops contributing to distances.
    pub fn fit(samples: &[LabeledSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.features.0.iter()) {
                *m += v / n;
            }
        }
        let mut std = [0.0; FEATURE_DIM];
        for s in samples {
            for (j, v) in s.features.0.iter().enumerate() {
                std[j] += (v - mean[j]).powi(2) / n;
            }
        }
        for s in std.iter_mut() {
            *s = s.sqrt();
            if *s < 1e-9 {
                *s = 1.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, v: &FeatureVector) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            out[j] = (v.0[j] - self.mean[j]) / self.std[j];
        }
        out
    }
}

/// One neighbor in a classification result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub label: String,
    /// Euclidean distance in standardized feature space.
    pub distance: f64,
}

/// k-NN verdict with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    pub label: String,
    /// The k nearest training samples, closest first.
    pub neighbors: Vec<Neighbor>,
}

/// Majority label among the `k` nearest training samples by Euclidean
/// distance on z-scored features; vote ties go to the label of the nearest
/// neighbor holding a tied count.
pub fn knn_classify_detailed(
    query: &FeatureVector,
    data: &LabeledDataset,
    k: usize,
) -> Result<KnnResult> {
    data.validate()?;
    if k == 0 {
        return Err(Error::InvalidParams("k must be ≥ 1".into()));
    }
    if data.len() < k {
        return Err(Error::InvalidParams(format!(
            "dataset holds {} samples, fewer than k = {k}",
            data.len()
        )));
    }
    let std = Standardizer::fit(&data.samples)?;
    let q = std.apply(query);
    let mut scored: Vec<(f64, &LabeledSample)> = data
        .samples
        .iter()
        .map(|s| {
            let p = std.apply(&s.features);
            let d2: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), s)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let neighbors: Vec<Neighbor> = scored[..k]
        .iter()
        .map(|(d, s)| Neighbor { label: s.label.clone(), distance: *d })
        .collect();

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &neighbors {
        *counts.entry(n.label.as_str()).or_insert(0) += 1;
    }
    let top = *counts.values().max().expect("k ≥ 1");
    // Nearest neighbor whose label holds a winning vote count; neighbors are
    // sorted by distance, so the first hit breaks ties.
    let label = neighbors
        .iter()
        .find(|n| counts[n.label.as_str()] == top)
        .expect("winning label present")
        .label
        .clone();
    Ok(KnnResult { label, neighbors })
}

/// [`knn_classify_detailed`] reduced to the label.
pub fn knn_classify(query: &FeatureVector, data: &LabeledDataset, k: usize) -> Result<String> {
    Ok(knn_classify_detailed(query, data, k)?.label)
}

// ---------------------------------------------------------------------------
// Simulated object set
// ---------------------------------------------------------------------------

/// Axisymmetric object geometry; `z` runs along the finger stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Geometry {
    Cylinder { radius: f64 },
    /// Linear radius gradient from `radius_base` at z = 0 to `radius_tip`
    /// at the last station.
    Cone { radius_base: f64, radius_tip: f64 },
    /// Centered on the station span; requires `radius` > half-span so every
    /// slice exists.
    Sphere { radius: f64 },
}

impl Geometry {
    /// Cross-section radius at axial position `z` (mm).
    pub fn radius_at(&self, z: f64) -> f64 {
        let span = FINGER_STATIONS[FINGER_STATIONS.len() - 1];
        match *self {
            Geometry::Cylinder { radius } => radius,
            Geometry::Cone { radius_base, radius_tip } => {
                radius_base + (radius_tip - radius_base) * (z / span)
            }
            Geometry::Sphere { radius } => {
                let dz = z - span / 2.0;
                (radius * radius - dz * dz).max(0.0).sqrt()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let span = FINGER_STATIONS[FINGER_STATIONS.len() - 1];
        let ok = match *self {
            Geometry::Cylinder { radius } => radius > 0.0 && radius.is_finite(),
            Geometry::Cone { radius_base, radius_tip } => {
                radius_base > 0.0 && radius_tip > 0.0 && radius_base.is_finite() && radius_tip.is_finite()
            }
            Geometry::Sphere { radius } => radius.is_finite() && radius > span / 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("degenerate geometry {self:?}")))
        }
    }
}

/// One object of the recognition set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub label: String,
    pub geometry: Geometry,
    pub stiffness: Stiffness,
}

/// Geometry identity of a label: everything before the final stiffness
/// segment (`"sphere-l-rigid"` → `"sphere-l"`).
pub fn geometry_label(label: &str) -> &str {
    label.rsplit_once('-').map(|(head, _)| head).unwrap_or(label)
}

/// Contact spring constant for the compliant objects (N/mm). Chosen above
/// the detector's slope floor so every soft slice still yields a distal
/// event, while keeping finger global slopes clearly below the rigidity
/// gate.
pub const SOFT_K: f64 = 1.0;

/// The 17-object recognition set: 6 cylinders (3 sizes × rigid/soft), 6
/// cones (3 sizes × rigid/soft), 5 spheres (3 rigid sizes + 2 soft). Slice
/// radii all land in the detectable [16, 28] mm band at the standard
/// placement.
pub fn standard_object_set() -> Vec<ObjectSpec> {
    let mut out = Vec::with_capacity(17);
    let sizes = ["s", "m", "l"];
    let cylinders = [17.0, 21.0, 25.0];
    let cones = [(20.0, 16.0), (23.0, 17.5), (26.0, 19.0)];
    let spheres = [25.0, 26.5, 28.0];
    for (i, &radius) in cylinders.iter().enumerate() {
        for (suffix, stiffness) in [("rigid", Stiffness::Rigid), ("soft", Stiffness::Soft(SOFT_K))] {
            out.push(ObjectSpec {
                label: format!("cylinder-{}-{}", sizes[i], suffix),
                geometry: Geometry::Cylinder { radius },
                stiffness,
            });
        }
    }
    for (i, &(radius_base, radius_tip)) in cones.iter().enumerate() {
        for (suffix, stiffness) in [("rigid", Stiffness::Rigid), ("soft", Stiffness::Soft(SOFT_K))] {
            out.push(ObjectSpec {
                label: format!("cone-{}-{}", sizes[i], suffix),
                geometry: Geometry::Cone { radius_base, radius_tip },
                stiffness,
            });
        }
    }
    for (i, &radius) in spheres.iter().enumerate() {
        out.push(ObjectSpec {
            label: format!("sphere-{}-rigid", sizes[i]),
            geometry: Geometry::Sphere { radius },
            stiffness: Stiffness::Rigid,
        });
    }
    for (i, &radius) in spheres.iter().take(2).enumerate() {
        out.push(ObjectSpec {
            label: format!("sphere-{}-soft", sizes[i]),
            geometry: Geometry::Sphere { radius },
            stiffness: Stiffness::Soft(SOFT_K),
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Slice grasps → features
// ---------------------------------------------------------------------------

/// Dataset generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    /// Grasp trials per object.
    pub trials: usize,
    pub seed: u64,
    /// Uniform per-trial object position jitter (± mm, both axes).
    pub jitter_mm: f64,
    /// Per-digit excursion budget (mm).
    pub x_max: f64,
    /// Constant-excursion tail after the ramp (samples), giving the detector
    /// room to confirm slow compliant transitions.
    pub tail: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { trials: 10, seed: 1, jitter_mm: 1.0, x_max: 20.0, tail: 300 }
    }
}

fn digit_params(cfg: &HandConfig, digit: usize) -> Result<FingerParams> {
    let name = FINGER_ORDER[digit];
    // Prefer the config catalog; otherwise the standard digit variants.
    if let Ok(p) = cfg.finger(name) {
        return Ok(p);
    }
    Ok(if digit == 4 {
        FingerParams::thumb()
    } else {
        FingerParams::two_joint_late_pip()
    })
}

/// Grasps one object with all five digits at the given jittered placement
/// and returns (posture estimate, per-digit global slope).
fn grasp_object_slices(
    spec: &ObjectSpec,
    center: [f64; 2],
    hand: &HandConfig,
    x_max: f64,
    tail: usize,
) -> Result<(PostureSnapshot, Vec<Option<f64>>)> {
    let solve = SolveConfig::default();
    let det_cfg = DetectorConfig::default_for(&hand.sea);
    let opts = SimOptions::default();
    let mut postures = Vec::with_capacity(5);
    let mut slopes = Vec::with_capacity(5);

    for digit in 0..5 {
        let params = digit_params(hand, digit)?;
        let z = if digit == 4 { THUMB_STATION } else { FINGER_STATIONS[digit] };
        let radius = spec.geometry.radius_at(z);
        let object = ObjectModel {
            center,
            radius,
            stiffness: spec.stiffness,
            mobility: Mobility::Fixed,
        };
        let setups = vec![FingerSetup::inline(FINGER_ORDER[digit], params.clone())];
        let schedules = vec![ramp_schedule(0.0, x_max, solve.excursion_step, 0, tail)];
        let sim = simulate_grasp(
            &setups,
            &object,
            &schedules,
            Strategy::Nominal,
            &hand.sea,
            &hand.orientation,
            &opts,
        )?;
        let sig = &sim.signals[0];
        let reference = reference_for(&params, &hand.sea, &hand.orientation, &solve, x_max)?;
        let events = detect_contacts(sig, &reference, &det_cfg, &params, &hand.sea)?;
        let distal = events.iter().find(|e| e.kind == ContactKind::Distal).copied();
        let proximal = events.iter().find(|e| e.kind == ContactKind::Proximal).copied();

        let n = sig.len();
        let w = det_cfg.window.min(n).max(1);
        let f_tail = sig.tension[n - w..].iter().sum::<f64>() / w as f64;
        let x_end = sig.x[n - 1];
        let (theta1, theta2) = match (distal, proximal) {
            (Some(d), _) => (d.theta1, d.theta2),
            (None, Some(p)) if params.is_single_joint() => (p.theta1, 0.0),
            (None, Some(p)) => {
                estimate_joint_angles_post_proximal(x_end, f_tail, p.theta1, &params, &hand.sea)?
            }
            (None, None) => estimate_joint_angles(x_end, &reference)?,
        };
        postures.push(FingerPosture {
            name: FINGER_ORDER[digit].to_string(),
            theta1,
            theta2,
        });
        slopes.push(match distal {
            Some(ev) => slope_metrics(sig, &ev, &det_cfg)?.global_slope,
            None => None,
        });
    }
    let time_s = (x_max / hand.sea.cable_speed) + tail as f64 / 1000.0;
    Ok((PostureSnapshot { time_s, fingers: postures }, slopes))
}

/// One labeled trial: jitter the placement, grasp, extract features.
fn labeled_trial(
    spec: &ObjectSpec,
    trial_rng: &mut ChaCha8Rng,
    hand: &HandConfig,
    cfg: &DatasetConfig,
) -> Result<LabeledSample> {
    let jitter = Uniform::new_inclusive(-cfg.jitter_mm, cfg.jitter_mm);
    let center = [
        SLICE_CENTER[0] + jitter.sample(trial_rng),
        SLICE_CENTER[1] + jitter.sample(trial_rng),
    ];
    let (posture, slopes) = grasp_object_slices(spec, center, hand, cfg.x_max, cfg.tail)?;
    let features = extract_features(&posture, &slopes)?;
    Ok(LabeledSample { features, label: spec.label.clone() })
}

/// Generates the labeled dataset: `cfg.trials` jittered grasps per object.
/// Fully deterministic for a given seed; each (object, trial) pair draws
/// from its own RNG stream.
pub fn generate_dataset(
    objects: &[ObjectSpec],
    hand: &HandConfig,
    cfg: &DatasetConfig,
) -> Result<LabeledDataset> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParams("need at least one trial per object".into()));
    }
    for spec in objects {
        spec.geometry.validate()?;
    }
    let mut samples = Vec::with_capacity(objects.len() * cfg.trials);
    for (oi, spec) in objects.iter().enumerate() {
        for trial in 0..cfg.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((oi * cfg.trials + trial) as u64);
            samples.push(labeled_trial(spec, &mut rng, hand, cfg)?);
        }
    }
    Ok(LabeledDataset { samples })
}

/// Splits a dataset into (train, test): the last `held_out` trials of every
/// label go to the test set, preserving order.
pub fn split_leave_out(data: &LabeledDataset, held_out: usize) -> (LabeledDataset, LabeledDataset) {
    let counts = data.label_counts();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in &data.samples {
        let total = counts[&s.label];
        let idx = {
            let e = seen.entry(s.label.as_str()).or_insert(0);
            let i = *e;
            *e += 1;
            i
        };
        if idx + held_out >= total {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    (LabeledDataset { samples: train }, LabeledDataset { samples: test })
}

/// Hold-out evaluation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldOutReport {
    pub test_trials: usize,
    /// Fraction of held-out trials whose k-NN label is exactly right.
    pub accuracy: f64,
    /// Fraction whose *nearest* neighbor shares the query's geometry label
    /// (size and shape, stiffness ignored).
    pub geometry_consistency: f64,
}

/// Splits off the last `held_out` trials per label, classifies them against
/// the rest, and reports exact-label accuracy plus nearest-neighbor geometry
/// consistency.
pub fn evaluate_hold_out(data: &LabeledDataset, held_out: usize, k: usize) -> Result<HoldOutReport> {
    let (train, test) = split_leave_out(data, held_out);
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ok = 0usize;
    let mut geo_ok = 0usize;
    for s in &test.samples {
        let r = knn_classify_detailed(&s.features, &train, k)?;
        if r.label == s.label {
            ok += 1;
        }
        if geometry_label(&r.neighbors[0].label) == geometry_label(&s.label) {
            geo_ok += 1;
        }
    }
    Ok(HoldOutReport {
        test_trials: test.len(),
        accuracy: ok as f64 / test.len() as f64,
        geometry_consistency: geo_ok as f64 / test.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// Blind sweep
// ---------------------------------------------------------------------------

/// Which face of the hand a sweep (or an object) presents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSide {
    Palmar,
    Dorsal,
}

/// One object standing on the sweep line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePlacement {
    /// Label from the standard object set.
    pub label: String,
    /// Position along the sweep path (mm from its start).
    pub position: f64,
    /// The side from which the sweeping hand can touch it.
    pub side: SweepSide,
}

/// A blind-exploration scene: objects on a line the hand sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub sweep_len: f64,
    /// Hand travel speed during sweeps (mm/s).
    pub sweep_speed: f64,
    pub objects: Vec<ScenePlacement>,
}

impl Scene {
    pub fn empty(sweep_len: f64) -> Self {
        Self { sweep_len, sweep_speed: 50.0, objects: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sweep_len > 0.0) || !self.sweep_len.is_finite() {
            return Err(Error::Config(format!(
                "sweep_len {} must be positive",
                self.sweep_len
            )));
        }
        if !(self.sweep_speed > 0.0) || !self.sweep_speed.is_finite() {
            return Err(Error::Config(format!(
                "sweep_speed {} must be positive",
                self.sweep_speed
            )));
        }
        let set = standard_object_set();
        for o in &self.objects {
            if !set.iter().any(|s| s.label == o.label) {
                return Err(Error::Config(format!(
                    "scene object '{}' is not in the standard object set",
                    o.label
                )));
            }
            if !(o.position >= 0.0 && o.position <= self.sweep_len) {
                return Err(Error::Config(format!(
                    "scene object '{}' at {} mm lies outside the {} mm sweep",
                    o.label, o.position, self.sweep_len
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let scene = Self {
            sweep_len: file.sweep_len,
            sweep_speed: file.sweep_speed.unwrap_or(50.0),
            objects: file
                .objects
                .into_iter()
                .map(|o| ScenePlacement {
                    label: o.label,
                    position: o.position,
                    side: o.side.unwrap_or(SweepSide::Palmar),
                })
                .collect(),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        let file = SceneFile {
            sweep_len: self.sweep_len,
            sweep_speed: Some(self.sweep_speed),
            objects: self
                .objects
                .iter()
                .map(|o| SceneObjectFile {
                    label: o.label.clone(),
                    position: o.position,
                    side: Some(o.side),
                })
                .collect(),
        };
        toml::to_string_pretty(&file).expect("scene serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    sweep_len: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep_speed: Option<f64>,
    #[serde(rename = "object", default, skip_serializing_if = "Vec::is_empty")]
    objects: Vec<SceneObjectFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneObjectFile {
    label: String,
    position: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side: Option<SweepSide>,
}

/// Blind-protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindConfig {
    /// Pre-sweep finger tension (N), enabling bidirectional detection.
    pub preload: f64,
    /// Hold-monitor deadband (N).
    pub deadband: f64,
    /// Peak joint deflection a sweep contact imposes (rad).
    pub contact_magnitude: f64,
    /// Neighbors for classification.
    pub k: usize,
    /// Jitter seed for the post-detection grasp.
    pub seed: u64,
}

impl Default for BlindConfig {
    fn default() -> Self {
        Self {
            preload: 2.5,
            deadband: 0.3,
            contact_magnitude: 5f64.to_radians(),
            k: 3,
            seed: 99,
        }
    }
}

/// What one sweep saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEvent {
    /// 1-based sweep number.
    pub sweep: usize,
    pub side: SweepSide,
    /// Tension-signature class raised during the sweep, if any.
    pub class: DisturbanceClass,
    /// Estimated contact position along the sweep (mm).
    pub position_mm: Option<f64>,
}

/// Outcome of the blind protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum BlindOutcome {
    Found {
        /// Sweep (1-based) that made contact.
        sweep: usize,
        side: SweepSide,
        /// Dorsal contacts are approached from behind the object.
        behind_approach: bool,
        position_mm: f64,
        /// k-NN verdict for the executed grasp.
        label: String,
        neighbors: Vec<Neighbor>,
        /// True label of the contacted object (simulation ground truth).
        truth_label: String,
        features: FeatureVector,
    },
    ObjectNotFound {
        sweeps: usize,
    },
}

/// Full blind-protocol report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindReport {
    pub sweeps: Vec<SweepEvent>,
    pub outcome: BlindOutcome,
}

/// Excursion at which the free-flexion profile reaches `preload` (linear
/// interpolation on the reference grid).
fn preload_excursion(
    params: &FingerParams,
    hand: &HandConfig,
    preload: f64,
) -> Result<FingerState> {
    let solve = SolveConfig::default();
    let reference = reference_for(params, &hand.sea, &hand.orientation, &solve, 15.0)?;
    let states = &reference.states;
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.tension <= preload && preload <= b.tension {
            let t = if b.tension > a.tension {
                (preload - a.tension) / (b.tension - a.tension)
            } else {
                0.0
            };
            let x = a.x + t * (b.x - a.x);
            return Ok(FingerState::from_angles(
                a.theta1 + t * (b.theta1 - a.theta1),
                a.theta2 + t * (b.theta2 - a.theta2),
                x,
                params,
                &hand.sea,
            ));
        }
    }
    Err(Error::Infeasible(format!(
        "free-flexion tension never reaches the {preload} N preload"
    )))
}

/// Runs the three-sweep blind protocol (palmar, dorsal, palmar) over a
/// scene: the preloaded hand sweeps the line; an object on a sweep's side
/// registers as a tension disturbance (palmar pushes the fingers toward
/// flexion → tension drop; dorsal toward extension → rise). The first
/// confirmed contact triggers the grasp-and-classify step, approaching from
/// behind when the contact was dorsal. The whole hand moves as one unit, so
/// one digit's signature is representative; the monitor digit uses the
/// shallow-preload variant, whose MCP breakaway sits below the sweep preload
/// — a digit still at its extension stop could not register dorsal (tension-
/// raising) contacts.
pub fn blind_sweep(
    scene: &Scene,
    dataset: &LabeledDataset,
    hand: &HandConfig,
    cfg: &BlindConfig,
) -> Result<BlindReport> {
    scene.validate()?;
    dataset.validate()?;
    if !(cfg.preload > 0.0) || !(cfg.contact_magnitude > 0.0) {
        return Err(Error::InvalidParams(
            "blind protocol needs positive preload and contact magnitude".into(),
        ));
    }
    let rate = 1000.0;
    let params = FingerParams::two_joint_shallow();
    let hold = preload_excursion(&params, hand, cfg.preload)?;
    let ctx = HoldContext::free_hold(params, hand.sea, hand.orientation, hold);
    let sweep_s = scene.sweep_len / scene.sweep_speed;

    let mut sweeps = Vec::with_capacity(3);
    let mut found: Option<(usize, SweepSide, f64, &ScenePlacement)> = None;
    for (i, side) in [SweepSide::Palmar, SweepSide::Dorsal, SweepSide::Palmar]
        .into_iter()
        .enumerate()
    {
        if found.is_some() {
            break;
        }
        // Earliest object this sweep can touch.
        let hit = scene
            .objects
            .iter()
            .filter(|o| o.side == side)
            .min_by(|a, b| a.position.total_cmp(&b.position));
        let base = ctx.hold_signal(sweep_s, rate);
        let series = match hit {
            Some(o) => {
                let spec = standard_object_set()
                    .into_iter()
                    .find(|s| s.label == o.label)
                    .expect("validated against the standard set");
                let dwell =
                    (2.0 * spec.geometry.radius_at(THUMB_STATION) / scene.sweep_speed).max(0.05);
                let t_start = (o.position / scene.sweep_speed).min(sweep_s - dwell - 2.0 / rate);
                let kind = match side {
                    SweepSide::Palmar => DisturbanceKind::ForcedFlexion,
                    SweepSide::Dorsal => DisturbanceKind::ForcedExtension,
                };
                let ev = DisturbanceEvent {
                    t_start: t_start.max(0.0),
                    t_end: (t_start + dwell).min(sweep_s - 1.0 / rate),
                    kind,
                    magnitude: cfg.contact_magnitude,
                };
                inject_disturbance(&ctx, &base, &ev)?
            }
            None => base,
        };
        let det = detect_disturbance(&series.tension, hold.tension, cfg.deadband);
        let position = det.sample.map(|s| s as f64 / rate * scene.sweep_speed);
        sweeps.push(SweepEvent {
            sweep: i + 1,
            side,
            class: det.class,
            position_mm: position,
        });
        let expected = match side {
            SweepSide::Palmar => DisturbanceClass::FlexionOrSupportLoss,
            SweepSide::Dorsal => DisturbanceClass::ForcedExtension,
        };
        if det.class == expected {
            let o = hit.expect("detection implies a placed object");
            found = Some((i + 1, side, position.unwrap_or(o.position), o));
        }
    }

    let outcome = match found {
        None => BlindOutcome::ObjectNotFound { sweeps: sweeps.len() },
        Some((sweep, side, position_mm, placement)) => {
            let spec = standard_object_set()
                .into_iter()
                .find(|s| s.label == placement.label)
                .expect("validated");
            // Approach and grasp: one jittered slice grasp of the located
            // object, classified against the training data.
            let ds_cfg = DatasetConfig { seed: cfg.seed, trials: 1, ..DatasetConfig::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0xB11D);
            let sample = labeled_trial(&spec, &mut rng, hand, &ds_cfg)?;
            let knn = knn_classify_detailed(&sample.features, dataset, cfg.k)?;
            BlindOutcome::Found {
                sweep,
                side,
                behind_approach: side == SweepSide::Dorsal,
                position_mm,
                label: knn.label,
                neighbors: knn.neighbors,
                truth_label: placement.label.clone(),
                features: sample.features,
            }
        }
    };
    Ok(BlindReport { sweeps, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand() -> HandConfig {
        HandConfig::default()
    }

    fn posture_of(vals: [(f64, f64); 5]) -> PostureSnapshot {
        PostureSnapshot {
            time_s: 1.0,
            fingers: FINGER_ORDER
                .iter()
                .zip(vals.iter())
                .map(|(n, (a, b))| FingerPosture {
                    name: n.to_string(),
                    theta1: *a,
                    theta2: *b,
                })
                .collect(),
        }
    }

    #[test]
    fn extract_features_basics() {
        let zero = posture_of([(0.0, 0.0); 5]);
        let v = extract_features(&zero, &[Some(0.0), None, None, None, None]).unwrap();
        assert_eq!(v, FeatureVector::zero());

        // no distal contact anywhere → no grasp
        let err = extract_features(&zero, &[None; 5]).unwrap_err();
        assert!(matches!(err, Error::NoGrasp));

        // arity mismatch
        assert!(extract_features(&zero, &[None; 4]).is_err());

        // slope averages over contacting digits only; angles keep order
        let p = posture_of([(0.1, 0.2), (0.3, 0.4), (0.5, 0.6), (0.7, 0.8), (0.9, 0.0)]);
        let v = extract_features(&p, &[Some(2.0), None, Some(3.0), None, None]).unwrap();
        assert_eq!(v.0[..9], [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(v.avg_slope(), 2.5);

        // negative average floors at zero
        let v = extract_features(&p, &[Some(-1.0), None, None, None, None]).unwrap();
        assert_eq!(v.avg_slope(), 0.0);
    }

    fn sample(label: &str, vals: [f64; FEATURE_DIM]) -> LabeledSample {
        LabeledSample { features: FeatureVector(vals), label: label.into() }
    }

    fn point(x: f64) -> [f64; FEATURE_DIM] {
        let mut v = [0.0; FEATURE_DIM];
        v[0] = x;
        v[9] = 1.0 + x;
        v
    }

    #[test]
    fn knn_rules() {
        let data = LabeledDataset {
            samples: vec![
                sample("a", point(0.0)),
                sample("a", point(0.1)),
                sample("b", point(1.0)),
                sample("b", point(1.1)),
            ],
        };
        // exact training point, k = 1
        assert_eq!(
            knn_classify(&FeatureVector(point(0.1)), &data, 1).unwrap(),
            "a"
        );
        // 2-vs-1 majority
        let r = knn_classify_detailed(&FeatureVector(point(0.2)), &data, 3).unwrap();
        assert_eq!(r.label, "a");
        assert_eq!(r.neighbors.len(), 3);
        assert!(r.neighbors.windows(2).all(|w| w[0].distance <= w[1].distance));
        // tie (1-1 within k=2) → nearest neighbor's label
        let r = knn_classify_detailed(&FeatureVector(point(0.4)), &data, 2).unwrap();
        assert_eq!(r.label, "a");

        // errors
        assert!(matches!(
            knn_classify(&FeatureVector(point(0.0)), &LabeledDataset::default(), 3),
            Err(Error::EmptyDataset)
        ));
        assert!(knn_classify(&FeatureVector(point(0.0)), &data, 5).is_err());
        assert!(knn_classify(&FeatureVector(point(0.0)), &data, 0).is_err());
    }

    #[test]
    fn standardization_makes_classification_scale_invariant() {
        let data = LabeledDataset {
            samples: vec![
                sample("a", point(0.0)),
                sample("a", point(0.1)),
                sample("b", point(1.0)),
                sample("b", point(1.1)),
            ],
        };
        let q = FeatureVector(point(0.8));
        let base = knn_classify(&q, &data, 3).unwrap();

        // rescale one raw dimension by 1000 across training AND query:
        // z-scoring must absorb it
        let mut scaled = data.clone();
        for s in &mut scaled.samples {
            s.features.0[9] *= 1000.0;
        }
        let mut q2 = q;
        q2.0[9] *= 1000.0;
        assert_eq!(knn_classify(&q2, &scaled, 3).unwrap(), base);

        // collapsed dimension does not poison distances
        let std = Standardizer::fit(&data.samples).unwrap();
        assert!(std.std.iter().all(|s| s.is_finite() && *s > 0.0));
    }

    #[test]
    fn dataset_csv_round_trips() {
        let data = LabeledDataset {
            samples: vec![
                sample("cylinder-s-rigid", point(0.1 + 0.2)),
                sample("sphere-l-soft", point(1.0 / 3.0)),
            ],
        };
        let text = data.to_csv().unwrap();
        assert!(text.starts_with(DATASET_CSV_HEADER));
        let back = LabeledDataset::parse_csv(&text).unwrap();
        assert_eq!(back, data);

        let bad = text.replace("avg_slope", "slope");
        assert!(LabeledDataset::parse_csv(&bad).is_err());
    }

    #[test]
    fn geometry_slices_and_labels() {
        let cone = Geometry::Cone { radius_base: 20.0, radius_tip: 16.0 };
        assert_eq!(cone.radius_at(0.0), 20.0);
        assert_eq!(cone.radius_at(36.0), 16.0);
        assert_eq!(cone.radius_at(18.0), 18.0);
        let sphere = Geometry::Sphere { radius: 25.0 };
        assert!((sphere.radius_at(18.0) - 25.0).abs() < 1e-12);
        let edge = sphere.radius_at(0.0);
        assert!((edge - (25.0f64 * 25.0 - 18.0 * 18.0).sqrt()).abs() < 1e-12);

        assert_eq!(geometry_label("sphere-l-rigid"), "sphere-l");
        assert_eq!(geometry_label("cone-m-soft"), "cone-m");

        let set = standard_object_set();
        assert_eq!(set.len(), 17);
        let counts = {
            let mut c: BTreeMap<&str, usize> = BTreeMap::new();
            for s in &set {
                *c.entry(s.label.split('-').next().unwrap()).or_insert(0) += 1;
            }
            c
        };
        assert_eq!(counts["cylinder"], 6);
        assert_eq!(counts["cone"], 6);
        assert_eq!(counts["sphere"], 5);
        for s in &set {
            s.geometry.validate().unwrap();
            // every slice is in the detectable band
            for z in FINGER_STATIONS.iter().chain([THUMB_STATION].iter()) {
                let r = s.geometry.radius_at(*z);
                assert!((15.9..=28.0).contains(&r), "{}: r({z}) = {r}", s.label);
            }
        }
    }

    #[test]
    fn rigid_grasp_slope_matches_sea_constant_and_soft_stays_below_gate() {
        let hand = hand();
        let det = DetectorConfig::default_for(&hand.sea);
        // rigid sphere: every latched digit loads at the SEA constant
        let spec = ObjectSpec {
            label: "sphere-m-rigid".into(),
            geometry: Geometry::Sphere { radius: 26.5 },
            stiffness: Stiffness::Rigid,
        };
        let (posture, slopes) =
            grasp_object_slices(&spec, SLICE_CENTER, &hand, 20.0, 300).unwrap();
        let v = extract_features(&posture, &slopes).unwrap();
        assert!(
            (v.avg_slope() - hand.sea.k_sea).abs() <= 0.1 * hand.sea.k_sea,
            "avg slope {} vs k_sea {}",
            v.avg_slope(),
            hand.sea.k_sea
        );

        // soft cone: averaged slope sits below the rigidity gate
        let spec = ObjectSpec {
            label: "cone-m-soft".into(),
            geometry: Geometry::Cone { radius_base: 23.0, radius_tip: 17.5 },
            stiffness: Stiffness::Soft(SOFT_K),
        };
        let (posture, slopes) =
            grasp_object_slices(&spec, SLICE_CENTER, &hand, 20.0, 300).unwrap();
        let v = extract_features(&posture, &slopes).unwrap();
        assert!(
            v.avg_slope() < det.s_rigid,
            "soft avg slope {} vs gate {}",
            v.avg_slope(),
            det.s_rigid
        );
        assert!(v.avg_slope() > 0.5, "implausibly low slope {}", v.avg_slope());
        // all five digits contributed a slope
        assert!(slopes.iter().all(|s| s.is_some()), "{slopes:?}");
    }

    #[test]
    fn mini_dataset_classifies_and_reproduces() {
        let hand = hand();
        let objects = vec![
            ObjectSpec {
                label: "cylinder-s-rigid".into(),
                geometry: Geometry::Cylinder { radius: 17.0 },
                stiffness: Stiffness::Rigid,
            },
            ObjectSpec {
                label: "cylinder-l-rigid".into(),
                geometry: Geometry::Cylinder { radius: 25.0 },
                stiffness: Stiffness::Rigid,
            },
            ObjectSpec {
                label: "cylinder-m-soft".into(),
                geometry: Geometry::Cylinder { radius: 21.0 },
                stiffness: Stiffness::Soft(SOFT_K),
            },
        ];
        let cfg = DatasetConfig { trials: 3, seed: 11, ..DatasetConfig::default() };
        let data = generate_dataset(&objects, &hand, &cfg).unwrap();
        assert_eq!(data.len(), 9);
        assert!(data.label_counts().values().all(|&c| c == 3));

        // deterministic regeneration
        let again = generate_dataset(&objects, &hand, &cfg).unwrap();
        assert_eq!(again, data);

        // leave-1-out: every held-out trial classifies correctly (the three
        // classes differ in size or stiffness, both strong features)
        let (train, test) = split_leave_out(&data, 1);
        assert_eq!(train.len(), 6);
        assert_eq!(test.len(), 3);
        for s in &test.samples {
            let got = knn_classify(&s.features, &train, 3).unwrap();
            assert_eq!(got, s.label, "features {:?}", s.features);
        }
        let report = evaluate_hold_out(&data, 1, 3).unwrap();
        assert_eq!(report.test_trials, 3);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.geometry_consistency, 1.0);
    }

    #[test]
    fn scene_toml_round_trips_and_validates() {
        let mut scene = Scene::empty(300.0);
        scene.objects.push(ScenePlacement {
            label: "cylinder-m-rigid".into(),
            position: 120.0,
            side: SweepSide::Palmar,
        });
        scene.objects.push(ScenePlacement {
            label: "sphere-s-soft".into(),
            position: 200.0,
            side: SweepSide::Dorsal,
        });
        let text = scene.to_toml();
        let back = Scene::parse(&text).unwrap();
        assert_eq!(back, scene);

        let err = Scene::parse("sweep_len = 100.0\n[[object]]\nlabel = \"pyramid-x\"\nposition = 10.0")
            .unwrap_err();
        assert!(err.to_string().contains("standard object set"), "{err}");
        let err = Scene::parse("sweep_len = 100.0\n[[object]]\nlabel = \"cone-s-rigid\"\nposition = 400.0")
            .unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn blind_sweep_empty_scene_reports_not_found() {
        let hand = hand();
        let data = LabeledDataset {
            samples: vec![
                sample("a", point(0.0)),
                sample("a", point(0.1)),
                sample("b", point(1.0)),
            ],
        };
        let report =
            blind_sweep(&Scene::empty(200.0), &data, &hand, &BlindConfig::default()).unwrap();
        assert_eq!(report.sweeps.len(), 3);
        assert!(report
            .sweeps
            .iter()
            .all(|s| s.class == DisturbanceClass::None));
        assert_eq!(report.outcome, BlindOutcome::ObjectNotFound { sweeps: 3 });
    }

    #[test]
    fn blind_sweep_finds_palmar_and_dorsal_objects() {
        let hand = hand();
        // training data: a handful of trials of the two candidate objects
        let objects = vec![
            ObjectSpec {
                label: "cylinder-m-rigid".into(),
                geometry: Geometry::Cylinder { radius: 21.0 },
                stiffness: Stiffness::Rigid,
            },
            ObjectSpec {
                label: "cylinder-m-soft".into(),
                geometry: Geometry::Cylinder { radius: 21.0 },
                stiffness: Stiffness::Soft(SOFT_K),
            },
        ];
        let cfg = DatasetConfig { trials: 3, seed: 5, ..DatasetConfig::default() };
        let data = generate_dataset(&objects, &hand, &cfg).unwrap();

        // palmar object → sweep 1, flexion signature
        let mut scene = Scene::empty(250.0);
        scene.objects.push(ScenePlacement {
            label: "cylinder-m-rigid".into(),
            position: 100.0,
            side: SweepSide::Palmar,
        });
        let report = blind_sweep(&scene, &data, &hand, &BlindConfig::default()).unwrap();
        assert_eq!(report.sweeps.len(), 1);
        assert_eq!(report.sweeps[0].class, DisturbanceClass::FlexionOrSupportLoss);
        match &report.outcome {
            BlindOutcome::Found {
                sweep,
                side,
                behind_approach,
                position_mm,
                label,
                truth_label,
                neighbors,
                ..
            } => {
                assert_eq!(*sweep, 1);
                assert_eq!(*side, SweepSide::Palmar);
                assert!(!behind_approach);
                assert!((position_mm - 100.0).abs() < 15.0, "position {position_mm}");
                assert_eq!(label, "cylinder-m-rigid");
                assert_eq!(truth_label, "cylinder-m-rigid");
                assert_eq!(neighbors.len(), 3);
            }
            other => panic!("expected Found, got {other:?}"),
        }

        // dorsal-only object → sweep 2, extension signature, behind approach
        let mut scene = Scene::empty(250.0);
        scene.objects.push(ScenePlacement {
            label: "cylinder-m-soft".into(),
            position: 80.0,
            side: SweepSide::Dorsal,
        });
        let report = blind_sweep(&scene, &data, &hand, &BlindConfig::default()).unwrap();
        assert_eq!(report.sweeps.len(), 2);
        assert_eq!(report.sweeps[0].class, DisturbanceClass::None);
        assert_eq!(report.sweeps[1].class, DisturbanceClass::ForcedExtension);
        match &report.outcome {
            BlindOutcome::Found { sweep, side, behind_approach, label, truth_label, .. } => {
                assert_eq!(*sweep, 2);
                assert_eq!(*side, SweepSide::Dorsal);
                assert!(behind_approach);
                assert_eq!(label, "cylinder-m-soft");
                assert_eq!(truth_label, "cylinder-m-soft");
            }
            other => panic!("expected Found, got {other:?}"),
        }
    }
}
