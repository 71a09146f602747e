//! Declarative grasp scenarios and the closed control loop.
//!
//! A scenario TOML file places fingers around an object and sets the run
//! policy; [`run_scenario`] then wires the plant, one streaming detector per
//! finger, and the hand controller sample by sample:
//!
//! ```text
//! controller ── excursion commands ──▶ plant (winch + fingers + object)
//!      ▲                                  │ cable tension (+ sensor noise)
//!      └────── contact events ◀── detectors
//! ```
//!
//! The controller sees only what the proprioceptive pipeline provides:
//! commanded excursion, measured tension, and confirmed contact events. True
//! joint angles and contact samples exist solely in the ground-truth
//! annotations of the output bundle.
//!
//! After every finger settles, the run holds the grasp for a configurable
//! tail. During the hold a trailing-mean tension monitor watches each finger
//! for disturbances (an optional scenario block injects one), and the final
//! posture estimate is assembled from the contact events:
//! distal event → both angles from the event; proximal-only → MCP from the
//! event and PIP from the tendon-length identity at the held excursion; no
//! contact → free-flexion reference angles at the final excursion. Detectors
//! are fed during actuation only — once the hand settles, the hold monitor
//! takes over.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::HandConfig;
use crate::control::{
    ControlEvent, ControllerConfig, FingerCommand, FingerObs, FingerPhase, HandController,
    PostureSnapshot,
};
use crate::detect::{
    detect_disturbance, estimate_joint_angles, estimate_joint_angles_post_proximal,
    reference_for, DetectionReport, DetectorConfig, DisturbanceDetection, FingerDetector,
    StiffnessClass,
};
use crate::error::{Error, Result};
use crate::io::SignalBundle;
use crate::object::{ContactConstraintSet, Mobility, ObjectModel, Pins, Stiffness};
use crate::sim::{
    inject_disturbance, DisturbanceEvent, DisturbanceKind, FingerSetup, GraspPlant,
    HoldContext, SampledSignal, SimOptions, Strategy,
};
use crate::solver::SolveConfig;

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

/// One finger's placement within a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerPlacement {
    pub name: String,
    /// Parameter set: a config catalog entry or built-in variant name.
    pub params: String,
    /// Finger base in the hand frame (mm).
    pub base: [f64; 2],
    /// Base rotation (rad).
    pub base_angle: f64,
    /// Mirrored fingers flex toward −y (opposing digits).
    pub mirrored: bool,
    /// Samples to wait before this finger starts reaching.
    pub start_delay: usize,
    /// Per-finger excursion budget override (mm).
    pub x_max: Option<f64>,
}

impl FingerPlacement {
    pub fn inline(name: &str, params: &str) -> Self {
        Self {
            name: name.into(),
            params: params.into(),
            base: [0.0, 0.0],
            base_angle: 0.0,
            mirrored: false,
            start_delay: 0,
            x_max: None,
        }
    }
}

/// A hold-phase disturbance to inject after the grasp settles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    /// Onset, seconds into the hold phase.
    pub at_s: f64,
    pub duration_s: f64,
    /// Peak imposed joint delta (rad); ignored by support loss.
    pub magnitude: f64,
}

/// A complete grasp scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspScenario {
    pub name: String,
    pub strategy: Strategy,
    /// Sample rate (Hz).
    pub rate: f64,
    /// Default per-finger excursion budget (mm).
    pub x_max: f64,
    /// Hold duration after the hand settles (s).
    pub hold_s: f64,
    pub object: ObjectModel,
    pub fingers: Vec<FingerPlacement>,
    /// Tension sensor noise σ (N); 0 disables the noise path entirely.
    pub noise_sigma: f64,
    pub seed: u64,
    pub disturbance: Option<DisturbanceSpec>,
}

impl GraspScenario {
    /// Single late-PIP finger wrapping a palm-side object: proximal then
    /// distal contact.
    pub fn wrap_rigid() -> Self {
        Self {
            name: "wrap-rigid".into(),
            strategy: Strategy::Nominal,
            rate: 1000.0,
            x_max: 20.0,
            hold_s: 0.5,
            object: ObjectModel::rigid_fixed([8.6, 44.7], 25.0),
            fingers: vec![FingerPlacement::inline("index", "two-joint-late-pip")],
            noise_sigma: 0.0,
            seed: 1,
            disturbance: None,
        }
    }

    /// The wrap scenario against a compliant object.
    ///
    /// Note the online detectability floor: after a proximal wrap, the
    /// offset-corrected RMSE scan only confirms a distal event whose slope
    /// change exceeds roughly `r_dist·√3 / (window · step)` ≈ 1.2 N/mm with
    /// the default thresholds. Softer contacts (k ≲ 0.6 N/mm here) never
    /// produce an online distal event; their stiffness is still measurable
    /// offline from the recorded signal with a truth- or operator-supplied
    /// contact anchor. The built-in variant uses k = 1.0 N/mm, which the
    /// online path classifies.
    pub fn wrap_soft(k_obj: f64) -> Self {
        let mut sc = Self::wrap_rigid();
        sc.name = "wrap-soft".into();
        sc.object = ObjectModel::soft_fixed([8.6, 44.7], 25.0, k_obj);
        sc.x_max = 24.0;
        sc
    }

    /// Fingertip-first poke: distal contact without a proximal event.
    pub fn poke_rigid() -> Self {
        Self {
            name: "poke-rigid".into(),
            strategy: Strategy::Nominal,
            rate: 1000.0,
            x_max: 10.0,
            hold_s: 0.5,
            object: ObjectModel::rigid_fixed([60.0, 35.0], 22.0),
            fingers: vec![FingerPlacement::inline("index", "two-joint-late-pip")],
            noise_sigma: 0.0,
            seed: 1,
            disturbance: None,
        }
    }

    /// Two opposed fingers around a sliding object, second finger delayed:
    /// the contact-pause strategy keeps the early finger from shoving the
    /// object away before the late one arrives.
    pub fn pause_demo() -> Self {
        let mut late = FingerPlacement::inline("thumb-side", "two-joint-late-pip");
        late.base = [0.0, 40.0];
        late.mirrored = true;
        late.start_delay = 400;
        Self {
            name: "pause-demo".into(),
            strategy: Strategy::ContactPause,
            rate: 1000.0,
            x_max: 15.0,
            hold_s: 0.3,
            object: ObjectModel {
                center: [40.0, 20.0],
                radius: 16.0,
                stiffness: Stiffness::Rigid,
                mobility: Mobility::Line { dir: [0.0, 1.0], breakaway: 1.0 },
            },
            fingers: vec![FingerPlacement::inline("index", "two-joint-late-pip"), late],
            noise_sigma: 0.0,
            seed: 1,
            disturbance: None,
        }
    }

    /// Three digits (two fingers and an opposing single-joint thumb) closing
    /// on a rigid object.
    pub fn hand_wrap() -> Self {
        let index = FingerPlacement::inline("index", "two-joint-late-pip");
        let mut middle = FingerPlacement::inline("middle", "two-joint-early-pip");
        middle.base = [15.0, 0.0];
        let mut thumb = FingerPlacement::inline("thumb", "thumb");
        thumb.base = [0.0, 48.0];
        thumb.mirrored = true;
        Self {
            name: "hand-wrap".into(),
            strategy: Strategy::Nominal,
            rate: 1000.0,
            x_max: 20.0,
            hold_s: 0.3,
            object: ObjectModel::rigid_fixed([45.0, 22.0], 15.0),
            fingers: vec![index, middle, thumb],
            noise_sigma: 0.0,
            seed: 1,
            disturbance: None,
        }
    }

    /// Built-in scenario by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "wrap-rigid" => Some(Self::wrap_rigid()),
            "wrap-soft" => Some(Self::wrap_soft(1.0)),
            "poke-rigid" => Some(Self::poke_rigid()),
            "pause-demo" => Some(Self::pause_demo()),
            "hand-wrap" => Some(Self::hand_wrap()),
            _ => None,
        }
    }

    /// Names accepted by [`GraspScenario::builtin`].
    pub const BUILTIN_NAMES: [&'static str; 5] =
        ["wrap-rigid", "wrap-soft", "poke-rigid", "pause-demo", "hand-wrap"];

    pub fn validate(&self) -> Result<()> {
        if self.fingers.is_empty() {
            return Err(Error::Config("scenario needs at least one finger".into()));
        }
        for (i, a) in self.fingers.iter().enumerate() {
            if a.name.is_empty() {
                return Err(Error::Config(format!("finger {i} has an empty name")));
            }
            for b in &self.fingers[i + 1..] {
                if a.name == b.name {
                    return Err(Error::Config(format!("duplicate finger name '{}'", a.name)));
                }
            }
            if let Some(x) = a.x_max {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(Error::Config(format!(
                        "finger '{}': x_max {x} must be positive",
                        a.name
                    )));
                }
            }
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::Config(format!("rate {} must be positive", self.rate)));
        }
        if !(self.x_max > 0.0) || !self.x_max.is_finite() {
            return Err(Error::Config(format!("x_max {} must be positive", self.x_max)));
        }
        if !(self.hold_s >= 0.0) || !self.hold_s.is_finite() {
            return Err(Error::Config(format!("hold_s {} must be ≥ 0", self.hold_s)));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise sigma {} must be ≥ 0",
                self.noise_sigma
            )));
        }
        self.object
            .validate()
            .map_err(|e| Error::Config(format!("object: {e}")))?;
        if let Some(d) = &self.disturbance {
            if !(d.at_s >= 0.0) || !(d.duration_s > 0.0) || !(d.magnitude >= 0.0) {
                return Err(Error::Config(
                    "disturbance needs at_s ≥ 0, duration_s > 0, magnitude ≥ 0".into(),
                ));
            }
            if d.at_s + d.duration_s >= self.hold_s {
                return Err(Error::Config(format!(
                    "disturbance window [{}, {}] s does not fit inside the {} s hold",
                    d.at_s,
                    d.at_s + d.duration_s,
                    self.hold_s
                )));
            }
        }
        Ok(())
    }

    /// Parses a scenario TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let sc = file.into_scenario()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to TOML; the output parses to an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&ScenarioFile::from_scenario(self)).expect("scenario serializes")
    }
}

// ---------------------------------------------------------------------------
// Scenario TOML schema (degrees at the file boundary)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hold_s: Option<f64>,
    object: ObjectFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseFile>,
    #[serde(rename = "finger", default, skip_serializing_if = "Vec::is_empty")]
    fingers: Vec<FingerPlacementFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    disturbance: Option<DisturbanceFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    center: [f64; 2],
    radius: f64,
    /// `"rigid"` or a contact spring constant (N/mm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stiffness: Option<StiffnessFile>,
    /// Absent = fixed in place.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mobility: Option<MobilityFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StiffnessFile {
    Named(String),
    Spring(f64),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MobilityFile {
    dir: [f64; 2],
    breakaway: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerPlacementFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mirrored: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_delay: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceFile {
    kind: DisturbanceKind,
    at_s: f64,
    duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    magnitude_deg: Option<f64>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<GraspScenario> {
        let stiffness = match self.object.stiffness {
            None => Stiffness::Rigid,
            Some(StiffnessFile::Named(s)) if s == "rigid" => Stiffness::Rigid,
            Some(StiffnessFile::Named(s)) => {
                return Err(Error::Config(format!(
                    "object stiffness '{s}' not recognized (use \"rigid\" or a spring constant)"
                )));
            }
            Some(StiffnessFile::Spring(k)) => Stiffness::Soft(k),
        };
        let mobility = match self.object.mobility {
            None => Mobility::Fixed,
            Some(m) => Mobility::Line { dir: m.dir, breakaway: m.breakaway },
        };
        let object = ObjectModel {
            center: self.object.center,
            radius: self.object.radius,
            stiffness,
            mobility,
        };
        let fingers = self
            .fingers
            .into_iter()
            .map(|f| FingerPlacement {
                name: f.name,
                params: f.params.unwrap_or_else(|| "two-joint-late-pip".into()),
                base: f.base.unwrap_or([0.0, 0.0]),
                base_angle: f.base_angle_deg.unwrap_or(0.0).to_radians(),
                mirrored: f.mirrored.unwrap_or(false),
                start_delay: f.start_delay.unwrap_or(0),
                x_max: f.x_max,
            })
            .collect();
        let noise = self.noise.unwrap_or(NoiseFile { sigma: None, seed: None });
        Ok(GraspScenario {
            name: self.name.unwrap_or_else(|| "scenario".into()),
            strategy: self.strategy.unwrap_or(Strategy::Nominal),
            rate: self.rate.unwrap_or(1000.0),
            x_max: self.x_max.unwrap_or(20.0),
            hold_s: self.hold_s.unwrap_or(0.5),
            object,
            fingers,
            noise_sigma: noise.sigma.unwrap_or(0.0),
            seed: noise.seed.unwrap_or(1),
            disturbance: self.disturbance.map(|d| DisturbanceSpec {
                kind: d.kind,
                at_s: d.at_s,
                duration_s: d.duration_s,
                magnitude: d.magnitude_deg.unwrap_or(0.0).to_radians(),
            }),
        })
    }

    fn from_scenario(sc: &GraspScenario) -> Self {
        Self {
            name: Some(sc.name.clone()),
            strategy: Some(sc.strategy),
            rate: Some(sc.rate),
            x_max: Some(sc.x_max),
            hold_s: Some(sc.hold_s),
            object: ObjectFile {
                center: sc.object.center,
                radius: sc.object.radius,
                stiffness: Some(match sc.object.stiffness {
                    Stiffness::Rigid => StiffnessFile::Named("rigid".into()),
                    Stiffness::Soft(k) => StiffnessFile::Spring(k),
                }),
                mobility: match sc.object.mobility {
                    Mobility::Fixed => None,
                    Mobility::Line { dir, breakaway } => {
                        Some(MobilityFile { dir, breakaway })
                    }
                },
            },
            noise: Some(NoiseFile { sigma: Some(sc.noise_sigma), seed: Some(sc.seed) }),
            fingers: sc
                .fingers
                .iter()
                .map(|f| FingerPlacementFile {
                    name: f.name.clone(),
                    params: Some(f.params.clone()),
                    base: Some(f.base),
                    base_angle_deg: Some(f.base_angle.to_degrees()),
                    mirrored: Some(f.mirrored),
                    start_delay: Some(f.start_delay),
                    x_max: f.x_max,
                })
                .collect(),
            disturbance: sc.disturbance.map(|d| DisturbanceFile {
                kind: d.kind,
                at_s: d.at_s,
                duration_s: d.duration_s,
                magnitude_deg: Some(d.magnitude.to_degrees()),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-loop run
// ---------------------------------------------------------------------------

/// Everything a closed-loop run produced.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: GraspScenario,
    /// Measured signals (what the pipeline saw) with ground-truth sidecar data.
    pub bundle: SignalBundle,
    /// Offline detection summary per finger, over the actuation phase.
    pub detections: Vec<DetectionReport>,
    pub events: Vec<ControlEvent>,
    pub final_phases: Vec<FingerPhase>,
    /// Controller stiffness verdicts per finger.
    pub classifications: Vec<Option<StiffnessClass>>,
    /// Estimated posture; `None` when the controller faulted.
    pub posture: Option<PostureSnapshot>,
    /// True joint angles at settle, per finger (rad).
    pub posture_truth: Vec<(f64, f64)>,
    /// Hold-phase monitor verdict per finger.
    pub disturbances: Vec<DisturbanceDetection>,
    /// Sample index the hold phase started at (= settle sample count).
    pub hold_start: Option<usize>,
    pub samples: usize,
    pub faulted: bool,
}

/// Per-finger summary line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSummary {
    pub name: String,
    pub phase: String,
    pub classification: Option<StiffnessClass>,
    pub tension_at_classification: Option<f64>,
    pub contact_events: usize,
    pub theta1_est_deg: Option<f64>,
    pub theta2_est_deg: Option<f64>,
    pub theta1_true_deg: f64,
    pub theta2_true_deg: f64,
    pub disturbance: DisturbanceDetection,
}

/// JSON-exportable run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub noise_sigma: f64,
    pub samples: usize,
    pub hold_start: Option<usize>,
    pub faulted: bool,
    pub fingers: Vec<FingerSummary>,
}

impl ScenarioRun {
    pub fn summary(&self) -> RunSummary {
        let fingers = self
            .scenario
            .fingers
            .iter()
            .enumerate()
            .map(|(f, pl)| {
                let est = self
                    .posture
                    .as_ref()
                    .map(|p| (p.fingers[f].theta1, p.fingers[f].theta2));
                FingerSummary {
                    name: pl.name.clone(),
                    phase: self.final_phases[f].to_string(),
                    classification: self.classifications[f],
                    tension_at_classification: self
                        .events
                        .iter()
                        .find_map(|e| match &e.kind {
                            crate::control::ControlEventKind::Classified {
                                tension, ..
                            } if e.finger == f => Some(*tension),
                            _ => None,
                        }),
                    contact_events: self.detections[f].events.len(),
                    theta1_est_deg: est.map(|(a, _)| a.to_degrees()),
                    theta2_est_deg: est.map(|(_, b)| b.to_degrees()),
                    theta1_true_deg: self.posture_truth[f].0.to_degrees(),
                    theta2_true_deg: self.posture_truth[f].1.to_degrees(),
                    disturbance: self.disturbances[f],
                }
            })
            .collect();
        RunSummary {
            scenario: self.scenario.name.clone(),
            strategy: self.scenario.strategy,
            seed: self.scenario.seed,
            noise_sigma: self.scenario.noise_sigma,
            samples: self.samples,
            hold_start: self.hold_start,
            faulted: self.faulted,
            fingers,
        }
    }
}

/// Trailing mean over at most `w` samples, one value per sample.
fn trailing_mean(series: &[f64], w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= w {
            acc -= series[i - w];
        }
        out.push(acc / (i.min(w - 1) + 1) as f64);
    }
    out
}

/// Runs a scenario closed-loop against the given hand configuration.
pub fn run_scenario(sc: &GraspScenario, cfg: &HandConfig) -> Result<ScenarioRun> {
    sc.validate()?;
    cfg.sea.validate()?;
    cfg.orientation.validate()?;

    let nf = sc.fingers.len();
    let dx = cfg.sea.cable_speed / sc.rate;
    let solve = SolveConfig::default();
    let det_cfg = DetectorConfig::default_for(&cfg.sea);
    let ctl_cfg = ControllerConfig::default_for(&cfg.sea, sc.strategy);

    // Resolve placements against the parameter catalog.
    let mut setups = Vec::with_capacity(nf);
    let mut budgets = Vec::with_capacity(nf);
    let mut delays = Vec::with_capacity(nf);
    for pl in &sc.fingers {
        let params = cfg.finger(&pl.params)?;
        setups.push(FingerSetup {
            name: pl.name.clone(),
            params,
            base: pl.base,
            base_angle: pl.base_angle,
            mirrored: pl.mirrored,
        });
        budgets.push(pl.x_max.unwrap_or(sc.x_max));
        delays.push(pl.start_delay);
    }
    let names: Vec<String> = sc.fingers.iter().map(|p| p.name.clone()).collect();

    let opts = SimOptions { rate: sc.rate, solve: solve.clone(), ..SimOptions::default() };
    let mut plant = GraspPlant::new(&setups, &sc.object, &cfg.sea, &cfg.orientation, &opts)?;
    let mut controller = HandController::new(&names, ctl_cfg.clone())?;

    // Per-finger free-flexion reference (in the finger's own gravity frame)
    // and streaming detector.
    let mut references = Vec::with_capacity(nf);
    let mut detectors = Vec::with_capacity(nf);
    for (f, setup) in setups.iter().enumerate() {
        let local = setup.orient_local(&cfg.orientation);
        let reference = reference_for(&setup.params, &cfg.sea, &local, &solve, budgets[f])?;
        detectors.push(FingerDetector::new(
            reference.clone(),
            det_cfg.clone(),
            setup.params.clone(),
            cfg.sea,
        )?);
        references.push(reference);
    }

    // Deterministic per-finger sensor noise: one ChaCha stream per finger.
    let noise = if sc.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, sc.noise_sigma)
                .map_err(|e| Error::InvalidParams(format!("noise distribution: {e}")))?,
        )
    } else {
        None
    };
    let mut rngs: Vec<ChaCha8Rng> = (0..nf)
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            rng.set_stream(f as u64);
            rng
        })
        .collect();

    // Recorded series.
    let mut x_rec: Vec<Vec<f64>> = vec![Vec::new(); nf];
    let mut f_rec: Vec<Vec<f64>> = vec![Vec::new(); nf];
    let mut th1_rec: Vec<Vec<f64>> = vec![Vec::new(); nf];
    let mut th2_rec: Vec<Vec<f64>> = vec![Vec::new(); nf];
    let mut object_s_rec: Vec<f64> = Vec::new();
    let mut clean_last = vec![0.0f64; nf];

    let mut xs = vec![0.0f64; nf];
    let mut obs: Vec<FingerObs> = (0..nf)
        .map(|f| FingerObs::quiet(0.0, plant.state(f).tension))
        .collect();
    let mut escaped_at: Option<usize> = None;
    let mut t = 0usize;
    let cap: usize = delays
        .iter()
        .zip(&budgets)
        .map(|(d, b)| d + (b / dx).ceil() as usize + 2_000)
        .sum::<usize>()
        + 10_000;

    // ---- actuation phase -------------------------------------------------
    while !controller.all_settled() {
        if t >= cap {
            return Err(Error::Infeasible(format!(
                "scenario '{}' did not settle within {cap} samples",
                sc.name
            )));
        }
        let cmds = controller.step(&obs)?;
        if controller.faulted() {
            break;
        }
        for f in 0..nf {
            if matches!(cmds[f], FingerCommand::Advance) && t >= delays[f] {
                xs[f] = (xs[f] + dx).min(budgets[f]);
            }
        }
        let rec = plant.tick(&xs)?;
        object_s_rec.push(rec.object_s);
        for f in 0..nf {
            let clean = rec.fingers[f].tension;
            clean_last[f] = clean;
            let measured = match &noise {
                Some(n) => clean + n.sample(&mut rngs[f]),
                None => clean,
            };
            detectors[f].push(xs[f], measured)?;
            x_rec[f].push(xs[f]);
            f_rec[f].push(measured);
            th1_rec[f].push(rec.fingers[f].theta1);
            th2_rec[f].push(rec.fingers[f].theta2);
            obs[f] = FingerObs {
                x: xs[f],
                tension: measured,
                samples_seen: detectors[f].samples_seen(),
                proximal: detectors[f].proximal_event().map(|e| e.sample),
                distal: detectors[f].distal_event().map(|e| e.sample),
                schedule_done: xs[f] >= budgets[f] - 1e-9,
                contact_lost: rec.escaped && detectors[f].contact_confirmed(),
            };
        }
        t += 1;
        if rec.escaped {
            escaped_at = Some(t - 1);
            break;
        }
    }
    let faulted = controller.faulted();
    let settled = !faulted && escaped_at.is_none();
    let hold_start = settled.then_some(t);
    let posture_truth: Vec<(f64, f64)> = (0..nf)
        .map(|f| {
            let n = th1_rec[f].len();
            if n == 0 {
                (0.0, 0.0)
            } else {
                (th1_rec[f][n - 1], th2_rec[f][n - 1])
            }
        })
        .collect();

    // Resolve any classification the end of actuation cut short, so the
    // offline report reflects everything the record supports.
    for det in detectors.iter_mut() {
        det.finish()?;
    }

    // ---- posture estimate -------------------------------------------------
    let tail_w = det_cfg.window;
    let mut estimates: Vec<(f64, f64)> = Vec::with_capacity(nf);
    for f in 0..nf {
        let n = x_rec[f].len();
        let (x_end, f_tail) = if n == 0 {
            (0.0, 0.0)
        } else {
            let w = tail_w.min(n);
            (x_rec[f][n - 1], f_rec[f][n - w..].iter().sum::<f64>() / w as f64)
        };
        let est = match (detectors[f].distal_event(), detectors[f].proximal_event()) {
            (Some(d), _) => (d.theta1, d.theta2),
            (None, Some(p)) if setups[f].params.is_single_joint() => (p.theta1, 0.0),
            (None, Some(p)) => estimate_joint_angles_post_proximal(
                x_end,
                f_tail,
                p.theta1,
                &setups[f].params,
                &cfg.sea,
            )?,
            (None, None) => estimate_joint_angles(x_end.min(budgets[f]), &references[f])?,
        };
        estimates.push(est);
    }
    let posture = if settled {
        Some(controller.posture_snapshot(&estimates, t as f64 / sc.rate)?)
    } else {
        None
    };

    // ---- hold phase --------------------------------------------------------
    let hold_n = (sc.hold_s * sc.rate).round() as usize;
    let mut clamped = vec![false; nf];
    let mut windows: Vec<Vec<crate::sim::DisturbanceWindow>> = vec![Vec::new(); nf];
    let mut disturbances =
        vec![
            DisturbanceDetection {
                class: crate::detect::DisturbanceClass::None,
                sample: None,
                peak_delta: 0.0,
            };
            nf
        ];
    if settled && hold_n > 0 {
        for f in 0..nf {
            let hold_state = plant.state(f).clone();
            let (prox_t, dist_t) = plant.touch_samples(f);
            let ctx = HoldContext {
                params: setups[f].params.clone(),
                sea: cfg.sea,
                orient: setups[f].orient_local(&cfg.orientation),
                cons: ContactConstraintSet {
                    circle: plant
                        .touched(f)
                        .then(|| setups[f].circle_local(&sc.object, plant.object_s())),
                    pins: Pins {
                        theta1: prox_t.or(dist_t).map(|_| hold_state.theta1),
                        theta2: dist_t.map(|_| hold_state.theta2),
                    },
                    ..ContactConstraintSet::free()
                },
                hold: hold_state,
                solve: solve.clone(),
            };
            let base = ctx.hold_signal(sc.hold_s, sc.rate);
            let held = match &sc.disturbance {
                Some(d) if plant.touched(f) => {
                    let ev = DisturbanceEvent {
                        t_start: d.at_s,
                        t_end: d.at_s + d.duration_s,
                        kind: d.kind,
                        magnitude: d.magnitude,
                    };
                    inject_disturbance(&ctx, &base, &ev)?
                }
                _ => base,
            };
            clamped[f] = held.truth.clamped_disturbance;
            for w in &held.truth.disturbance_windows {
                windows[f].push(crate::sim::DisturbanceWindow {
                    start: w.start + t,
                    end: w.end + t,
                    kind: w.kind,
                });
            }
            let mut measured_hold = Vec::with_capacity(hold_n);
            for i in 0..held.len() {
                let m = match &noise {
                    Some(nrm) => held.tension[i] + nrm.sample(&mut rngs[f]),
                    None => held.tension[i],
                };
                measured_hold.push(m);
                x_rec[f].push(held.x[i]);
                th1_rec[f].push(held.truth.theta1[i]);
                th2_rec[f].push(held.truth.theta2[i]);
            }

            // Hold monitor: trailing-mean smoothing knocks sensor noise far
            // below the deadband, then the baseline is the first smoothed
            // window's end value.
            let w = tail_w.min(measured_hold.len()).max(1);
            let smoothed = trailing_mean(&measured_hold, w);
            let baseline = smoothed[w - 1];
            let mut det = detect_disturbance(&smoothed, baseline, ctl_cfg.hold_deadband);
            if let Some(s) = det.sample.as_mut() {
                *s += t;
            }
            disturbances[f] = det;
            controller.record_disturbance(f, &det);
            f_rec[f].extend(measured_hold);
        }
        let s_end = object_s_rec.last().copied().unwrap_or(0.0);
        object_s_rec.extend(std::iter::repeat(s_end).take(hold_n));
    }

    // ---- assemble outputs --------------------------------------------------
    let samples = x_rec.first().map(|v| v.len()).unwrap_or(0);
    let mut fingers_out = Vec::with_capacity(nf);
    let mut detections = Vec::with_capacity(nf);
    for f in 0..nf {
        let (prox, dist) = plant.touch_samples(f);
        let ended_early = if let Some(s) = escaped_at {
            Some(format!("object escaped workspace at sample {s}"))
        } else if faulted {
            Some("controller fault".into())
        } else {
            None
        };
        let truth = crate::sim::GroundTruth {
            prox_contact_sample: prox,
            dist_contact_sample: dist,
            theta1: th1_rec[f].clone(),
            theta2: th2_rec[f].clone(),
            disturbance_windows: windows[f].clone(),
            clamped_disturbance: clamped[f],
            ended_early,
        };
        let signal = SampledSignal {
            rate: sc.rate,
            x: x_rec[f].clone(),
            tension: f_rec[f].clone(),
            truth,
        };
        // Detection is summarized over the actuation phase only: the hold
        // monitor owns everything after settle.
        let act = hold_start.unwrap_or(x_rec[f].len()).min(x_rec[f].len());
        let act_signal = SampledSignal {
            rate: sc.rate,
            x: x_rec[f][..act].to_vec(),
            tension: f_rec[f][..act].to_vec(),
            truth: Default::default(),
        };
        detections.push(DetectionReport::assemble(
            &names[f],
            &act_signal,
            detectors[f].events(),
            &det_cfg,
        )?);
        fingers_out.push((names[f].clone(), signal));
    }

    let bundle = SignalBundle { rate: sc.rate, fingers: fingers_out, object_s: object_s_rec };
    let classifications = (0..nf).map(|f| controller.classification(f)).collect();
    Ok(ScenarioRun {
        scenario: sc.clone(),
        bundle,
        detections,
        events: controller.events().to_vec(),
        final_phases: controller.phases(),
        classifications,
        posture,
        posture_truth,
        disturbances,
        hold_start,
        samples,
        faulted,
    })
}
