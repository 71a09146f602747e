//! Rule-based grasp control: a per-finger phase machine plus the hand-level
//! contact-pause coordinator.
//!
//! The controller is deterministic and proprioceptive-only: each step it sees
//! one [`FingerObs`] per finger — the detector's confirmed events plus the
//! actuator's own excursion/tension — and returns one [`FingerCommand`] per
//! finger. It never looks at simulation ground truth, so it runs unchanged
//! against synthesized signals or a live plant.
//!
//! Phase flow per finger: `idle → reaching`, then under contact-pause
//! `reaching → paused` on the first confirmed contact and `paused → loading`
//! once every finger has contact; under the nominal strategy
//! `reaching → loading` directly at the distal contact. During loading the
//! first full decision window of post-distal samples classifies stiffness:
//! rigid keeps loading to the target tension and then holds, soft halts
//! immediately (force regulation), and an instability verdict halts
//! immediately at any point of loading. A finger whose excursion budget runs
//! out without contact (or before classification) settles into `holding` at
//! its final posture; this extra `reaching → holding` transition is needed so
//! free-flexed fingers still produce a posture.

use serde::{Deserialize, Serialize};

use crate::detect::{
    ls_slope, DisturbanceClass, DisturbanceDetection, DetectorConfig, StiffnessClass,
};
use crate::error::{Error, Result};
use crate::params::SeaParams;
use crate::sim::Strategy;

/// Controller tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub strategy: Strategy,
    /// Loading target for rigid objects (N); reaching it moves the finger to
    /// `holding`.
    pub target_tension: f64,
    /// Deadband for hold-phase disturbance monitoring (N).
    pub hold_deadband: f64,
    /// Post-distal samples gathered before the stiffness decision (one
    /// detector window, so the halt overshoot is bounded by one window of
    /// loading).
    pub decision_window: usize,
    /// Local slope above which loading is classified rigid (N/mm).
    pub s_rigid: f64,
    /// Local slope below which loading halts as unstable (N/mm).
    pub s_instab: f64,
}

impl ControllerConfig {
    /// Defaults consistent with [`DetectorConfig::default_for`]: 40 N rigid
    /// target, 0.3 N hold deadband, 50-sample decision window.
    pub fn default_for(sea: &SeaParams, strategy: Strategy) -> Self {
        let det = DetectorConfig::default_for(sea);
        Self {
            strategy,
            target_tension: 40.0,
            hold_deadband: 0.3,
            decision_window: det.window,
            s_rigid: det.s_rigid,
            s_instab: det.s_instab,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_tension > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target_tension = {} must be > 0",
                self.target_tension
            )));
        }
        if !(self.hold_deadband > 0.0) {
            return Err(Error::InvalidParams(format!(
                "hold_deadband = {} must be > 0",
                self.hold_deadband
            )));
        }
        if self.decision_window < 2 {
            return Err(Error::InvalidParams(format!(
                "decision_window = {} must be ≥ 2",
                self.decision_window
            )));
        }
        if !(self.s_instab > 0.0 && self.s_instab < self.s_rigid) {
            return Err(Error::InvalidParams(format!(
                "need 0 < s_instab ({}) < s_rigid ({})",
                self.s_instab, self.s_rigid
            )));
        }
        Ok(())
    }
}

/// Per-finger actuation command issued each control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FingerCommand {
    /// Keep reeling cable in.
    Advance,
    /// Hold excursion, expecting to resume.
    Pause,
    /// Hold excursion permanently for this grasp.
    Halt,
}

/// Per-finger phase of the rule-based grasp algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FingerPhase {
    Idle,
    Reaching,
    Paused,
    Loading,
    HaltedSoft,
    HaltedInstability,
    Holding,
}

impl FingerPhase {
    /// Terminal phases: the finger will not move again during this grasp.
    pub fn is_terminal(&self) -> bool {
        matches!(self, Self::HaltedSoft | Self::HaltedInstability | Self::Holding)
    }
}

impl std::fmt::Display for FingerPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Idle => "idle",
            Self::Reaching => "reaching",
            Self::Paused => "paused",
            Self::Loading => "loading",
            Self::HaltedSoft => "halted-soft",
            Self::HaltedInstability => "halted-instability",
            Self::Holding => "holding",
        };
        write!(f, "{s}")
    }
}

/// One finger's observable state at a control step: detector verdicts plus
/// actuator measurements. No ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerObs {
    /// Current commanded excursion (mm).
    pub x: f64,
    /// Measured cable tension (N).
    pub tension: f64,
    /// Samples the finger's detector has consumed.
    pub samples_seen: usize,
    /// Confirmed proximal contact event sample, if any.
    pub proximal: Option<usize>,
    /// Confirmed distal contact event sample, if any.
    pub distal: Option<usize>,
    /// The finger's excursion budget is exhausted.
    pub schedule_done: bool,
    /// Plant-side hint that a previously confirmed contact no longer bears
    /// load (e.g. the object slid away). The resume rule for this case is
    /// undefined in the source algorithm, so the finger stays paused and the
    /// anomaly is logged.
    pub contact_lost: bool,
}

impl FingerObs {
    /// Observation for a finger that has seen nothing yet.
    pub fn quiet(x: f64, tension: f64) -> Self {
        Self {
            x,
            tension,
            samples_seen: 0,
            proximal: None,
            distal: None,
            schedule_done: false,
            contact_lost: false,
        }
    }
}

/// One logged controller event (JSON-lines export).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlEvent {
    /// Control step at which the event occurred.
    pub sample: usize,
    /// Finger index.
    pub finger: usize,
    pub finger_name: String,
    #[serde(flatten)]
    pub kind: ControlEventKind,
}

/// What happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum ControlEventKind {
    PhaseChange {
        from: FingerPhase,
        to: FingerPhase,
    },
    /// Stiffness decision at the first full post-distal loading window.
    Classified {
        class: StiffnessClass,
        slope: f64,
        tension: f64,
    },
    /// Contact reported lost while paused; the finger stays paused.
    ContactAnomaly,
    /// Detector contradiction; every finger halts.
    Fault {
        reason: String,
    },
    /// Hold-phase tension left the deadband.
    DisturbanceAlarm {
        class: DisturbanceClass,
        peak_delta: f64,
    },
}

/// Per-finger posture estimate, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerPosture {
    pub name: String,
    pub theta1: f64,
    pub theta2: f64,
}

/// Hand posture assembled once every finger is halted or holding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostureSnapshot {
    /// Snapshot timestamp (s from grasp start).
    pub time_s: f64,
    pub fingers: Vec<FingerPosture>,
}

impl PostureSnapshot {
    /// CSV export: `finger,time_s,theta1_deg,theta2_deg`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("finger,time_s,theta1_deg,theta2_deg\n");
        for fp in &self.fingers {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fp.name,
                self.time_s,
                fp.theta1.to_degrees(),
                fp.theta2.to_degrees()
            ));
        }
        out
    }

    /// Parses the format written by [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty posture CSV".into()))?;
        if header.trim() != "finger,time_s,theta1_deg,theta2_deg" {
            return Err(Error::Parse(format!("unexpected posture CSV header '{header}'")));
        }
        let mut time_s = 0.0;
        let mut fingers = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!(
                    "posture CSV line {}: expected 4 columns, got {}",
                    ln + 2,
                    cols.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("posture CSV line {}: {e}", ln + 2)))
            };
            time_s = num(cols[1])?;
            fingers.push(FingerPosture {
                name: cols[0].trim().to_string(),
                theta1: num(cols[2])?.to_radians(),
                theta2: num(cols[3])?.to_radians(),
            });
        }
        Ok(Self { time_s, fingers })
    }
}

// ---------------------------------------------------------------------------
// Hand controller
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct FingerCtl {
    phase: FingerPhase,
    /// Post-distal loading samples feeding the stiffness decision.
    load_x: Vec<f64>,
    load_f: Vec<f64>,
    class: Option<StiffnessClass>,
    class_tension: Option<f64>,
    anomaly_logged: bool,
}

impl FingerCtl {
    fn fresh() -> Self {
        Self {
            phase: FingerPhase::Idle,
            load_x: Vec::new(),
            load_f: Vec::new(),
            class: None,
            class_tension: None,
            anomaly_logged: false,
        }
    }
}

/// Sequential decision loop for one hand. Deterministic given observations.
#[derive(Debug, Clone)]
pub struct HandController {
    cfg: ControllerConfig,
    names: Vec<String>,
    fingers: Vec<FingerCtl>,
    events: Vec<ControlEvent>,
    step_count: usize,
    faulted: bool,
}

impl HandController {
    pub fn new(finger_names: &[String], cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        if finger_names.is_empty() {
            return Err(Error::InvalidParams("need at least one finger".into()));
        }
        Ok(Self {
            cfg,
            names: finger_names.to_vec(),
            fingers: finger_names.iter().map(|_| FingerCtl::fresh()).collect(),
            events: Vec::new(),
            step_count: 0,
            faulted: false,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn phase(&self, f: usize) -> FingerPhase {
        self.fingers[f].phase
    }

    pub fn phases(&self) -> Vec<FingerPhase> {
        self.fingers.iter().map(|fc| fc.phase).collect()
    }

    /// True once every finger is halted or holding (or the controller
    /// faulted).
    pub fn all_settled(&self) -> bool {
        self.faulted || self.fingers.iter().all(|fc| fc.phase.is_terminal())
    }

    pub fn faulted(&self) -> bool {
        self.faulted
    }

    /// Stiffness verdict for finger `f`, once classified.
    pub fn classification(&self, f: usize) -> Option<StiffnessClass> {
        self.fingers[f].class
    }

    /// Tension at the instant finger `f` was classified (N).
    pub fn tension_at_classification(&self, f: usize) -> Option<f64> {
        self.fingers[f].class_tension
    }

    /// Control steps taken.
    pub fn steps_taken(&self) -> usize {
        self.step_count
    }

    pub fn events(&self) -> &[ControlEvent] {
        &self.events
    }

    /// Event log as JSON lines (one event per line).
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            // ControlEvent serialization cannot fail: all fields are plain data.
            out.push_str(&serde_json::to_string(ev).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    fn log(&mut self, sample: usize, finger: usize, kind: ControlEventKind) {
        self.events.push(ControlEvent {
            sample,
            finger,
            finger_name: self.names[finger].clone(),
            kind,
        });
    }

    fn transition(&mut self, sample: usize, f: usize, to: FingerPhase) {
        let from = self.fingers[f].phase;
        if from != to {
            self.fingers[f].phase = to;
            self.log(sample, f, ControlEventKind::PhaseChange { from, to });
        }
    }

    fn fault(&mut self, sample: usize, f: usize, reason: String) -> Error {
        self.faulted = true;
        self.log(sample, f, ControlEventKind::Fault { reason: reason.clone() });
        Error::DetectorFault(reason)
    }

    /// Validates one finger's detector report for internal consistency.
    fn check_obs(&mut self, sample: usize, f: usize, o: &FingerObs) -> Result<()> {
        for (kind, ev) in [("proximal", o.proximal), ("distal", o.distal)] {
            if let Some(s) = ev {
                if o.samples_seen == 0 {
                    return Err(self.fault(
                        sample,
                        f,
                        format!("{} event reported before any sample", kind),
                    ));
                }
                if s >= o.samples_seen {
                    return Err(self.fault(
                        sample,
                        f,
                        format!(
                            "{} event at sample {} but only {} samples seen",
                            kind, s, o.samples_seen
                        ),
                    ));
                }
            }
        }
        if let (Some(p), Some(d)) = (o.proximal, o.distal) {
            if d < p {
                return Err(self.fault(
                    sample,
                    f,
                    format!("distal event at {} precedes proximal event at {}", d, p),
                ));
            }
        }
        Ok(())
    }

    /// One control step: observations in, commands out.
    ///
    /// Once faulted, every subsequent step returns all-halt.
    pub fn step(&mut self, obs: &[FingerObs]) -> Result<Vec<FingerCommand>> {
        if obs.len() != self.fingers.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} observations, got {}",
                self.fingers.len(),
                obs.len()
            )));
        }
        let sample = self.step_count;
        self.step_count += 1;
        if self.faulted {
            return Ok(vec![FingerCommand::Halt; obs.len()]);
        }
        for (f, o) in obs.iter().enumerate() {
            self.check_obs(sample, f, o)?;
        }

        let all_contacted =
            obs.iter().all(|o| o.proximal.is_some() || o.distal.is_some());
        let mut cmds = Vec::with_capacity(obs.len());
        for (f, o) in obs.iter().enumerate() {
            cmds.push(self.step_finger(sample, f, o, all_contacted));
        }
        Ok(cmds)
    }

    fn step_finger(
        &mut self,
        sample: usize,
        f: usize,
        o: &FingerObs,
        all_contacted: bool,
    ) -> FingerCommand {
        use FingerCommand as C;
        use FingerPhase as P;

        if self.fingers[f].phase == P::Idle {
            self.transition(sample, f, P::Reaching);
        }
        let contact = o.proximal.is_some() || o.distal.is_some();

        match self.fingers[f].phase {
            P::Idle => unreachable!("idle handled above"),
            P::Reaching => {
                if contact {
                    match self.cfg.strategy {
                        Strategy::ContactPause if !all_contacted => {
                            self.transition(sample, f, P::Paused);
                            return C::Pause;
                        }
                        Strategy::ContactPause => {
                            self.transition(sample, f, P::Loading);
                            return self.load(sample, f, o);
                        }
                        Strategy::Nominal => {
                            if o.distal.is_some() {
                                self.transition(sample, f, P::Loading);
                                return self.load(sample, f, o);
                            }
                            // proximal wrap continues toward distal contact
                        }
                    }
                }
                if o.schedule_done {
                    self.transition(sample, f, P::Holding);
                    return C::Halt;
                }
                C::Advance
            }
            P::Paused => {
                if o.contact_lost {
                    if !self.fingers[f].anomaly_logged {
                        self.fingers[f].anomaly_logged = true;
                        self.log(sample, f, ControlEventKind::ContactAnomaly);
                    }
                    return C::Pause;
                }
                if all_contacted {
                    self.transition(sample, f, P::Loading);
                    return self.load(sample, f, o);
                }
                C::Pause
            }
            P::Loading => self.load(sample, f, o),
            P::HaltedSoft | P::HaltedInstability | P::Holding => C::Halt,
        }
    }

    /// Loading-phase logic: accumulate post-distal samples, classify at the
    /// first full decision window, then regulate.
    fn load(&mut self, sample: usize, f: usize, o: &FingerObs) -> FingerCommand {
        use FingerCommand as C;
        use FingerPhase as P;

        if o.distal.is_some() {
            let fc = &mut self.fingers[f];
            fc.load_x.push(o.x);
            fc.load_f.push(o.tension);
            let n = fc.load_x.len();
            let w = self.cfg.decision_window;

            if fc.class.is_none() && n >= w {
                // Trailing window: the first decision uses exactly the first
                // full window of loading; later retries (possible only when
                // excursion stalled, leaving the slope undefined) slide it.
                if let Some(slope) = ls_slope(&fc.load_x, &fc.load_f, n - w, n - 1) {
                    let class = if slope > self.cfg.s_rigid {
                        StiffnessClass::Rigid
                    } else if slope < self.cfg.s_instab {
                        StiffnessClass::InstabilityHalt
                    } else {
                        StiffnessClass::Soft
                    };
                    self.fingers[f].class = Some(class);
                    self.fingers[f].class_tension = Some(o.tension);
                    self.log(
                        sample,
                        f,
                        ControlEventKind::Classified { class, slope, tension: o.tension },
                    );
                    match class {
                        StiffnessClass::Soft => {
                            self.transition(sample, f, P::HaltedSoft);
                            return C::Halt;
                        }
                        StiffnessClass::InstabilityHalt => {
                            self.transition(sample, f, P::HaltedInstability);
                            return C::Halt;
                        }
                        StiffnessClass::Rigid => {}
                    }
                }
            } else if self.fingers[f].class == Some(StiffnessClass::Rigid) && n >= w {
                // Continue watching the local slope during rigid loading: a
                // collapse below s_instab halts immediately.
                let fc = &self.fingers[f];
                if let Some(slope) = ls_slope(&fc.load_x, &fc.load_f, n - w, n - 1) {
                    if slope < self.cfg.s_instab {
                        self.fingers[f].class = Some(StiffnessClass::InstabilityHalt);
                        self.fingers[f].class_tension = Some(o.tension);
                        self.log(
                            sample,
                            f,
                            ControlEventKind::Classified {
                                class: StiffnessClass::InstabilityHalt,
                                slope,
                                tension: o.tension,
                            },
                        );
                        self.transition(sample, f, P::HaltedInstability);
                        return C::Halt;
                    }
                }
            }

            if self.fingers[f].class == Some(StiffnessClass::Rigid)
                && o.tension >= self.cfg.target_tension
            {
                self.transition(sample, f, P::Holding);
                return C::Halt;
            }
        }
        if o.schedule_done {
            self.transition(sample, f, P::Holding);
            return C::Halt;
        }
        C::Advance
    }

    /// Logs a hold-phase disturbance alarm for finger `f` (call with the
    /// result of [`crate::detect::detect_disturbance`] over the hold
    /// segment). No-op for `DisturbanceClass::None`.
    pub fn record_disturbance(&mut self, f: usize, det: &DisturbanceDetection) {
        if det.class != DisturbanceClass::None {
            let sample = det.sample.unwrap_or(0);
            self.log(
                sample,
                f,
                ControlEventKind::DisturbanceAlarm {
                    class: det.class,
                    peak_delta: det.peak_delta,
                },
            );
        }
    }

    /// Assembles the hand posture from per-finger angle estimates (rad).
    ///
    /// Errors with [`Error::NotReady`] while any finger is still idle,
    /// reaching, paused, or loading.
    pub fn posture_snapshot(
        &self,
        estimates: &[(f64, f64)],
        time_s: f64,
    ) -> Result<PostureSnapshot> {
        if estimates.len() != self.fingers.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} estimates, got {}",
                self.fingers.len(),
                estimates.len()
            )));
        }
        for (f, fc) in self.fingers.iter().enumerate() {
            if !fc.phase.is_terminal() {
                return Err(Error::NotReady(format!("{} ({})", self.names[f], fc.phase)));
            }
        }
        Ok(PostureSnapshot {
            time_s,
            fingers: self
                .names
                .iter()
                .zip(estimates)
                .map(|(name, &(theta1, theta2))| FingerPosture {
                    name: name.clone(),
                    theta1,
                    theta2,
                })
                .collect(),
        })
    }
}
