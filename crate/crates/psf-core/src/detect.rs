//! Proprioceptive estimation stack: free-flexion reference comparison,
//! sliding-window RMSE contact detection, contact-type classification,
//! joint-angle estimation, slope metrics, stiffness classification, and
//! disturbance detection — everything the hand infers from cable tension
//! alone.
//!
//! The online [`FingerDetector`] consumes one `(x, tension)` sample at a
//! time and is the single implementation of the detection rules; the batch
//! [`detect_contacts`] simply replays a recorded signal through it, so the
//! closed-loop controller and offline analysis can never disagree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FingerParams, HandOrientation, SeaParams};
use crate::sim::SampledSignal;
use crate::solver::{excursion_schedule, free_flexion_profile, SolveConfig, Trajectory};

/// Minimum excursion advance that counts as "the actuator is loading"
/// (mm). Pauses and holds keep x constant to machine precision, so any
/// epsilon well below one schedule step works.
const PROGRESS_EPS: f64 = 1e-9;

/// RMSE at or below this is "fully explained by the reference" (N): far
/// above clean solver noise (~1e-9), far below any real contact deviation
/// or sensor noise floor, so the onset clamp engages only on clean records.
const ZERO_RMSE_EPS: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Detection thresholds and window geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Sliding-window length (samples).
    pub window: usize,
    /// Sample rate (Hz); must match the signal under analysis.
    pub rate: f64,
    /// RMSE threshold for the first contact search (N).
    pub r_prox: f64,
    /// RMSE threshold for the post-proximal distal search (N).
    pub r_dist: f64,
    /// Slope separating proximal (<) from distal (≥) first contacts (N/mm).
    pub s_load: f64,
    /// Local slope above which a loaded contact classifies rigid (N/mm).
    pub s_rigid: f64,
    /// Local slope below which loading is flagged unstable (N/mm).
    pub s_instab: f64,
    /// Wait between a detected crossing and its slope evaluation (s of
    /// *loading* time: paused samples do not count).
    pub slope_delay: f64,
    /// Consecutive above-threshold window positions required to confirm a
    /// crossing. 1 reproduces the bare first-crossing rule; the default 8
    /// rejects single-sample offset-alignment outliers under sensor noise
    /// while the event stays anchored at the run's first window.
    pub confirm_windows: usize,
}

impl DetectorConfig {
    /// Defaults for a given SEA: thresholds that are pure design constants
    /// plus the SEA-derived rigidity gate `s_rigid = 0.8·k_sea`.
    pub fn default_for(sea: &SeaParams) -> Self {
        Self {
            window: 50,
            rate: 1000.0,
            r_prox: 0.4,
            r_dist: 1.0,
            s_load: 2.0,
            s_rigid: 0.8 * sea.k_sea,
            s_instab: 0.05,
            slope_delay: 0.075,
            confirm_windows: 8,
        }
    }

    pub fn validate(&self, k_sea: f64) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParams(format!(
                "detector window = {} must be ≥ 2 samples",
                self.window
            )));
        }
        if !(self.rate > 0.0) {
            return Err(Error::InvalidParams(format!("rate = {} must be > 0", self.rate)));
        }
        for (name, v) in [
            ("r_prox", self.r_prox),
            ("r_dist", self.r_dist),
            ("s_load", self.s_load),
            ("s_rigid", self.s_rigid),
            ("s_instab", self.s_instab),
            ("slope_delay", self.slope_delay),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.s_instab < self.s_rigid) {
            return Err(Error::InvalidParams(format!(
                "s_instab = {} must be < s_rigid = {}",
                self.s_instab, self.s_rigid
            )));
        }
        if !(self.s_rigid <= k_sea) {
            return Err(Error::InvalidParams(format!(
                "s_rigid = {} must be ≤ k_sea = {} (no quasi-static slope can exceed it)",
                self.s_rigid, k_sea
            )));
        }
        if self.confirm_windows == 0 {
            return Err(Error::InvalidParams("confirm_windows must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Slope-evaluation delay in loading samples.
    fn delay_samples(&self) -> usize {
        ((self.slope_delay * self.rate).round() as usize).max(1)
    }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// Which phalanx a detected contact is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactKind {
    Proximal,
    Distal,
}

/// A confirmed contact with its estimated configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub kind: ContactKind,
    /// Sample the event is assigned to: the midpoint of the first window of
    /// the confirmed threshold crossing, clamped to the first sample not
    /// fully explained by the reference (contact evidence cannot predate the
    /// last zero-deviation window, so a sharp onset detected by a window's
    /// leading edge is never assigned before the contact itself).
    pub sample: usize,
    /// Contact excursion (mm).
    pub x_c: f64,
    /// Estimated MCP flexion at contact (rad).
    pub theta1: f64,
    /// Estimated PIP flexion at contact (rad).
    pub theta2: f64,
}

// ---------------------------------------------------------------------------
// Sliding-window RMSE
// ---------------------------------------------------------------------------

/// RMSE of the signal against the free-flexion reference, one value per
/// window start position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSeries {
    pub window: usize,
    /// `values[i]` covers samples `[i, i + window)`. `None` marks a skipped
    /// window (some sample's excursion fell outside the reference range).
    pub values: Vec<Option<f64>>,
}

impl RmseSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample index a crossing at window position `pos` is assigned to.
    pub fn midpoint_sample(&self, pos: usize) -> usize {
        pos + self.window / 2
    }
}

/// Offset-corrected RMSE of one window: the window is shifted so its first
/// sample agrees with the reference at that excursion, then compared
/// pointwise. Returns `None` when any excursion is outside the reference.
fn window_rmse(
    xs: &[f64],
    fs: &[f64],
    start: usize,
    window: usize,
    reference: &Trajectory,
) -> Option<f64> {
    let offset = fs[start] - reference.tension_at(xs[start]).ok()?;
    let mut acc = 0.0;
    for j in start..start + window {
        let r = fs[j] - offset - reference.tension_at(xs[j]).ok()?;
        acc += r * r;
    }
    Some((acc / window as f64).sqrt())
}

/// Sliding-window RMSE series of a signal against its free-flexion
/// reference. Windows that leave the reference's excursion range are
/// reported as `None` rather than failing the whole series.
pub fn rmse_series(
    signal: &SampledSignal,
    reference: &Trajectory,
    cfg: &DetectorConfig,
) -> Result<RmseSeries> {
    if (signal.rate - cfg.rate).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "signal rate {} Hz does not match detector rate {} Hz",
            signal.rate, cfg.rate
        )));
    }
    let n = signal.len();
    if n < cfg.window {
        return Ok(RmseSeries { window: cfg.window, values: Vec::new() });
    }
    let values = (0..=n - cfg.window)
        .map(|start| window_rmse(&signal.x, &signal.tension, start, cfg.window, reference))
        .collect();
    Ok(RmseSeries { window: cfg.window, values })
}

// ---------------------------------------------------------------------------
// Joint-angle estimation
// ---------------------------------------------------------------------------

/// Joint angles read off the free-flexion reference at excursion `x_c`
/// (linear interpolation between solved grid nodes).
pub fn estimate_joint_angles(x_c: f64, reference: &Trajectory) -> Result<(f64, f64)> {
    let st = reference.interp_at(x_c)?;
    Ok((st.theta1, st.theta2))
}

/// Post-proximal estimation: with the MCP held at its contact value, the
/// tendon-length identity `x = ℓ + F/k_sea` is inverted exactly for ℓ and
/// the excursion beyond the proximal phalanx attributed to the PIP:
/// `θ2 = (ℓ − r1·θ1) / r2`, clamped to the PIP range.
pub fn estimate_joint_angles_post_proximal(
    x_c: f64,
    tension: f64,
    theta1: f64,
    p: &FingerParams,
    sea: &SeaParams,
) -> Result<(f64, f64)> {
    if p.is_single_joint() {
        return Err(Error::InvalidParams(
            "single-joint finger has no post-proximal PIP estimate".into(),
        ));
    }
    let ell = x_c - tension / sea.k_sea;
    let theta2 = ((ell - p.r1 * theta1) / p.r2).clamp(0.0, p.rom2);
    Ok((theta1.clamp(0.0, p.rom1), theta2))
}

/// Regenerates the free-flexion reference for the current parameter set on
/// the standard excursion grid up to `x_max`.
pub fn reference_for(
    p: &FingerParams,
    sea: &SeaParams,
    orient: &HandOrientation,
    solve: &SolveConfig,
    x_max: f64,
) -> Result<Trajectory> {
    let grid = excursion_schedule(x_max, solve.excursion_step);
    free_flexion_profile(&grid, p, sea, orient, solve)
}

// ---------------------------------------------------------------------------
// Online detector
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Phase {
    /// Scanning for the first contact with `r_prox`.
    ScanFirst { consec: usize, run_start: Option<usize> },
    /// Crossing confirmed at window midpoint `mid`; waiting for
    /// `slope_delay` of loading progress to classify proximal vs distal.
    Classify { mid: usize, progress: usize },
    /// Proximal confirmed; scanning for the distal event with `r_dist`.
    ScanDistal { consec: usize, run_start: Option<usize>, theta1: f64 },
    /// Distal event emitted; nothing left to detect.
    Done,
}

/// Streaming contact detector for one finger.
///
/// Feed `(x, tension)` pairs in sample order via [`FingerDetector::push`];
/// confirmed [`ContactEvent`]s are returned as they finalize. Call
/// [`FingerDetector::finish`] after the last sample to resolve a pending
/// slope classification cut short by the end of the record.
#[derive(Debug, Clone)]
pub struct FingerDetector {
    cfg: DetectorConfig,
    reference: Trajectory,
    params: FingerParams,
    sea: SeaParams,
    xs: Vec<f64>,
    fs: Vec<f64>,
    phase: Phase,
    events: Vec<ContactEvent>,
    crossed: bool,
    /// Most recent window position whose RMSE was ≤ [`ZERO_RMSE_EPS`].
    last_zero_pos: Option<usize>,
}

impl FingerDetector {
    pub fn new(
        reference: Trajectory,
        cfg: DetectorConfig,
        params: FingerParams,
        sea: SeaParams,
    ) -> Result<Self> {
        cfg.validate(sea.k_sea)?;
        params.validate()?;
        sea.validate()?;
        if reference.is_empty() {
            return Err(Error::InvalidParams("empty reference trajectory".into()));
        }
        Ok(Self {
            cfg,
            reference,
            params,
            sea,
            xs: Vec::new(),
            fs: Vec::new(),
            phase: Phase::ScanFirst { consec: 0, run_start: None },
            events: Vec::new(),
            crossed: false,
            last_zero_pos: None,
        })
    }

    /// Event sample under the clamped-midpoint rule: the crossing run's
    /// first-window midpoint, but never inside a stretch the reference fully
    /// explains.
    fn event_sample(&self, run_start: usize) -> usize {
        let midpoint = run_start + self.cfg.window / 2;
        match self.last_zero_pos {
            Some(z) => midpoint.max(z + self.cfg.window),
            None => midpoint,
        }
    }

    /// Confirmed events so far, in sample order.
    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    /// True once the first threshold crossing is confirmed — the trigger the
    /// contact-pause coordinator acts on, available before the contact's
    /// type is classified.
    pub fn contact_confirmed(&self) -> bool {
        self.crossed
    }

    pub fn proximal_event(&self) -> Option<&ContactEvent> {
        self.events.iter().find(|e| e.kind == ContactKind::Proximal)
    }

    pub fn distal_event(&self) -> Option<&ContactEvent> {
        self.events.iter().find(|e| e.kind == ContactKind::Distal)
    }

    /// Number of samples consumed.
    pub fn samples_seen(&self) -> usize {
        self.xs.len()
    }

    /// Consumes one sample; returns an event if one was confirmed by it.
    pub fn push(&mut self, x: f64, tension: f64) -> Result<Option<ContactEvent>> {
        if !x.is_finite() || !tension.is_finite() {
            return Err(Error::InvalidParams(format!(
                "non-finite sample (x = {x}, tension = {tension})"
            )));
        }
        self.xs.push(x);
        self.fs.push(tension);
        let i = self.xs.len() - 1;

        // Loading progress feeds a pending slope classification.
        if let Phase::Classify { mid, progress } = self.phase {
            let mut prog = progress;
            if i > 0 && self.xs[i] > self.xs[i - 1] + PROGRESS_EPS {
                prog += 1;
            }
            self.phase = Phase::Classify { mid, progress: prog };
            if prog >= self.cfg.delay_samples() {
                let ev = self.classify_first(mid, i)?;
                return Ok(Some(ev));
            }
            return Ok(None);
        }

        // Window-based scanning needs a full window.
        if i + 1 < self.cfg.window {
            return Ok(None);
        }
        let pos = i + 1 - self.cfg.window;
        let rmse = window_rmse(&self.xs, &self.fs, pos, self.cfg.window, &self.reference);
        if let Some(v) = rmse {
            if v <= ZERO_RMSE_EPS {
                self.last_zero_pos = Some(pos);
            }
        }

        match self.phase {
            Phase::ScanFirst { consec, run_start } => {
                let (consec, run_start) = advance_run(rmse, self.cfg.r_prox, consec, run_start, pos);
                if consec >= self.cfg.confirm_windows {
                    self.crossed = true;
                    let mid = self.event_sample(run_start.expect("run start exists at confirmation"));
                    // Classification may already be satisfiable from the
                    // buffered samples between the event and now.
                    let progress = (mid + 1..=i)
                        .filter(|&j| self.xs[j] > self.xs[j - 1] + PROGRESS_EPS)
                        .count();
                    if progress >= self.cfg.delay_samples() {
                        let ev = self.classify_first(mid, i)?;
                        return Ok(Some(ev));
                    }
                    self.phase = Phase::Classify { mid, progress };
                } else {
                    self.phase = Phase::ScanFirst { consec, run_start };
                }
            }
            Phase::ScanDistal { consec, run_start, theta1 } => {
                let (consec, run_start) = advance_run(rmse, self.cfg.r_dist, consec, run_start, pos);
                if consec >= self.cfg.confirm_windows {
                    let mid = self.event_sample(run_start.expect("run start exists at confirmation"));
                    let ev = self.emit_distal(mid, theta1)?;
                    return Ok(Some(ev));
                }
                self.phase = Phase::ScanDistal { consec, run_start, theta1 };
            }
            Phase::Classify { .. } | Phase::Done => {}
        }
        Ok(None)
    }

    /// Resolves a pending classification at end of record. A contact whose
    /// signal ends before `slope_delay` of loading is classified from
    /// whatever progress exists; with no loading at all it defaults to
    /// distal (the halt-safe reading — for a sole contact both kinds
    /// estimate angles identically from the reference).
    pub fn finish(&mut self) -> Result<Option<ContactEvent>> {
        if let Phase::Classify { mid, .. } = self.phase {
            let last = self.xs.len() - 1;
            let ev = self.classify_first(mid, last)?;
            return Ok(Some(ev));
        }
        Ok(None)
    }

    /// Classifies the first contact from the anchored global slope and emits
    /// its event.
    fn classify_first(&mut self, mid: usize, now: usize) -> Result<ContactEvent> {
        let dx = self.xs[now] - self.xs[mid];
        let slope = if dx > PROGRESS_EPS {
            (self.fs[now] - self.fs[mid]) / dx
        } else {
            // No loading after the event: treat as distal (halted finger).
            f64::INFINITY
        };
        let x_c = self.xs[mid];
        let (theta1, theta2) = estimate_joint_angles(x_c, &self.reference)?;
        if slope < self.cfg.s_load {
            let ev = ContactEvent { kind: ContactKind::Proximal, sample: mid, x_c, theta1, theta2 };
            self.events.push(ev);
            self.phase = Phase::ScanDistal { consec: 0, run_start: None, theta1 };
            Ok(ev)
        } else {
            let ev = ContactEvent { kind: ContactKind::Distal, sample: mid, x_c, theta1, theta2 };
            self.events.push(ev);
            self.phase = Phase::Done;
            Ok(ev)
        }
    }

    fn emit_distal(&mut self, mid: usize, theta1: f64) -> Result<ContactEvent> {
        let x_c = self.xs[mid];
        let (theta1, theta2) = if self.params.is_single_joint() {
            (estimate_joint_angles(x_c, &self.reference)?.0, 0.0)
        } else {
            estimate_joint_angles_post_proximal(x_c, self.fs[mid], theta1, &self.params, &self.sea)?
        };
        let ev = ContactEvent { kind: ContactKind::Distal, sample: mid, x_c, theta1, theta2 };
        self.events.push(ev);
        self.phase = Phase::Done;
        Ok(ev)
    }
}

/// One step of the debounced threshold scan: count consecutive window
/// positions above the threshold, remembering where the run began. A below-
/// threshold or skipped window resets the run.
fn advance_run(
    rmse: Option<f64>,
    threshold: f64,
    consec: usize,
    run_start: Option<usize>,
    pos: usize,
) -> (usize, Option<usize>) {
    match rmse {
        Some(v) if v > threshold => (consec + 1, run_start.or(Some(pos))),
        _ => (0, None),
    }
}

/// Replays a recorded signal through a [`FingerDetector`] and returns all
/// confirmed contact events. Free flexion yields an empty list.
pub fn detect_contacts(
    signal: &SampledSignal,
    reference: &Trajectory,
    cfg: &DetectorConfig,
    params: &FingerParams,
    sea: &SeaParams,
) -> Result<Vec<ContactEvent>> {
    if (signal.rate - cfg.rate).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "signal rate {} Hz does not match detector rate {} Hz",
            signal.rate, cfg.rate
        )));
    }
    let mut det = FingerDetector::new(reference.clone(), *cfg, params.clone(), *sea)?;
    for i in 0..signal.len() {
        det.push(signal.x[i], signal.tension[i])?;
    }
    det.finish()?;
    Ok(det.events)
}

// ---------------------------------------------------------------------------
// Slope metrics & stiffness classification
// ---------------------------------------------------------------------------

/// Local least-squares slope over one trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSlope {
    /// Sample the window ends at.
    pub sample: usize,
    /// Least-squares dF/dx over the window (N/mm).
    pub slope: f64,
}

/// Post-distal-contact tension/excursion slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeMetrics {
    /// (F_now − F_c) / (x_now − x_c) from the contact to the last sample;
    /// `None` when the excursion never advanced past the contact.
    pub global_slope: Option<f64>,
    /// Local slopes over trailing windows fully inside the loaded region;
    /// windows without excursion progress (pauses, holds) are skipped, so
    /// every entry reflects actual loading.
    pub local_slopes: Vec<LocalSlope>,
}

/// Least-squares slope of F against x over `samples[a..=b]`; `None` when x
/// has no spread (paused window).
pub(crate) fn ls_slope(xs: &[f64], fs: &[f64], a: usize, b: usize) -> Option<f64> {
    let n = (b - a + 1) as f64;
    let mx = xs[a..=b].iter().sum::<f64>() / n;
    let mf = fs[a..=b].iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxf = 0.0;
    for j in a..=b {
        let dx = xs[j] - mx;
        sxx += dx * dx;
        sxf += dx * (fs[j] - mf);
    }
    // Window excursion spread below a hundredth of one schedule step means
    // the actuator was effectively paused.
    if sxx < 1e-12 {
        return None;
    }
    Some(sxf / sxx)
}

/// Global and local tension/excursion slopes after a distal contact.
pub fn slope_metrics(
    signal: &SampledSignal,
    distal_event: &ContactEvent,
    cfg: &DetectorConfig,
) -> Result<SlopeMetrics> {
    if distal_event.kind != ContactKind::Distal {
        return Err(Error::InvalidParams("slope metrics require a distal event".into()));
    }
    let n = signal.len();
    let c = distal_event.sample;
    if c + 2 > n {
        return Err(Error::InvalidParams(format!(
            "need ≥ 2 post-contact samples (contact at {c}, signal has {n})"
        )));
    }
    let dx = signal.x[n - 1] - distal_event.x_c;
    let global_slope = if dx > PROGRESS_EPS {
        Some((signal.tension[n - 1] - signal.tension[c]) / dx)
    } else {
        None
    };

    let mut local_slopes = Vec::new();
    if n - c >= cfg.window {
        for end in (c + cfg.window - 1)..n {
            if let Some(slope) = ls_slope(&signal.x, &signal.tension, end + 1 - cfg.window, end) {
                local_slopes.push(LocalSlope { sample: end, slope });
            }
        }
    } else if let Some(slope) = ls_slope(&signal.x, &signal.tension, c, n - 1) {
        // Too short for a full window: one slope over all loaded samples.
        local_slopes.push(LocalSlope { sample: n - 1, slope });
    }
    Ok(SlopeMetrics { global_slope, local_slopes })
}

/// Stiffness verdict for a loaded contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StiffnessClass {
    Rigid,
    Soft,
    InstabilityHalt,
}

impl std::fmt::Display for StiffnessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StiffnessClass::Rigid => write!(f, "rigid"),
            StiffnessClass::Soft => write!(f, "soft"),
            StiffnessClass::InstabilityHalt => write!(f, "instability-halt"),
        }
    }
}

/// Rigid if any local slope exceeds `s_rigid`; otherwise instability-halt if
/// any local slope during loading fell below `s_instab`; otherwise soft.
pub fn classify_stiffness(metrics: &SlopeMetrics, cfg: &DetectorConfig) -> StiffnessClass {
    if metrics.local_slopes.iter().any(|l| l.slope > cfg.s_rigid) {
        StiffnessClass::Rigid
    } else if metrics.local_slopes.iter().any(|l| l.slope < cfg.s_instab) {
        StiffnessClass::InstabilityHalt
    } else {
        StiffnessClass::Soft
    }
}

// ---------------------------------------------------------------------------
// Disturbance detection
// ---------------------------------------------------------------------------

/// Disturbance class inferable from tension alone. A tension drop cannot be
/// split into forced flexion vs support loss without extra sensing, so the
/// detector reports the union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceClass {
    None,
    ForcedExtension,
    FlexionOrSupportLoss,
}

/// Outcome of a hold-phase disturbance scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceDetection {
    pub class: DisturbanceClass,
    /// First sample outside the deadband (index into the scanned series).
    pub sample: Option<usize>,
    /// Peak signed deviation from the baseline over the series (N).
    pub peak_delta: f64,
}

/// Classifies a hold-phase tension series (actuator paused, x constant)
/// against its baseline: a rise beyond the deadband means something forced
/// the finger open (SEA compressed further); a drop means forced flexion or
/// support loss (SEA released).
pub fn detect_disturbance(series: &[f64], baseline: f64, deadband: f64) -> DisturbanceDetection {
    let mut peak = 0.0f64;
    let mut hit: Option<(usize, f64)> = None;
    for (i, &f) in series.iter().enumerate() {
        let d = f - baseline;
        if d.abs() > peak.abs() {
            peak = d;
        }
        if hit.is_none() && d.abs() > deadband {
            hit = Some((i, d));
        }
    }
    match hit {
        Some((i, d)) if d > 0.0 => DisturbanceDetection {
            class: DisturbanceClass::ForcedExtension,
            sample: Some(i),
            peak_delta: peak,
        },
        Some((i, _)) => DisturbanceDetection {
            class: DisturbanceClass::FlexionOrSupportLoss,
            sample: Some(i),
            peak_delta: peak,
        },
        None => DisturbanceDetection { class: DisturbanceClass::None, sample: None, peak_delta: peak },
    }
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

/// JSON-exportable detection summary for one finger (angles in degrees at
/// the report surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub finger: String,
    pub events: Vec<ContactEventReport>,
    pub global_slope: Option<f64>,
    pub local_slopes: Vec<LocalSlope>,
    pub classification: Option<StiffnessClass>,
}

/// A contact event with angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEventReport {
    pub kind: ContactKind,
    pub sample: usize,
    pub x_c_mm: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
}

impl DetectionReport {
    /// Assembles the report from detection outputs; slope metrics and the
    /// stiffness verdict are included when a distal event exists.
    pub fn assemble(
        finger: &str,
        signal: &SampledSignal,
        events: &[ContactEvent],
        cfg: &DetectorConfig,
    ) -> Result<Self> {
        let reports = events
            .iter()
            .map(|e| ContactEventReport {
                kind: e.kind,
                sample: e.sample,
                x_c_mm: e.x_c,
                theta1_deg: e.theta1.to_degrees(),
                theta2_deg: e.theta2.to_degrees(),
            })
            .collect();
        let distal = events.iter().find(|e| e.kind == ContactKind::Distal);
        let (global_slope, local_slopes, classification) = match distal {
            Some(ev) if ev.sample + 2 <= signal.len() => {
                let m = slope_metrics(signal, ev, cfg)?;
                let class = classify_stiffness(&m, cfg);
                (m.global_slope, m.local_slopes, Some(class))
            }
            _ => (None, Vec::new(), None),
        };
        Ok(Self { finger: finger.into(), events: reports, global_slope, local_slopes, classification })
    }
}
