//! Interaction simulation: object contact, object mobility, disturbance
//! injection, and 1 kHz signal synthesis with exact ground-truth annotations.
//!
//! Contact model: soft objects act as quadratic penalty energies inside the
//! quasi-static objective and never latch. Rigid contacts latch ("stick")
//! once they activate — a loaded fingertip pressed onto a rigid surface is
//! held by friction, so a proximal contact pins the MCP and a distal contact
//! halts the finger — and release only on explicit events (object slide,
//! support loss). During a kinetic slide of a mobile object the static
//! latches break: contacts are re-solved as frictionless non-penetration
//! inequalities against the moving circle and re-latched at force balance.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::energy::{dot, rot, total_energy_gradient};
use crate::error::{Error, Result};
use crate::object::{
    contact_records, dist_segment, gap_with_grad, prox_segment, CircleLocal,
    ContactConstraintSet, ContactMode, Mobility, ObjectModel, Pins, Stiffness,
};
use crate::params::{FingerParams, FingerState, HandOrientation, SeaParams};
use crate::solver::{solve_step, SolveConfig};

/// Time constant of the quasi-static settling transient after support loss.
pub const SUPPORT_LOSS_TAU: f64 = 0.020;

/// Disturbance categories of the tension-signature taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceKind {
    /// External agent extends the finger: the SEA compresses further and
    /// tension rises.
    ForcedExtension,
    /// External agent flexes the finger: the SEA relaxes and tension falls
    /// (floored at slack).
    ForcedFlexion,
    /// The grasped support vanishes: tension decays toward the free-flexion
    /// value at the held excursion.
    SupportLoss,
}

/// One injected disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    /// Window start (s, relative to signal start).
    pub t_start: f64,
    /// Window end (s).
    pub t_end: f64,
    pub kind: DisturbanceKind,
    /// Peak imposed joint-angle delta (rad), applied equally to each flexion
    /// joint with a triangular time profile. Ignored by support loss.
    pub magnitude: f64,
}

impl DisturbanceEvent {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start < self.t_end) {
            return Err(Error::InvalidParams(format!(
                "disturbance window [{}, {}] must have t_start < t_end",
                self.t_start, self.t_end
            )));
        }
        if !(self.magnitude >= 0.0) || !self.magnitude.is_finite() {
            return Err(Error::InvalidParams(format!(
                "disturbance magnitude {} must be finite and ≥ 0",
                self.magnitude
            )));
        }
        Ok(())
    }
}

/// Sample-index window of an injected disturbance (ground truth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisturbanceWindow {
    pub start: usize,
    pub end: usize,
    pub kind: DisturbanceKind,
}

/// Exact per-signal ground truth, written by construction during synthesis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// First sample with an active proximal contact.
    pub prox_contact_sample: Option<usize>,
    /// First sample with an active distal contact.
    pub dist_contact_sample: Option<usize>,
    /// True MCP flexion per sample (rad).
    pub theta1: Vec<f64>,
    /// True PIP flexion per sample (rad).
    pub theta2: Vec<f64>,
    /// Injected disturbance windows.
    pub disturbance_windows: Vec<DisturbanceWindow>,
    /// Set when a disturbance had to be clamped at a joint limit or the
    /// block-travel limit.
    pub clamped_disturbance: bool,
    /// Set when the simulation ended before the schedule completed, with the
    /// reason.
    pub ended_early: Option<String>,
}

/// Uniformly sampled tension/excursion record for one finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    /// Sample rate (Hz).
    pub rate: f64,
    /// Tendon excursion per sample (mm); nondecreasing during actuation.
    pub x: Vec<f64>,
    /// Cable tension per sample (N).
    pub tension: Vec<f64>,
    pub truth: GroundTruth,
}

impl SampledSignal {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Sample timestamp (s).
    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.rate
    }
}

/// One finger's pose within the hand: base position, base rotation, and an
/// optional mirror for opposing digits (a mirrored finger flexes toward −y
/// in the hand frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSetup {
    pub name: String,
    pub params: FingerParams,
    /// Finger base position in the hand frame (mm).
    pub base: [f64; 2],
    /// Rotation of the finger frame relative to the hand frame (rad).
    pub base_angle: f64,
    pub mirrored: bool,
}

impl FingerSetup {
    /// A finger at the hand origin with no rotation.
    pub fn inline(name: &str, params: FingerParams) -> Self {
        Self { name: name.into(), params, base: [0.0, 0.0], base_angle: 0.0, mirrored: false }
    }

    /// Object circle expressed in this finger's frame.
    pub fn circle_local(&self, object: &ObjectModel, s: f64) -> CircleLocal {
        let c = object.center_at(s);
        let mut v = rot(-self.base_angle, [c[0] - self.base[0], c[1] - self.base[1]]);
        if self.mirrored {
            v[1] = -v[1];
        }
        CircleLocal { center: v, radius: object.radius }
    }

    /// Force vector mapped from this finger's frame back to the hand frame.
    pub fn force_to_hand(&self, f_local: [f64; 2]) -> [f64; 2] {
        let f = if self.mirrored { [f_local[0], -f_local[1]] } else { f_local };
        rot(self.base_angle, f)
    }

    /// Hand gravity direction expressed in this finger's frame.
    pub fn orient_local(&self, orient: &HandOrientation) -> HandOrientation {
        let mut o = orient.rotated_into(self.base_angle);
        if self.mirrored {
            o.g_dir[1] = -o.g_dir[1];
        }
        o
    }
}

/// Multi-finger coordination strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every finger follows its schedule regardless of contact.
    Nominal,
    /// A finger that has made contact stops advancing its excursion until
    /// every finger reports contact, then all resume.
    ContactPause,
}

/// Simulation options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Sample rate (Hz).
    pub rate: f64,
    /// Optional fingertip series stiffness at the distal contact (N/mm):
    /// models the silicone pad, making the rigid distal slope land slightly
    /// below the SEA constant.
    pub k_tip: Option<f64>,
    /// Object displacement beyond which the simulation ends with an
    /// "escaped workspace" annotation (mm).
    pub escape_limit: f64,
    /// Hard cap on synthesized samples (guards stalled contact-pause runs).
    pub max_samples: usize,
    pub solve: SolveConfig,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rate: 1000.0,
            k_tip: None,
            escape_limit: 100.0,
            max_samples: 60_000,
            solve: SolveConfig::default(),
        }
    }
}

/// Output of [`simulate_grasp`]: one signal per finger plus the shared
/// object-displacement trace (mm along the mobility line, per sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspSim {
    pub signals: Vec<SampledSignal>,
    pub object_s: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Internal per-finger runtime
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct FingerRt {
    st: FingerState,
    /// Currently commanded excursion.
    x_cur: f64,
    /// Latched MCP pin from a proximal rigid contact.
    prox_stuck: Option<f64>,
    /// Latched joint pins from a distal rigid contact.
    dist_stuck: Option<(f64, f64)>,
    /// Force on the object (finger frame) attributed to the proximal
    /// contact, frozen at the instant the distal contact latched; the
    /// incremental load afterwards is attributed to the distal contact.
    frozen_prox: Option<[f64; 2]>,
    touched_prox: Option<usize>,
    touched_dist: Option<usize>,
}

impl FingerRt {
    fn fresh() -> Self {
        Self {
            st: FingerState::rest(),
            x_cur: 0.0,
            prox_stuck: None,
            dist_stuck: None,
            frozen_prox: None,
            touched_prox: None,
            touched_dist: None,
        }
    }

    fn touched(&self) -> bool {
        self.touched_prox.is_some() || self.touched_dist.is_some()
    }

    fn release_sticks(&mut self) {
        self.prox_stuck = None;
        self.dist_stuck = None;
        self.frozen_prox = None;
    }
}

/// True when a distal-phalanx contact record sits at the segment's start
/// point (the knuckle); such a contact cannot moment the PIP.
fn knuckle_contact(rec: &crate::object::ContactRecord, st: &FingerState, p: &FingerParams) -> bool {
    let seg = dist_segment(st.theta1, st.theta2, p);
    let d = [seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]];
    let len2 = dot(d, d);
    if len2 <= 0.0 {
        return false;
    }
    let t = dot([rec.point[0] - seg.a[0], rec.point[1] - seg.a[1]], d) / len2;
    t <= 1e-9
}

fn series_stiffness(k_obj: f64, k_tip: Option<f64>) -> f64 {
    match k_tip {
        Some(kt) => k_obj * kt / (k_obj + kt),
        None => k_obj,
    }
}

fn build_cons(
    rt: &FingerRt,
    circle: CircleLocal,
    stiffness: Stiffness,
    k_tip: Option<f64>,
    single_joint: bool,
) -> ContactConstraintSet {
    let mut cons = ContactConstraintSet::free();
    cons.circle = Some(circle);
    match stiffness {
        Stiffness::Rigid => {
            if let Some((t1, t2)) = rt.dist_stuck {
                cons.pins = Pins { theta1: Some(t1), theta2: Some(t2) };
            } else {
                if let Some(t1) = rt.prox_stuck {
                    cons.pins.theta1 = Some(t1);
                } else if !single_joint {
                    cons.prox = ContactMode::RigidBarrier;
                }
                cons.dist = match k_tip {
                    Some(kt) => ContactMode::Soft { k_eff: kt },
                    None => ContactMode::RigidBarrier,
                };
            }
        }
        Stiffness::Soft(k) => {
            if !single_joint {
                cons.prox = ContactMode::Soft { k_eff: k };
            }
            cons.dist = ContactMode::Soft { k_eff: series_stiffness(k, k_tip) };
        }
    }
    cons
}

/// Objective gradient including soft-contact penalty terms (needed when
/// extracting contact forces from a gradient balance).
fn grad_with_penalties(
    st: &FingerState,
    cons: &ContactConstraintSet,
    p: &FingerParams,
    s: &SeaParams,
    orient: &HandOrientation,
) -> [f64; 2] {
    let mut g = total_energy_gradient(st.theta1, st.theta2, st.x, p, s, orient);
    if let Some(c) = &cons.circle {
        for (mode, distal) in [(cons.prox, false), (cons.dist, true)] {
            if let ContactMode::Soft { k_eff } = mode {
                let seg = if distal {
                    dist_segment(st.theta1, st.theta2, p)
                } else {
                    prox_segment(st.theta1, p)
                };
                let (gap, dgap, _) = gap_with_grad(&seg, c);
                let pen = (-gap).max(0.0);
                if pen > 0.0 {
                    g[0] -= k_eff * pen * dgap[0];
                    g[1] -= k_eff * pen * dgap[1];
                }
            }
        }
    }
    g
}

/// Unit direction from a phalanx contact point toward the circle center
/// (the push direction on the object), or `None` when degenerate.
fn push_dir(pt: [f64; 2], circle: &CircleLocal) -> Option<[f64; 2]> {
    let d = [circle.center[0] - pt[0], circle.center[1] - pt[1]];
    let n = dot(d, d).sqrt();
    if n <= 1e-9 {
        None
    } else {
        Some([d[0] / n, d[1] / n])
    }
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if det.abs() <= 1e-9 * scale * scale {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

/// Net force exerted on the object by one finger, in the finger frame.
///
/// Soft contacts contribute `k_eff·penetration` along the push direction.
/// Latched rigid contacts are extracted from the gradient balance
/// `Jᵀ·F_contact = ∇E` at the pinned configuration: a distal latch pins both
/// joints (2×2 solve, friction lets the force leave the normal), a proximal
/// latch pins the MCP only (1 equation along the frictionless normal). When
/// both phalanges are latched the proximal share is the value frozen at the
/// distal-latch instant and the remainder goes to the distal contact.
fn object_force_local(
    rt: &FingerRt,
    cons: &ContactConstraintSet,
    p: &FingerParams,
    s: &SeaParams,
    orient: &HandOrientation,
) -> [f64; 2] {
    let circle = match &cons.circle {
        Some(c) => *c,
        None => return [0.0, 0.0],
    };
    let st = &rt.st;
    let mut out = [0.0, 0.0];

    // Soft penalty contributions (also covers the k_tip distal pad).
    for (mode, distal) in [(cons.prox, false), (cons.dist, true)] {
        if let ContactMode::Soft { k_eff } = mode {
            let seg = if distal {
                dist_segment(st.theta1, st.theta2, p)
            } else {
                prox_segment(st.theta1, p)
            };
            let (gap, _, pt) = gap_with_grad(&seg, &circle);
            let pen = (-gap).max(0.0);
            if pen > 0.0 {
                if let Some(u) = push_dir(pt, &circle) {
                    out[0] += k_eff * pen * u[0];
                    out[1] += k_eff * pen * u[1];
                }
            }
        }
    }

    if let Some((t1_pin, t2_pin)) = rt.dist_stuck {
        let g = grad_with_penalties(st, cons, p, s, orient);
        // A pinned joint resting on one of its own travel stops lets the
        // stop carry any torque pointing into the stop; only the remainder
        // is transmitted through the contact (a PIP parked at zero by its
        // preload is the common case).
        let (b1, b2) = p.theta_bounds();
        let relieve = |g: f64, pin: f64, b: [f64; 2]| -> f64 {
            if (pin - b[0]).abs() <= 1e-12 {
                g.min(0.0)
            } else if (pin - b[1]).abs() <= 1e-12 {
                g.max(0.0)
            } else {
                g
            }
        };
        let g = [relieve(g[0], t1_pin, b1), relieve(g[1], t2_pin, b2)];
        let seg = dist_segment(st.theta1, st.theta2, p);
        let (_, _, pd) = gap_with_grad(&seg, &circle);
        let u = match push_dir(pd, &circle) {
            Some(u) => u,
            None => return out,
        };
        let jd1 = crate::energy::perp(pd);
        if p.is_single_joint() {
            // single equation along the contact normal
            let denom = dot(jd1, u);
            if denom.abs() > 1e-9 {
                let f = -g[0] / denom; // force on finger = f·(−u)
                out[0] += f.max(0.0) * u[0];
                out[1] += f.max(0.0) * u[1];
            }
            return out;
        }
        let pip = seg.pip.unwrap_or([0.0, 0.0]);
        let jd2 = crate::energy::perp([pd[0] - pip[0], pd[1] - pip[1]]);
        let mut rhs = g;
        if let (Some(t1_pin), Some(fp)) = (rt.prox_stuck, rt.frozen_prox) {
            // remove the frozen proximal share: force on finger = −fp
            let segp = prox_segment(t1_pin, p);
            let (_, _, pp) = gap_with_grad(&segp, &circle);
            let jp = crate::energy::perp(pp);
            rhs[0] += dot(jp, fp); // ∇E − jpᵀ·(−fp)
            out[0] += fp[0];
            out[1] += fp[1];
        }
        // Rows are Jᵀ: [jd1ᵀ; jd2ᵀ]·F_c = rhs. With the finger straight
        // (PIP parked on its stop) the two moment rows are collinear and
        // the decomposition is singular: fall back to a frictionless
        // normal force from the MCP moment row, the stop carrying the
        // PIP-row residual.
        let n1 = dot(jd1, jd1).sqrt();
        let n2 = dot(jd2, jd2).sqrt();
        let cross = jd1[0] * jd2[1] - jd1[1] * jd2[0];
        let fc = if cross.abs() > 1e-4 * n1 * n2 { solve2([jd1, jd2], rhs) } else { None };
        match fc {
            Some(fc) => {
                // force on object = −F_c, clamped to pushing contacts
                let push = -(fc[0] * u[0] + fc[1] * u[1]);
                if push > 0.0 {
                    out[0] -= fc[0];
                    out[1] -= fc[1];
                }
            }
            None => {
                let denom = dot(jd1, u);
                if denom.abs() > 1e-9 {
                    let f = (-rhs[0] / denom).max(0.0);
                    out[0] += f * u[0];
                    out[1] += f * u[1];
                }
            }
        }
        return out;
    }

    if let Some(t1_pin) = rt.prox_stuck {
        let g = grad_with_penalties(st, cons, p, s, orient);
        let seg = prox_segment(t1_pin, p);
        let (_, _, pp) = gap_with_grad(&seg, &circle);
        if let Some(u) = push_dir(pp, &circle) {
            let jp = crate::energy::perp(pp);
            let denom = dot(jp, u);
            if denom.abs() > 1e-9 {
                let f = -g[0] / denom; // force on object = f·u
                if f > 0.0 {
                    out[0] += f * u[0];
                    out[1] += f * u[1];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Grasp plant: sample-stepped multi-finger simulation
// ---------------------------------------------------------------------------

/// One finger's resolved state after a [`GraspPlant::tick`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerTick {
    /// Applied tendon excursion (mm).
    pub x: f64,
    /// Cable tension (N).
    pub tension: f64,
    /// MCP flexion (rad).
    pub theta1: f64,
    /// PIP flexion (rad).
    pub theta2: f64,
    /// A proximal-phalanx contact has occurred on some tick so far.
    pub prox_contact: bool,
    /// A distal-phalanx contact has occurred on some tick so far.
    pub dist_contact: bool,
}

/// Outcome of one [`GraspPlant::tick`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    /// Sample index of this tick (0-based).
    pub sample: usize,
    pub fingers: Vec<FingerTick>,
    /// Object displacement along its mobility line (mm).
    pub object_s: f64,
    /// The object has been pushed past the escape limit; the grasp failed.
    pub escaped: bool,
}

/// Owned, validated mechanics shared by every tick.
#[derive(Debug, Clone)]
struct PlantCore {
    setups: Vec<FingerSetup>,
    object: ObjectModel,
    sea: SeaParams,
    orients: Vec<HandOrientation>,
    opts: SimOptions,
}

impl PlantCore {
    /// Solve one finger at commanded excursion `x` against the object at
    /// displacement `s`, updating latches and recording first touches.
    fn tick_finger(
        &self,
        f: usize,
        rt: &mut FingerRt,
        x: f64,
        s_obj: f64,
        sample: usize,
    ) -> Result<()> {
        let setup = &self.setups[f];
        let p = &setup.params;
        let circle = setup.circle_local(&self.object, s_obj);
        let cons = build_cons(rt, circle, self.object.stiffness, self.opts.k_tip, p.is_single_joint());
        let st = solve_step(x, &rt.st, &cons, p, &self.sea, &self.orients[f], &self.opts.solve)?;
        rt.st = st;
        rt.x_cur = x;

        // Touch detection and rigid latching.
        let recs = contact_records(st.theta1, st.theta2, p, &circle, 1e-6);
        let prox_active = recs[0].is_some()
            && match self.object.stiffness {
                Stiffness::Rigid => true,
                Stiffness::Soft(_) => recs[0].unwrap().penetration > 1e-12,
            };
        let dist_soft = matches!(self.object.stiffness, Stiffness::Soft(_)) || self.opts.k_tip.is_some();
        let mut dist_active = recs[1].is_some()
            && if dist_soft { recs[1].unwrap().penetration > 1e-12 } else {
true };
        // A distal-segment hit at its start point is a knuckle contact: it
        // constrains the PIP position — i.e. θ1 only — and exerts no moment
        // about the PIP axis, so it behaves as a proximal contact.
        let mut prox_like = prox_active;
        if dist_active && !p.is_single_joint() {
            if let Some(r) = recs[1] {
                if knuckle_contact(&r, &st, p) {
                    dist_active = false;
                    prox_like = true;
                }
            }
        }

        if prox_like && rt.touched_prox.is_none() {
            rt.touched_prox = Some(sample);
        }
        if dist_active && rt.touched_dist.is_none() {
            rt.touched_dist = Some(sample);
        }
        if matches!(self.object.stiffness, Stiffness::Rigid) {
            if prox_like && rt.prox_stuck.is_none() && rt.dist_stuck.is_none() && !p.is_single_joint()
            {
                rt.prox_stuck = Some(st.theta1);
            }
            if dist_active && rt.dist_stuck.is_none() && self.opts.k_tip.is_none() {
                if rt.prox_stuck.is_some() && rt.frozen_prox.is_none() {
                    // attribute the load so far to the proximal contact
                    let pre_cons = ContactConstraintSet {
                        circle: Some(circle),
                        ..ContactConstraintSet::free()
                    };
                    let probe = FingerRt {
                        dist_stuck: None,
                        frozen_prox: None,
                        ..rt.clone()
                    };
                    rt.frozen_prox = Some(object_force_local(
                        &probe,
                        &ContactConstraintSet {
                            prox: ContactMode::Inactive,
                            dist: ContactMode::Inactive,
                            ..pre_cons
                        },
                        p,
                        &self.sea,
                        &self.orients[f],
                    ));
                }
                rt.dist_stuck = Some((st.theta1, st.theta2));
            }
        }
        Ok(())
    }

    /// Net object force along the mobility line at displacement `s`, given
    /// per-finger runtimes (which are not modified).
    fn net_line_force(&self, rts: &[FingerRt], s_obj: f64, dir: [f64; 2]) -> f64 {
        let mut h = 0.0;
        for (f, rt) in rts.iter().enumerate() {
            let setup = &self.setups[f];
            let circle = setup.circle_local(&self.object, s_obj);
            let cons = build_cons(
                rt,
                circle,
                self.object.stiffness,
                self.opts.k_tip,
                setup.params.is_single_joint(),
            );
            let fl = object_force_local(rt, &cons, &setup.params, &self.sea, &self.orients[f]);
            let fh = setup.force_to_hand(fl);
            h += dot(fh, dir);
        }
        h
    }

    /// Re-solve all fingers at object displacement `s` with static latches
    /// released (kinetic regime) and return the runtimes plus net force.
    fn released_solve(
        &self,
        rts: &[FingerRt],
        s_obj: f64,
        dir: [f64; 2],
    ) -> Result<(Vec<FingerRt>, f64)> {
        let mut trial: Vec<FingerRt> = rts.to_vec();
        for (f, rt) in trial.iter_mut().enumerate() {
            let setup = &self.setups[f];
            let p = &setup.params;
            rt.release_sticks();
            let circle = setup.circle_local(&self.object, s_obj);
            let cons =
                build_cons(rt, circle, self.object.stiffness, self.opts.k_tip, p.is_single_joint());
            rt.st = solve_step(rt.x_cur, &rt.st, &cons, p, &self.sea, &self.orients[f], &self.opts.solve)?;
        }
        // kinetic contact forces come from the frictionless inequality state:
        // evaluate soft/penalty forces directly, rigid contacts via a
        // temporary distal/proximal latch at the solved configuration.
        let mut relatched = trial.clone();
        self.relatch(&mut relatched, s_obj, usize::MAX);
        let h = self.net_line_force(&relatched, s_obj, dir);
        Ok((relatched, h))
    }

    /// Latch any active rigid contacts at the current configurations;
    /// records first touches when `sample` is a real sample index.
    fn relatch(&self, rts: &mut [FingerRt], s_obj: f64, sample: usize) {
        if !matches!(self.object.stiffness, Stiffness::Rigid) {
            return;
        }
        for (f, rt) in rts.iter_mut().enumerate() {
            let setup = &self.setups[f];
            let p = &setup.params;
            let circle = setup.circle_local(&self.object, s_obj);
            let recs = contact_records(rt.st.theta1, rt.st.theta2, p, &circle, 1e-6);
            let mut prox_like = recs[0].is_some();
            let mut dist_hit = recs[1].is_some();
            if dist_hit && !p.is_single_joint() {
                if let Some(r) = &recs[1] {
                    if knuckle_contact(r, &rt.st, p) {
                        dist_hit = false;
                        prox_like = true;
                    }
                }
            }
            if prox_like && !p.is_single_joint() {
                rt.prox_stuck = Some(rt.st.theta1);
                if sample != usize::MAX && rt.touched_prox.is_none() {
                    rt.touched_prox = Some(sample);
                }
            }
            if dist_hit && self.opts.k_tip.is_none() {
                rt.dist_stuck = Some((rt.st.theta1, rt.st.theta2));
                if sample != usize::MAX && rt.touched_dist.is_none() {
                    rt.touched_dist = Some(sample);
                }
            }
        }
    }
}

/// Sample-stepped grasp plant: several fingers closing on one object,
/// advanced one sample per [`tick`](GraspPlant::tick).
///
/// Each tick takes one commanded tendon excursion per finger (nondecreasing,
/// matching a winch that only reels in), solves every finger's quasi-static
/// equilibrium against the object, settles the object's force balance along
/// its mobility line (sliding it and re-latching contacts when the net force
/// exceeds the breakaway resistance), and reports tensions, joint angles,
/// contact flags, and object displacement. [`simulate_grasp`] drives this
/// stepper from precomputed schedules; feedback controllers drive it from
/// live detector output. Both paths share the same mechanics, so offline
/// synthesis and closed-loop behavior cannot drift apart.
#[derive(Debug, Clone)]
pub struct GraspPlant {
    core: PlantCore,
    rts: Vec<FingerRt>,
    s_obj: f64,
    sample: usize,
    escaped: bool,
}

impl GraspPlant {
    /// Validates the configuration and checks that the object does not
    /// already penetrate a finger at rest.
    pub fn new(
        setups: &[FingerSetup],
        object: &ObjectModel,
        sea: &SeaParams,
        orient: &HandOrientation,
        opts: &SimOptions,
    ) -> Result<Self> {
        if setups.is_empty() {
            return Err(Error::InvalidParams("need at least one finger".into()));
        }
        object.validate()?;
        sea.validate()?;
        orient.validate()?;
        if !(opts.rate > 0.0) {
            return Err(Error::InvalidParams("sample rate must be > 0".into()));
        }
        for su in setups {
            su.params.validate()?;
        }
        let orients: Vec<HandOrientation> =
            setups.iter().map(|su| su.orient_local(orient)).collect();
        for su in setups {
            let c = su.circle_local(object, 0.0);
            let recs = contact_records(0.0, 0.0, &su.params, &c, -1e-9);
            if recs.iter().any(|r| r.is_some()) {
                return Err(Error::InvalidParams(format!(
                    "object initially penetrates finger '{}'",
                    su.name
                )));
            }
        }
        let rts = setups.iter().map(|_| FingerRt::fresh()).collect();
        Ok(Self {
            core: PlantCore {
                setups: setups.to_vec(),
                object: *object,
                sea: *sea,
                orients,
                opts: opts.clone(),
            },
            rts,
            s_obj: 0.0,
            sample: 0,
            escaped: false,
        })
    }

    pub fn num_fingers(&self) -> usize {
        self.core.setups.len()
    }

    pub fn setups(&self) -> &[FingerSetup] {
        &self.core.setups
    }

    /// Excursion currently applied to finger `f` (mm).
    pub fn commanded_x(&self, f: usize) -> f64 {
        self.rts[f].x_cur
    }

    /// Full solved state of finger `f` after the last tick.
    pub fn state(&self, f: usize) -> &FingerState {
        &self.rts[f].st
    }

    /// True once finger `f` has contacted the object on any phalanx.
    pub fn touched(&self, f: usize) -> bool {
        self.rts[f].touched()
    }

    /// First (proximal, distal) contact samples of finger `f`, if any.
    pub fn touch_samples(&self, f: usize) -> (Option<usize>, Option<usize>) {
        (self.rts[f].touched_prox, self.rts[f].touched_dist)
    }

    /// Object displacement along its mobility line (mm).
    pub fn object_s(&self) -> f64 {
        self.s_obj
    }

    /// Number of ticks taken so far.
    pub fn samples_elapsed(&self) -> usize {
        self.sample
    }

    /// True once the object has been pushed past the escape limit.
    pub fn escaped(&self) -> bool {
        self.escaped
    }

    /// Advances the plant by one sample at the given excursion commands.
    ///
    /// Commands must be finite and nondecreasing per finger (the winch
    /// cannot pay cable back out). A solver error mid-tick leaves some
    /// fingers already advanced, so treat any `Err` as fatal for the run.
    pub fn tick(&mut self, x_cmd: &[f64]) -> Result<TickRecord> {
        let nf = self.core.setups.len();
        if x_cmd.len() != nf {
            return Err(Error::InvalidParams(format!(
                "expected {nf} excursion commands, got {}",
                x_cmd.len()
            )));
        }
        for (f, (&x, rt)) in x_cmd.iter().zip(&self.rts).enumerate() {
            if !x.is_finite() || x < rt.x_cur - 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "finger {f}: excursion command {x} must be finite and ≥ current {}",
                    rt.x_cur
                )));
            }
        }
        let sample = self.sample;
        for f in 0..nf {
            let x = x_cmd[f].max(self.rts[f].x_cur);
            self.core.tick_finger(f, &mut self.rts[f], x, self.s_obj, sample)?;
        }

        // Object force balance and kinetic slide.
        if let Mobility::Line { dir, breakaway } = self.core.object.mobility {
            let h = self.core.net_line_force(&self.rts, self.s_obj, dir);
            if h.abs() > breakaway + 1e-9 {
                let sign = h.signum();
                // Expand until the released net force falls to the
                // resistance, then bisect for balance.
                let mut step = 0.05;
                let mut lo = self.s_obj;
                let mut hi;
                let mut trial_rts;
                loop {
                    hi = lo + sign * step;
                    let (t, ht) = self.core.released_solve(&self.rts, hi, dir)?;
                    trial_rts = t;
                    if ht * sign <= breakaway || hi.abs() > self.core.opts.escape_limit {
                        break;
                    }
                    lo = hi;
                    step *= 2.0;
                }
                if hi.abs() > self.core.opts.escape_limit {
                    self.s_obj = hi;
                    self.rts = trial_rts;
                    self.escaped = true;
                } else {
                    let mut a = lo;
                    let mut b = hi;
                    for _ in 0..40 {
                        if (b - a).abs() < 1e-7 {
                            break;
                        }
                        let mid = 0.5 * (a + b);
                        let (t, hm) = self.core.released_solve(&self.rts, mid, dir)?;
                        if hm * sign > breakaway {
                            a = mid;
                        } else {
                            b = mid;
                            trial_rts = t;
                        }
                    }
                    self.s_obj = b;
                    self.rts = trial_rts;
                    self.core.relatch(&mut self.rts, self.s_obj, sample);
                }
            }
        }

        let fingers = self
            .rts
            .iter()
            .map(|rt| FingerTick {
                x: rt.x_cur,
                tension: rt.st.tension,
                theta1: rt.st.theta1,
                theta2: rt.st.theta2,
                prox_contact: rt.touched_prox.is_some(),
                dist_contact: rt.touched_dist.is_some(),
            })
            .collect();
        self.sample += 1;
        Ok(TickRecord { sample, fingers, object_s: self.s_obj, escaped: self.escaped })
    }
}

/// Simulates a multi-finger grasp attempt against one object.
///
/// `schedules[f][i]` is finger `f`'s commanded excursion at sample `i`
/// (1 kHz by default); schedules must be nondecreasing. Under
/// [`Strategy::ContactPause`], a finger that has reported contact holds its
/// excursion until every finger has contact, then the remaining schedule
/// resumes (total duration grows by the pause).
pub fn simulate_grasp(
    setups: &[FingerSetup],
    object: &ObjectModel,
    schedules: &[Vec<f64>],
    strategy: Strategy,
    sea: &SeaParams,
    orient: &HandOrientation,
    opts: &SimOptions,
) -> Result<GraspSim> {
    if setups.is_empty() || setups.len() != schedules.len() {
        return Err(Error::InvalidParams(format!(
            "need one schedule per finger (got {} fingers, {} schedules)",
            setups.len(),
            schedules.len()
        )));
    }
    for (f, sched) in schedules.iter().enumerate() {
        if sched.is_empty() {
            return Err(Error::InvalidParams(format!("finger {f}: empty schedule")));
        }
        for w in sched.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "finger {f}: schedule must be nondecreasing"
                )));
            }
        }
    }

    let mut plant = GraspPlant::new(setups, object, sea, orient, opts)?;
    let nf = setups.len();
    let mut next = vec![0usize; nf];
    let mut signals: Vec<SampledSignal> = setups
        .iter()
        .map(|_| SampledSignal {
            rate: opts.rate,
            x: Vec::new(),
            tension: Vec::new(),
            truth: GroundTruth::default(),
        })
        .collect();
    let mut object_s: Vec<f64> = Vec::new();
    let mut ended: Option<String> = None;
    let mut xs = vec![0.0f64; nf];

    loop {
        let all_done = (0..nf).all(|f| next[f] >= schedules[f].len());
        if all_done {
            break;
        }
        if plant.samples_elapsed() >= opts.max_samples {
            ended = Some("sample cap reached before schedules completed".into());
            break;
        }

        let all_touched = (0..nf).all(|f| plant.touched(f));
        for f in 0..nf {
            let paused =
                matches!(strategy, Strategy::ContactPause) && plant.touched(f) && !all_touched;
            xs[f] = if paused || next[f] >= schedules[f].len() {
                plant.commanded_x(f)
            } else {
                let v = schedules[f][next[f]];
                next[f] += 1;
                v
            };
        }
        let rec = plant.tick(&xs)?;

        for (f, sig) in signals.iter_mut().enumerate() {
            let ft = &rec.fingers[f];
            sig.x.push(ft.x);
            sig.tension.push(ft.tension);
            sig.truth.theta1.push(ft.theta1);
            sig.truth.theta2.push(ft.theta2);
        }
        object_s.push(rec.object_s);
        if rec.escaped {
            ended = Some("object escaped workspace".into());
            break;
        }
    }

    for (f, sig) in signals.iter_mut().enumerate() {
        let (tp, td) = plant.touch_samples(f);
        sig.truth.prox_contact_sample = tp;
        sig.truth.dist_contact_sample = td;
        sig.truth.ended_early = ended.clone();
    }
    Ok(GraspSim { signals, object_s })
}

/// Builds a per-sample excursion schedule: hold `delay` samples at
/// `x_from`, ramp to `x_to` at `step` mm/sample, then hold `tail` samples.
pub fn ramp_schedule(x_from: f64, x_to: f64, step: f64, delay: usize, tail: usize) -> Vec<f64> {
    let mut v = vec![x_from; delay.max(1)];
    let mut x = x_from;
    while x + step < x_to {
        x += step;
        v.push(x);
    }
    v.push(x_to);
    v.extend(std::iter::repeat(x_to).take(tail));
    v
}

// ---------------------------------------------------------------------------
// Disturbance injection
// ---------------------------------------------------------------------------

/// Static context describing what a finger is holding while a disturbance
/// is imposed: the held state, the active constraint situation (pins for a
/// latched grasp, `free()` for a preloaded finger in air), and the
/// mechanics needed to re-solve.
#[derive(Debug, Clone)]
pub struct HoldContext {
    pub params: FingerParams,
    pub sea: SeaParams,
    pub orient: HandOrientation,
    pub cons: ContactConstraintSet,
    pub hold: FingerState,
    pub solve: SolveConfig,
}

impl HoldContext {
    pub fn free_hold(
        params: FingerParams,
        sea: SeaParams,
        orient: HandOrientation,
        hold: FingerState,
    ) -> Self {
        Self {
            params,
            sea,
            orient,
            cons: ContactConstraintSet::free(),
            hold,
            solve: SolveConfig::default(),
        }
    }

    /// Constant-excursion hold signal of the given duration.
    pub fn hold_signal(&self, seconds: f64, rate: f64) -> SampledSignal {
        let n = (seconds * rate).round() as usize;
        SampledSignal {
            rate,
            x: vec![self.hold.x; n],
            tension: vec![self.hold.tension; n],
            truth: GroundTruth {
                theta1: vec![self.hold.theta1; n],
                theta2: vec![self.hold.theta2; n],
                ..GroundTruth::default()
            },
        }
    }
}

/// Injects one disturbance into a hold phase of `base`.
///
/// Forced extension/flexion impose a triangular joint-angle delta equally on
/// each flexion joint (clamped at the joint limits, with the clamp
/// annotated); the excursion stays constant, so the SEA absorbs the motion:
/// extension raises tension, flexion lowers it (floored at cable slack).
/// Support loss removes `ctx.cons` and decays tension exponentially
/// (τ = 20 ms) toward the free equilibrium at the held excursion; the
/// change is permanent for the rest of the signal.
pub fn inject_disturbance(
    ctx: &HoldContext,
    base: &SampledSignal,
    event: &DisturbanceEvent,
) -> Result<SampledSignal> {
    event.validate()?;
    let rate = base.rate;
    let i0 = (event.t_start * rate).round() as usize;
    let i1 = (event.t_end * rate).round() as usize;
    if i1 >= base.len() || i0 >= i1 {
        return Err(Error::InvalidParams(format!(
            "disturbance window [{}, {}] s outside the signal ({} samples at {} Hz)",
            event.t_start,
            event.t_end,
            base.len(),
            rate
        )));
    }
    if !(base.tension[i0] > 0.0) {
        return Err(Error::NotReady(format!(
            "finger must hold tension > 0 at t_start (got {} N)",
            base.tension[i0]
        )));
    }
    let x0 = base.x[i0];
    for i in i0..=i1 {
        if (base.x[i] - x0).abs() > 1e-9 {
            return Err(Error::InvalidParams(
                "disturbance window must lie in a constant-excursion hold phase".into(),
            ));
        }
    }

    let mut out = base.clone();
    out.truth.disturbance_windows.push(DisturbanceWindow { start: i0, end: i1, kind: event.kind });
    let p = &ctx.params;
    let (b1, b2) = p.theta_bounds();

    match event.kind {
        DisturbanceKind::ForcedExtension | DisturbanceKind::ForcedFlexion => {
            let sign = match event.kind {
                DisturbanceKind::ForcedExtension => -1.0,
                _ => 1.0,
            };
            // A joint that starts the window on a travel stop facing the
            // push simply stays there (the stop, not the joint range,
            // carries the agent); only an interior joint driven onto a
            // limit counts as a clamped disturbance.
            let interior = |v: f64, b: [f64; 2]| v > b[0] + 1e-12 && v < b[1] - 1e-12;
            let int1 = interior(base.truth.theta1[i0], b1);
            let int2 = !p.is_single_joint() && interior(base.truth.theta2[i0], b2);
            let mut clamped = false;
            for i in i0..=i1 {
                let u = (i - i0) as f64 / (i1 - i0) as f64;
                let tri = 1.0 - (2.0 * u - 1.0).abs();
                let delta = sign * event.magnitude * tri;
                let t1_raw = base.truth.theta1[i] + delta;
                let t1 = t1_raw.clamp(b1[0], b1[1]);
                let (t2_raw, t2) = if p.is_single_joint() {
                    (base.truth.theta2[i], base.truth.theta2[i])
                } else {
                    let raw = base.truth.theta2[i] + delta;
                    (raw, raw.clamp(b2[0], b2[1]))
                };
                if (int1 && (t1 - t1_raw).abs() > 1e-12) || (int2 && (t2 - t2_raw).abs() > 1e-12)
                {
                    clamped = true;
                }
                let mut dx = (base.x[i] - crate::energy::tendon_length_unchecked(t1, t2, p)) / 2.0;
                if dx < 0.0 {
                    dx = 0.0; // cable slack: block returns to rest, tension floors at 0
                } else if dx > ctx.sea.x_sb_max {
                    dx = ctx.sea.x_sb_max; // block travel exhausted
                    clamped = true;
                }
                out.tension[i] = 2.0 * ctx.sea.k_sea * dx;
                out.truth.theta1[i] = t1;
                out.truth.theta2[i] = t2;
            }
            if clamped {
                out.truth.clamped_disturbance = true;
            }
        }
        DisturbanceKind::SupportLoss => {
            let free = ContactConstraintSet::free();
            let target =
                solve_step(x0, &ctx.hold, &free, p, &ctx.sea, &ctx.orient, &ctx.solve)?;
            for i in i0..base.len() {
                let dt = (i - i0) as f64 / rate;
                let w = (-dt / SUPPORT_LOSS_TAU).exp();
                out.tension[i] = target.tension + (base.tension[i] - target.tension) * w;
                out.truth.theta1[i] = target.theta1 + (base.truth.theta1[i] - target.theta1) * w;
                out.truth.theta2[i] = target.theta2 + (base.truth.theta2[i] - target.theta2) * w;
            }
        }
    }
    Ok(out)
}

/// Adds zero-mean Gaussian noise (std `sigma`, N) to the tension channel,
/// deterministically under `seed`. `sigma = 0` returns the signal unchanged.
pub fn synthesize_noise(signal: &SampledSignal, sigma: f64, seed: u64) -> Result<SampledSignal> {
    if sigma < 0.0 {
        return Err(Error::InvalidParams(format!("sigma = {sigma} must be ≥ 0")));
    }
    let mut out = signal.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParams(format!("noise distribution: {e}")))?;
    for t in out.tension.iter_mut() {
        *t += normal.sample(&mut rng);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::free_flexion_profile;
    use approx::assert_relative_eq;

    fn sea() -> SeaParams {
        SeaParams::default()
    }

    fn side() -> HandOrientation {
        HandOrientation::sideways()
    }

    fn single(params: FingerParams) -> Vec<FingerSetup> {
        vec![FingerSetup::inline("index", params)]
    }

    /// Distal-first placement for the default finger: the distal phalanx
    /// meets the circle at x ≈ 3.4 mm while the proximal phalanx never
    /// comes near it.
    fn distal_only_object() -> ObjectModel {
        ObjectModel::rigid_fixed([60.0, 35.0], 22.0)
    }

    #[test]
    fn unreachable_object_reproduces_free_flexion() {
        let p = FingerParams::default();
        let obj = ObjectModel::rigid_fixed([200.0, 200.0], 10.0);
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 12.0, step, 0, 0);
        let sim = simulate_grasp(
            &single(p.clone()),
            &obj,
            &[sched.clone()],
            Strategy::Nominal,
            &sea(),
            &side(),
            &SimOptions::default(),
        )
        .unwrap();
        let sig = &sim.signals[0];
        assert!(sig.truth.prox_contact_sample.is_none());
        assert!(sig.truth.dist_contact_sample.is_none());
        let free = free_flexion_profile(&sched, &p, &sea(), &side(), &SolveConfig::default())
            .unwrap();
        // the far-away barrier term is numerically inert, so the solves
        // agree to solver tolerance
        for (i, st) in free.states.iter().enumerate() {
            assert!(
                (sig.tension[i] - st.tension).abs() <= 1e-9,
                "sample {i}: {} vs {}",
                sig.tension[i],
                st.tension
            );
        }
        assert!(sim.object_s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn plant_ticks_match_batch_synthesis_and_reject_backward_commands() {
        let p = FingerParams::default();
        let obj = distal_only_object();
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 8.0, step, 0, 50);
        let opts = SimOptions::default();
        let sim = simulate_grasp(
            &single(p.clone()),
            &obj,
            &[sched.clone()],
            Strategy::Nominal,
            &sea(),
            &side(),
            &opts,
        )
        .unwrap();

        let mut plant = GraspPlant::new(&single(p), &obj, &sea(), &side(), &opts).unwrap();
        assert_eq!(plant.num_fingers(), 1);
        for (i, &x) in sched.iter().enumerate() {
            let rec = plant.tick(&[x]).unwrap();
            assert_eq!(rec.sample, i);
            assert!(!rec.escaped);
            let ft = rec.fingers[0];
            assert_eq!(ft.x, sim.signals[0].x[i], "sample {i}");
            assert_eq!(ft.tension, sim.signals[0].tension[i], "sample {i}");
            assert_eq!(ft.theta1, sim.signals[0].truth.theta1[i], "sample {i}");
            assert_eq!(ft.theta2, sim.signals[0].truth.theta2[i], "sample {i}");
            assert_eq!(rec.object_s, sim.object_s[i], "sample {i}");
            assert_eq!(
                ft.dist_contact,
                sim.signals[0].truth.dist_contact_sample.map_or(false, |c| i >= c)
            );
        }
        assert_eq!(plant.samples_elapsed(), sched.len());
        assert_eq!(
            plant.touch_samples(0),
            (
                sim.signals[0].truth.prox_contact_sample,
                sim.signals[0].truth.dist_contact_sample
            )
        );

        // the winch cannot pay cable back out
        let back = plant.commanded_x(0) - 0.5;
        assert!(plant.tick(&[back]).is_err());
        // wrong command arity is rejected
        assert!(plant.tick(&[8.0, 8.0]).is_err());
    }

    #[test]
    fn distal_contact_latches_and_loads_at_sea_slope() {
        let p = FingerParams::default();
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 9.0, step, 0, 0);
        let sim = simulate_grasp(
            &single(p),
            &distal_only_object(),
            &[sched],
            Strategy::Nominal,
            &sea(),
            &side(),
            &SimOptions::default(),
        )
        .unwrap();
        let sig = &sim.signals[0];
        let touch = sig.truth.dist_contact_sample.expect("distal contact expected");
        assert!(sig.truth.prox_contact_sample.is_none(), "distal-only placement");
        // post-latch slope dF/dx = k_sea within 1%
        let a = touch + 20;
        let b = sig.len() - 1;
        let slope = (sig.tension[b] - sig.tension[a]) / (sig.x[b] - sig.x[a]);
        assert_relative_eq!(slope, sea().k_sea, max_relative = 0.01);
        // angles frozen after latch
        assert_eq!(sig.truth.theta1[a], sig.truth.theta1[b]);
        assert_eq!(sig.truth.theta2[a], sig.truth.theta2[b]);
    }

    #[test]
    fn fingertip_pad_softens_rigid_slope() {
        let p = FingerParams::default();
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 9.0, step, 0, 0);
        let mut opts = SimOptions::default();
        opts.k_tip = Some(20.0);
        let sim = simulate_grasp(
            &single(p),
            &distal_only_object(),
            &[sched],
            Strategy::Nominal,
            &sea(),
            &side(),
            &opts,
        )
        .unwrap();
        let sig = &sim.signals[0];
        let touch = sig.truth.dist_contact_sample.expect("distal contact expected");
        let a = touch + 60;
        let b = sig.len() - 1;
        let slope = (sig.tension[b] - sig.tension[a]) / (sig.x[b] - sig.x[a]);
        let k = sea().k_sea;
        assert!(
            slope < 0.995 * k && slope > 0.75 * k,
            "pad should land slope slightly below k_sea (got {slope}, k_sea {k})"
        );
    }

    #[test]
    fn soft_stiffness_sweep_gives_increasing_slopes_below_k_sea() {
        let p = FingerParams::default();
        let step = SolveConfig::default().excursion_step;
        let mut slopes = Vec::new();
        for k_obj in [0.2, 0.5, 1.0] {
            let obj = ObjectModel::soft_fixed([60.0, 35.0], 22.0, k_obj);
            let sched = ramp_schedule(0.0, 12.0, step, 0, 0);
            let sim = simulate_grasp(
                &single(p.clone()),
                &obj,
                &[sched],
                Strategy::Nominal,
                &sea(),
                &side(),
                &SimOptions::default(),
            )
            .unwrap();
            let sig = &sim.signals[0];
            let touch = sig.truth.dist_contact_sample.expect("soft distal contact");
            let a = touch + 30;
            let b = sig.len() - 1;
            slopes.push((sig.tension[b] - sig.tension[a]) / (sig.x[b] - sig.x[a]));
        }
        assert!(slopes[0] < slopes[1] && slopes[1] < slopes[2], "slopes = {slopes:?}");
        assert!(slopes[2] < sea().k_sea, "soft slopes stay below k_sea: {slopes:?}");
    }

    #[test]
    fn rigid_contacts_never_penetrate() {
        let p = FingerParams::default();
        let step = SolveConfig::default().excursion_step;
        let obj = distal_only_object();
        let sched = ramp_schedule(0.0, 9.0, step, 0, 0);
        let setups = single(p.clone());
        let sim = simulate_grasp(
            &setups,
            &obj,
            &[sched],
            Strategy::Nominal,
            &sea(),
            &side(),
            &SimOptions::default(),
        )
        .unwrap();
        let sig = &sim.signals[0];
        for i in 0..sig.len() {
            let c = setups[0].circle_local(&obj, sim.object_s[i]);
            let recs =
                contact_records(sig.truth.theta1[i], sig.truth.theta2[i], &p, &c, 0.0);
            for r in recs.into_iter().flatten() {
                assert!(r.penetration <= 1e-6, "sample {i}: penetration {}", r.penetration);
            }
        }
    }

    fn opposed_setups(p: &FingerParams, gap_mm: f64) -> Vec<FingerSetup> {
        vec![
            FingerSetup::inline("lower", p.clone()),
            FingerSetup {
                name: "upper".into(),
                params: p.clone(),
                base: [0.0, gap_mm],
                base_angle: 0.0,
                mirrored: true,
            },
        ]
    }

    #[test]
    fn opposed_fingers_leave_centered_object_in_place() {
        let p = FingerParams::default();
        let h = 80.0;
        let obj = ObjectModel {
            center: [45.0, h / 2.0],
            radius: 20.0,
            stiffness: Stiffness::Rigid,
            mobility: Mobility::Line { dir: [0.0, 1.0], breakaway: 0.5 },
        };
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 10.0, step, 0, 100);
        let sim = simulate_grasp(
            &opposed_setups(&p, h),
            &obj,
            &[sched.clone(), sched],
            Strategy::Nominal,
            &sea(),
            &side(),
            &SimOptions::default(),
        )
        .unwrap();
        let max_s = sim.object_s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_s <= 1e-6, "centered object moved {max_s} mm");
        // both fingers touched and their signals are identical by symmetry
        for sig in &sim.signals {
            assert!(sig.truth.prox_contact_sample.is_some() || sig.truth.dist_contact_sample.is_some());
        }
        assert_eq!(sim.signals[0].tension, sim.signals[1].tension);
    }

    #[test]
    fn contact_pause_prevents_object_pushing() {
        let p = FingerParams::default();
        let h = 80.0;
        let obj = ObjectModel {
            center: [45.0, h / 2.0],
            radius: 20.0,
            stiffness: Stiffness::Rigid,
            mobility: Mobility::Line { dir: [0.0, 1.0], breakaway: 1.0 },
        };
        let step = SolveConfig::default().excursion_step;
        let lead = ramp_schedule(0.0, 12.0, step, 0, 800);
        let lag = ramp_schedule(0.0, 12.0, step, 400, 400);
        let run = |strategy| {
            simulate_grasp(
                &opposed_setups(&p, h),
                &obj,
                &[lead.clone(), lag.clone()],
                strategy,
                &sea(),
                &side(),
                &SimOptions::default(),
            )
            .unwrap()
        };
        let nominal = run(Strategy::Nominal);
        let paused = run(Strategy::ContactPause);
        let push = |sim: &GraspSim| sim.object_s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let (dn, dp) = (push(&nominal), push(&paused));
        assert!(dn > 1.0, "nominal strategy should push the object > 1 mm (got {dn})");
        assert!(dp <= 0.1, "contact-pause should keep displacement ≤ 0.1 mm (got {dp})");
    }

    #[test]
    fn unopposed_push_can_escape_workspace() {
        let p = FingerParams::default();
        let obj = ObjectModel {
            center: [45.0, 40.0],
            radius: 20.0,
            stiffness: Stiffness::Rigid,
            mobility: Mobility::Line { dir: [0.0, 1.0], breakaway: 0.05 },
        };
        let step = SolveConfig::default().excursion_step;
        let sched = ramp_schedule(0.0, 14.0, step, 0, 200);
        let mut opts = SimOptions::default();
        opts.escape_limit = 5.0;
        let sim = simulate_grasp(
            &single(p),
            &obj,
            &[sched.clone()],
            Strategy::Nominal,
            &sea(),
            &side(),
            &opts,
        )
        .unwrap();
        let sig = &sim.signals[0];
        assert!(sig.truth.ended_early.is_some(), "escape annotation expected");
        assert!(sig.len() < sched.len(), "signal should end early");
    }

    // ---- disturbances ----

    fn preloaded_hold(target: f64) -> (HoldContext, SampledSignal) {
        let p = FingerParams::two_joint_shallow();
        let s = sea();
        let o = side();
        let cfg = SolveConfig::default();
        let free = ContactConstraintSet::free();
        let mut st = FingerState::rest();
        let mut x = 0.0;
        while st.tension < target {
            x += cfg.excursion_step;
            st = solve_step(x, &st, &free, &p, &s, &o, &cfg).unwrap();
        }
        let ctx = HoldContext::free_hold(p, s, o, st);
        let sig = ctx.hold_signal(0.6, 1000.0);
        (ctx, sig)
    }

    #[test]
    fn forced_extension_raises_tension_in_window() {
        let (ctx, base) = preloaded_hold(2.5);
        let ev = DisturbanceEvent {
            t_start: 0.1,
            t_end: 0.3,
            kind: DisturbanceKind::ForcedExtension,
            magnitude: 0.1,
        };
        let out = inject_disturbance(&ctx, &base, &ev).unwrap();
        let (i0, i1) = (100, 300);
        for i in (i0 + 1)..i1 {
            assert!(
                out.tension[i] > base.tension[i],
                "sample {i}: {} not above baseline {}",
                out.tension[i],
                base.tension[i]
            );
        }
        for i in (0..i0).chain((i1 + 1)..base.len()) {
            assert_eq!(out.tension[i], base.tension[i]);
        }
        assert_eq!(out.truth.disturbance_windows.len(), 1);
        assert!(!out.truth.clamped_disturbance);
    }

    #[test]
    fn forced_flexion_lowers_tension_and_floors_at_slack() {
        let (ctx, base) = preloaded_hold(2.5);
        let ev = DisturbanceEvent {
            t_start: 0.1,
            t_end: 0.3,
            kind: DisturbanceKind::ForcedFlexion,
            magnitude: 0.12,
        };
        let out = inject_disturbance(&ctx, &base, &ev).unwrap();
        for i in 101..300 {
            assert!(out.tension[i] < base.tension[i]);
            assert!(out.tension[i] >= 0.0);
        }
        // large flexion drives the cable slack: tension floors at exactly 0
        let big = DisturbanceEvent { magnitude: 0.5, ..ev };
        let out = inject_disturbance(&ctx, &base, &big).unwrap();
        let min = out.tension[101..300].iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.0);
    }

    #[test]
    fn zero_magnitude_disturbance_is_identity() {
        let (ctx, base) = preloaded_hold(2.5);
        for kind in [DisturbanceKind::ForcedExtension, DisturbanceKind::ForcedFlexion] {
            let ev = DisturbanceEvent { t_start: 0.1, t_end: 0.3, kind, magnitude: 0.0 };
            let out = inject_disturbance(&ctx, &base, &ev).unwrap();
            assert_eq!(out.tension, base.tension);
            assert_eq!(out.truth.theta1, base.truth.theta1);
        }
    }

    #[test]
    fn disturbance_clamps_at_joint_limits_with_annotation() {
        let (ctx, base) = preloaded_hold(2.5);
        // held at θ1 ≈ 0.15 rad; extension of 0.5 rad must clamp at 0
        let ev = DisturbanceEvent {
            t_start: 0.1,
            t_end: 0.3,
            kind: DisturbanceKind::ForcedExtension,
            magnitude: 0.5,
        };
        let out = inject_disturbance(&ctx, &base, &ev).unwrap();
        assert!(out.truth.clamped_disturbance);
        let min_t1 = out.truth.theta1[101..300].iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_t1 >= 0.0);
    }

    #[test]
    fn support_loss_decays_to_free_flexion_value() {
        // Grasp the rigid distal-only object, hold, then remove it.
        let p = FingerParams::default();
        let s = sea();
        let o = side();
        let cfg = SolveConfig::default();
        let obj = distal_only_object();
        let setups = single(p.clone());
        let sched = ramp_schedule(0.0, 8.0, cfg.excursion_step, 0, 0);
        let sim = simulate_grasp(
            &setups,
            &obj,
            &[sched],
            Strategy::Nominal,
            &s,
            &o,
            &SimOptions::default(),
        )
        .unwrap();
        let sig = &sim.signals[0];
        let n = sig.len() - 1;
        let hold = FingerState::from_angles(
            sig.truth.theta1[n],
            sig.truth.theta2[n],
            sig.x[n],
            &p,
            &s,
        );
        let pins = Pins { theta1: Some(hold.theta1), theta2: Some(hold.theta2) };
        let ctx = HoldContext {
            params: p.clone(),
            sea: s,
            orient: o,
            cons: ContactConstraintSet {
                circle: Some(setups[0].circle_local(&obj, 0.0)),
                pins,
                ..ContactConstraintSet::free()
            },
            hold,
            solve: cfg,
        };
        let base = ctx.hold_signal(0.5, 1000.0);
        let ev = DisturbanceEvent {
            t_start: 0.1,
            t_end: 0.25,
            kind: DisturbanceKind::SupportLoss,
            magnitude: 0.0,
        };
        let out = inject_disturbance(&ctx, &base, &ev).unwrap();
        let free = ContactConstraintSet::free();
        let target = solve_step(hold.x, &hold, &free, &p, &s, &o, &cfg).unwrap();
        assert!(target.tension < hold.tension, "free value must be below held tension");
        // monotone decay onto the target
        for i in 101..base.len() {
            assert!(out.tension[i] <= out.tension[i - 1] + 1e-12);
        }
        let end = *out.tension.last().unwrap();
        assert!((end - target.tension).abs() <= 0.02 * (hold.tension - target.tension));
    }

    #[test]
    fn noise_is_seeded_zero_mean_and_optional() {
        let (_, base) = preloaded_hold(2.5);
        let clean = synthesize_noise(&base, 0.0, 42).unwrap();
        assert_eq!(clean, base);
        let a = synthesize_noise(&base, 0.2, 42).unwrap();
        let b = synthesize_noise(&base, 0.2, 42).unwrap();
        assert_eq!(a, b, "same seed must reproduce byte-identical output");
        let c = synthesize_noise(&base, 0.2, 43).unwrap();
        assert_ne!(a, c);
        let n = base.len() as f64;
        let mean: f64 =
            a.tension.iter().zip(&base.tension).map(|(x, y)| x - y).sum::<f64>() / n;
        assert!(mean.abs() <= 3.0 * 0.2 / n.sqrt(), "mean {mean} outside ±3σ/√n");
    }

    #[test]
    fn disturbance_requires_hold_phase_and_preload() {
        let (ctx, base) = preloaded_hold(2.5);
        let ev = DisturbanceEvent {
            t_start: 0.1,
            t_end: 0.9, // beyond the signal
            kind: DisturbanceKind::ForcedExtension,
            magnitude: 0.1,
        };
        assert!(inject_disturbance(&ctx, &base, &ev).is_err());
        let bad = DisturbanceEvent { t_start: 0.3, t_end: 0.1, ..ev };
        assert!(bad.validate().is_err());
        // a ramping segment is not a hold
        let p = FingerParams::default();
        let mut ramp = base.clone();
        for (i, x) in ramp.x.iter_mut().enumerate() {
            *x = ctx.hold.x + i as f64 * 0.01;
        }
        let ev2 = DisturbanceEvent { t_start: 0.1, t_end: 0.3, ..ev };
        let _ = p;
        assert!(inject_disturbance(&ctx, &ramp, &ev2).is_err());
    }
}
