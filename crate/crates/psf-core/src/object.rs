//! Object models and circle–segment contact geometry in the finger plane.

use serde::{Deserialize, Serialize};

use crate::energy::{dot, perp, rot};
use crate::params::FingerParams;

/// Object stiffness: perfectly rigid, or a linear spring per contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stiffness {
    Rigid,
    /// Linear contact spring constant k_obj (N/mm).
    Soft(f64),
}

/// Object mobility: anchored, or free to translate along a line against a
/// static breakaway resistance (tabletop friction stand-in). A frictionless
/// free slider would produce zero tension deviation at first touch, making
/// contact detection physically impossible, so the resistance is part of the
/// model rather than an option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mobility {
    Fixed,
    Line {
        /// Unit direction of admissible translation in the hand frame.
        dir: [f64; 2],
        /// Static resistance to motion along the line (N).
        breakaway: f64,
    },
}

/// A circular object cross-section in the hand frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    /// Circle center at zero displacement (hand frame, mm).
    pub center: [f64; 2],
    /// Circle radius (mm).
    pub radius: f64,
    pub stiffness: Stiffness,
    pub mobility: Mobility,
}

impl ObjectModel {
    pub fn rigid_fixed(center: [f64; 2], radius: f64) -> Self {
        Self { center, radius, stiffness: Stiffness::Rigid, mobility: Mobility::Fixed }
    }

    pub fn soft_fixed(center: [f64; 2], radius: f64, k_obj: f64) -> Self {
        Self { center, radius, stiffness: Stiffness::Soft(k_obj), mobility: Mobility::Fixed }
    }

    /// Center after sliding `s` mm along the mobility line.
    pub fn center_at(&self, s: f64) -> [f64; 2] {
        match self.mobility {
            Mobility::Fixed => self.center,
            Mobility::Line { dir, .. } => {
                [self.center[0] + s * dir[0], self.center[1] + s * dir[1]]
            }
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.radius > 0.0) {
            return Err(crate::Error::InvalidParams(format!(
                "object radius = {} must be > 0",
                self.radius
            )));
        }
        if let Stiffness::Soft(k) = self.stiffness {
            if !(k > 0.0) {
                return Err(crate::Error::InvalidParams(format!("k_obj = {} must be > 0", k)));
            }
        }
        if let Mobility::Line { dir, breakaway } = self.mobility {
            let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(crate::Error::InvalidParams(format!(
                    "mobility direction must be unit length (got {})",
                    n
                )));
            }
            if breakaway < 0.0 {
                return Err(crate::Error::InvalidParams("breakaway must be ≥ 0".into()));
            }
        }
        Ok(())
    }
}

/// Circle expressed in one finger's base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleLocal {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Which phalanx a contact involves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phalanx {
    Proximal,
    Distal,
}

/// Per-phalanx constraint mode fed into the quasi-static solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactMode {
    /// No contact consideration for this phalanx.
    Inactive,
    /// Rigid non-penetration inequality (pre-stick or kinetic slide).
    RigidBarrier,
    /// Quadratic penalty `½·k_eff·d²` on penetration depth `d`.
    Soft { k_eff: f64 },
}

/// Joint pins from latched rigid contacts. A loaded rigid contact sticks:
/// proximal contact pins the MCP, distal contact pins both joints (the
/// paper's "distal contact halts finger motion"). Pins persist while the
/// actuation advances — the contact only presses harder — and release on
/// explicit events (support loss, forced extension, object slide).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pins {
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
}

/// Contact situation one finger's solve must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactConstraintSet {
    /// Obstacle in the finger base frame, if any.
    pub circle: Option<CircleLocal>,
    pub prox: ContactMode,
    pub dist: ContactMode,
    pub pins: Pins,
}

impl ContactConstraintSet {
    /// Free flexion: no object, no pins.
    pub fn free() -> Self {
        Self {
            circle: None,
            prox: ContactMode::Inactive,
            dist: ContactMode::Inactive,
            pins: Pins::default(),
        }
    }

    pub fn is_free(&self) -> bool {
        self.circle.is_none() && self.pins == Pins::default()
    }
}

/// Observed contact state of one phalanx at a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub phalanx: Phalanx,
    /// Penetration depth (mm); 0 for a rigid contact at equilibrium.
    pub penetration: f64,
    /// Contact point on the phalanx segment (finger frame, mm).
    pub point: [f64; 2],
}

/// Endpoints of a phalanx segment plus the data needed for contact
/// derivatives.
#[derive(Debug, Clone, Copy)]
pub struct PhalanxSegment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Pivot of the θ2 rotation (the PIP position); `None` for segments that
    /// only rotate with θ1.
    pub pip: Option<[f64; 2]>,
}

/// Proximal phalanx segment at the given flexion angles.
pub fn prox_segment(theta1: f64, p: &FingerParams) -> PhalanxSegment {
    let th1 = p.theta_i1 + theta1;
    PhalanxSegment { a: [0.0, 0.0], b: rot(th1, [p.len_prox, 0.0]), pip: None }
}

/// Distal phalanx segment. For a single-joint finger the only phalanx
/// carries distal semantics and rotates purely with θ1.
pub fn dist_segment(theta1: f64, theta2: f64, p: &FingerParams) -> PhalanxSegment {
    if p.is_single_joint() {
        return prox_segment(theta1, p);
    }
    let th1 = p.theta_i1 + theta1;
    let tha = th1 + p.theta_i2 + theta2;
    let pip = rot(th1, p.l1);
    let tip = rot(tha, [p.len_dist, 0.0]);
    PhalanxSegment { a: pip, b: [pip[0] + tip[0], pip[1] + tip[1]], pip: Some(pip) }
}

/// Closest point on segment `[a, b]` to `c`, with its parameter `t ∈ [0,1]`.
pub fn closest_point(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> ([f64; 2], f64) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = dot(ab, ab);
    if len2 <= f64::EPSILON {
        return (a, 0.0);
    }
    let t = (dot([c[0] - a[0], c[1] - a[1]], ab) / len2).clamp(0.0, 1.0);
    ([a[0] + t * ab[0], a[1] + t * ab[1]], t)
}

/// Signed gap between a phalanx segment and a circle: distance from the
/// center to the segment minus the radius. Negative values are penetration.
pub fn gap(seg: &PhalanxSegment, circle: &CircleLocal) -> f64 {
    let (pt, _) = closest_point(seg.a, seg.b, circle.center);
    let d = [circle.center[0] - pt[0], circle.center[1] - pt[1]];
    dot(d, d).sqrt() - circle.radius
}

/// Gap plus its gradient with respect to `(θ1, θ2)` and the contact point.
///
/// The closest material point moves with joint velocities `∂p/∂θ1 = perp(p)`
/// (rotation about the MCP at the origin) and, for distal segments,
/// `∂p/∂θ2 = perp(p − pip)` (rotation about the PIP); the envelope theorem
/// removes any dependence on the sliding parameter `t`.
pub fn gap_with_grad(seg: &PhalanxSegment, circle: &CircleLocal) -> (f64, [f64; 2], [f64; 2]) {
    let (pt, _) = closest_point(seg.a, seg.b, circle.center);
    let d = [circle.center[0] - pt[0], circle.center[1] - pt[1]];
    let dist = dot(d, d).sqrt();
    let g = dist - circle.radius;
    if dist <= 1e-12 {
        // center on the segment: direction undefined, gradient zeroed
        return (g, [0.0, 0.0], pt);
    }
    let u = [d[0] / dist, d[1] / dist];
    let dp1 = perp(pt);
    let g1 = -dot(u, dp1);
    let g2 = match seg.pip {
        Some(pip) => -dot(u, perp([pt[0] - pip[0], pt[1] - pip[1]])),
        None => 0.0,
    };
    (g, [g1, g2], pt)
}

/// Contact records for both phalanges at a configuration (entries present
/// when the phalanx touches or penetrates the circle within `tol`).
pub fn contact_records(
    theta1: f64,
    theta2: f64,
    p: &FingerParams,
    circle: &CircleLocal,
    tol: f64,
) -> [Option<ContactRecord>; 2] {
    let mut out = [None, None];
    if !p.is_single_joint() {
        let seg = prox_segment(theta1, p);
        let (g, _, pt) = gap_with_grad(&seg, circle);
        if g <= tol {
            out[0] = Some(ContactRecord {
                phalanx: Phalanx::Proximal,
                penetration: (-g).max(0.0),
                point: pt,
            });
        }
    }
    let seg = dist_segment(theta1, theta2, p);
    let (g, _, pt) = gap_with_grad(&seg, circle);
    if g <= tol {
        out[1] = Some(ContactRecord {
            phalanx: Phalanx::Distal,
            penetration: (-g).max(0.0),
            point: pt,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closest_point_cases() {
        let (p, t) = closest_point([0.0, 0.0], [10.0, 0.0], [5.0, 3.0]);
        assert_eq!(p, [5.0, 0.0]);
        assert_relative_eq!(t, 0.5);
        let (p, t) = closest_point([0.0, 0.0], [10.0, 0.0], [-4.0, 3.0]);
        assert_eq!(p, [0.0, 0.0]);
        assert_eq!(t, 0.0);
        let (p, t) = closest_point([0.0, 0.0], [10.0, 0.0], [14.0, -2.0]);
        assert_eq!(p, [10.0, 0.0]);
        assert_eq!(t, 1.0);
    }

    #[test]
    fn gap_sign_convention() {
        let p = FingerParams::default();
        let seg = prox_segment(0.0, &p); // along +x, length 45
        let c = CircleLocal { center: [20.0, 30.0], radius: 25.0 };
        assert_relative_eq!(gap(&seg, &c), 5.0, epsilon = 1e-12);
        let c2 = CircleLocal { center: [20.0, 20.0], radius: 25.0 };
        assert_relative_eq!(gap(&seg, &c2), -5.0, epsilon = 1e-12);
    }

    #[test]
    fn gap_gradient_matches_finite_differences() {
        let p = FingerParams::default();
        let c = CircleLocal { center: [50.0, 28.0], radius: 24.0 };
        let h = 1e-7;
        for &(t1, t2) in &[(0.2, 0.1), (0.5, 0.3), (0.8, 0.6), (0.1, 0.9)] {
            let seg = dist_segment(t1, t2, &p);
            let (_, grad, _) = gap_with_grad(&seg, &c);
            let gp = gap(&dist_segment(t1 + h, t2, &p), &c);
            let gm = gap(&dist_segment(t1 - h, t2, &p), &c);
            assert_relative_eq!(grad[0], (gp - gm) / (2.0 * h), epsilon = 1e-5);
            let gp = gap(&dist_segment(t1, t2 + h, &p), &c);
            let gm = gap(&dist_segment(t1, t2 - h, &p), &c);
            assert_relative_eq!(grad[1], (gp - gm) / (2.0 * h), epsilon = 1e-5);
        }
    }

    #[test]
    fn single_joint_distal_semantics() {
        let thumb = FingerParams::thumb();
        let seg = dist_segment(0.3, 0.0, &thumb);
        let ps = prox_segment(0.3, &thumb);
        assert_eq!(seg.a, ps.a);
        assert_eq!(seg.b, ps.b);
        assert!(seg.pip.is_none());
        // θ2 never moves a single-joint finger's phalanx
        let c = CircleLocal { center: [40.0, 30.0], radius: 10.0 };
        let (_, grad, _) = gap_with_grad(&seg, &c);
        assert_eq!(grad[1], 0.0);
    }

    #[test]
    fn mobile_center_translates_along_line() {
        let o = ObjectModel {
            center: [60.0, 0.0],
            radius: 25.0,
            stiffness: Stiffness::Rigid,
            mobility: Mobility::Line { dir: [1.0, 0.0], breakaway: 3.0 },
        };
        assert_eq!(o.center_at(2.5), [62.5, 0.0]);
        o.validate().unwrap();
        let bad = ObjectModel {
            mobility: Mobility::Line { dir: [1.0, 1.0], breakaway: 3.0 },
            ..o
        };
        assert!(bad.validate().is_err());
    }
}
