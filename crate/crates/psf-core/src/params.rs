use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravitational acceleration (N/kg). With masses in kg and lengths
/// in mm, `m * G * height_mm` yields energy in N·mm directly.
pub const G_STD: f64 = 9.80665;

/// Series-elastic-actuator constants.
///
/// Tension follows `F = 2·k_sea·Δx_sb` (four parallel springs behind a
/// two-to-one moving pulley); `k_sea` is the constant of a single spring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaParams {
    /// Spring constant of one SEA spring (N/mm).
    pub k_sea: f64,
    /// Sliding-block travel limit (mm).
    pub x_sb_max: f64,
    /// Tension ceiling (N).
    pub f_max: f64,
    /// Cable excursion rate (mm/s).
    pub cable_speed: f64,
}

impl Default for SeaParams {
    /// Defaults hit the 49 N ceiling exactly at full block travel
    /// (2 · 2.45 · 10 = 49) and pull at 28.9 mm/s.
    fn default() -> Self {
        Self {
            k_sea: 2.45,
            x_sb_max: 10.0,
            f_max: 49.0,
            cable_speed: 28.9,
        }
    }
}

impl SeaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_sea > 0.0) {
            return Err(Error::InvalidParams(format!("k_sea = {} must be > 0", self.k_sea)));
        }
        if !(self.x_sb_max > 0.0) {
            return Err(Error::InvalidParams(format!("x_sb_max = {} must be > 0", self.x_sb_max)));
        }
        if !(self.cable_speed > 0.0) {
            return Err(Error::InvalidParams(format!("cable_speed = {} must be > 0", self.cable_speed)));
        }
        if 2.0 * self.k_sea * self.x_sb_max < self.f_max {
            return Err(Error::InvalidParams(format!(
                "2·k_sea·x_sb_max = {} cannot reach f_max = {}",
                2.0 * self.k_sea * self.x_sb_max,
                self.f_max
            )));
        }
        Ok(())
    }
}

/// Geometry, spring, and mass constants of one planar finger.
///
/// The finger lies along +x at rest and curls toward +y. Two torsional
/// springs act at each joint; `k1`, `k2` are *per-spring* constants, so the
/// joint stiffness is `2·k`. A single-joint finger (thumb) is expressed with
/// `rom2 = 0`; its only phalanx carries distal-contact semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerParams {
    /// Tendon moment arm at the MCP joint (mm/rad).
    pub r1: f64,
    /// Tendon moment arm at the PIP joint (mm/rad).
    pub r2: f64,
    /// Torsional spring constant per spring at MCP (N·mm/rad).
    pub k1: f64,
    /// Torsional spring constant per spring at PIP (N·mm/rad).
    pub k2: f64,
    /// Extension-spring preload angle at MCP (rad).
    pub theta_pre1: f64,
    /// Extension-spring preload angle at PIP (rad).
    pub theta_pre2: f64,
    /// Initial MCP offset (rad); flexion angles are measured relative to it.
    pub theta_i1: f64,
    /// Initial PIP offset (rad).
    pub theta_i2: f64,
    /// MCP range of motion (rad).
    pub rom1: f64,
    /// PIP range of motion (rad); 0 collapses the finger to a single joint.
    pub rom2: f64,
    /// Proximal phalanx mass (kg).
    pub m1: f64,
    /// Distal phalanx mass (kg).
    pub m2: f64,
    /// Proximal center of mass in the proximal phalanx frame (mm).
    pub lc1: [f64; 2],
    /// Distal center of mass in the distal phalanx frame (mm).
    pub lc2: [f64; 2],
    /// MCP→PIP link vector in the proximal phalanx frame (mm).
    pub l1: [f64; 2],
    /// Proximal phalanx length for contact geometry (mm).
    pub len_prox: f64,
    /// Distal phalanx length for contact geometry (mm).
    pub len_dist: f64,
}

impl Default for FingerParams {
    fn default() -> Self {
        Self::two_joint_late_pip()
    }
}

impl FingerParams {
    /// Default two-joint finger with the late-PIP preload condition
    /// (MCP 36°, PIP 32°): breakaway tensions 3.14 N (MCP) < 6.52 N (PIP)
    /// give sequential MCP-then-PIP actuation.
    pub fn two_joint_late_pip() -> Self {
        Self {
            r1: 8.0,
            r2: 6.0,
            k1: 20.0,
            k2: 35.0,
            theta_pre1: 36f64.to_radians(),
            theta_pre2: 32f64.to_radians(),
            theta_i1: 0.0,
            theta_i2: 0.0,
            rom1: std::f64::consts::FRAC_PI_2,
            rom2: std::f64::consts::FRAC_PI_2,
            m1: 0.010,
            m2: 0.008,
            lc1: [22.5, 0.0],
            lc2: [15.0, 0.0],
            l1: [45.0, 0.0],
            len_prox: 45.0,
            len_dist: 32.0,
        }
    }

    /// Early-PIP preload condition (MCP 28°, PIP 12°): both breakaway
    /// tensions equal 2.443 N, so the joints start near-simultaneously.
    pub fn two_joint_early_pip() -> Self {
        Self {
            theta_pre1: 28f64.to_radians(),
            theta_pre2: 12f64.to_radians(),
            ..Self::two_joint_late_pip()
        }
    }

    /// Shallow-preload variant (MCP 20°) used by disturbance scenarios:
    /// MCP breakaway 1.75 N puts a 2.5 N preload well past breakaway
    /// (θ1 ≈ 0.151 rad), leaving room for forced extension.
    pub fn two_joint_shallow() -> Self {
        Self {
            theta_pre1: 20f64.to_radians(),
            ..Self::two_joint_late_pip()
        }
    }

    /// Single-joint thumb: the IP joint plus one phalanx that carries
    /// distal-contact semantics.
    pub fn thumb() -> Self {
        Self {
            r1: 9.0,
            r2: 0.0,
            k1: 28.0,
            k2: 1.0,
            theta_pre1: 30f64.to_radians(),
            theta_pre2: 0.0,
            theta_i1: 0.0,
            theta_i2: 0.0,
            rom1: 80f64.to_radians(),
            rom2: 0.0,
            m1: 0.012,
            m2: 0.0,
            lc1: [25.0, 0.0],
            lc2: [0.0, 0.0],
            l1: [50.0, 0.0],
            len_prox: 50.0,
            len_dist: 0.0,
        }
    }

    /// True when the finger has only the MCP/IP joint (`rom2 == 0`).
    pub fn is_single_joint(&self) -> bool {
        self.rom2 == 0.0
    }

    /// Flexion bounds for `theta_j` relative to the offsets:
    /// `0 ≤ theta_ij + theta_j ≤ rom_j`.
    pub fn theta_bounds(&self) -> ([f64; 2], [f64; 2]) {
        (
            [-self.theta_i1, self.rom1 - self.theta_i1],
            [-self.theta_i2, self.rom2 - self.theta_i2],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0) {
            return Err(Error::InvalidParams(format!("r1 = {} must be > 0", self.r1)));
        }
        if self.r2 < 0.0 || (!self.is_single_joint() && self.r2 == 0.0) {
            return Err(Error::InvalidParams(format!(
                "r2 = {} must be > 0 for a two-joint finger",
                self.r2
            )));
        }
        if !(self.k1 > 0.0) || !(self.k2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "torsional constants must be > 0 (k1 = {}, k2 = {})",
                self.k1, self.k2
            )));
        }
        if !(self.rom1 > 0.0 && self.rom1 <= std::f64::consts::PI) {
            return Err(Error::InvalidParams(format!("rom1 = {} outside (0, π]", self.rom1)));
        }
        if !(self.rom2 >= 0.0 && self.rom2 <= std::f64::consts::PI) {
            return Err(Error::InvalidParams(format!("rom2 = {} outside [0, π]", self.rom2)));
        }
        if self.theta_pre1 < 0.0 || self.theta_pre2 < 0.0 {
            return Err(Error::InvalidParams("preload angles must be ≥ 0".into()));
        }
        if self.m1 < 0.0 || self.m2 < 0.0 {
            return Err(Error::InvalidParams("masses must be ≥ 0".into()));
        }
        if !(self.len_prox > 0.0) {
            return Err(Error::InvalidParams(format!("len_prox = {} must be > 0", self.len_prox)));
        }
        if !self.is_single_joint() && !(self.len_dist > 0.0) {
            return Err(Error::InvalidParams(format!(
                "len_dist = {} must be > 0 for a two-joint finger",
                self.len_dist
            )));
        }
        Ok(())
    }
}

/// Gravity expressed in the finger plane.
///
/// `g_dir` is the *in-plane projection* of the unit gravity vector; its norm
/// is ≤ 1, and the out-of-plane component carries no potential energy. A
/// sideways palm therefore stores `(0, 0)`, palm-down `(0, +1)` (gravity
/// pulls toward the flexion side) and palm-up `(0, −1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandOrientation {
    /// In-plane projection of the unit gravity direction (‖·‖ ≤ 1).
    pub g_dir: [f64; 2],
    /// Gravitational acceleration (N/kg).
    pub g_mag: f64,
}

impl HandOrientation {
    /// Palm facing sideways: gravity is orthogonal to the finger plane and
    /// contributes no potential energy.
    pub fn sideways() -> Self {
        Self { g_dir: [0.0, 0.0], g_mag: G_STD }
    }

    /// Palm facing down: gravity pulls toward the flexion direction.
    pub fn palm_down() -> Self {
        Self { g_dir: [0.0, 1.0], g_mag: G_STD }
    }

    /// Palm facing up: gravity opposes flexion.
    pub fn palm_up() -> Self {
        Self { g_dir: [0.0, -1.0], g_mag: G_STD }
    }

    /// Orientation as seen by a finger whose base frame is rotated by
    /// `angle` within the hand plane.
    pub fn rotated_into(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        // inverse rotation of g_dir into the finger frame
        Self {
            g_dir: [
                c * self.g_dir[0] + s * self.g_dir[1],
                -s * self.g_dir[0] + c * self.g_dir[1],
            ],
            g_mag: self.g_mag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = (self.g_dir[0] * self.g_dir[0] + self.g_dir[1] * self.g_dir[1]).sqrt();
        if n > 1.0 + 1e-9 {
            return Err(Error::InvalidParams(format!(
                "g_dir norm {} exceeds 1 (must be an in-plane projection of a unit vector)",
                n
            )));
        }
        if !(self.g_mag >= 0.0) {
            return Err(Error::InvalidParams(format!("g_mag = {} must be ≥ 0", self.g_mag)));
        }
        Ok(())
    }
}

impl Default for HandOrientation {
    fn default() -> Self {
        Self::sideways()
    }
}

/// One quasi-static equilibrium: joint angles, excursion, block travel and
/// the tension those imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerState {
    /// MCP flexion relative to `theta_i1` (rad).
    pub theta1: f64,
    /// PIP flexion relative to `theta_i2` (rad).
    pub theta2: f64,
    /// Tendon excursion (mm).
    pub x: f64,
    /// Sliding-block displacement (mm).
    pub dx_sb: f64,
    /// Cable tension (N).
    pub tension: f64,
}

impl FingerState {
    /// Builds the state from angles and excursion, deriving `dx_sb` and
    /// `tension` through the same arithmetic path as `sea_tension`
    /// (`dx_sb = (x − ℓ)/2`, `tension = 2·k_sea·dx_sb`).
    pub fn from_angles(theta1: f64, theta2: f64, x: f64, p: &FingerParams, s: &SeaParams) -> Self {
        let dx_sb = (x - crate::energy::tendon_length_unchecked(theta1, theta2, p)) / 2.0;
        Self {
            theta1,
            theta2,
            x,
            dx_sb,
            tension: 2.0 * s.k_sea * dx_sb,
        }
    }

    /// Rest state at zero excursion.
    pub fn rest() -> Self {
        Self { theta1: 0.0, theta2: 0.0, x: 0.0, dx_sb: 0.0, tension: 0.0 }
    }
}
