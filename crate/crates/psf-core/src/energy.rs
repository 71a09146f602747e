//! Tension law and potential-energy terms of the finger model.
//!
//! All functions are pure; angles in rad, lengths in mm, forces in N,
//! energies in N·mm.

use crate::error::{Error, Result};
use crate::params::{FingerParams, FingerState, HandOrientation, SeaParams};

/// Rotates `v` by `angle` (counter-clockwise, the flexion direction).
#[inline]
pub fn rot(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// 90° counter-clockwise rotation: the derivative of `rot(θ, v)` in θ.
#[inline]
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Tendon length drawn by flexing to `(theta1, theta2)`: `ℓ = r1·θ1 + r2·θ2`
/// (constant moment arms). Unchecked hot-path variant.
#[inline]
pub fn tendon_length_unchecked(theta1: f64, theta2: f64, p: &FingerParams) -> f64 {
    p.r1 * theta1 + p.r2 * theta2
}

/// Tendon length with range validation: both joints must lie within their
/// range of motion (`0 ≤ θ_ij + θ_j ≤ rom_j`).
pub fn tendon_length(theta1: f64, theta2: f64, p: &FingerParams) -> Result<f64> {
    check_rom(theta1, theta2, p)?;
    Ok(tendon_length_unchecked(theta1, theta2, p))
}

fn check_rom(theta1: f64, theta2: f64, p: &FingerParams) -> Result<()> {
    let a1 = p.theta_i1 + theta1;
    if !(-1e-12..=p.rom1 + 1e-12).contains(&a1) {
        return Err(Error::OutOfRange { what: "theta_i1 + theta1", value: a1, lo: 0.0, hi: p.rom1 });
    }
    let a2 = p.theta_i2 + theta2;
    if !(-1e-12..=p.rom2 + 1e-12).contains(&a2) {
        return Err(Error::OutOfRange { what: "theta_i2 + theta2", value: a2, lo: 0.0, hi: p.rom2 });
    }
    Ok(())
}

/// SEA tension law: `F = 2·k_sea·Δx_sb`.
pub fn sea_tension(dx_sb: f64, s: &SeaParams) -> Result<f64> {
    if !(0.0..=s.x_sb_max).contains(&dx_sb) {
        return Err(Error::OutOfRange { what: "dx_sb", value: dx_sb, lo: 0.0, hi: s.x_sb_max });
    }
    Ok(2.0 * s.k_sea * dx_sb)
}

/// Elastic energy: four SEA springs compressed by `(x − ℓ)/2` plus two
/// preloaded torsional springs per joint,
/// `E_e = 4·½·k_sea·Δx² + 2·½·k1·(θ_pre1+θ1)² + 2·½·k2·(θ_pre2+θ2)²`.
pub fn elastic_energy(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
) -> Result<f64> {
    let dx_sb = (x - tendon_length_unchecked(theta1, theta2, p)) / 2.0;
    if dx_sb < 0.0 {
        return Err(Error::OutOfRange { what: "dx_sb", value: dx_sb, lo: 0.0, hi: s.x_sb_max });
    }
    if dx_sb > s.x_sb_max {
        return Err(Error::OutOfRange { what: "dx_sb", value: dx_sb, lo: 0.0, hi: s.x_sb_max });
    }
    Ok(elastic_energy_unchecked(theta1, theta2, x, p, s))
}

#[inline]
pub(crate) fn elastic_energy_unchecked(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
) -> f64 {
    let dx_sb = (x - tendon_length_unchecked(theta1, theta2, p)) / 2.0;
    let a1 = p.theta_pre1 + theta1;
    let a2 = p.theta_pre2 + theta2;
    2.0 * s.k_sea * dx_sb * dx_sb + p.k1 * a1 * a1 + p.k2 * a2 * a2
}

/// Position of the proximal center of mass in the finger base frame.
#[inline]
pub fn com_prox(theta1: f64, p: &FingerParams) -> [f64; 2] {
    rot(p.theta_i1 + theta1, p.lc1)
}

/// Position of the distal center of mass in the finger base frame.
#[inline]
pub fn com_dist(theta1: f64, theta2: f64, p: &FingerParams) -> [f64; 2] {
    let th1 = p.theta_i1 + theta1;
    let tha = th1 + p.theta_i2 + theta2;
    let pip = rot(th1, p.l1);
    let c2 = rot(tha, p.lc2);
    [pip[0] + c2[0], pip[1] + c2[1]]
}

/// Gravitational energy (planar reduction): `E_g = −Σ mᵢ·g·(ĝ·pᵢ)`, where
/// `ĝ` is the in-plane gravity projection — displacing a mass along gravity
/// releases energy. Zero for a sideways palm (`ĝ = 0`).
pub fn gravitational_energy(
    theta1: f64,
    theta2: f64,
    p: &FingerParams,
    orient: &HandOrientation,
) -> f64 {
    if orient.g_dir == [0.0, 0.0] || (p.m1 == 0.0 && p.m2 == 0.0) {
        return 0.0;
    }
    let g = orient.g_mag;
    let mut e = 0.0;
    if p.m1 != 0.0 {
        e -= p.m1 * g * dot(orient.g_dir, com_prox(theta1, p));
    }
    if p.m2 != 0.0 {
        e -= p.m2 * g * dot(orient.g_dir, com_dist(theta1, theta2, p));
    }
    e
}

/// Total potential energy `E_Total = E_e + E_g`.
pub fn total_energy(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
    orient: &HandOrientation,
) -> Result<f64> {
    Ok(elastic_energy(theta1, theta2, x, p, s)? + gravitational_energy(theta1, theta2, p, orient))
}

#[inline]
pub(crate) fn total_energy_unchecked(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
    orient: &HandOrientation,
) -> f64 {
    elastic_energy_unchecked(theta1, theta2, x, p, s)
        + gravitational_energy(theta1, theta2, p, orient)
}

/// Analytic gradient of `E_Total` with respect to `(theta1, theta2)`:
/// `∂E/∂θj = −F·rj + 2·kj·(θ_prej+θj) + ∂E_g/∂θj`, with the gravity term
/// from the chain rule on the rotation matrices.
pub fn total_energy_gradient(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
    orient: &HandOrientation,
) -> [f64; 2] {
    let dx_sb = (x - tendon_length_unchecked(theta1, theta2, p)) / 2.0;
    let tension = 2.0 * s.k_sea * dx_sb;
    let mut g1 = -tension * p.r1 + 2.0 * p.k1 * (p.theta_pre1 + theta1);
    let mut g2 = -tension * p.r2 + 2.0 * p.k2 * (p.theta_pre2 + theta2);
    if orient.g_dir != [0.0, 0.0] && (p.m1 != 0.0 || p.m2 != 0.0) {
        let g = orient.g_mag;
        // A point r = R(θ)·v contributes −m·g·(ĝ·r); its θ-derivative is
        // −m·g·(ĝ·perp(r)).
        if p.m1 != 0.0 {
            g1 -= p.m1 * g * dot(orient.g_dir, perp(com_prox(theta1, p)));
        }
        if p.m2 != 0.0 {
            let th1 = p.theta_i1 + theta1;
            let tha = th1 + p.theta_i2 + theta2;
            let pip = rot(th1, p.l1);
            let c2 = rot(tha, p.lc2);
            let com = [pip[0] + c2[0], pip[1] + c2[1]];
            // θ1 rotates the whole chain about the MCP; θ2 only the distal
            // part about the PIP.
            g1 -= p.m2 * g * dot(orient.g_dir, perp(com));
            g2 -= p.m2 * g * dot(orient.g_dir, perp(c2));
        }
    }
    [g1, g2]
}

/// Convenience: equilibrium state fields from raw angles (shared arithmetic
/// path with `sea_tension`, see `FingerState::from_angles`).
pub fn state_from_angles(
    theta1: f64,
    theta2: f64,
    x: f64,
    p: &FingerParams,
    s: &SeaParams,
) -> FingerState {
    FingerState::from_angles(theta1, theta2, x, p, s)
}
