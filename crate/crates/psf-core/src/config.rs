//! TOML parameter configuration.
//!
//! A config file holds `[sea]`, `[hand]`, and `[finger.<name>]` sections.
//! Every field is optional: `[sea]`/`[hand]` start from the library defaults,
//! and each finger starts from a named `base` variant (default
//! `two-joint-late-pip`) with per-field overrides applied on top. Angles are
//! **degrees in files** and radians everywhere in the API; conversion happens
//! at parse/serialize time. Unknown keys are rejected so typos fail loudly,
//! and parse errors carry the file's line/column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FingerParams, HandOrientation, SeaParams};

/// A parsed, validated parameter set: SEA constants, hand orientation, and a
/// named finger catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct HandConfig {
    pub sea: SeaParams,
    pub orientation: HandOrientation,
    pub fingers: BTreeMap<String, FingerParams>,
}

impl Default for HandConfig {
    /// Default five-digit hand: four late-PIP two-joint fingers plus the
    /// single-joint thumb, sideways palm, default SEA.
    fn default() -> Self {
        let mut fingers = BTreeMap::new();
        for name in ["index", "middle", "ring", "little"] {
            fingers.insert(name.to_string(), FingerParams::two_joint_late_pip());
        }
        fingers.insert("thumb".to_string(), FingerParams::thumb());
        Self {
            sea: SeaParams::default(),
            orientation: HandOrientation::sideways(),
            fingers,
        }
    }
}

/// Looks up a built-in finger variant by kebab-case name.
pub fn builtin_params(name: &str) -> Option<FingerParams> {
    match name {
        "two-joint-late-pip" | "default" => Some(FingerParams::two_joint_late_pip()),
        "two-joint-early-pip" => Some(FingerParams::two_joint_early_pip()),
        "two-joint-shallow" => Some(FingerParams::two_joint_shallow()),
        "thumb" => Some(FingerParams::thumb()),
        _ => None,
    }
}

impl HandConfig {
    /// Parses a TOML config. All errors are [`Error::Config`]; syntax errors
    /// keep the TOML reporter's line/column message.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.assemble()
    }

    /// Reads and parses a TOML config file.
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Finger parameters by name: the config catalog first, then the
    /// built-in variants.
    pub fn finger(&self, name: &str) -> Result<FingerParams> {
        if let Some(p) = self.fingers.get(name) {
            return Ok(p.clone());
        }
        builtin_params(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown finger '{name}': not in the config and not a built-in variant"
            ))
        })
    }

    /// Serializes back to TOML (degrees at the boundary). The output parses
    /// to an equal config.
    pub fn to_toml(&self) -> String {
        let file = ConfigFile::from_config(self);
        // Serialization of plain scalar/map data cannot fail.
        toml::to_string_pretty(&file).expect("config serializes")
    }
}

// ---------------------------------------------------------------------------
// File-level representation (degrees)
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sea: Option<SeaFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hand: Option<HandFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    finger: BTreeMap<String, FingerFile>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_sea: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_sb_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cable_speed: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandFile {
    /// `sideways` | `palm-down` | `palm-up`; mutually exclusive with `g_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
    /// In-plane projection of the unit gravity direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_dir: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_mag: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerFile {
    /// Built-in variant the overrides start from (default
    /// `two-joint-late-pip`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preload1_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preload2_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset1_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset2_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rom1_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rom2_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lc1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lc2: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    len_prox: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    len_dist: Option<f64>,
}

impl ConfigFile {
    fn assemble(self) -> Result<HandConfig> {
        let mut sea = SeaParams::default();
        if let Some(s) = &self.sea {
            if let Some(v) = s.k_sea {
                sea.k_sea = v;
            }
            if let Some(v) = s.x_sb_max {
                sea.x_sb_max = v;
            }
            if let Some(v) = s.f_max {
                sea.f_max = v;
            }
            if let Some(v) = s.cable_speed {
                sea.cable_speed = v;
            }
        }
        sea.validate().map_err(|e| Error::Config(format!("[sea]: {e}")))?;

        let mut orientation = HandOrientation::sideways();
        if let Some(h) = &self.hand {
            match (&h.orientation, &h.g_dir) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "[hand]: give either `orientation` or `g_dir`, not both".into(),
                    ));
                }
                (Some(name), None) => {
                    orientation = match name.as_str() {
                        "sideways" => HandOrientation::sideways(),
                        "palm-down" => HandOrientation::palm_down(),
                        "palm-up" => HandOrientation::palm_up(),
                        other => {
                            return Err(Error::Config(format!(
                                "[hand]: unknown orientation '{other}' \
                                 (expected sideways | palm-down | palm-up)"
                            )));
                        }
                    };
                }
                (None, Some(d)) => orientation.g_dir = *d,
                (None, None) => {}
            }
            if let Some(g) = h.g_mag {
                orientation.g_mag = g;
            }
        }
        orientation.validate().map_err(|e| Error::Config(format!("[hand]: {e}")))?;

        let mut fingers = BTreeMap::new();
        for (name, ff) in &self.finger {
            let base_name = ff.base.as_deref().unwrap_or("two-joint-late-pip");
            let mut p = builtin_params(base_name).ok_or_else(|| {
                Error::Config(format!(
                    "[finger.{name}]: unknown base variant '{base_name}'"
                ))
            })?;
            if let Some(v) = ff.r1 {
                p.r1 = v;
            }
            if let Some(v) = ff.r2 {
                p.r2 = v;
            }
            if let Some(v) = ff.k1 {
                p.k1 = v;
            }
            if let Some(v) = ff.k2 {
                p.k2 = v;
            }
            if let Some(v) = ff.preload1_deg {
                p.theta_pre1 = v.to_radians();
            }
            if let Some(v) = ff.preload2_deg {
                p.theta_pre2 = v.to_radians();
            }
            if let Some(v) = ff.offset1_deg {
                p.theta_i1 = v.to_radians();
            }
            if let Some(v) = ff.offset2_deg {
                p.theta_i2 = v.to_radians();
            }
            if let Some(v) = ff.rom1_deg {
                p.rom1 = v.to_radians();
            }
            if let Some(v) = ff.rom2_deg {
                p.rom2 = v.to_radians();
            }
            if let Some(v) = ff.m1 {
                p.m1 = v;
            }
            if let Some(v) = ff.m2 {
                p.m2 = v;
            }
            if let Some(v) = ff.lc1 {
                p.lc1 = v;
            }
            if let Some(v) = ff.lc2 {
                p.lc2 = v;
            }
            if let Some(v) = ff.l1 {
                p.l1 = v;
            }
            if let Some(v) = ff.len_prox {
                p.len_prox = v;
            }
            if let Some(v) = ff.len_dist {
                p.len_dist = v;
            }
            p.validate()
                .map_err(|e| Error::Config(format!("[finger.{name}]: {e}")))?;
            fingers.insert(name.clone(), p);
        }

        Ok(HandConfig { sea, orientation, fingers })
    }

    fn from_config(cfg: &HandConfig) -> Self {
        let orientation = if cfg.orientation == HandOrientation::sideways() {
            Some("sideways".to_string())
        } else if cfg.orientation == HandOrientation::palm_down() {
            Some("palm-down".to_string())
        } else if cfg.orientation == HandOrientation::palm_up() {
            Some("palm-up".to_string())
        } else {
            None
        };
        let g_dir = if orientation.is_none() { Some(cfg.orientation.g_dir) } else { None };
        Self {
            sea: Some(SeaFile {
                k_sea: Some(cfg.sea.k_sea),
                x_sb_max: Some(cfg.sea.x_sb_max),
                f_max: Some(cfg.sea.f_max),
                cable_speed: Some(cfg.sea.cable_speed),
            }),
            hand: Some(HandFile { orientation, g_dir, g_mag: Some(cfg.orientation.g_mag) }),
            finger: cfg
                .fingers
                .iter()
                .map(|(name, p)| {
                    (
                        name.clone(),
                        FingerFile {
                            base: None,
                            r1: Some(p.r1),
                            r2: Some(p.r2),
                            k1: Some(p.k1),
                            k2: Some(p.k2),
                            preload1_deg: Some(p.theta_pre1.to_degrees()),
                            preload2_deg: Some(p.theta_pre2.to_degrees()),
                            offset1_deg: Some(p.theta_i1.to_degrees()),
                            offset2_deg: Some(p.theta_i2.to_degrees()),
                            rom1_deg: Some(p.rom1.to_degrees()),
                            rom2_deg: Some(p.rom2.to_degrees()),
                            m1: Some(p.m1),
                            m2: Some(p.m2),
                            lc1: Some(p.lc1),
                            lc2: Some(p.lc2),
                            l1: Some(p.l1),
                            len_prox: Some(p.len_prox),
                            len_dist: Some(p.len_dist),
                        },
                    )
                })
                .collect(),
        }
    }
}
