//! Quasi-static simulator and proprioceptive estimation stack for
//! tendon-driven underactuated fingers with series elastic actuation.
//!
//! The crate models a planar two-joint (or single-joint) finger whose flexion
//! is driven by one tendon through an SEA, finds per-excursion equilibria by
//! constrained potential-energy minimization, synthesizes 1 kHz tension
//! signals under object contact, and recovers contact events, joint angles,
//! object stiffness, disturbances, and object identity from tension alone.

pub mod config;
pub mod control;
pub mod io;
pub mod scenario;
pub mod detect;
pub mod energy;
pub mod error;
pub mod object;
pub mod params;
pub mod recognize;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use params::{FingerParams, FingerState, HandOrientation, SeaParams, G_STD};
