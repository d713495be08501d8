//! Deterministic core of a cybersickness experiment engine.
//!
//! Everything here is a pure function of its inputs (plus explicit seeds):
//! preset registry, environment generation, locomotion kinematics, effect
//! parameters, susceptibility test protocols, the session state machine and
//! the standardized study report. File formats, the CLI and the network
//! gateway live in the `csaf` crate.

#![no_std]

extern crate alloc;

pub mod environment;
pub mod locomotion;
pub mod math;
pub mod registry;
pub mod report;
pub mod runtime;
pub mod susceptibility;
pub mod vision;

pub use math::{Pose, PoseSample, Quat, Vec3};
