//! Simulation and control core for a swarm of tethered micro-quadrotors that
//! render per-finger force feedback.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and wall-clock timing live in the `swarmhaptic` companion crate.
//!
//! Module map:
//! - [`dynamics`]: rotor model, mixer and its inverse, rigid-body stepping.
//! - [`tether`]: elastic and inextensible leash forces.
//! - [`control`]: follow and tension controllers built on a cascaded
//!   position/attitude loop.
//! - [`scene`]: virtual surfaces, the hand, drone assignment, contact
//!   prediction and activation.
//! - [`sensing`]: motion-capture emulation with seeded noise and latency.
//! - [`engine`]: the fixed-step orchestrator, its log and metrics.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod scene;
pub mod sensing;
pub mod tether;

pub use error::{Error, Result};
pub use nalgebra;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;
