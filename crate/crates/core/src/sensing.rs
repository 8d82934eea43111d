//! Motion-capture emulation: fixed-rate pose frames with seeded Gaussian
//! noise and a whole-frame delay line.
//!
//! Each body draws from its own ChaCha stream derived from the run seed, so
//! adding a body never changes another body's noise.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tether::TetherForce;
use crate::{Quat, Vec3};

const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MocapConfig {
    /// Hz.
    pub rate: f64,
    /// Per-axis position noise, m.
    pub position_noise_std: f64,
    /// Per-axis small-rotation noise, rad.
    pub attitude_noise_std: f64,
    /// Whole-frame delay, s. Must be a multiple of the sample period.
    pub latency: f64,
    /// Relative noise on the simulated tension measurement (0 disables).
    #[serde(default)]
    pub tension_noise_std: f64,
}

impl Default for MocapConfig {
    fn default() -> Self {
        Self {
            rate: 100.0,
            position_noise_std: 0.0005,
            attitude_noise_std: 0.2_f64.to_radians(),
            latency: 0.01,
            tension_noise_std: 0.0,
        }
    }
}

impl MocapConfig {
    pub fn noiseless() -> Self {
        Self {
            position_noise_std: 0.0,
            attitude_noise_std: 0.0,
            latency: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::dynamics::positive("rate", self.rate)?;
        let fields = [
            ("position_noise_std", self.position_noise_std),
            ("attitude_noise_std", self.attitude_noise_std),
            ("latency", self.latency),
            ("tension_noise_std", self.tension_noise_std),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        self.latency_samples()?;
        Ok(())
    }

    /// Latency as a whole number of sample periods.
    pub fn latency_samples(&self) -> Result<usize> {
        let samples = self.latency * self.rate;
        let rounded = libm::round(samples);
        if (samples - rounded).abs() > GRID_TOLERANCE {
            return Err(Error::config(
                "latency",
                alloc::format!("{} s is not a multiple of the sample period", self.latency),
            ));
        }
        Ok(rounded as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub position: Vec3,
    pub orientation: Quat,
}

/// Ground truth handed to the emulator.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldPose {
    pub drones: Vec<BodyPose>,
    pub fingers: [Vec3; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MocapFrame {
    /// Sample index of the capture instant; consecutive frames differ by one.
    pub sequence: i64,
    /// Capture time, `sequence / rate`, s.
    pub timestamp: f64,
    pub drones: Vec<BodyPose>,
    pub fingers: [Vec3; 5],
}

impl MocapFrame {
    /// Frame built straight from ground truth, bypassing noise and delay.
    pub fn exact(truth: &WorldPose, sequence: i64, rate: f64) -> Self {
        Self {
            sequence,
            timestamp: sequence as f64 / rate,
            drones: truth.drones.clone(),
            fingers: truth.fingers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameVelocities {
    pub drones: Vec<Vec3>,
    pub fingers: [Vec3; 5],
}

/// Velocity estimate from two consecutive frames: `(p2 - p1) * rate`.
pub fn finite_difference_velocity(
    previous: &MocapFrame,
    current: &MocapFrame,
    rate: f64,
) -> Result<FrameVelocities> {
    if current.sequence != previous.sequence + 1 {
        return Err(Error::Sequencing {
            expected: (previous.sequence + 1) as u64,
            got: current.sequence as u64,
        });
    }
    if current.drones.len() != previous.drones.len() {
        return Err(Error::Domain("frames track different drone counts".into()));
    }
    let drones = previous
        .drones
        .iter()
        .zip(&current.drones)
        .map(|(a, b)| (b.position - a.position) * rate)
        .collect();
    let mut fingers = [Vec3::zeros(); 5];
    for (i, v) in fingers.iter_mut().enumerate() {
        *v = (current.fingers[i] - previous.fingers[i]) * rate;
    }
    Ok(FrameVelocities { drones, fingers })
}

/// Stream ids: drones even, fingers odd, tension channels above 2^32.
fn drone_stream(i: usize) -> u64 {
    2 * i as u64
}

fn finger_stream(i: usize) -> u64 {
    2 * i as u64 + 1
}

fn tension_stream(i: usize) -> u64 {
    (1u64 << 32) + i as u64
}

/// Stateful emulator. Owns the noise streams and the delay line; `sample`
/// must be called once per grid tick in order.
#[derive(Debug, Clone)]
pub struct MocapEmulator {
    config: MocapConfig,
    seed: u64,
    latency: usize,
    delay: VecDeque<WorldPose>,
    next_sequence: Option<i64>,
    drone_noise: Vec<ChaCha8Rng>,
    finger_noise: Vec<ChaCha8Rng>,
    tension_noise: Vec<ChaCha8Rng>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian3(rng: &mut ChaCha8Rng, std: f64) -> Vec3 {
    let mut n = || -> f64 { StandardNormal.sample(rng) };
    Vec3::new(n(), n(), n()) * std
}

impl MocapEmulator {
    pub fn new(config: MocapConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            latency: config.latency_samples()?,
            config,
            seed,
            delay: VecDeque::new(),
            next_sequence: None,
            drone_noise: Vec::new(),
            finger_noise: (0..5).map(|i| stream(seed, finger_stream(i))).collect(),
            tension_noise: Vec::new(),
        })
    }

    pub fn config(&self) -> &MocapConfig {
        &self.config
    }

    /// Sample at grid time `time`. The returned frame describes the world
    /// `latency` earlier; before the line fills, the first observed state is
    /// assumed to have held.
    pub fn sample(&mut self, truth: &WorldPose, time: f64) -> Result<MocapFrame> {
        let ticks = time * self.config.rate;
        let index = libm::round(ticks);
        if !ticks.is_finite() || (ticks - index).abs() > GRID_TOLERANCE {
            return Err(Error::Scheduling(alloc::format!(
                "t = {time} s is off the {} Hz grid",
                self.config.rate
            )));
        }
        let index = index as i64;
        if let Some(expected) = self.next_sequence {
            if index != expected {
                return Err(Error::Scheduling(alloc::format!(
                    "expected sample {expected}, got {index}"
                )));
            }
        } else {
            for _ in 0..self.latency {
                self.delay.push_back(truth.clone());
            }
        }
        self.next_sequence = Some(index + 1);

        while self.drone_noise.len() < truth.drones.len() {
            let id = drone_stream(self.drone_noise.len());
            self.drone_noise.push(stream(self.seed, id));
        }

        self.delay.push_back(truth.clone());
        let mut seen = self
            .delay
            .pop_front()
            .expect("delay line holds the new sample");
        let cfg = self.config;
        if cfg.position_noise_std > 0.0 || cfg.attitude_noise_std > 0.0 {
            for (pose, rng) in seen.drones.iter_mut().zip(&mut self.drone_noise) {
                if cfg.position_noise_std > 0.0 {
                    pose.position += gaussian3(rng, cfg.position_noise_std);
                }
                if cfg.attitude_noise_std > 0.0 {
                    let tweak = Quat::from_scaled_axis(gaussian3(rng, cfg.attitude_noise_std));
                    pose.orientation = Quat::new_normalize((pose.orientation * tweak).into_inner());
                }
            }
        }
        if cfg.position_noise_std > 0.0 {
            for (p, rng) in seen.fingers.iter_mut().zip(&mut self.finger_noise) {
                *p += gaussian3(rng, cfg.position_noise_std);
            }
        }

        let sequence = index - self.latency as i64;
        Ok(MocapFrame {
            sequence,
            timestamp: sequence as f64 / cfg.rate,
            drones: seen.drones,
            fingers: seen.fingers,
        })
    }

    /// Tension reading for leash `channel`, with multiplicative noise along
    /// the leash when configured.
    pub fn measure_tension(&mut self, channel: usize, truth: &TetherForce) -> TetherForce {
        let std = self.config.tension_noise_std;
        if std == 0.0 || truth.tension == 0.0 {
            return *truth;
        }
        while self.tension_noise.len() <= channel {
            let id = tension_stream(self.tension_noise.len());
            self.tension_noise.push(stream(self.seed, id));
        }
        let z: f64 = StandardNormal.sample(&mut self.tension_noise[channel]);
        let scale = (1.0 + std * z).max(0.0);
        TetherForce {
            on_finger: truth.on_finger * scale,
            on_drone: truth.on_drone * scale,
            tension: truth.tension * scale,
            taut: truth.taut,
        }
    }
}
