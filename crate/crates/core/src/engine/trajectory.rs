use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{FingerState, Hand};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandSample {
    /// s.
    pub time: f64,
    /// Fingertip positions in finger order, m.
    pub fingers: [Vec3; 5],
}

/// Piecewise-linear fingertip trajectories.
///
/// Velocities are the slope of the active segment. Queries before the first
/// or at/after the last sample clamp to the endpoint with zero velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandTrajectory {
    samples: Vec<HandSample>,
}

impl HandTrajectory {
    /// Samples must be non-empty, finite, and strictly increasing in time.
    /// Errors name the offending sample index.
    pub fn new(samples: Vec<HandSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("trajectory", "no samples"));
        }
        for (i, s) in samples.iter().enumerate() {
            let finite =
                s.time.is_finite() && s.fingers.iter().all(|p| p.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(Error::config(
                    "trajectory",
                    alloc::format!("sample {i} is not finite"),
                ));
            }
            if i > 0 && !(s.time > samples[i - 1].time) {
                return Err(Error::config(
                    "trajectory",
                    alloc::format!("sample {i}: time {} does not increase", s.time),
                ));
            }
        }
        Ok(Self { samples })
    }

    /// A hand that never moves.
    pub fn stationary(fingers: [Vec3; 5]) -> Self {
        Self {
            samples: alloc::vec![HandSample { time: 0.0, fingers }],
        }
    }

    pub fn samples(&self) -> &[HandSample] {
        &self.samples
    }

    pub fn at(&self, time: f64) -> Hand {
        let first = &self.samples[0];
        let last = &self.samples[self.samples.len() - 1];
        let hold = |s: &HandSample| Hand {
            fingers: s.fingers.map(|position| FingerState {
                position,
                velocity: Vec3::zeros(),
            }),
        };
        if time < first.time {
            return hold(first);
        }
        if time >= last.time {
            return hold(last);
        }
        // first sample strictly after `time`
        let next = self.samples.partition_point(|s| s.time <= time);
        let a = &self.samples[next - 1];
        let b = &self.samples[next];
        let span = b.time - a.time;
        let frac = (time - a.time) / span;
        let mut hand = Hand::default();
        for (i, f) in hand.fingers.iter_mut().enumerate() {
            let delta = b.fingers[i] - a.fingers[i];
            f.position = a.fingers[i] + delta * frac;
            f.velocity = delta / span;
        }
        hand
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(time: f64, z: f64) -> HandSample {
        HandSample {
            time,
            fingers: [Vec3::new(0.0, 0.0, z); 5],
        }
    }

    #[test]
    fn interpolates_and_differentiates() {
        let tr = HandTrajectory::new(alloc::vec![sample(0.0, 0.2), sample(1.0, 0.0)]).unwrap();
        let h = tr.at(0.25);
        assert_relative_eq!(h.fingers[2].position.z, 0.15, epsilon = 1e-15);
        assert_relative_eq!(h.fingers[2].velocity.z, -0.2, epsilon = 1e-15);
        let mid = tr.at(0.5);
        assert_relative_eq!(mid.fingers[0].position.z, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn clamps_outside_the_samples() {
        let tr = HandTrajectory::new(alloc::vec![sample(1.0, 0.2), sample(2.0, 0.0)]).unwrap();
        let before = tr.at(0.0);
        assert_eq!(before.fingers[0].position.z, 0.2);
        assert_eq!(before.fingers[0].velocity, Vec3::zeros());
        let after = tr.at(5.0);
        assert_eq!(after.fingers[4].position.z, 0.0);
        assert_eq!(after.fingers[4].velocity, Vec3::zeros());
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(HandTrajectory::new(alloc::vec![]).is_err());
        let e = HandTrajectory::new(alloc::vec![
            sample(0.0, 0.0),
            sample(1.0, 0.0),
            sample(1.0, 0.0)
        ])
        .unwrap_err();
        assert!(alloc::format!("{e}").contains("sample 2"));
        assert!(HandTrajectory::new(alloc::vec![sample(f64::NAN, 0.0)]).is_err());
    }
}
