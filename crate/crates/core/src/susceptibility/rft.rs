use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, SusceptibilityError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RftConfig {
    pub frame_tilt: f64,
    /// Initial rod tilt away from vertical.
    pub rod_tilt: f64,
    pub repetitions_per_permutation: u32,
    /// Rod rotation per unit of joystick input, degrees.
    pub rod_step: f64,
}

impl Default for RftConfig {
    fn default() -> Self {
        RftConfig {
            frame_tilt: 18.0,
            rod_tilt: 27.0,
            repetitions_per_permutation: 4,
            rod_step: 1.0,
        }
    }
}

impl RftConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.frame_tilt) {
            return Err(SusceptibilityError::InvalidRft(
                "frame_tilt must be positive",
            ));
        }
        if !positive(self.rod_tilt) {
            return Err(SusceptibilityError::InvalidRft("rod_tilt must be positive"));
        }
        if self.repetitions_per_permutation == 0 {
            return Err(SusceptibilityError::InvalidRft(
                "repetitions_per_permutation must be at least 1",
            ));
        }
        if !self.rod_step.is_finite() {
            return Err(SusceptibilityError::InvalidRft("rod_step must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RftTrial {
    pub index: usize,
    pub frame_sign: i8,
    pub rod_sign: i8,
}

impl RftTrial {
    pub fn frame_angle(&self, cfg: &RftConfig) -> f64 {
        f64::from(self.frame_sign) * cfg.frame_tilt
    }

    pub fn rod_start(&self, cfg: &RftConfig) -> f64 {
        f64::from(self.rod_sign) * cfg.rod_tilt
    }
}

/// Every (frame, rod) sign permutation `repetitions_per_permutation` times,
/// in seeded random order.
pub fn generate_rft_trials(cfg: &RftConfig, seed: u64) -> Result<Vec<RftTrial>> {
    cfg.validate()?;
    let mut signs = Vec::new();
    for _ in 0..cfg.repetitions_per_permutation {
        for frame in [1i8, -1] {
            for rod in [1i8, -1] {
                signs.push((frame, rod));
            }
        }
    }
    signs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(signs
        .into_iter()
        .enumerate()
        .map(|(index, (frame_sign, rod_sign))| RftTrial {
            index,
            frame_sign,
            rod_sign,
        })
        .collect())
}

/// Maps an angle into (−90°, 90°]; a rod has no head or tail.
pub fn wrap_rod_angle(a: f64) -> f64 {
    a - 180.0 * libm::ceil((a - 90.0) / 180.0)
}

/// Rod being adjusted during one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodState {
    pub trial: usize,
    /// Degrees from the gravitational vertical.
    pub angle: f64,
    pub committed: bool,
}

impl RodState {
    pub fn start(trial: &RftTrial, cfg: &RftConfig) -> Self {
        RodState {
            trial: trial.index,
            angle: wrap_rod_angle(trial.rod_start(cfg)),
            committed: false,
        }
    }
}

pub fn rotate_rod(state: RodState, input: f64, cfg: &RftConfig) -> Result<RodState> {
    if state.committed {
        return Err(SusceptibilityError::AlreadyCommitted(state.trial));
    }
    Ok(RodState {
        angle: wrap_rod_angle(state.angle + input * cfg.rod_step),
        ..state
    })
}

/// Locks in the current rod angle as the participant's answer.
pub fn validate_rod(state: RodState) -> Result<(RodState, RftResponse)> {
    if state.committed {
        return Err(SusceptibilityError::AlreadyCommitted(state.trial));
    }
    let done = RodState {
        committed: true,
        ..state
    };
    Ok((
        done,
        RftResponse {
            trial: state.trial,
            final_rod_angle: state.angle,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RftResponse {
    pub trial: usize,
    pub final_rod_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RftResult {
    pub absolute_errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two trials.
    pub std: f64,
}

/// Absolute deviation of each response from vertical, with mean and
/// sample standard deviation. Responses pair with trials by position.
pub fn score_rft(trials: &[RftTrial], responses: &[RftResponse]) -> Result<RftResult> {
    if trials.len() != responses.len() {
        return Err(SusceptibilityError::CountMismatch {
            trials: trials.len(),
            responses: responses.len(),
        });
    }
    let errors: Vec<f64> = responses
        .iter()
        .map(|r| wrap_rod_angle(r.final_rod_angle).abs())
        .collect();
    let n = errors.len();
    if n == 0 {
        return Ok(RftResult {
            absolute_errors: errors,
            mean: 0.0,
            std: 0.0,
        });
    }
    let mean = errors.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        let ss: f64 = errors.iter().map(|e| (e - mean) * (e - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    };
    Ok(RftResult {
        absolute_errors: errors,
        mean,
        std,
    })
}
