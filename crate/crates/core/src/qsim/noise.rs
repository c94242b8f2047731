use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::QsimError;

/// Knobs for the imperfections the simulator models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    /// Apply per-spin T2 dephasing during free evolution.
    pub t2_enabled: bool,
    /// Systematic fractional over/under-rotation applied to every pulse.
    pub rotation_angle_error: f64,
    /// Standard deviation of an additional random fractional rotation error,
    /// drawn independently per pulse.
    #[serde(default)]
    pub angle_jitter: f64,
    pub seed: u64,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self { t2_enabled: false, rotation_angle_error: 0.0, angle_jitter: 0.0, seed: 0 }
    }
}

impl NoiseSettings {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), QsimError> {
        if !(self.rotation_angle_error.abs() < 1.0) {
            return Err(QsimError::InvalidNoise(format!(
                "rotation_angle_error must satisfy |eps| < 1, got {}",
                self.rotation_angle_error
            )));
        }
        if !(self.angle_jitter >= 0.0 && self.angle_jitter.is_finite()) {
            return Err(QsimError::InvalidNoise(format!("angle_jitter must be >= 0, got {}", self.angle_jitter)));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        !self.t2_enabled && self.rotation_angle_error == 0.0 && self.angle_jitter == 0.0
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Runtime noise source: settings plus the RNG stream they seed.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    settings: NoiseSettings,
    rng: ChaCha8Rng,
}

impl NoiseModel {
    pub fn new(settings: &NoiseSettings) -> Self {
        Self { settings: settings.clone(), rng: ChaCha8Rng::seed_from_u64(settings.seed) }
    }

    pub fn noiseless() -> Self {
        Self::new(&NoiseSettings::default())
    }

    pub fn settings(&self) -> &NoiseSettings {
        &self.settings
    }

    #[inline]
    pub fn t2_enabled(&self) -> bool {
        self.settings.t2_enabled
    }

    /// The angle a pulse with nominal `angle` actually rotates by.
    pub fn rotation_angle(&mut self, angle: f64) -> f64 {
        let mut factor = 1.0 + self.settings.rotation_angle_error;
        if self.settings.angle_jitter > 0.0 {
            let normal = Normal::new(0.0, self.settings.angle_jitter).expect("jitter validated as finite");
            factor += normal.sample(&mut self.rng);
        }
        angle * factor
    }
}
