//! Resistance-meter noise: additive Gaussian noise followed by quantization.
//!
//! Each record draws from its own ChaCha stream selected by the record
//! index, so a record's noise depends only on `(seed, index)` and not on the
//! order records are generated in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::sensor_model::BEAM_COUNT;

/// Default meter resolution, ohm.
pub const LCR_QUANTIZATION_STEP: f64 = 1e-4;
/// Default Gaussian read noise, ohm.
pub const LCR_SIGMA: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub gaussian_sigma: f64,
    pub quantization_step: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            gaussian_sigma: 0.0,
            quantization_step: 0.0,
            seed: 0,
        }
    }

    /// Assumed bench-meter characteristics.
    pub fn lcr(seed: u64) -> Self {
        Self {
            gaussian_sigma: LCR_SIGMA,
            quantization_step: LCR_QUANTIZATION_STEP,
            seed,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma: sigma,
            quantization_step: 0.0,
            seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.gaussian_sigma == 0.0 && self.quantization_step == 0.0
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(format!(
                "noise sigma must be >= 0, got {}",
                self.gaussian_sigma
            ));
        }
        if !(self.quantization_step >= 0.0 && self.quantization_step.is_finite()) {
            return Err(format!(
                "quantization step must be >= 0, got {}",
                self.quantization_step
            ));
        }
        Ok(())
    }

    /// Noisy, quantized copy of `clean` for the record at `index`.
    pub fn apply(&self, index: u64, clean: [f64; BEAM_COUNT]) -> [f64; BEAM_COUNT] {
        if self.is_noiseless() {
            return clean;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        clean.map(|value| {
            let noisy = if self.gaussian_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                value + self.gaussian_sigma * z
            } else {
                value
            };
            quantize(noisy, self.quantization_step)
        })
    }
}

/// Rounds to the nearest multiple of `step`; `step = 0` is the identity.
pub fn quantize(value: f64, step: f64) -> f64 {
    if step > 0.0 {
        (value / step).round() * step
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_is_identity() {
        let clean = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(NoiseModel::none().apply(7, clean), clean);
        assert_eq!(quantize(0.123, 0.0), 0.123);
    }

    #[test]
    fn draws_depend_only_on_seed_and_index() {
        let model = NoiseModel::lcr(99);
        let clean = [1.0; 4];
        let forward: Vec<_> = (0..50).map(|i| model.apply(i, clean)).collect();
        let backward: Vec<_> = (0..50).rev().map(|i| model.apply(i, clean)).collect();
        for (i, row) in forward.iter().enumerate() {
            assert_eq!(*row, backward[49 - i]);
        }
        assert_ne!(model.apply(0, clean), model.apply(1, clean));
        assert_ne!(model.apply(0, clean), NoiseModel::lcr(100).apply(0, clean));
    }

    #[test]
    fn quantized_values_are_step_multiples() {
        let model = NoiseModel {
            gaussian_sigma: 0.0,
            quantization_step: 1e-4,
            seed: 1,
        };
        for k in 0..1000 {
            let value = 0.0123456 * k as f64;
            let q = model.apply(k, [value; 4])[0];
            let n = (q / 1e-4).round();
            assert_eq!(n * 1e-4, q);
            assert!((q - value).abs() <= 0.5e-4 + 1e-15);
        }
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(NoiseModel::gaussian(-1.0, 0).check().is_err());
        let mut m = NoiseModel::none();
        m.quantization_step = f64::NAN;
        assert!(m.check().is_err());
        assert!(NoiseModel::lcr(0).check().is_ok());
    }
}
