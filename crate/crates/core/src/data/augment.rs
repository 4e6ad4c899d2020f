//! The augmentation family used to build contrastive pairs.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationConfig {
    pub noise_sigma: f64,
    /// Each view is scaled by a factor drawn from `[1 − scale_jitter, 1 + scale_jitter]`.
    pub scale_jitter: f64,
    pub dropout_prob: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.2,
            scale_jitter: 0.2,
            dropout_prob: 0.1,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("augment.noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if !(self.scale_jitter >= 0.0 && self.scale_jitter.is_finite()) {
            return Err(Error::Config(format!("augment.scale_jitter must be >= 0, got {}", self.scale_jitter)));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::Config(format!(
                "augment.dropout_prob must be in [0, 1), got {}",
                self.dropout_prob
            )));
        }
        Ok(())
    }

    /// Writes one augmented view of `x` into `out`.
    pub fn view_into(&self, x: &[f64], rng: &mut Rng, out: &mut [f64]) {
        let scale = if self.scale_jitter > 0.0 {
            rng.random_range(1.0 - self.scale_jitter..=1.0 + self.scale_jitter)
        } else {
            1.0
        };
        for (o, &v) in out.iter_mut().zip(x) {
            let noise = if self.noise_sigma > 0.0 {
                self.noise_sigma * Distribution::<f64>::sample(&StandardNormal, rng)
            } else {
                0.0
            };
            let dropped = self.dropout_prob > 0.0 && rng.random::<f64>() < self.dropout_prob;
            *o = if dropped { 0.0 } else { v * scale + noise };
        }
    }
}

/// Two independently augmented views of the same feature vector.
pub fn augment_pair(x: &[f64], cfg: &AugmentationConfig, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; x.len()];
    let mut b = vec![0.0; x.len()];
    cfg.view_into(x, rng, &mut a);
    cfg.view_into(x, rng, &mut b);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn identity_when_everything_is_off() {
        let cfg = AugmentationConfig {
            noise_sigma: 0.0,
            scale_jitter: 0.0,
            dropout_prob: 0.0,
        };
        let x = [1.5, -2.0, 0.25];
        let (a, b) = augment_pair(&x, &cfg, &mut Rng::seed_from_u64(0));
        assert_eq!(a, x);
        assert_eq!(b, x);
    }

    #[test]
    fn heavy_dropout_zeroes_almost_everything() {
        let cfg = AugmentationConfig {
            noise_sigma: 0.1,
            scale_jitter: 0.1,
            dropout_prob: 0.99,
        };
        let mut rng = Rng::seed_from_u64(1);
        let x = vec![1.0; 32];
        let mut zeros = 0usize;
        let trials = 500;
        for _ in 0..trials {
            let (a, b) = augment_pair(&x, &cfg, &mut rng);
            zeros += a.iter().chain(&b).filter(|v| **v == 0.0).count();
        }
        let frac = zeros as f64 / (trials * 64) as f64;
        assert!(frac > 0.98, "{frac}");
    }

    #[test]
    fn seeded_views_are_reproducible_and_independent() {
        let cfg = AugmentationConfig::default();
        let x = [0.3, 0.1, -0.4, 2.0];
        let p1 = augment_pair(&x, &cfg, &mut Rng::seed_from_u64(42));
        let p2 = augment_pair(&x, &cfg, &mut Rng::seed_from_u64(42));
        assert_eq!(p1, p2);
        assert_ne!(p1.0, p1.1);
    }

    #[test]
    fn mean_view_converges_without_dropout() {
        let cfg = AugmentationConfig {
            noise_sigma: 0.5,
            scale_jitter: 0.3,
            dropout_prob: 0.0,
        };
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut rng = Rng::seed_from_u64(7);
        let n = 20_000;
        let mut sum = [0.0; 4];
        for _ in 0..n / 2 {
            let (a, b) = augment_pair(&x, &cfg, &mut rng);
            for j in 0..4 {
                sum[j] += a[j] + b[j];
            }
        }
        for j in 0..4 {
            let mean = sum[j] / n as f64;
            // Scale jitter adds spread proportional to |x|.
            let sd = (cfg.noise_sigma.powi(2) + (x[j] * cfg.scale_jitter).powi(2) / 3.0).sqrt();
            assert!((mean - x[j]).abs() < 3.0 * sd / (n as f64).sqrt(), "coord {j}: {mean}");
        }
    }

    #[test]
    fn invalid_dropout_rejected() {
        let cfg = AugmentationConfig {
            dropout_prob: 1.0,
            ..AugmentationConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
