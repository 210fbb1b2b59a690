use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Which reconstruction objectives are summed into the training loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSet {
    pub spatial: bool,
    pub wavelet: bool,
    pub fourier: bool,
}

impl Default for LossSet {
    fn default() -> Self {
        LossSet {
            spatial: false,
            wavelet: false,
            fourier: true,
        }
    }
}

impl LossSet {
    /// The seven non-empty combinations, single terms first.
    pub const COMBINATIONS: [LossSet; 7] = [
        LossSet::new(true, false, false),
        LossSet::new(false, true, false),
        LossSet::new(false, false, true),
        LossSet::new(true, true, false),
        LossSet::new(true, false, true),
        LossSet::new(false, true, true),
        LossSet::new(true, true, true),
    ];

    pub const fn new(spatial: bool, wavelet: bool, fourier: bool) -> Self {
        LossSet {
            spatial,
            wavelet,
            fourier,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.spatial || self.wavelet || self.fourier)
    }
}

impl fmt::Display for LossSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.spatial {
            parts.push("spatial");
        }
        if self.wavelet {
            parts.push("wavelet");
        }
        if self.fourier {
            parts.push("fourier");
        }
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for LossSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = LossSet::new(false, false, false);
        for part in s.split(['+', ',']) {
            match part.trim().to_ascii_lowercase().as_str() {
                "spatial" => set.spatial = true,
                "wavelet" => set.wavelet = true,
                "fourier" => set.fourier = true,
                _ => {
                    return Err(Error::Unknown {
                        kind: "loss term",
                        name: part.to_string(),
                    })
                }
            }
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr0: f64,
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub patch_size: usize,
    pub seed: u64,
    /// Evaluate held-out PSNR every this many iterations (0 disables
    /// periodic evaluation; the first and last iterations are always
    /// evaluated).
    pub eval_period: usize,
    pub loss: LossSet,
    /// Use `Σ|z|` instead of `Σ(|re| + |im|)` for the Fourier term.
    pub fourier_modulus: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 1e-3,
            lr_min: 1e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
            iterations: 2000,
            batch_size: 8,
            patch_size: 64,
            seed: 0,
            eval_period: 100,
            loss: LossSet::default(),
            fourier_modulus: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.lr0) && pos(self.lr_min) && self.lr_min <= self.lr0) {
            return Err(Error::invalid("need 0 < lr_min <= lr0"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::invalid("betas must lie in [0, 1)"));
        }
        if !pos(self.eps) || !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid("eps must be positive and weight_decay non-negative"));
        }
        if self.batch_size == 0 || self.patch_size == 0 || self.patch_size % 4 != 0 {
            return Err(Error::invalid("batch_size must be positive and patch_size a positive multiple of 4"));
        }
        if self.loss.is_empty() {
            return Err(Error::invalid("at least one loss term must be enabled"));
        }
        Ok(())
    }
}

/// Combined configuration file: `{"model": {...}, "train": {...}}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_set_round_trips_through_text() {
        for s in LossSet::COMBINATIONS {
            assert_eq!(s.to_string().parse::<LossSet>().unwrap(), s);
        }
        assert!("perceptual".parse::<LossSet>().is_err());
    }

    #[test]
    fn run_config_accepts_partial_json() {
        let c: RunConfig = serde_json::from_str(r#"{"train": {"iterations": 5}}"#).unwrap();
        assert_eq!(c.train.iterations, 5);
        assert_eq!(c.model, ModelConfig::default());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"iters": 5}}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            lr_min: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
