use serde::{Deserialize, Serialize};

const STD_FLOOR: f64 = 1e-12;

/// Affine map of the target to zero mean / unit variance, fit on training targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetStandardizer {
    pub mean: f64,
    pub std: f64,
}

impl TargetStandardizer {
    pub const IDENTITY: TargetStandardizer = TargetStandardizer { mean: 0.0, std: 1.0 };

    /// Population mean and standard deviation; the deviation is floored at 1e-12.
    pub fn fit(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::IDENTITY;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        TargetStandardizer {
            mean,
            std: var.sqrt().max(STD_FLOOR),
        }
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}
