//! Population comparison: empirical KL and JS divergences between thickness
//! samples, the Gaussian Fréchet distance between feature statistics, and
//! the noise floor those estimators show on two IID reference sets.

mod divergence;
mod floor;
mod frechet;

pub use divergence::{histogram, js_divergence, kl_divergence, knn_kl_divergence, HistogramSpec};
pub use floor::{
    noise_floor, noise_floors, population_thickness, render_and_estimate, EstimatorSettings,
    FloorResult, Metric, SINGLE_REPLICATE_WARNING,
};
pub use frechet::{
    extract_features, fit_gaussian_features, fit_gaussian_features_dir, frechet_distance,
    FeatureExtractor, GaussianFeatureStats,
};

use serde::{Deserialize, Serialize};

/// Per-image thickness estimates (pixels) from one population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThicknessSamples {
    pub values: Vec<f64>,
    pub source_tag: String,
}

impl ThicknessSamples {
    pub fn new(values: Vec<f64>, source_tag: impl Into<String>) -> Self {
        ThicknessSamples {
            values,
            source_tag: source_tag.into(),
        }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (n − 1 denominator); 0 for fewer than two
    /// values.
    pub fn std(&self) -> f64 {
        mean_std(&self.values).1
    }
}

/// Mean and sample standard deviation; the std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
