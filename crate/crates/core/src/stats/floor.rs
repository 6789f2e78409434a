use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    extract_features, frechet_distance, js_divergence, kl_divergence, mean_std, FeatureExtractor,
    GaussianFeatureStats, HistogramSpec, ThicknessSamples,
};
use crate::morphology::{self, ThicknessEstimate};
use crate::phantom::{PhantomLabel, SimConfig};
use crate::raster;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const SINGLE_REPLICATE_WARNING: &str =
    "single replicate: spread across replicates is undefined and reported as 0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Kl,
    Js,
    #[serde(rename = "ffd")]
    Frechet,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Kl => "kl",
            Metric::Js => "js",
            Metric::Frechet => "ffd",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "kl" => Ok(Metric::Kl),
            "js" => Ok(Metric::Js),
            "ffd" | "frechet" => Ok(Metric::Frechet),
            other => Err(Error::validation(format!(
                "unknown metric {other:?} (expected kl, js or ffd)"
            ))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise floor of one metric: its value on pairs of IID reference sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorResult {
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub replicates: usize,
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl FloorResult {
    /// `mean + sigmas·std`, the level a candidate must exceed to count as
    /// distinguishable from the reference.
    pub fn threshold(&self, sigmas: f64) -> f64 {
        self.mean + sigmas * self.std
    }
}

/// Renders one image and estimates its center thickness.
pub fn render_and_estimate(
    config: &SimConfig,
    seed: u64,
    search_radius: f64,
) -> Result<(PhantomLabel, ThicknessEstimate)> {
    let a = raster::render(config, seed)?;
    let est = morphology::estimate_image(&a.image, config.threshold, search_radius)?;
    Ok((a.label, est))
}

/// Valid thickness estimates of `n` images drawn with seeds
/// `derive_seed(set_seed, i)`, in index order.
pub fn population_thickness(
    config: &SimConfig,
    n: usize,
    set_seed: u64,
    search_radius: f64,
) -> Result<ThicknessSamples> {
    let est = (0..n)
        .into_par_iter()
        .map(|i| render_and_estimate(config, derive_seed(set_seed, i as u64), search_radius))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThicknessSamples::new(
        est.into_iter()
            .filter(|(_, e)| e.valid)
            .map(|(_, e)| e.thickness)
            .collect(),
        format!("seed:{set_seed}"),
    ))
}

fn population_features(
    config: &SimConfig,
    n: usize,
    set_seed: u64,
    extractor: &FeatureExtractor,
) -> Result<GaussianFeatureStats> {
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = raster::render(config, derive_seed(set_seed, i as u64))?;
            extract_features(&a.image, extractor)
        })
        .collect::<Result<Vec<_>>>()?;
    GaussianFeatureStats::from_features(&rows, extractor.name())
}

/// Estimator settings shared by evaluation and noise-floor runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorSettings {
    pub histogram: HistogramSpec,
    pub search_radius: f64,
    pub extractor: FeatureExtractor,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings {
            histogram: HistogramSpec::default(),
            search_radius: morphology::DEFAULT_SEARCH_RADIUS,
            extractor: FeatureExtractor::default(),
        }
    }
}

/// Value of `metric` between two independent `n`-image sets of `config`,
/// repeated over `replicates` disjoint seed streams. Replicate `r` uses set
/// seeds `derive_seed(master_seed, 2r)` and `derive_seed(master_seed, 2r + 1)`.
pub fn noise_floor(
    config: &SimConfig,
    n: usize,
    replicates: usize,
    metric: Metric,
    master_seed: u64,
    settings: &EstimatorSettings,
) -> Result<FloorResult> {
    let mut floors = noise_floors(config, n, replicates, &[metric], master_seed, settings)?;
    Ok(floors.remove(0))
}

/// Like [`noise_floor`] for several metrics at once. Every metric sees the
/// same image sets, and each set is rendered once.
pub fn noise_floors(
    config: &SimConfig,
    n: usize,
    replicates: usize,
    metrics: &[Metric],
    master_seed: u64,
    settings: &EstimatorSettings,
) -> Result<Vec<FloorResult>> {
    if n < 100 {
        return Err(Error::validation(format!(
            "noise floor needs n >= 100, got {n}"
        )));
    }
    if replicates == 0 {
        return Err(Error::validation(
            "noise floor needs at least one replicate",
        ));
    }
    if metrics.is_empty() {
        return Err(Error::validation("no metrics requested"));
    }
    config.validate()?;
    settings.histogram.validate()?;

    let scalar = metrics.iter().any(|m| matches!(m, Metric::Kl | Metric::Js));
    let mut values = vec![Vec::with_capacity(replicates); metrics.len()];
    for r in 0..replicates as u64 {
        let seed_a = derive_seed(master_seed, 2 * r);
        let seed_b = derive_seed(master_seed, 2 * r + 1);
        let thickness = if scalar {
            Some((
                population_thickness(config, n, seed_a, settings.search_radius)?,
                population_thickness(config, n, seed_b, settings.search_radius)?,
            ))
        } else {
            None
        };
        let features = if metrics.contains(&Metric::Frechet) {
            Some((
                population_features(config, n, seed_a, &settings.extractor)?,
                population_features(config, n, seed_b, &settings.extractor)?,
            ))
        } else {
            None
        };
        for (metric, out) in metrics.iter().zip(&mut values) {
            let v = match (metric, &thickness, &features) {
                (Metric::Kl, Some((a, b)), _) => kl_divergence(a, b, &settings.histogram)?,
                (Metric::Js, Some((a, b)), _) => js_divergence(a, b, &settings.histogram)?,
                (Metric::Frechet, _, Some((a, b))) => frechet_distance(a, b)?,
                _ => unreachable!("populations are built for every requested metric"),
            };
            out.push(v);
        }
    }
    let digest = config.digest();
    Ok(metrics
        .iter()
        .zip(values)
        .map(|(&metric, values)| {
            let (mean, std) = mean_std(&values);
            FloorResult {
                metric,
                mean,
                std,
                n,
                replicates,
                values,
                master_seed,
                config_digest: digest.clone(),
                warning: (replicates == 1).then(|| SINGLE_REPLICATE_WARNING.to_string()),
            }
        })
        .collect())
}
