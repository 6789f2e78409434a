//! Fréchet distance between Gaussian fits of image features, for a
//! reference population and candidates with shifted aneurysm thickness.
//!
//! Run: cargo run --release --example frechet_features

use angiosim::image::GrayImage;
use angiosim::phantom::{Perturbation, Preset, SimConfig};
use angiosim::raster::render;
use angiosim::seed::derive_seed;
use angiosim::stats::{fit_gaussian_features, frechet_distance, FeatureExtractor};
use rayon::prelude::*;

fn population(config: &SimConfig, n: u64, set: u64) -> angiosim::Result<Vec<GrayImage>> {
    (0..n)
        .into_par_iter()
        .map(|i| render(config, derive_seed(set, i)).map(|a| a.image))
        .collect()
}

fn main() -> angiosim::Result<()> {
    let reference = Preset::Sim33.config();
    for extractor in [
        FeatureExtractor::DownsampledPixels { block: 32 },
        FeatureExtractor::ThicknessScalar {
            threshold: 0.5,
            search_radius: 40.0,
        },
    ] {
        let base = fit_gaussian_features(&population(&reference, 500, 1)?, &extractor)?;
        println!("{} ({} dims)", base.feature_name, base.dim());
        for shift in [0.0, -2.0, -6.0] {
            let cand = reference.perturbed(&Perturbation {
                t0: shift,
                prevalence: 0.0,
                edge_noise: 0.0,
            })?;
            let fit = fit_gaussian_features(&population(&cand, 500, 2)?, &extractor)?;
            println!("  t0 {:+}: {:.5}", shift, frechet_distance(&base, &fit)?);
        }
    }
    Ok(())
}
