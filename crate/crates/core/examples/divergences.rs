//! Histogram KL and JS divergences, and the k-nearest-neighbour KL
//! estimator, on Gaussian samples with known divergence.
//!
//! Run: cargo run --release --example divergences

use angiosim::stats::{
    js_divergence, kl_divergence, knn_kl_divergence, HistogramSpec, ThicknessSamples,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(rng: &mut ChaCha8Rng, mean: f64, n: usize) -> ThicknessSamples {
    let d = Normal::new(mean, 1.0).unwrap();
    ThicknessSamples::new(
        (0..n).map(|_| d.sample(rng)).collect(),
        format!("N({mean}, 1)"),
    )
}

fn main() -> angiosim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = HistogramSpec::default();
    let reference = gaussian(&mut rng, 20.0, 10_000);
    println!("shift   exact KL  histogram KL  k-NN KL  JS");
    for shift in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let cand = gaussian(&mut rng, 20.0 + shift, 10_000);
        println!(
            "{shift:5.1}  {:9.4}  {:12.4}  {:7.4}  {:.4}",
            shift * shift / 2.0,
            kl_divergence(&reference, &cand, &spec)?,
            knn_kl_divergence(&reference, &cand, 1)?,
            js_divergence(&reference, &cand, &spec)?
        );
    }
    Ok(())
}
