//! Renders a population from each preset and summarizes the estimated
//! center thickness separately for normal and aneurysm-labeled images.
//!
//! Run: cargo run --release --example sim_fidelity -- [count]

use angiosim::phantom::Preset;
use angiosim::seed::derive_seed;
use angiosim::stats::{mean_std, render_and_estimate};
use rayon::prelude::*;

fn main() -> angiosim::Result<()> {
    let count: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);
    for preset in Preset::ALL {
        let config = preset.config();
        let start = std::time::Instant::now();
        let results = (0..count as u64)
            .into_par_iter()
            .map(|i| render_and_estimate(&config, derive_seed(1, i), 40.0))
            .collect::<angiosim::Result<Vec<_>>>()?;
        let normal: Vec<f64> = results
            .iter()
            .filter(|(l, e)| !l.has_aneurysm && e.valid)
            .map(|(_, e)| e.thickness)
            .collect();
        let aneurysm: Vec<f64> = results
            .iter()
            .filter(|(l, e)| l.has_aneurysm && e.valid)
            .map(|(_, e)| e.thickness)
            .collect();
        let err: Vec<f64> = results
            .iter()
            .map(|(l, e)| e.thickness - l.thickness)
            .collect();
        let (nm, ns) = mean_std(&normal);
        let (am, as_) = mean_std(&aneurysm);
        let (em, es) = mean_std(&err);
        println!(
            "{preset}: normal {nm:.3} ± {ns:.3} (n = {}), aneurysm {am:.3} ± {as_:.3} (n = {}), \
             fraction {:.4}, estimate − drawn {em:.3} ± {es:.3}  [{:.1?}]",
            normal.len(),
            aneurysm.len(),
            aneurysm.len() as f64 / count as f64,
            start.elapsed()
        );
    }
    Ok(())
}
