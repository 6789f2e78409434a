//! Noise floors of KL and JS for each preset: the divergence between two
//! independent sets drawn from the same model.
//!
//! Run: cargo run --release --example noise_floor -- [n] [replicates]

use angiosim::phantom::Preset;
use angiosim::stats::{noise_floors, EstimatorSettings, Metric};

fn main() -> angiosim::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let n = args.next().flatten().unwrap_or(1000);
    let reps = args.next().flatten().unwrap_or(3);
    let settings = EstimatorSettings::default();
    for preset in Preset::ALL {
        let floors = noise_floors(
            &preset.config(),
            n,
            reps,
            &[Metric::Kl, Metric::Js],
            0,
            &settings,
        )?;
        for f in floors {
            println!(
                "{preset} {}: {:.4} ± {:.4} over {} replicates of n = {}",
                f.metric, f.mean, f.std, f.replicates, f.n
            );
        }
    }
    Ok(())
}
