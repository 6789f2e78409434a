//! Writes a reproducible dataset, reloads its manifest and checks it
//! against the stored config and files.
//!
//! Run: cargo run --release --example generate_dataset -- [out_dir]

use std::path::PathBuf;

use angiosim::dataset::{generate_batch, verify_dataset};
use angiosim::phantom::Preset;

fn main() -> angiosim::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("angiosim_sim27"));
    let config = Preset::Sim27.config();
    let manifest = generate_batch(&config, 50, 7, &out)?;
    println!(
        "wrote {} images to {}",
        manifest.entries.len(),
        out.display()
    );
    println!("config digest {}", manifest.config_digest);
    println!("aneurysm fraction {:.2}", manifest.aneurysm_fraction());

    let checked = verify_dataset(&out)?;
    for e in checked.entries.iter().take(3) {
        println!(
            "  {} seed {:#018x} aneurysm {} thickness {:.3}",
            e.filename, e.seed, e.has_aneurysm, e.thickness
        );
    }
    Ok(())
}
