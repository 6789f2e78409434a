//! Center-thickness estimation on synthetic bars and on rendered
//! angiograms.
//!
//! Run: cargo run --release --example thickness_estimation

use angiosim::morphology::{binarize, estimate_center_thickness, BinaryImage};
use angiosim::phantom::Preset;
use angiosim::raster::render;
use angiosim::seed::derive_seed;

fn bar(width: f64, angle_deg: f64) -> BinaryImage {
    let (c, s) = (angle_deg.to_radians().cos(), angle_deg.to_radians().sin());
    BinaryImage::from_fn(256, 256, |x, y| {
        let (dx, dy) = (x as f64 - 128.0, y as f64 - 128.0);
        (-dx * s + dy * c).abs() <= width / 2.0
    })
}

fn main() -> angiosim::Result<()> {
    println!("bars (width, angle -> estimate):");
    for width in [10.0, 21.0, 33.0] {
        let row: Vec<String> = [0.0, 30.0, 45.0, 60.0, 90.0]
            .iter()
            .map(|&a| {
                format!(
                    "{a:>2}° {:5.2}",
                    estimate_center_thickness(&bar(width, a), 40.0).thickness
                )
            })
            .collect();
        println!("  {width:>4}: {}", row.join("  "));
    }

    println!("rendered sim33 images (drawn -> estimate, disk center):");
    let config = Preset::Sim33.config();
    for i in 0..8 {
        let a = render(&config, derive_seed(3, i))?;
        let mask = binarize(&a.image, config.threshold)?;
        let e = estimate_center_thickness(&mask, 40.0);
        println!(
            "  aneurysm {:5}  {:6.2} -> {:6.2}  at {:?}",
            a.label.has_aneurysm, a.label.thickness, e.thickness, e.argmax_center
        );
    }
    Ok(())
}
