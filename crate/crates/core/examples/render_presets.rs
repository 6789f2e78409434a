//! Renders a few angiograms from each preset model and writes them as PNG.
//!
//! Run: cargo run --release --example render_presets -- [out_dir]

use std::path::PathBuf;

use angiosim::dataset::codec;
use angiosim::phantom::Preset;
use angiosim::raster::render;
use angiosim::seed::derive_seed;

fn main() -> angiosim::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("angiosim_presets"));
    std::fs::create_dir_all(&out).map_err(|e| angiosim::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    for preset in Preset::ALL {
        let config = preset.config();
        for i in 0..4 {
            let a = render(&config, derive_seed(2024, i))?;
            let path = out.join(format!("{preset}_{i}.png"));
            codec::write_png(&path, &a.image)?;
            println!(
                "{}: aneurysm {:5}, drawn thickness {:6.2} px, {} vessel pixels",
                path.display(),
                a.label.has_aneurysm,
                a.label.thickness,
                a.image.count_nonzero()
            );
        }
    }
    Ok(())
}
