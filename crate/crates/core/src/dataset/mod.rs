//! Reproducible batch generation and dataset manifests.
//!
//! A dataset directory holds `img_000000.pgm`, `img_000001.pgm`, ...,
//! `config.txt` (the model in key-value form) and `manifest.jsonl`. The
//! manifest's first line is a header record; each following line describes
//! one image:
//!
//! ```text
//! {"kind":"header","generator_version":"0.1.0","master_seed":7,"config_digest":"…","count":2}
//! {"kind":"entry","filename":"img_000000.pgm","seed":…,"has_aneurysm":true,"thickness":33.4}
//! ```

pub mod codec;

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::phantom::{self, SimConfig};
use crate::raster;
use crate::seed::{derive_seed, stage_rng, Stage};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CONFIG_FILE: &str = "config.txt";
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn image_filename(index: usize) -> String {
    format!("img_{index:06}.pgm")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub filename: String,
    pub seed: u64,
    pub has_aneurysm: bool,
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub config_digest: String,
    pub generator_version: String,
    pub master_seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ManifestLine {
    Header {
        generator_version: String,
        master_seed: u64,
        config_digest: String,
        count: usize,
    },
    Entry(ManifestEntry),
}

impl DatasetManifest {
    pub fn aneurysm_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| e.has_aneurysm).count() as f64 / self.entries.len() as f64
    }

    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.entries.len() + 1);
        let header = ManifestLine::Header {
            generator_version: self.generator_version.clone(),
            master_seed: self.master_seed,
            config_digest: self.config_digest.clone(),
            count: self.entries.len(),
        };
        lines.push(serde_json::to_string(&header).expect("serializable"));
        for e in &self.entries {
            lines.push(
                serde_json::to_string(&ManifestLine::Entry(e.clone())).expect("serializable"),
            );
        }
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    pub fn from_jsonl(text: &str) -> Result<DatasetManifest> {
        let mut header = None;
        let mut entries = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let parsed: ManifestLine = serde_json::from_str(line)
                .map_err(|e| Error::validation(format!("manifest line {}: {e}", i + 1)))?;
            match parsed {
                ManifestLine::Header {
                    generator_version,
                    master_seed,
                    config_digest,
                    count,
                } => header = Some((generator_version, master_seed, config_digest, count)),
                ManifestLine::Entry(e) => entries.push(e),
            }
        }
        let (generator_version, master_seed, config_digest, count) =
            header.ok_or_else(|| Error::validation("manifest has no header line"))?;
        if count != entries.len() {
            return Err(Error::validation(format!(
                "manifest header announces {count} entries but {} are present",
                entries.len()
            )));
        }
        Ok(DatasetManifest {
            entries,
            config_digest,
            generator_version,
            master_seed,
        })
    }

    pub fn load(dir: &Path) -> Result<DatasetManifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        DatasetManifest::from_jsonl(&text).map_err(|e| Error::Format {
            path,
            message: e.to_string(),
        })
    }
}

/// Renders `count` images into `out_dir`; image `i` uses seed
/// `derive_seed(master_seed, i)`.
///
/// `config.txt` is written first, so an unwritable directory fails before
/// any rendering. The manifest is written last and only if every image was
/// written.
pub fn generate_batch(
    config: &SimConfig,
    count: usize,
    master_seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if count == 0 {
        return Err(Error::validation("count must be at least 1"));
    }
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    config.save(&out_dir.join(CONFIG_FILE))?;

    let entries: Vec<Result<ManifestEntry>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, i as u64);
            let angiogram = raster::render(config, seed)?;
            let filename = image_filename(i);
            codec::write_pgm(&out_dir.join(&filename), &angiogram.image)?;
            Ok(ManifestEntry {
                filename,
                seed,
                has_aneurysm: angiogram.label.has_aneurysm,
                thickness: angiogram.label.thickness,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        entries,
        config_digest: config.digest(),
        generator_version: GENERATOR_VERSION.to_string(),
        master_seed,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(manifest.to_jsonl().as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Re-derives the label of a manifest entry from the config and its seed.
pub fn rederive_label(config: &SimConfig, seed: u64) -> phantom::PhantomLabel {
    phantom::draw_label(config, &mut stage_rng(seed, Stage::Label), seed)
}

/// Checks that the manifest matches the files and config stored in `dir`.
pub fn verify_dataset(dir: &Path) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::load(dir)?;
    let config = SimConfig::load(&dir.join(CONFIG_FILE))?;
    let fail = |msg: String| Error::Format {
        path: dir.to_path_buf(),
        message: msg,
    };
    if config.digest() != manifest.config_digest {
        return Err(fail("config digest does not match config.txt".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for e in &manifest.entries {
        if !seen.insert(e.filename.as_str()) {
            return Err(fail(format!("duplicate filename {}", e.filename)));
        }
        let label = rederive_label(&config, e.seed);
        if label.has_aneurysm != e.has_aneurysm || label.thickness != e.thickness {
            return Err(fail(format!(
                "{}: label does not match its seed",
                e.filename
            )));
        }
    }
    let on_disk: Vec<PathBuf> = crate::morphology::list_images(dir)?;
    if on_disk.len() != manifest.entries.len() {
        return Err(fail(format!(
            "{} images on disk, {} manifest entries",
            on_disk.len(),
            manifest.entries.len()
        )));
    }
    Ok(manifest)
}
