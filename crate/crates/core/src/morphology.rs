//! Vessel thickness at the image center from the largest inscribed disk.
//!
//! The image is binarized, an exact Euclidean distance transform gives the
//! radius of the largest foreground disk centered at every pixel, and the
//! estimate is the diameter of the largest such disk that still covers the
//! image center.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::codec;
use crate::image::GrayImage;
use crate::stats::ThicknessSamples;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SEARCH_RADIUS: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::validation(format!(
                "mask has {} entries, expected {}",
                mask.len(),
                width * height
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            mask,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mask = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        BinaryImage {
            width,
            height,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }
}

/// Pixels whose intensity, as a fraction of 255, is at least `threshold`.
pub fn binarize(image: &GrayImage, threshold: f64) -> Result<BinaryImage> {
    if image.is_empty() {
        return Err(Error::validation("cannot binarize an empty image"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::validation(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let mask = image
        .as_raw()
        .iter()
        .map(|&v| f64::from(v) / 255.0 >= threshold)
        .collect();
    BinaryImage::new(image.width(), image.height(), mask)
}

/// Exact Euclidean distance from every pixel to the nearest background
/// pixel, stored squared (the squared values are integers).
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    squared: Vec<f64>,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn squared(&self, x: usize, y: usize) -> f64 {
        self.squared[y * self.width + x]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.squared(x, y).sqrt()
    }
}

const FAR: f64 = 1e20;

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas rooted at each sample).
fn squared_dt_1d(f: &[f64], out: &mut [f64], hull: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    let n = f.len();
    hull.clear();
    bounds.clear();
    for q in 0..n {
        if f[q] >= FAR {
            continue;
        }
        loop {
            match hull.last() {
                Some(&v) => {
                    let s = ((f[q] + (q * q) as f64) - (f[v] + (v * v) as f64))
                        / (2.0 * (q as f64 - v as f64));
                    if s <= *bounds.last().unwrap() {
                        hull.pop();
                        bounds.pop();
                    } else {
                        hull.push(q);
                        bounds.push(s);
                        break;
                    }
                }
                None => {
                    hull.push(q);
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
            }
        }
    }
    if hull.is_empty() {
        out.fill(FAR);
        return;
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while k + 1 < hull.len() && bounds[k + 1] < p as f64 {
            k += 1;
        }
        let v = hull[k];
        let d = p as f64 - v as f64;
        *o = f[v] + d * d;
    }
}

/// Exact Euclidean distance transform. The one-pixel ring just outside the
/// frame counts as background, so every value is finite.
pub fn distance_transform(mask: &BinaryImage) -> DistanceMap {
    let (w, h) = (mask.width, mask.height);
    let (pw, ph) = (w + 2, h + 2);
    let mut grid = vec![0.0; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                grid[(y + 1) * pw + x + 1] = FAR;
            }
        }
    }

    let mut hull = Vec::new();
    let mut bounds = Vec::new();
    let mut col = vec![0.0; ph];
    let mut col_out = vec![0.0; ph];
    for x in 0..pw {
        for y in 0..ph {
            col[y] = grid[y * pw + x];
        }
        squared_dt_1d(&col, &mut col_out, &mut hull, &mut bounds);
        for y in 0..ph {
            grid[y * pw + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; pw];
    let mut squared = Vec::with_capacity(w * h);
    for y in 1..=h {
        let row = &grid[y * pw..(y + 1) * pw];
        squared_dt_1d(row, &mut row_out, &mut hull, &mut bounds);
        squared.extend_from_slice(&row_out[1..=w]);
    }
    DistanceMap {
        width: w,
        height: h,
        squared,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThicknessEstimate {
    /// Diameter of the winning disk in pixels; 0 when `valid` is false.
    pub thickness: f64,
    pub valid: bool,
    pub argmax_center: (usize, usize),
}

impl ThicknessEstimate {
    fn invalid() -> Self {
        ThicknessEstimate {
            thickness: 0.0,
            valid: false,
            argmax_center: (0, 0),
        }
    }
}

/// Largest inscribed disk covering the image center.
///
/// Candidates are foreground pixels `p` within `search_radius` of the
/// center `c` whose inscribed disk reaches it, `‖p − c‖ ≤ D(p)`. The vessel
/// edge lies half a pixel inside the nearest background pixel, so the
/// estimate is `2·max D(p) − 1`. Ties keep the first pixel in row-major order.
pub fn estimate_center_thickness(mask: &BinaryImage, search_radius: f64) -> ThicknessEstimate {
    if !(search_radius > 0.0) || mask.width == 0 || mask.height == 0 {
        return ThicknessEstimate::invalid();
    }
    let dt = distance_transform(mask);
    center_thickness_from_map(mask, &dt, search_radius)
}

pub fn center_thickness_from_map(
    mask: &BinaryImage,
    dt: &DistanceMap,
    search_radius: f64,
) -> ThicknessEstimate {
    let (cx, cy) = mask.center();
    let r = search_radius.floor() as usize;
    let r2 = search_radius * search_radius;
    let mut best: Option<(f64, (usize, usize))> = None;
    for y in cy.saturating_sub(r)..=(cy + r).min(mask.height - 1) {
        for x in cx.saturating_sub(r)..=(cx + r).min(mask.width - 1) {
            if !mask.get(x, y) {
                continue;
            }
            let dx = x as f64 - cx as f64;
            let dy = y as f64 - cy as f64;
            let d2 = dx * dx + dy * dy;
            let sq = dt.squared(x, y);
            if d2 > r2 || d2 > sq {
                continue;
            }
            if best.is_none_or(|(b, _)| sq > b) {
                best = Some((sq, (x, y)));
            }
        }
    }
    match best {
        Some((sq, at)) => ThicknessEstimate {
            thickness: 2.0 * sq.sqrt() - 1.0,
            valid: true,
            argmax_center: at,
        },
        None => ThicknessEstimate::invalid(),
    }
}

/// Convenience: binarize then estimate.
pub fn estimate_image(
    image: &GrayImage,
    threshold: f64,
    search_radius: f64,
) -> Result<ThicknessEstimate> {
    Ok(estimate_center_thickness(
        &binarize(image, threshold)?,
        search_radius,
    ))
}

/// One CSV row of a batch estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ThicknessRecord {
    pub filename: String,
    pub thickness: f64,
    pub valid: bool,
}

#[derive(Clone, Debug)]
pub struct BatchEstimate {
    pub records: Vec<ThicknessRecord>,
    /// Files that could not be decoded, with the reason.
    pub errors: Vec<(String, String)>,
}

impl BatchEstimate {
    pub fn invalid_count(&self) -> usize {
        self.records.iter().filter(|r| !r.valid).count()
    }

    /// Valid estimates only.
    pub fn samples(&self, source_tag: impl Into<String>) -> ThicknessSamples {
        ThicknessSamples::new(
            self.records
                .iter()
                .filter(|r| r.valid)
                .map(|r| r.thickness)
                .collect(),
            source_tag,
        )
    }

    /// `filename,thickness_px,valid` with LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "filename,thickness_px,valid")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.filename, r.thickness, r.valid)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Image files (`.pgm` / `.png`) in `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"));
        if is_image && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Estimates every image in `dir`. Undecodable files are recorded and
/// skipped; the batch fails only if the directory holds no images or none
/// of them decode.
pub fn estimate_batch(dir: &Path, threshold: f64, search_radius: f64) -> Result<BatchEstimate> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::validation(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    if !(search_radius > 0.0) {
        return Err(Error::validation(format!(
            "search radius must be > 0, got {search_radius}"
        )));
    }
    let files = list_images(dir)?;
    if files.is_empty() {
        return Err(Error::validation(format!(
            "{}: no .pgm or .png images found",
            dir.display()
        )));
    }
    let results: Vec<(String, Result<ThicknessEstimate>)> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let est = codec::decode_image(path)
                .and_then(|img| estimate_image(&img, threshold, search_radius));
            (name, est)
        })
        .collect();

    let mut batch = BatchEstimate {
        records: Vec::new(),
        errors: Vec::new(),
    };
    for (filename, est) in results {
        match est {
            Ok(e) => batch.records.push(ThicknessRecord {
                filename,
                thickness: e.thickness,
                valid: e.valid,
            }),
            Err(err) => batch.errors.push((filename, err.to_string())),
        }
    }
    if batch.records.is_empty() {
        return Err(Error::validation(format!(
            "{}: none of {} image files could be read (first error: {})",
            dir.display(),
            batch.errors.len(),
            batch.errors[0].1
        )));
    }
    Ok(batch)
}
