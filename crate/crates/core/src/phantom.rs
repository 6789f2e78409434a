//! The canonical stochastic image model: configuration, presets, the
//! per-image aneurysm draw and the vessel thickness profile.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::{Interval, ProcessConfig};
use crate::{Error, Result};

/// All parameters of the canonical angiogram model. Lengths are in pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nominal_thickness: f64,
    /// Mean vessel thickness at the aneurysm.
    pub t0: f64,
    /// Standard deviation of the aneurysm thickness draw.
    pub sigma_an: f64,
    /// Width of the Gaussian taper in arc length.
    pub taper_width: f64,
    pub edge_noise_sigma: f64,
    pub thickness_floor: f64,
    pub aneurysm_prevalence: f64,
    pub width: usize,
    pub height: usize,
    pub process: ProcessConfig,
    pub total_length: f64,
    pub step: f64,
    /// Binarization threshold (fraction of full scale) for estimation.
    pub threshold: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nominal_thickness: 20.0,
            t0: 27.0,
            sigma_an: 1.0,
            taper_width: 15.0,
            edge_noise_sigma: 0.5,
            thickness_floor: 2.0,
            aneurysm_prevalence: 0.5,
            width: 256,
            height: 256,
            process: ProcessConfig::default(),
            total_length: 600.0,
            step: 1.0,
            threshold: 0.5,
        }
    }
}

/// The three published model variants, differing only in aneurysm
/// thickness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Sim23,
    Sim27,
    Sim33,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Sim23, Preset::Sim27, Preset::Sim33];

    pub fn t0(self) -> f64 {
        match self {
            Preset::Sim23 => 23.0,
            Preset::Sim27 => 27.0,
            Preset::Sim33 => 33.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sim23 => "sim23",
            Preset::Sim27 => "sim27",
            Preset::Sim33 => "sim33",
        }
    }

    pub fn config(self) -> SimConfig {
        SimConfig {
            t0: self.t0(),
            ..SimConfig::default()
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim23" => Ok(Preset::Sim23),
            "sim27" => Ok(Preset::Sim27),
            "sim33" => Ok(Preset::Sim33),
            other => Err(Error::validation(format!(
                "unknown preset {other:?} (expected sim23, sim27 or sim33)"
            ))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn preset(name: &str) -> Result<SimConfig> {
    name.parse::<Preset>().map(Preset::config)
}

/// Additive parameter shifts that turn a reference model into an imperfect
/// surrogate candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub t0: f64,
    pub prevalence: f64,
    pub edge_noise: f64,
}

impl FromStr for Perturbation {
    type Err = Error;

    /// Parses `t0=-6,prevalence=+0.1,edge_noise=+0.2`; any subset of keys.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Perturbation::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::validation(format!("perturbation {part:?} is not key=value"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::validation(format!("perturbation value {value:?} is not a number"))
            })?;
            match key.trim() {
                "t0" => p.t0 = value,
                "prevalence" => p.prevalence = value,
                "edge_noise" => p.edge_noise = value,
                other => {
                    return Err(Error::validation(format!(
                        "unknown perturbation key {other:?} (expected t0, prevalence, edge_noise)"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("nominal_thickness", self.nominal_thickness),
            ("t0", self.t0),
            ("sigma_an", self.sigma_an),
            ("taper_width", self.taper_width),
            ("edge_noise_sigma", self.edge_noise_sigma),
            ("thickness_floor", self.thickness_floor),
            ("aneurysm_prevalence", self.aneurysm_prevalence),
            ("total_length", self.total_length),
            ("step", self.step),
            ("threshold", self.threshold),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(format!("{name} must be finite, got {v}")));
        }
        let checks: [(bool, &str); 11] = [
            (
                self.nominal_thickness > 0.0,
                "nominal_thickness must be > 0",
            ),
            (
                self.t0 > self.nominal_thickness,
                "t0 must exceed nominal_thickness",
            ),
            (self.sigma_an >= 0.0, "sigma_an must be >= 0"),
            (self.taper_width > 0.0, "taper_width must be > 0"),
            (
                self.edge_noise_sigma >= 0.0,
                "edge_noise_sigma must be >= 0",
            ),
            (self.thickness_floor > 0.0, "thickness_floor must be > 0"),
            (
                (0.0..=1.0).contains(&self.aneurysm_prevalence),
                "aneurysm_prevalence must lie in [0, 1]",
            ),
            (
                self.width >= 64 && self.height >= 64,
                "image dimensions must be at least 64x64",
            ),
            (self.step > 0.0, "step must be > 0"),
            (
                self.total_length >= 2.0 * self.step,
                "total_length must be at least twice the step",
            ),
            (
                (0.0..=1.0).contains(&self.threshold),
                "threshold must lie in [0, 1]",
            ),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::validation(*msg));
        }
        self.process.validate()
    }

    /// Copy with `delta` applied; the result is validated.
    pub fn perturbed(&self, delta: &Perturbation) -> Result<SimConfig> {
        let out = SimConfig {
            t0: self.t0 + delta.t0,
            aneurysm_prevalence: self.aneurysm_prevalence + delta.prevalence,
            edge_noise_sigma: self.edge_noise_sigma + delta.edge_noise,
            ..self.clone()
        };
        out.validate()?;
        Ok(out)
    }

    /// Canonical `key = value` text form. Floats use the shortest
    /// representation that round-trips.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.process;
        vec![
            ("nominal_thickness", self.nominal_thickness.to_string()),
            ("t0", self.t0.to_string()),
            ("sigma_an", self.sigma_an.to_string()),
            ("taper_width", self.taper_width.to_string()),
            ("edge_noise_sigma", self.edge_noise_sigma.to_string()),
            ("thickness_floor", self.thickness_floor.to_string()),
            ("aneurysm_prevalence", self.aneurysm_prevalence.to_string()),
            ("image_width", self.width.to_string()),
            ("image_height", self.height.to_string()),
            ("kappa_draw_min", p.kappa_draw.lo.to_string()),
            ("kappa_draw_max", p.kappa_draw.hi.to_string()),
            ("tau_draw_min", p.tau_draw.lo.to_string()),
            ("tau_draw_max", p.tau_draw.hi.to_string()),
            ("kappa_min", p.kappa_range.lo.to_string()),
            ("kappa_max", p.kappa_range.hi.to_string()),
            ("tau_min", p.tau_range.lo.to_string()),
            ("tau_max", p.tau_range.hi.to_string()),
            ("segment_length", p.segment_length.to_string()),
            ("total_length", self.total_length.to_string()),
            ("step", self.step.to_string()),
            ("threshold", self.threshold.to_string()),
        ]
    }

    /// Parses the `key = value` form. Blank lines and `#` comments are
    /// ignored; keys not present keep their default values.
    pub fn from_config_str(text: &str) -> Result<SimConfig> {
        let mut c = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    Error::validation(format!(
                        "line {}: {key} value {value:?} is not a number",
                        lineno + 1
                    ))
                })
            };
            let int = || -> Result<usize> {
                value.parse::<usize>().map_err(|_| {
                    Error::validation(format!(
                        "line {}: {key} value {value:?} is not a non-negative integer",
                        lineno + 1
                    ))
                })
            };
            let p = &mut c.process;
            match key {
                "nominal_thickness" => c.nominal_thickness = num()?,
                "t0" => c.t0 = num()?,
                "sigma_an" => c.sigma_an = num()?,
                "taper_width" => c.taper_width = num()?,
                "edge_noise_sigma" => c.edge_noise_sigma = num()?,
                "thickness_floor" => c.thickness_floor = num()?,
                "aneurysm_prevalence" => c.aneurysm_prevalence = num()?,
                "image_width" => c.width = int()?,
                "image_height" => c.height = int()?,
                "kappa_draw_min" => p.kappa_draw.lo = num()?,
                "kappa_draw_max" => p.kappa_draw.hi = num()?,
                "tau_draw_min" => p.tau_draw.lo = num()?,
                "tau_draw_max" => p.tau_draw.hi = num()?,
                "kappa_min" => p.kappa_range.lo = num()?,
                "kappa_max" => p.kappa_range.hi = num()?,
                "tau_min" => p.tau_range.lo = num()?,
                "tau_max" => p.tau_range.hi = num()?,
                "segment_length" => p.segment_length = num()?,
                "total_length" => c.total_length = num()?,
                "step" => c.step = num()?,
                "threshold" => c.threshold = num()?,
                other => {
                    return Err(Error::validation(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimConfig::from_config_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_string()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_config_string().as_bytes());
        hash.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Same model with a straight vessel (curvature and torsion forced to 0).
    pub fn straight(&self) -> SimConfig {
        let mut c = self.clone();
        c.process.kappa_draw = Interval::point(0.0);
        c.process.kappa_range = Interval::point(0.0);
        c.process.tau_draw = Interval::point(0.0);
        c.process.tau_range = Interval::point(0.0);
        c
    }
}

/// Per-image ground truth: aneurysm presence and drawn center thickness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomLabel {
    pub has_aneurysm: bool,
    pub thickness: f64,
    pub seed: u64,
}

/// Bernoulli(prevalence) aneurysm flag; with an aneurysm the center
/// thickness is `Normal(t0, sigma_an)` truncated below at the nominal
/// thickness, otherwise the nominal thickness.
pub fn draw_label<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R, seed: u64) -> PhantomLabel {
    let has_aneurysm = rng.random::<f64>() < config.aneurysm_prevalence;
    let thickness = if has_aneurysm {
        if config.sigma_an == 0.0 {
            config.t0
        } else {
            let normal = Normal::new(config.t0, config.sigma_an).expect("sigma_an >= 0");
            loop {
                let t = normal.sample(rng);
                if t >= config.nominal_thickness {
                    break t;
                }
            }
        }
    } else {
        config.nominal_thickness
    };
    PhantomLabel {
        has_aneurysm,
        thickness,
        seed,
    }
}

/// Noise-free thickness at arc length `s`: a Gaussian bump of height
/// `label.thickness - nominal` centered on `anchor`.
pub fn base_thickness(label: &PhantomLabel, config: &SimConfig, s: f64, anchor: f64) -> f64 {
    if !label.has_aneurysm {
        return config.nominal_thickness;
    }
    let d = s - anchor;
    let bump = (-(d * d) / (2.0 * config.taper_width * config.taper_width)).exp();
    config.nominal_thickness + (label.thickness - config.nominal_thickness) * bump
}

/// Thickness along the vessel: taper plus IID Gaussian edge noise per
/// sample, floored at `thickness_floor`.
pub fn thickness_profile<R: Rng + ?Sized>(
    label: &PhantomLabel,
    config: &SimConfig,
    arc_lengths: &[f64],
    anchor: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (Some(first), Some(last)) = (arc_lengths.first(), arc_lengths.last()) else {
        return Err(Error::validation(
            "thickness profile needs at least one arc length",
        ));
    };
    if !(*first..=*last).contains(&anchor) {
        return Err(Error::validation(format!(
            "anchor {anchor} outside arc-length range [{first}, {last}]"
        )));
    }
    let noise = (config.edge_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, config.edge_noise_sigma).expect("sigma >= 0"));
    Ok(arc_lengths
        .iter()
        .map(|&s| {
            let eps = noise.as_ref().map_or(0.0, |n| n.sample(rng));
            (base_thickness(label, config, s, anchor) + eps).max(config.thickness_floor)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets() {
        let c = preset("sim33").unwrap();
        assert_eq!(
            (c.t0, c.nominal_thickness, c.aneurysm_prevalence),
            (33.0, 20.0, 0.5)
        );
        assert_eq!(preset("sim23").unwrap().t0, 23.0);
        let c = preset("sim27").unwrap();
        assert_eq!((c.t0, c.width, c.height), (27.0, 256, 256));
        assert!(preset("sim99").is_err());
        for p in Preset::ALL {
            p.config().validate().unwrap();
        }
    }

    #[test]
    fn config_text_round_trip() {
        let mut c = preset("sim23").unwrap();
        c.sigma_an = 0.1 + 0.2;
        c.process.tau_range = Interval::new(-0.031, 0.029);
        let back = SimConfig::from_config_str(&c.to_config_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        assert_ne!(c.digest(), preset("sim23").unwrap().digest());
    }

    #[test]
    fn config_text_errors() {
        assert!(SimConfig::from_config_str("t0 = abc").is_err());
        assert!(SimConfig::from_config_str("bogus = 1").is_err());
        assert!(SimConfig::from_config_str("t0 12").is_err());
        // t0 below nominal violates the invariant
        assert!(SimConfig::from_config_str("t0 = 19").is_err());
        let c = SimConfig::from_config_str("# comment\n\nt0 = 30 # inline\n").unwrap();
        assert_eq!(c.t0, 30.0);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let base = SimConfig::default();
        let cases: Vec<Box<dyn Fn(&mut SimConfig)>> = vec![
            Box::new(|c| c.nominal_thickness = 0.0),
            Box::new(|c| c.sigma_an = -1.0),
            Box::new(|c| c.taper_width = 0.0),
            Box::new(|c| c.aneurysm_prevalence = 1.5),
            Box::new(|c| c.width = 32),
            Box::new(|c| c.process.segment_length = 0.0),
            Box::new(|c| c.threshold = f64::NAN),
        ];
        for mutate in cases {
            let mut c = base.clone();
            mutate(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn perturbation_parse_and_apply() {
        let p: Perturbation = "t0=-6, prevalence=+0.1".parse().unwrap();
        let c = preset("sim33").unwrap().perturbed(&p).unwrap();
        assert_eq!(c.t0, 27.0);
        assert!((c.aneurysm_prevalence - 0.6).abs() < 1e-12);
        assert!("t1=3".parse::<Perturbation>().is_err());
        assert!("t0".parse::<Perturbation>().is_err());
        assert!(preset("sim23")
            .unwrap()
            .perturbed(&"t0=-4".parse().unwrap())
            .is_err());
    }

    #[test]
    fn degenerate_label_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = preset("sim33").unwrap();
        c.aneurysm_prevalence = 0.0;
        for _ in 0..100 {
            let l = draw_label(&c, &mut rng, 0);
            assert!(!l.has_aneurysm);
            assert_eq!(l.thickness, 20.0);
        }
        c.aneurysm_prevalence = 1.0;
        c.sigma_an = 0.0;
        for _ in 0..100 {
            let l = draw_label(&c, &mut rng, 0);
            assert!(l.has_aneurysm);
            assert_eq!(l.thickness, 33.0);
        }
    }

    #[test]
    fn label_prevalence_and_bimodality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = preset("sim27").unwrap();
        let labels: Vec<_> = (0..10_000).map(|_| draw_label(&c, &mut rng, 0)).collect();
        let frac = labels.iter().filter(|l| l.has_aneurysm).count() as f64 / 1e4;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
        let near_t0 = labels
            .iter()
            .filter(|l| (l.thickness - c.t0).abs() <= 3.0 * c.sigma_an)
            .count() as f64
            / 1e4;
        assert!((near_t0 - frac).abs() < 0.01);
        assert!(labels.iter().all(|l| l.thickness >= c.nominal_thickness));
    }

    fn arc(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn flat_profile_without_aneurysm() {
        let mut c = SimConfig::default();
        c.edge_noise_sigma = 0.0;
        let label = PhantomLabel {
            has_aneurysm: false,
            thickness: 20.0,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = thickness_profile(&label, &c, &arc(601), 300.0, &mut rng).unwrap();
        assert!(p.iter().all(|&t| t == 20.0));
        assert!(thickness_profile(&label, &c, &[], 0.0, &mut rng).is_err());
    }

    #[test]
    fn taper_shape() {
        let mut c = preset("sim33").unwrap();
        c.edge_noise_sigma = 0.0;
        let label = PhantomLabel {
            has_aneurysm: true,
            thickness: 33.0,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = arc(601);
        let p = thickness_profile(&label, &c, &s, 300.0, &mut rng).unwrap();
        assert_eq!(p[300], 33.0);
        // one taper width away: 20 + 13·e^{-1/2}
        let at_width = 20.0 + 13.0 * (-0.5f64).exp();
        assert!(p[315] <= at_width + 1e-12 && p[285] <= at_width + 1e-12);
        for d in 75..=300 {
            assert!((p[300 + d] - 20.0).abs() < 0.1);
        }
        for d in 1..=300 {
            assert_eq!(p[300 + d], p[300 - d]);
            assert!(p[300 + d] <= p[300 + d - 1]);
        }
    }

    #[test]
    fn edge_noise_std() {
        let mut c = SimConfig::default();
        c.edge_noise_sigma = 0.5;
        let label = PhantomLabel {
            has_aneurysm: false,
            thickness: 20.0,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = thickness_profile(&label, &c, &arc(10_000), 10.0, &mut rng).unwrap();
        let n = p.len() as f64;
        let mean = p.iter().map(|t| t - 20.0).sum::<f64>() / n;
        let var = p.iter().map(|t| (t - 20.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.45..=0.55).contains(&var.sqrt()), "{}", var.sqrt());
    }

    #[test]
    fn floor_holds_under_heavy_noise() {
        let mut c = SimConfig::default();
        c.edge_noise_sigma = 20.0;
        let label = PhantomLabel {
            has_aneurysm: false,
            thickness: 20.0,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = thickness_profile(&label, &c, &arc(5000), 10.0, &mut rng).unwrap();
        assert!(p.iter().all(|&t| t >= c.thickness_floor));
    }
}
