//! Evaluation of a candidate image population against a reference
//! population, and the report files it produces.
//!
//! A report is a JSON document:
//!
//! ```json
//! {
//!   "run_label": "cand33_t0-6",
//!   "estimator_name": "histogram",
//!   "kl_nats": 1.93,
//!   "js_nats": 0.21,
//!   "frechet_sq": 0.004,
//!   "feature_name": "downsampled_pixels(32)",
//!   "n_ref": 2000,
//!   "n_cand": 2000,
//!   "histogram": { "lo": 0.0, "hi": 64.0, "bin_width": 0.5, "epsilon": 1e-5 },
//!   "noise_floor": { "metric": "kl", "mean": 0.01, "std": 0.002, "n": 2000, "replicates": 5 },
//!   "above_floor": true
//! }
//! ```
//!
//! Metric fields that were not requested are omitted. The flat CSV form has
//! the columns in [`CSV_HEADER`], with empty cells for absent values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::morphology;
use crate::stats::{
    self, fit_gaussian_features_dir, frechet_distance, EstimatorSettings, FloorResult,
    HistogramSpec, Metric,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "run_label,n_ref,n_cand,kl_nats,js_nats,frechet_sq,floor_mean,floor_std";

/// Number of floor standard deviations a metric must clear.
pub const FLOOR_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorSummary {
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub replicates: usize,
}

impl From<&FloorResult> for FloorSummary {
    fn from(f: &FloorResult) -> Self {
        FloorSummary {
            metric: f.metric,
            mean: f.mean,
            std: f.std,
            n: f.n,
            replicates: f.replicates,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    #[serde(default)]
    pub run_label: String,
    #[serde(default = "default_estimator")]
    pub estimator_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_nats: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub js_nats: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frechet_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_name: Option<String>,
    pub n_ref: usize,
    pub n_cand: usize,
    pub histogram: HistogramSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<FloorSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub above_floor: Option<bool>,
}

fn default_estimator() -> String {
    "histogram".to_string()
}

impl DivergenceReport {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Kl => self.kl_nats,
            Metric::Js => self.js_nats,
            Metric::Frechet => self.frechet_sq,
        }
    }

    /// Attaches a noise floor and decides whether the matching metric lies
    /// above `mean + 3·std`.
    pub fn attach_floor(&mut self, floor: &FloorResult) -> Result<()> {
        let value = self.metric(floor.metric).ok_or_else(|| {
            Error::validation(format!(
                "noise floor is for metric {}, which this report does not contain",
                floor.metric
            ))
        })?;
        self.noise_floor = Some(floor.into());
        self.above_floor = Some(value > floor.threshold(FLOOR_SIGMAS));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: DivergenceReport = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("report JSON: {e}")))?;
        if r.kl_nats.is_some_and(|v| v < 0.0)
            || r.js_nats
                .is_some_and(|v| !(0.0..=std::f64::consts::LN_2 + 1e-12).contains(&v))
            || r.frechet_sq.is_some_and(|v| v < 0.0)
        {
            return Err(Error::validation("report metric values out of range"));
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DivergenceReport::from_json(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let floor = self.noise_floor.as_ref();
        format!(
            "{},{},{},{},{},{},{},{}",
            csv_field(&self.run_label),
            self.n_ref,
            self.n_cand,
            opt(self.kl_nats),
            opt(self.js_nats),
            opt(self.frechet_sq),
            opt(floor.map(|f| f.mean)),
            opt(floor.map(|f| f.std)),
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Compares the images in `cand_dir` against those in `ref_dir`.
pub fn evaluate(
    ref_dir: &Path,
    cand_dir: &Path,
    metrics: &[Metric],
    threshold: f64,
    settings: &EstimatorSettings,
    run_label: impl Into<String>,
) -> Result<DivergenceReport> {
    if metrics.is_empty() {
        return Err(Error::validation("no metrics requested"));
    }
    settings.histogram.validate()?;
    let mut report = DivergenceReport {
        run_label: run_label.into(),
        estimator_name: default_estimator(),
        kl_nats: None,
        js_nats: None,
        frechet_sq: None,
        feature_name: None,
        n_ref: 0,
        n_cand: 0,
        histogram: settings.histogram,
        noise_floor: None,
        above_floor: None,
    };

    if metrics.iter().any(|m| matches!(m, Metric::Kl | Metric::Js)) {
        let r = morphology::estimate_batch(ref_dir, threshold, settings.search_radius)?;
        let c = morphology::estimate_batch(cand_dir, threshold, settings.search_radius)?;
        let (rs, cs) = (r.samples("reference"), c.samples("candidate"));
        report.n_ref = rs.count();
        report.n_cand = cs.count();
        if metrics.contains(&Metric::Kl) {
            report.kl_nats = Some(stats::kl_divergence(&rs, &cs, &settings.histogram)?);
        }
        if metrics.contains(&Metric::Js) {
            report.js_nats = Some(stats::js_divergence(&rs, &cs, &settings.histogram)?);
        }
    }
    if metrics.contains(&Metric::Frechet) {
        let a = fit_gaussian_features_dir(ref_dir, &settings.extractor)?;
        let b = fit_gaussian_features_dir(cand_dir, &settings.extractor)?;
        report.frechet_sq = Some(frechet_distance(&a, &b)?);
        report.feature_name = Some(a.feature_name.clone());
        if report.n_ref == 0 {
            report.n_ref = a.n;
            report.n_cand = b.n;
        }
    }
    Ok(report)
}

/// Plot-ready table of several reports, one row per report, sorted by run
/// label (ties keep input order).
pub fn aggregate_reports(paths: &[PathBuf]) -> Result<String> {
    let mut reports = paths
        .iter()
        .map(|p| {
            let mut r = DivergenceReport::load(p)?;
            if r.run_label.is_empty() {
                r.run_label = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.run_label.cmp(&b.run_label));
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in &reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    Ok(out)
}
