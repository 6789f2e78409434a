use serde::{Deserialize, Serialize};

use super::ThicknessSamples;
use crate::{Error, Result};

/// Shared binning for the histogram divergence estimators.
///
/// Values outside `[lo, hi)` are clamped into the end bins. Every bin gets
/// `smoothing_epsilon` extra probability mass before renormalization, so
/// all bin probabilities are strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    #[serde(rename = "epsilon")]
    pub smoothing_epsilon: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lo: 0.0,
            hi: 64.0,
            bin_width: 0.5,
            smoothing_epsilon: 1e-5,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(Error::validation(format!(
                "histogram range [{}, {}) is empty or not finite",
                self.lo, self.hi
            )));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::validation("histogram bin width must be > 0"));
        }
        if !(self.smoothing_epsilon > 0.0 && self.smoothing_epsilon.is_finite()) {
            return Err(Error::validation("histogram smoothing epsilon must be > 0"));
        }
        let bins = (self.hi - self.lo) / self.bin_width;
        if (bins - bins.round()).abs() > 1e-9 * bins.max(1.0) {
            return Err(Error::validation(format!(
                "histogram range {} is not a whole number of bins of width {}",
                self.hi - self.lo,
                self.bin_width
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        ((self.hi - self.lo) / self.bin_width).round() as usize
    }

    fn index(&self, v: f64) -> usize {
        let b = ((v - self.lo) / self.bin_width).floor();
        if b.is_nan() || b < 0.0 {
            0
        } else {
            (b as usize).min(self.bins() - 1)
        }
    }
}

/// Smoothed, normalized bin probabilities of `samples`.
pub fn histogram(samples: &ThicknessSamples, spec: &HistogramSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::validation(format!(
            "histogram of empty sample set {:?}",
            samples.source_tag
        )));
    }
    let bins = spec.bins();
    let mut counts = vec![0usize; bins];
    for &v in &samples.values {
        counts[spec.index(v)] += 1;
    }
    let n = samples.count() as f64;
    let norm = 1.0 + bins as f64 * spec.smoothing_epsilon;
    Ok(counts
        .into_iter()
        .map(|c| (c as f64 / n + spec.smoothing_epsilon) / norm)
        .collect())
}

fn relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pb, &qb)| if pb == qb { 0.0 } else { pb * (pb / qb).ln() })
        .sum()
}

/// Histogram estimate of `D(ref ‖ cand)` in nats.
pub fn kl_divergence(
    reference: &ThicknessSamples,
    candidate: &ThicknessSamples,
    spec: &HistogramSpec,
) -> Result<f64> {
    let p = histogram(reference, spec)?;
    let q = histogram(candidate, spec)?;
    Ok(relative_entropy(&p, &q).max(0.0))
}

/// Histogram estimate of the Jensen-Shannon divergence in nats, in
/// `[0, ln 2]`.
pub fn js_divergence(
    reference: &ThicknessSamples,
    candidate: &ThicknessSamples,
    spec: &HistogramSpec,
) -> Result<f64> {
    let p = histogram(reference, spec)?;
    let q = histogram(candidate, spec)?;
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a + b) / 2.0).collect();
    let js = 0.5 * relative_entropy(&p, &m) + 0.5 * relative_entropy(&q, &m);
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

/// Distance from `x` to its `k`-th nearest neighbour in `sorted`, skipping
/// index `skip` (the query itself when it belongs to the set).
fn kth_neighbour_distance(sorted: &[f64], x: f64, k: usize, skip: Option<usize>) -> f64 {
    let pos = sorted.partition_point(|&v| v < x);
    let mut left = pos as isize - 1;
    let mut right = pos;
    let mut dist = f64::NAN;
    for _ in 0..k {
        if left >= 0 && skip == Some(left as usize) {
            left -= 1;
        }
        if skip == Some(right) {
            right += 1;
        }
        let dl = (left >= 0).then(|| x - sorted[left as usize]);
        let dr = (right < sorted.len()).then(|| sorted[right] - x);
        match (dl, dr) {
            (None, None) => return f64::NAN,
            (Some(a), Some(b)) if a <= b => {
                dist = a;
                left -= 1;
            }
            (Some(a), None) => {
                dist = a;
                left -= 1;
            }
            (_, Some(b)) => {
                dist = b;
                right += 1;
            }
        }
    }
    dist
}

/// Alternate k-nearest-neighbour estimator of `D(ref ‖ cand)` for
/// continuous 1-D samples:
///
/// `(1/n) Σ ln(ν_k(i) / ρ_k(i)) + ln(m / (n − 1))`
///
/// where `ρ_k` is the k-th neighbour distance within the reference set and
/// `ν_k` the k-th neighbour distance into the candidate set. The estimate is
/// not clamped and can be slightly negative. Ties (zero distances) make it
/// undefined and are reported as a numerical error; histogram estimators
/// should be used for discretized thickness values.
pub fn knn_kl_divergence(
    reference: &ThicknessSamples,
    candidate: &ThicknessSamples,
    k: usize,
) -> Result<f64> {
    let (n, m) = (reference.count(), candidate.count());
    if k == 0 || n <= k || m < k {
        return Err(Error::validation(format!(
            "k-NN KL needs k >= 1, more than k reference samples and at least k candidate samples (k = {k}, n = {n}, m = {m})"
        )));
    }
    let mut r = reference.values.clone();
    let mut c = candidate.values.clone();
    r.sort_by(f64::total_cmp);
    c.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for (i, &x) in r.iter().enumerate() {
        let rho = kth_neighbour_distance(&r, x, k, Some(i));
        let nu = kth_neighbour_distance(&c, x, k, None);
        if !(rho > 0.0 && nu > 0.0) {
            return Err(Error::Numerical {
                operation: "knn_kl_divergence",
                detail: format!("zero neighbour distance at sample {x} (tied values)"),
            });
        }
        acc += (nu / rho).ln();
    }
    Ok(acc / n as f64 + (m as f64 / (n as f64 - 1.0)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn samples(v: Vec<f64>) -> ThicknessSamples {
        ThicknessSamples::new(v, "t")
    }

    fn normal(mean: f64, n: usize, seed: u64) -> ThicknessSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mean, 1.0).unwrap();
        samples((0..n).map(|_| d.sample(&mut rng)).collect())
    }

    #[test]
    fn spec_validation() {
        HistogramSpec::default().validate().unwrap();
        let bad = |f: fn(&mut HistogramSpec)| {
            let mut s = HistogramSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.hi = s.lo));
        assert!(bad(|s| s.bin_width = 0.0));
        assert!(bad(|s| s.smoothing_epsilon = 0.0));
        assert!(bad(|s| s.bin_width = 0.3));
    }

    #[test]
    fn point_mass_histogram() {
        let spec = HistogramSpec {
            smoothing_epsilon: 1e-10,
            ..HistogramSpec::default()
        };
        let h = histogram(&samples(vec![20.0; 100]), &spec).unwrap();
        assert!((h[40] - 1.0).abs() < 1e-7);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bin_centers_give_uniform_histogram() {
        let spec = HistogramSpec::default();
        let centers: Vec<f64> = (0..spec.bins()).map(|b| 0.25 + 0.5 * b as f64).collect();
        let h = histogram(&samples(centers), &spec).unwrap();
        let u = 1.0 / spec.bins() as f64;
        assert!(h.iter().all(|p| (p - u).abs() < 1e-12));
    }

    #[test]
    fn out_of_range_values_clamp() {
        let spec = HistogramSpec::default();
        let h = histogram(&samples(vec![100.0, -3.0]), &spec).unwrap();
        assert!((h[spec.bins() - 1] - h[0]).abs() < 1e-15);
        assert!(h[0] > 0.49);
        assert!(histogram(&samples(vec![]), &spec).is_err());
    }

    #[test]
    fn identical_inputs_have_zero_divergence() {
        let a = normal(20.0, 500, 1);
        let spec = HistogramSpec::default();
        assert_eq!(kl_divergence(&a, &a, &spec).unwrap(), 0.0);
        assert_eq!(js_divergence(&a, &a, &spec).unwrap(), 0.0);
        assert!(kl_divergence(&a, &samples(vec![]), &spec).is_err());
        assert!(js_divergence(&samples(vec![]), &a, &spec).is_err());
    }

    #[test]
    fn gaussian_shift_kl_matches_closed_form() {
        // D(N(20,1) ‖ N(23,1)) = 3² / 2
        let kl = kl_divergence(
            &normal(20.0, 10_000, 11),
            &normal(23.0, 10_000, 12),
            &HistogramSpec::default(),
        )
        .unwrap();
        assert!((kl - 4.5).abs() <= 0.15 * 4.5, "{kl}");
    }

    #[test]
    fn iid_draws_sit_on_the_noise_floor() {
        let kl = kl_divergence(
            &normal(20.0, 10_000, 21),
            &normal(20.0, 10_000, 22),
            &HistogramSpec::default(),
        )
        .unwrap();
        assert!(kl < 0.05, "{kl}");
    }

    #[test]
    fn disjoint_supports_reach_ln2() {
        let spec = HistogramSpec {
            smoothing_epsilon: 1e-14,
            ..HistogramSpec::default()
        };
        let js = js_divergence(&samples(vec![10.0; 50]), &samples(vec![50.0; 80]), &spec).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-9, "{js}");
    }

    #[test]
    fn knn_estimator_on_gaussians() {
        let kl = knn_kl_divergence(&normal(20.0, 5_000, 3), &normal(23.0, 5_000, 4), 1).unwrap();
        assert!((kl - 4.5).abs() < 0.6, "{kl}");
        let tied = samples(vec![20.0, 20.0, 21.0]);
        assert!(matches!(
            knn_kl_divergence(&tied, &tied, 1),
            Err(Error::Numerical { .. })
        ));
        assert!(knn_kl_divergence(&tied, &tied, 3).is_err());
    }

    #[test]
    fn kth_neighbour_brute_force() {
        let v: Vec<f64> = vec![0.0, 1.0, 1.5, 4.0, 9.0, 9.5];
        for (i, &x) in v.iter().enumerate() {
            let mut d: Vec<f64> = v
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &y)| (y - x).abs())
                .collect();
            d.sort_by(f64::total_cmp);
            for k in 1..=5 {
                assert_eq!(
                    kth_neighbour_distance(&v, x, k, Some(i)),
                    d[k - 1],
                    "x={x} k={k}"
                );
            }
        }
        for x in [-2.0f64, 3.0, 12.0] {
            let mut d: Vec<f64> = v.iter().map(|&y| (y - x).abs()).collect();
            d.sort_by(f64::total_cmp);
            for k in 1..=6 {
                assert_eq!(kth_neighbour_distance(&v, x, k, None), d[k - 1]);
            }
        }
    }

    proptest! {
        #[test]
        fn js_is_symmetric_and_bounded(
            a in prop::collection::vec(0.0f64..70.0, 1..200),
            b in prop::collection::vec(0.0f64..70.0, 1..200),
        ) {
            let spec = HistogramSpec::default();
            let (a, b) = (samples(a), samples(b));
            let ab = js_divergence(&a, &b, &spec).unwrap();
            let ba = js_divergence(&b, &a, &spec).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&ab));
            prop_assert!(kl_divergence(&a, &b, &spec).unwrap() >= 0.0);
        }
    }
}
