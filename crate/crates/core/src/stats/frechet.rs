use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::dataset::codec;
use crate::image::GrayImage;
use crate::morphology;
use crate::{Error, Result};

/// Mean and covariance of per-image feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFeatureStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub n: usize,
    pub feature_name: String,
}

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const EIGEN_TOLERANCE: f64 = 1e-8;

impl GaussianFeatureStats {
    pub fn new(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        n: usize,
        feature_name: impl Into<String>,
    ) -> Result<Self> {
        let d = mean.len();
        if covariance.shape() != (d, d) {
            return Err(Error::validation(format!(
                "covariance is {:?} for a {d}-dimensional mean",
                covariance.shape()
            )));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if !(asym <= SYMMETRY_TOLERANCE * covariance.amax().max(1.0)) {
            return Err(Error::validation(format!(
                "covariance is not symmetric (max |Σ − Σᵀ| = {asym:e})"
            )));
        }
        let min_eig = SymmetricEigen::new(covariance.clone()).eigenvalues.min();
        if min_eig < -EIGEN_TOLERANCE * covariance.amax().max(1.0) {
            return Err(Error::validation(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(GaussianFeatureStats {
            mean,
            covariance,
            n,
            feature_name: feature_name.into(),
        })
    }

    /// Sample mean and unbiased sample covariance of `rows`.
    pub fn from_features(rows: &[Vec<f64>], feature_name: impl Into<String>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::validation(format!(
                "need at least 2 feature vectors, got {}",
                rows.len()
            )));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::validation(
                "feature vectors must share a non-zero dimension",
            ));
        }
        let n = rows.len();
        let mut mean = DVector::zeros(d);
        for r in rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for r in rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov.ger(1.0, &c, &c, 1.0);
        }
        cov /= (n - 1) as f64;
        // exact symmetry
        let cov = (&cov + cov.transpose()) * 0.5;
        GaussianFeatureStats::new(mean, cov, n, feature_name)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Per-image feature maps available for the Fréchet distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureExtractor {
    /// Block-mean pooling with square blocks of `block` pixels, scaled to
    /// `[0, 1]`; `(side / block)²` features for a square image.
    DownsampledPixels { block: usize },
    /// The center-thickness estimate as a single feature.
    ThicknessScalar { threshold: f64, search_radius: f64 },
}

impl Default for FeatureExtractor {
    /// 32-pixel blocks: an 8×8 grid (64 features) on 256×256 images.
    fn default() -> Self {
        FeatureExtractor::DownsampledPixels { block: 32 }
    }
}

impl FeatureExtractor {
    pub fn name(&self) -> String {
        match self {
            FeatureExtractor::DownsampledPixels { block } => format!("downsampled_pixels({block})"),
            FeatureExtractor::ThicknessScalar { .. } => "thickness_scalar".to_string(),
        }
    }
}

pub fn extract_features(image: &GrayImage, extractor: &FeatureExtractor) -> Result<Vec<f64>> {
    match *extractor {
        FeatureExtractor::DownsampledPixels { block } => {
            let (w, h) = (image.width(), image.height());
            if block == 0 || w % block != 0 || h % block != 0 {
                return Err(Error::validation(format!(
                    "block size {block} does not divide image size {w}x{h}"
                )));
            }
            let (bw, bh) = (w / block, h / block);
            let mut sums = vec![0u64; bw * bh];
            for y in 0..h {
                let row = &image.as_raw()[y * w..(y + 1) * w];
                for (x, &v) in row.iter().enumerate() {
                    sums[(y / block) * bw + x / block] += u64::from(v);
                }
            }
            let scale = 255.0 * (block * block) as f64;
            Ok(sums.into_iter().map(|s| s as f64 / scale).collect())
        }
        FeatureExtractor::ThicknessScalar {
            threshold,
            search_radius,
        } => {
            let e = morphology::estimate_image(image, threshold, search_radius)?;
            Ok(vec![e.thickness])
        }
    }
}

pub fn fit_gaussian_features(
    images: &[GrayImage],
    extractor: &FeatureExtractor,
) -> Result<GaussianFeatureStats> {
    if images.len() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 images to fit feature statistics, got {}",
            images.len()
        )));
    }
    let rows = images
        .par_iter()
        .map(|img| extract_features(img, extractor))
        .collect::<Result<Vec<_>>>()?;
    GaussianFeatureStats::from_features(&rows, extractor.name())
}

/// Fits feature statistics to every image in `dir` (sorted by name).
pub fn fit_gaussian_features_dir(
    dir: &Path,
    extractor: &FeatureExtractor,
) -> Result<GaussianFeatureStats> {
    let files = morphology::list_images(dir)?;
    let rows = files
        .par_iter()
        .map(|p| codec::decode_image(p).and_then(|img| extract_features(&img, extractor)))
        .collect::<Result<Vec<_>>>()?;
    if rows.len() < 2 {
        return Err(Error::validation(format!(
            "{}: need at least 2 images to fit feature statistics, found {}",
            dir.display(),
            rows.len()
        )));
    }
    GaussianFeatureStats::from_features(&rows, extractor.name())
}

fn clamped_eigenvalues(m: DMatrix<f64>, what: &str) -> Result<DVector<f64>> {
    let scale = m.amax().max(1.0);
    let sym = (&m + m.transpose()) * 0.5;
    let eig =
        SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical {
            operation: "frechet_distance",
            detail: format!("eigendecomposition of {what} did not converge"),
        })?;
    let min = eig.eigenvalues.min();
    if min < -EIGEN_TOLERANCE * scale || eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            operation: "frechet_distance",
            detail: format!("{what} has eigenvalue {min:e}, below −{EIGEN_TOLERANCE:e}·{scale:e}"),
        });
    }
    Ok(eig.eigenvalues.map(|v| v.max(0.0)))
}

fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = m.amax().max(1.0);
    if eig.eigenvalues.min() < -EIGEN_TOLERANCE * scale {
        return Err(Error::Numerical {
            operation: "frechet_distance",
            detail: format!(
                "covariance has eigenvalue {:e}; square root undefined",
                eig.eigenvalues.min()
            ),
        });
    }
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * roots * eig.eigenvectors.transpose())
}

/// Squared Fréchet distance between two Gaussians,
/// `‖μa − μb‖² + Tr(Σa + Σb − 2(Σa Σb)^{1/2})`.
///
/// The trace of the matrix square root is evaluated as the sum of square
/// roots of the eigenvalues of the symmetric matrix `Σa^{1/2} Σb Σa^{1/2}`,
/// which is similar to `Σa Σb`.
pub fn frechet_distance(a: &GaussianFeatureStats, b: &GaussianFeatureStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "feature dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let sqrt_a = psd_sqrt(&a.covariance)?;
    let inner = &sqrt_a * &b.covariance * &sqrt_a;
    let tr_sqrt: f64 = clamped_eigenvalues(inner, "Σa^½ Σb Σa^½")?
        .iter()
        .map(|v| v.sqrt())
        .sum();
    let d = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * tr_sqrt;
    if !d.is_finite() {
        return Err(Error::Numerical {
            operation: "frechet_distance",
            detail: format!("non-finite result (mean term {mean_term}, trace-sqrt {tr_sqrt})"),
        });
    }
    let scale = 1.0 + a.covariance.trace() + b.covariance.trace();
    if d < -1e-6 * scale {
        return Err(Error::Numerical {
            operation: "frechet_distance",
            detail: format!(
                "negative squared distance {d:e} (mean term {mean_term:e}, Tr Σa {:e}, Tr Σb {:e}, trace-sqrt {tr_sqrt:e})",
                a.covariance.trace(),
                b.covariance.trace()
            ),
        });
    }
    Ok(d.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(mean: &[f64], cov: &[f64]) -> GaussianFeatureStats {
        let d = mean.len();
        GaussianFeatureStats::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, cov),
            10,
            "test",
        )
        .unwrap()
    }

    /// Denman–Beavers iteration for the principal square root of a matrix
    /// with positive real spectrum; works on the non-symmetric product.
    fn denman_beavers_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = m.clone();
        let mut z = DMatrix::identity(m.nrows(), m.ncols());
        for _ in 0..100 {
            let yi = y.clone().try_inverse().unwrap();
            let zi = z.clone().try_inverse().unwrap();
            let y_next = (&y + zi) * 0.5;
            let z_next = (&z + yi) * 0.5;
            y = y_next;
            z = z_next;
        }
        y
    }

    fn oracle(a: &GaussianFeatureStats, b: &GaussianFeatureStats) -> f64 {
        let prod = &a.covariance * &b.covariance;
        let root = denman_beavers_sqrt(&prod);
        (&a.mean - &b.mean).norm_squared() + a.covariance.trace() + b.covariance.trace()
            - 2.0 * root.trace()
    }

    #[test]
    fn identical_gaussians() {
        let a = gauss(&[1.0, 2.0], &[2.0, 0.3, 0.3, 1.0]);
        assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let a = gauss(&[0.0], &[1.0]);
        let b = gauss(&[3.0], &[1.0]);
        assert!((frechet_distance(&a, &b).unwrap() - 9.0).abs() < 1e-8);
        let c = gauss(&[1.0], &[4.0]);
        // (Δμ)² + (Δσ)² = 1 + 1
        assert!((frechet_distance(&a, &c).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn commuting_diagonal_case() {
        let a = gauss(&[0.0, 0.0], &[1.0, 0.0, 0.0, 4.0]);
        let b = gauss(&[0.0, 0.0], &[4.0, 0.0, 0.0, 1.0]);
        let d = frechet_distance(&a, &b).unwrap();
        assert!((d - 2.0).abs() < 1e-10, "{d}");
        assert!((oracle(&a, &b) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn general_case_matches_iterative_root() {
        let a = gauss(
            &[0.5, -1.0, 2.0],
            &[2.0, 0.4, 0.1, 0.4, 1.5, -0.3, 0.1, -0.3, 0.8],
        );
        let b = gauss(
            &[0.0, 0.2, 1.0],
            &[1.0, -0.2, 0.0, -0.2, 3.0, 0.5, 0.0, 0.5, 0.6],
        );
        let d = frechet_distance(&a, &b).unwrap();
        assert!(
            (d - oracle(&a, &b)).abs() < 1e-9,
            "{d} vs {}",
            oracle(&a, &b)
        );
        assert!((d - frechet_distance(&b, &a).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rejects_mismatched_or_invalid() {
        let a = gauss(&[0.0], &[1.0]);
        let b = gauss(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        assert!(frechet_distance(&a, &b).is_err());
        let asym = GaussianFeatureStats::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]),
            2,
            "x",
        );
        assert!(asym.is_err());
        let neg = GaussianFeatureStats::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            2,
            "x",
        );
        assert!(neg.is_err());
    }

    #[test]
    fn fitting_features() {
        let img =
            GrayImage::from_raw(64, 64, (0..64 * 64).map(|i| (i % 256) as u8).collect()).unwrap();
        let stats = fit_gaussian_features(
            &[img.clone(), img.clone()],
            &FeatureExtractor::DownsampledPixels { block: 16 },
        )
        .unwrap();
        assert_eq!(stats.dim(), 16);
        assert!(stats.covariance.iter().all(|&v| v == 0.0));

        let zeros = vec![GrayImage::new(256, 256); 3];
        let stats = fit_gaussian_features(&zeros, &FeatureExtractor::default()).unwrap();
        assert_eq!(stats.dim(), 64);
        assert!(stats.mean.iter().all(|&v| v == 0.0));

        assert!(fit_gaussian_features(&zeros[..1], &FeatureExtractor::default()).is_err());
        assert!(extract_features(
            &zeros[0],
            &FeatureExtractor::DownsampledPixels { block: 30 }
        )
        .is_err());
    }

    #[test]
    fn block_means_are_scaled() {
        let mut img = GrayImage::new(4, 4);
        img.put(0, 0, 255);
        img.put(3, 3, 255);
        img.put(2, 3, 255);
        let f = extract_features(&img, &FeatureExtractor::DownsampledPixels { block: 2 }).unwrap();
        assert_eq!(f, vec![0.25, 0.0, 0.0, 0.5]);
    }
}
