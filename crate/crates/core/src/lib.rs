//! Canonical stochastic angiogram model and task-based evaluation of image
//! populations.
//!
//! The crate has two halves. The generator draws vessel trajectories from
//! the Frenet-Serret equations with stochastic, clipped curvature and
//! torsion, places spheres along them with an aneurysm thickness profile at
//! the image center, and projects the result into a binary image
//! ([`curve`], [`phantom`], [`raster`]). The evaluator reads any image
//! population back, measures the vessel thickness at the image center from
//! the largest inscribed disk ([`morphology`]), and compares populations via
//! empirical KL/JS divergences and a Gaussian Fréchet feature distance,
//! calibrated against the noise floor of two IID reference sets
//! ([`stats`]).
//!
//! Batch generation, on-disk formats and the `angiosim` command line live
//! in [`dataset`], [`report`] and [`cli`].

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod dataset;
pub mod error;
pub mod image;
pub mod morphology;
pub mod phantom;
pub mod raster;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
