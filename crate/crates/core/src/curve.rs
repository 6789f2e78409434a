//! Vessel trajectories as unit-speed space curves.
//!
//! A trajectory is obtained by integrating the Frenet-Serret system
//!
//! ```text
//! r' = T,  T' = κN,  N' = −κT + τB,  B' = −τN
//! ```
//!
//! in arc length with classical RK4, re-orthonormalizing the frame after
//! every step. Curvature and torsion come from a [`CurvatureTorsionProcess`]
//! that is piecewise constant over fixed-length segments and clipped to
//! configured bounds, which keeps the vessel from coiling tighter than
//! `1 / kappa_max`.

use nalgebra::{Quaternion, UnitQuaternion, Vector3, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

const FRAME_TOLERANCE: f64 = 1e-9;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }
}

/// Position plus the moving frame (tangent, normal, binormal).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrenetState {
    pub position: Vec3,
    pub tangent: Vec3,
    pub normal: Vec3,
    pub binormal: Vec3,
}

impl FrenetState {
    /// Origin with the frame aligned to the x, y and z axes.
    pub fn canonical() -> Self {
        FrenetState {
            position: Vec3::zeros(),
            tangent: Vec3::x(),
            normal: Vec3::y(),
            binormal: Vec3::z(),
        }
    }

    /// Largest violation of orthonormality and right-handedness: the max
    /// over the Gram matrix deviation from identity and the componentwise
    /// gap between `B` and `T × N`.
    pub fn frame_error(&self) -> f64 {
        let (t, n, b) = (&self.tangent, &self.normal, &self.binormal);
        let gram = [
            t.dot(t) - 1.0,
            n.dot(n) - 1.0,
            b.dot(b) - 1.0,
            t.dot(n),
            t.dot(b),
            n.dot(b),
        ];
        let cross = (t.cross(n) - b).amax();
        gram.iter().fold(cross, |acc, g| acc.max(g.abs()))
    }

    /// Gram-Schmidt on (T, N), then `B = T × N`.
    pub fn reorthonormalize(&mut self) {
        let t = self.tangent.normalize();
        let n = (self.normal - t * t.dot(&self.normal)).normalize();
        self.tangent = t;
        self.normal = n;
        self.binormal = t.cross(&n);
    }

    fn is_finite(&self) -> bool {
        [self.position, self.tangent, self.normal, self.binormal]
            .iter()
            .all(|v| v.iter().all(|c| c.is_finite()))
    }

    fn derivative(&self, kappa: f64, tau: f64) -> FrenetState {
        FrenetState {
            position: self.tangent,
            tangent: self.normal * kappa,
            normal: self.binormal * tau - self.tangent * kappa,
            binormal: self.normal * -tau,
        }
    }

    fn add_scaled(&self, d: &FrenetState, h: f64) -> FrenetState {
        FrenetState {
            position: self.position + d.position * h,
            tangent: self.tangent + d.tangent * h,
            normal: self.normal + d.normal * h,
            binormal: self.binormal + d.binormal * h,
        }
    }

    /// One classical RK4 step with curvature and torsion held constant.
    fn rk4_step(&self, kappa: f64, tau: f64, h: f64) -> FrenetState {
        let k1 = self.derivative(kappa, tau);
        let k2 = self.add_scaled(&k1, h / 2.0).derivative(kappa, tau);
        let k3 = self.add_scaled(&k2, h / 2.0).derivative(kappa, tau);
        let k4 = self.add_scaled(&k3, h).derivative(kappa, tau);
        let w = h / 6.0;
        FrenetState {
            position: self.position
                + (k1.position + k2.position * 2.0 + k3.position * 2.0 + k4.position) * w,
            tangent: self.tangent
                + (k1.tangent + k2.tangent * 2.0 + k3.tangent * 2.0 + k4.tangent) * w,
            normal: self.normal + (k1.normal + k2.normal * 2.0 + k3.normal * 2.0 + k4.normal) * w,
            binormal: self.binormal
                + (k1.binormal + k2.binormal * 2.0 + k3.binormal * 2.0 + k4.binormal) * w,
        }
    }
}

/// Settings of the stochastic curvature/torsion process. Values are drawn
/// uniformly from the `*_draw` intervals once per segment, then clipped to
/// `kappa_range` / `tau_range`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub kappa_draw: Interval,
    pub tau_draw: Interval,
    pub kappa_range: Interval,
    pub tau_range: Interval,
    pub segment_length: f64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            kappa_draw: Interval::new(0.0, 0.01),
            tau_draw: Interval::new(-0.05, 0.05),
            kappa_range: Interval::new(0.0, 0.01),
            tau_range: Interval::new(-0.05, 0.05),
            segment_length: 20.0,
        }
    }
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [
            ("kappa_draw", self.kappa_draw),
            ("tau_draw", self.tau_draw),
            ("kappa_range", self.kappa_range),
            ("tau_range", self.tau_range),
        ] {
            if !iv.is_valid() {
                return Err(Error::validation(format!(
                    "{name} must be a finite interval with lo <= hi, got [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
        }
        if self.kappa_range.lo < 0.0 {
            return Err(Error::validation("kappa_range must be non-negative"));
        }
        if !(self.segment_length > 0.0 && self.segment_length.is_finite()) {
            return Err(Error::validation(format!(
                "segment_length must be > 0, got {}",
                self.segment_length
            )));
        }
        Ok(())
    }
}

enum Source {
    Constant {
        kappa: f64,
        tau: f64,
    },
    Random {
        config: ProcessConfig,
        rng: ChaCha8Rng,
    },
}

/// Piecewise-constant curvature and torsion along arc length.
///
/// Segment `k` covers `[k·L, (k+1)·L)`. Segments are drawn in order, so a
/// realization depends only on the RNG stream and not on the integration
/// step.
pub struct CurvatureTorsionProcess {
    kappa_range: Interval,
    tau_range: Interval,
    segment_length: f64,
    source: Source,
    segment: Option<(u64, f64, f64)>,
}

impl CurvatureTorsionProcess {
    pub fn random(config: ProcessConfig, rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        Ok(CurvatureTorsionProcess {
            kappa_range: config.kappa_range,
            tau_range: config.tau_range,
            segment_length: config.segment_length,
            source: Source::Random { config, rng },
            segment: None,
        })
    }

    /// Constant curvature and torsion; the clip bounds collapse onto them.
    pub fn constant(kappa: f64, tau: f64) -> Self {
        CurvatureTorsionProcess {
            kappa_range: Interval::point(kappa),
            tau_range: Interval::point(tau),
            segment_length: f64::INFINITY,
            source: Source::Constant { kappa, tau },
            segment: None,
        }
    }

    pub fn kappa_range(&self) -> Interval {
        self.kappa_range
    }

    pub fn tau_range(&self) -> Interval {
        self.tau_range
    }

    pub fn segment_length(&self) -> f64 {
        self.segment_length
    }

    /// Curvature and torsion in effect at arc length `s`.
    pub fn at(&mut self, s: f64) -> (f64, f64) {
        match &mut self.source {
            Source::Constant { kappa, tau } => (*kappa, *tau),
            Source::Random { config, rng } => {
                let index = (s.max(0.0) / self.segment_length).floor() as u64;
                loop {
                    match self.segment {
                        Some((k, kappa, tau)) if k >= index => return (kappa, tau),
                        _ => {
                            let next = self.segment.map_or(0, |(k, _, _)| k + 1);
                            let kappa = self.kappa_range.clamp(config.kappa_draw.sample(rng));
                            let tau = self.tau_range.clamp(config.tau_draw.sample(rng));
                            self.segment = Some((next, kappa, tau));
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub arc_length: f64,
    pub position: Vec3,
}

/// Arc-length-sampled space curve with optional per-sample thickness.
#[derive(Clone, Debug, PartialEq)]
pub struct VesselCurve {
    samples: Vec<CurveSample>,
    thickness: Option<Vec<f64>>,
    center_index: usize,
    step: f64,
}

impl VesselCurve {
    /// Builds a curve from positions spaced `step` apart in arc length.
    pub fn from_positions(positions: Vec<Vec3>, step: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::validation("curve has no samples"));
        }
        if !(step > 0.0) {
            return Err(Error::validation(format!("step must be > 0, got {step}")));
        }
        let samples = positions
            .into_iter()
            .enumerate()
            .map(|(i, position)| CurveSample {
                arc_length: i as f64 * step,
                position,
            })
            .collect();
        Ok(VesselCurve {
            samples,
            thickness: None,
            center_index: 0,
            step,
        })
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn total_length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.arc_length)
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn anchor(&self) -> Vec3 {
        self.samples[self.center_index].position
    }

    pub fn arc_lengths(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.arc_length).collect()
    }

    pub fn thickness(&self) -> Option<&[f64]> {
        self.thickness.as_deref()
    }

    pub fn set_thickness(&mut self, thickness: Vec<f64>) -> Result<()> {
        if thickness.len() != self.samples.len() {
            return Err(Error::validation(format!(
                "thickness has {} values for {} samples",
                thickness.len(),
                self.samples.len()
            )));
        }
        if let Some(bad) = thickness.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::validation(format!(
                "thickness values must be finite and > 0, got {bad}"
            )));
        }
        self.thickness = Some(thickness);
        Ok(())
    }

    pub fn with_thickness(mut self, thickness: Vec<f64>) -> Result<Self> {
        self.set_thickness(thickness)?;
        Ok(self)
    }

    fn index_nearest(&self, arc_length: f64) -> usize {
        let i = (arc_length / self.step).round();
        (i.max(0.0) as usize).min(self.samples.len() - 1)
    }
}

/// Integrates the Frenet-Serret system from `initial` over `total_length`.
///
/// The curve gets `⌊total_length / step⌋ + 1` samples. The step actually
/// used is `total_length / ⌊total_length / step⌋`, which never exceeds the
/// request by more than a factor `(n + 1) / n` and makes the last sample
/// land exactly at `total_length`.
pub fn integrate_frenet_serret(
    process: &mut CurvatureTorsionProcess,
    total_length: f64,
    step: f64,
    initial: FrenetState,
) -> Result<VesselCurve> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::validation(format!("step must be > 0, got {step}")));
    }
    if !(total_length.is_finite() && total_length >= 2.0 * step) {
        return Err(Error::validation(format!(
            "total_length {total_length} must be at least twice the step {step}"
        )));
    }
    if !initial.is_finite() || initial.frame_error() > FRAME_TOLERANCE {
        return Err(Error::validation(format!(
            "initial frame is not orthonormal (error {:.3e})",
            initial.frame_error()
        )));
    }

    // Guard against L/h landing a hair below an integer.
    let intervals = (total_length / step * (1.0 + 1e-12)).floor() as usize;
    let h = total_length / intervals as f64;

    let mut positions = Vec::with_capacity(intervals + 1);
    let mut state = initial;
    positions.push(state.position);
    for i in 0..intervals {
        let (kappa, tau) = process.at((i as f64 + 0.5) * h);
        if !kappa.is_finite() || !tau.is_finite() {
            return Err(Error::validation(format!(
                "curvature/torsion process produced non-finite values (kappa = {kappa}, tau = {tau})"
            )));
        }
        state = state.rk4_step(kappa, tau, h);
        state.reorthonormalize();
        positions.push(state.position);
    }
    VesselCurve::from_positions(positions, h)
}

/// Rigidly translates the curve so the sample nearest `anchor_arc_length`
/// sits at `target`, and marks that sample as the curve's center.
pub fn recenter_curve(
    curve: &VesselCurve,
    anchor_arc_length: f64,
    target: Vec3,
) -> Result<VesselCurve> {
    if curve.is_empty() {
        return Err(Error::validation("cannot recenter an empty curve"));
    }
    if !(0.0..=curve.total_length()).contains(&anchor_arc_length) {
        return Err(Error::validation(format!(
            "anchor arc length {anchor_arc_length} outside [0, {}]",
            curve.total_length()
        )));
    }
    let index = curve.index_nearest(anchor_arc_length);
    let shift = target - curve.samples[index].position;
    let mut out = curve.clone();
    for s in &mut out.samples {
        s.position += shift;
    }
    // Exact placement of the anchor regardless of rounding in the shift.
    out.samples[index].position = target;
    out.center_index = index;
    Ok(out)
}

/// Uniformly distributed rotation (unit quaternion from a normalized 4D
/// Gaussian).
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    loop {
        let q: Vector4<f64> = Vector4::from_fn(|_, _| StandardNormal.sample(rng));
        let norm = q.norm();
        if norm > 1e-12 {
            // nalgebra stores quaternions as (i, j, k, w).
            return UnitQuaternion::new_unchecked(Quaternion::from(q / norm));
        }
    }
}

/// Applies a uniformly random rotation about the curve's anchor point.
pub fn random_rotation<R: Rng + ?Sized>(curve: &VesselCurve, rng: &mut R) -> Result<VesselCurve> {
    if curve.is_empty() {
        return Err(Error::validation("cannot rotate an empty curve"));
    }
    let rotation = uniform_rotation(rng);
    Ok(rotate_about_anchor(curve, &rotation))
}

pub fn rotate_about_anchor(curve: &VesselCurve, rotation: &UnitQuaternion<f64>) -> VesselCurve {
    let anchor = curve.anchor();
    let mut out = curve.clone();
    for (i, s) in out.samples.iter_mut().enumerate() {
        if i != curve.center_index {
            s.position = anchor + rotation * (s.position - anchor);
        }
    }
    out
}
