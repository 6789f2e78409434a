//! Independent reference implementations shared by the integration tests
//! and the acceptance harness.

#![allow(dead_code)]

use angiosim::curve::{
    integrate_frenet_serret, CurvatureTorsionProcess, FrenetState, Vec3, VesselCurve,
};
use angiosim::morphology::BinaryImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Squared distance from every pixel to the nearest background pixel,
/// searching all background pixels plus the one-pixel ring outside the
/// frame.
pub fn brute_force_dt(mask: &BinaryImage) -> Vec<f64> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut background = Vec::new();
    for y in -1..=h {
        for x in -1..=w {
            let outside = x < 0 || y < 0 || x >= w || y >= h;
            if outside || !mask.get(x as usize, y as usize) {
                background.push((x, y));
            }
        }
    }
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            let best = background
                .iter()
                .map(|&(bx, by)| ((bx - x).pow(2) + (by - y).pow(2)) as f64)
                .fold(f64::INFINITY, f64::min);
            out[(y * w + x) as usize] = best;
        }
    }
    out
}

/// Tries every foreground pixel as a disk center and grows a closed disk
/// ring by ring (offsets in order of squared length) until it touches
/// background. Returns the largest radius among disks that reach the
/// center, or `None`.
pub fn brute_force_inscribed_radius(mask: &BinaryImage, search_radius: f64) -> Option<f64> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let (cx, cy) = mask.center();
    let (cx, cy) = (cx as i64, cy as i64);
    let is_bg =
        |x: i64, y: i64| x < 0 || y < 0 || x >= w || y >= h || !mask.get(x as usize, y as usize);
    let reach = w.max(h) + 1;
    let mut offsets: Vec<(i64, i64, i64)> = (-reach..=reach)
        .flat_map(|dy| (-reach..=reach).map(move |dx| (dx * dx + dy * dy, dx, dy)))
        .filter(|&(r2, _, _)| r2 > 0)
        .collect();
    offsets.sort_unstable();

    let mut best: Option<f64> = None;
    for y in 0..h {
        for x in 0..w {
            if is_bg(x, y) {
                continue;
            }
            let d2c = ((x - cx).pow(2) + (y - cy).pow(2)) as f64;
            if d2c > search_radius * search_radius {
                continue;
            }
            let hit = offsets
                .iter()
                .find(|&&(_, dx, dy)| is_bg(x + dx, y + dy))
                .expect("the frame ring is background");
            let r2 = hit.0 as f64;
            if d2c <= r2 && best.is_none_or(|b| r2.sqrt() > b) {
                best = Some(r2.sqrt());
            }
        }
    }
    best
}

pub fn random_mask(rng: &mut ChaCha8Rng, width: usize, height: usize) -> BinaryImage {
    // Mix of sparse noise and dense blobs so both short and long distances occur.
    let density: f64 = rng.random_range(0.05..0.98);
    let blobs = rng.random_range(0..4);
    let centers: Vec<(f64, f64, f64)> = (0..blobs)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(3.0..25.0),
            )
        })
        .collect();
    let noise: Vec<bool> = (0..width * height)
        .map(|_| rng.random_bool(density))
        .collect();
    BinaryImage::from_fn(width, height, |x, y| {
        let in_blob = centers
            .iter()
            .any(|&(bx, by, r)| (x as f64 - bx).powi(2) + (y as f64 - by).powi(2) <= r * r);
        in_blob || noise[y * width + x]
    })
}

/// Straight bar of the given width through the image center; pixels whose
/// center lies within `width / 2` of the bar axis are foreground.
pub fn bar_mask(size: usize, width: f64, angle_deg: f64) -> BinaryImage {
    let (c, s) = (angle_deg.to_radians().cos(), angle_deg.to_radians().sin());
    let mid = (size / 2) as f64;
    BinaryImage::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - mid, y as f64 - mid);
        (-dx * s + dy * c).abs() <= width / 2.0
    })
}

/// Closed-form position on the helix traced by constant `(kappa, tau)`
/// from the canonical frame at the origin.
pub fn helix_position(kappa: f64, tau: f64, s: f64) -> Vec3 {
    let f = FrenetState::canonical();
    let c = (kappa * kappa + tau * tau).sqrt();
    let axis = (f.tangent * tau + f.binormal * kappa) / c;
    f.position
        + axis * (tau / c * s)
        + (f.tangent - axis * (tau / c)) * ((c * s).sin() / c)
        + f.normal * ((1.0 - (c * s).cos()) / c * (kappa / c))
}

pub fn integrate_constant(kappa: f64, tau: f64, length: f64, step: f64) -> VesselCurve {
    let mut process = CurvatureTorsionProcess::constant(kappa, tau);
    integrate_frenet_serret(&mut process, length, step, FrenetState::canonical()).unwrap()
}

/// Max distance between integrated samples and the closed-form helix.
pub fn helix_error(kappa: f64, tau: f64, length: f64, step: f64) -> f64 {
    let curve = integrate_constant(kappa, tau, length, step);
    curve
        .samples()
        .iter()
        .map(|p| (p.position - helix_position(kappa, tau, p.arc_length)).norm())
        .fold(0.0, f64::max)
}

/// Radius and pitch measured from integrated samples: distance of every
/// sample to the helix axis, and the axial advance over one turn.
pub fn measured_radius_and_pitch(kappa: f64, tau: f64, step: f64) -> (f64, f64, f64) {
    let c2 = kappa * kappa + tau * tau;
    let c = c2.sqrt();
    let turn = 2.0 * std::f64::consts::PI / c;
    let curve = integrate_constant(kappa, tau, turn, step);
    let f = FrenetState::canonical();
    let axis = (f.tangent * tau + f.binormal * kappa) / c;
    let axis_point = f.position + f.normal * (kappa / c2);
    let mut rmin = f64::INFINITY;
    let mut rmax: f64 = 0.0;
    for p in curve.samples() {
        let v = p.position - axis_point;
        let r = (v - axis * v.dot(&axis)).norm();
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let end = curve.samples().last().unwrap().position;
    let pitch = (end - f.position).dot(&axis);
    (rmin, rmax, pitch)
}

/// Runs the `angiosim` binary with `args`.
pub fn angiosim<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_angiosim"))
        .args(args)
        .output()
        .expect("spawn angiosim")
}

/// All files under `dir` with their contents, sorted by name.
pub fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
