//! Projection of the sphere-swept vessel onto the image plane and
//! rasterization of the resulting disk union.
//!
//! Under orthographic projection along z a sphere of diameter `d` becomes a
//! disk of diameter `d`, so the silhouette of the spheres placed along the
//! curve is exactly the union of the projected disks.

use crate::curve::{self, CurvatureTorsionProcess, FrenetState, Vec3};
use crate::image::GrayImage;
use crate::phantom::{self, PhantomLabel, SimConfig};
use crate::seed::{stage_rng, Stage};
use crate::{Error, Result};

pub const FOREGROUND: u8 = 255;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// A rendered image together with the ground truth it was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct Angiogram {
    pub image: GrayImage,
    pub label: PhantomLabel,
    pub config_digest: String,
    pub seed: u64,
}

/// Drops z and halves the thickness: one disk per curve sample.
pub fn project_orthographic(curve: &curve::VesselCurve) -> Result<Vec<Disk>> {
    let thickness = curve
        .thickness()
        .ok_or_else(|| Error::validation("curve thickness has not been set"))?;
    Ok(curve
        .samples()
        .iter()
        .zip(thickness)
        .map(|(s, t)| Disk {
            x: s.position.x,
            y: s.position.y,
            radius: t / 2.0,
        })
        .collect())
}

/// Binary image with pixel `(i, j)` set iff its center lies in some disk.
pub fn rasterize_disks(disks: &[Disk], width: usize, height: usize) -> GrayImage {
    let mut img = GrayImage::new(width, height);
    let (w, h) = (width as f64, height as f64);
    for d in disks {
        let r2 = d.radius * d.radius;
        let x0 = (d.x - d.radius).ceil().max(0.0);
        let x1 = (d.x + d.radius).floor().min(w - 1.0);
        let y0 = (d.y - d.radius).ceil().max(0.0);
        let y1 = (d.y + d.radius).floor().min(h - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for j in y0 as usize..=y1 as usize {
            let dy = j as f64 - d.y;
            for i in x0 as usize..=x1 as usize {
                let dx = i as f64 - d.x;
                if dx * dx + dy * dy <= r2 {
                    img.put(i, j, FOREGROUND);
                }
            }
        }
    }
    img
}

/// Draws one image of the model. Deterministic in `(config, seed)`.
///
/// The curve midpoint is translated to the image center before the random
/// rotation about that point, so the projected vessel always covers the
/// center pixel, which is also where the aneurysm sits.
pub fn render(config: &SimConfig, seed: u64) -> Result<Angiogram> {
    config.validate()?;
    let label = phantom::draw_label(config, &mut stage_rng(seed, Stage::Label), seed);

    let mut process =
        CurvatureTorsionProcess::random(config.process, stage_rng(seed, Stage::Curve))?;
    let curve = curve::integrate_frenet_serret(
        &mut process,
        config.total_length,
        config.step,
        FrenetState::canonical(),
    )?;

    let (cx, cy) = (config.width / 2, config.height / 2);
    let target = Vec3::new(cx as f64, cy as f64, 0.0);
    let curve = curve::recenter_curve(&curve, curve.total_length() / 2.0, target)?;
    let mut curve = curve::random_rotation(&curve, &mut stage_rng(seed, Stage::Rotation))?;

    let arc = curve.arc_lengths();
    let anchor = arc[curve.center_index()];
    let thickness = phantom::thickness_profile(
        &label,
        config,
        &arc,
        anchor,
        &mut stage_rng(seed, Stage::EdgeNoise),
    )?;
    curve.set_thickness(thickness)?;

    let disks = project_orthographic(&curve)?;
    let image = rasterize_disks(&disks, config.width, config.height);
    Ok(Angiogram {
        image,
        label,
        config_digest: config.digest(),
        seed,
    })
}
