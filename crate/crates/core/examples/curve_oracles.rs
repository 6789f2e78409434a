//! Integrates constant-curvature curves and compares them with their
//! closed forms: a circle that must close on itself and a circular helix.
//!
//! Run: cargo run --release --example curve_oracles

use std::f64::consts::PI;

use angiosim::curve::{integrate_frenet_serret, CurvatureTorsionProcess, FrenetState, Vec3};

fn main() -> angiosim::Result<()> {
    let kappa = 0.05;
    let mut circle = CurvatureTorsionProcess::constant(kappa, 0.0);
    let c = integrate_frenet_serret(
        &mut circle,
        2.0 * PI / kappa,
        1e-3,
        FrenetState::canonical(),
    )?;
    let s = c.samples();
    let gap = (s.last().unwrap().position - s[0].position).norm();
    println!(
        "circle, radius {}: {} samples, endpoint gap {gap:.2e}",
        1.0 / kappa,
        c.len()
    );

    let (kappa, tau): (f64, f64) = (0.05, 0.02);
    let speed = (kappa * kappa + tau * tau).sqrt();
    let f = FrenetState::canonical();
    let axis = (f.tangent * tau + f.binormal * kappa) / speed;
    let closed_form = |s: f64| -> Vec3 {
        axis * (tau / speed * s)
            + (f.tangent - axis * (tau / speed)) * ((speed * s).sin() / speed)
            + f.normal * ((1.0 - (speed * s).cos()) / speed * (kappa / speed))
    };
    let mut helix = CurvatureTorsionProcess::constant(kappa, tau);
    let h = integrate_frenet_serret(&mut helix, 300.0, 1e-3, f)?;
    let err = h
        .samples()
        .iter()
        .map(|p| (p.position - closed_form(p.arc_length)).norm())
        .fold(0.0, f64::max);
    println!(
        "helix: radius {:.4}, pitch {:.4}, max deviation from closed form {err:.2e}",
        kappa / (speed * speed),
        2.0 * PI * tau / (speed * speed)
    );
    Ok(())
}
