//! End-to-end evaluation in library calls: generate a reference dataset
//! and perturbed candidates, measure the noise floor, evaluate each
//! candidate and aggregate the reports into one table.
//!
//! Run: cargo run --release --example evaluate_perturbed

use angiosim::dataset::generate_batch;
use angiosim::phantom::{Perturbation, Preset};
use angiosim::report::{aggregate_reports, evaluate};
use angiosim::stats::{noise_floor, EstimatorSettings, Metric};

fn main() -> angiosim::Result<()> {
    let work = tempfile::tempdir().expect("temporary directory");
    let n = 500;
    let reference = Preset::Sim33.config();
    let settings = EstimatorSettings::default();

    let ref_dir = work.path().join("ref");
    generate_batch(&reference, n, 1, &ref_dir)?;
    let floor = noise_floor(&reference, n, 3, Metric::Kl, 9, &settings)?;
    println!("KL floor {:.4} ± {:.4}", floor.mean, floor.std);

    let mut reports = Vec::new();
    for (k, shift) in [0.0, -2.0, -4.0, -6.0].into_iter().enumerate() {
        let cand = reference.perturbed(&Perturbation {
            t0: shift,
            prevalence: 0.0,
            edge_noise: 0.0,
        })?;
        let label = format!("t0{shift:+}");
        let dir = work.path().join(&label);
        generate_batch(&cand, n, 100 + k as u64, &dir)?;
        let mut report = evaluate(
            &ref_dir,
            &dir,
            &[Metric::Kl, Metric::Js],
            reference.threshold,
            &settings,
            &label,
        )?;
        report.attach_floor(&floor)?;
        let path = work.path().join(format!("{label}.json"));
        std::fs::write(&path, report.to_json()).expect("write report");
        reports.push(path);
    }
    print!("{}", aggregate_reports(&reports)?);
    Ok(())
}
