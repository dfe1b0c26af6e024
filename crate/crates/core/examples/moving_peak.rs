//! The moving peak `Π(x_i² − x_i) exp(−100 Σ(x_i − t)²)` under uniform and
//! adaptive refinement, with least-squares rates over the finest levels.
//!
//! ```text
//! cargo run --release --example moving_peak -- [dim] [degree] [max_dofs] [sigma]
//! ```

use stfem::driver::{fitted_rate, run_study, Study, StudyConfig};

/// Rate fitted over the levels within a factor 8 of the final dof count.
fn tail_rate(study: &Study, d: usize) -> Option<f64> {
    let dofs = study.dofs();
    let errors = study.energy_errors()?;
    let last = *dofs.last()?;
    let levels = dofs.iter().filter(|&&n| 8 * n >= last).count();
    fitted_rate(&dofs, &errors, d, levels.max(2)).ok()
}

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dim = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let degree = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_dofs = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let sigma = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.5);

    let base = StudyConfig {
        problem: "peak".into(),
        dim,
        degree,
        max_dofs,
        ..StudyConfig::default()
    };
    for (label, s) in [("uniform", 0.0), ("adaptive", sigma)] {
        let study = run_study(&StudyConfig {
            sigma: s,
            ..base.clone()
        })?;
        println!("{label} (sigma = {s})");
        for r in &study.records {
            println!(
                "{:>9} {:>12.4e} {:>12.4e} {:>6}",
                r.dofs,
                r.energy_error.unwrap_or(f64::NAN),
                r.eta_total,
                r.iterations
            );
        }
        if let Some(rate) = tail_rate(&study, dim) {
            println!("rate over the finest levels: {rate:.3}\n");
        }
    }
    Ok(())
}
