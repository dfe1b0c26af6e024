//! Uniform against adaptive refinement for `u = sin(1/(1/(10π) + |(x,t)|))`.
//!
//! ```text
//! cargo run --release --example oscillatory_adaptive -- [dim] [degree] [max_dofs] [sigma]
//! ```

use stfem::driver::{run_study, Study, StudyConfig};

fn print(label: &str, study: &Study) {
    println!("{label}");
    println!(
        "{:>9} {:>12} {:>12} {:>7} {:>8}",
        "dofs", "energy", "eta", "iters", "time"
    );
    for r in &study.records {
        println!(
            "{:>9} {:>12.4e} {:>12.4e} {:>7} {:>8.2}",
            r.dofs,
            r.energy_error.unwrap_or(f64::NAN),
            r.eta_total,
            r.iterations,
            r.assemble_s + r.solve_s + r.estimate_s
        );
    }
    if let Some(msg) = &study.aborted {
        println!("stopped early: {msg}");
    }
}

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dim = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let degree = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_dofs = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let sigma = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.5);

    let base = StudyConfig {
        problem: "oscillatory".into(),
        dim,
        degree,
        max_dofs,
        ..StudyConfig::default()
    };
    let uniform = run_study(&StudyConfig {
        sigma: 0.0,
        ..base.clone()
    })?;
    print("uniform", &uniform);
    let adaptive = run_study(&StudyConfig { sigma, ..base })?;
    print(&format!("adaptive, sigma = {sigma}"), &adaptive);

    let target = uniform
        .records
        .last()
        .and_then(|r| r.energy_error)
        .unwrap_or(f64::NAN);
    let reached = adaptive
        .records
        .iter()
        .find(|r| r.energy_error.is_some_and(|e| e <= target));
    match reached {
        Some(r) => println!(
            "adaptive reaches the final uniform error {target:.3e} with {} dofs ({:.1}% of {})",
            r.dofs,
            100.0 * r.dofs as f64 / uniform.records.last().unwrap().dofs as f64,
            uniform.records.last().unwrap().dofs
        ),
        None => println!("adaptive did not reach the final uniform error {target:.3e}"),
    }
    Ok(())
}
