//! Uniform refinement on `u = sin(πx) sin(πt)` for p = 1 and p = 2.
//!
//! ```text
//! cargo run --release --example smooth_convergence -- [dim] [max_dofs]
//! ```

use stfem::driver::{run_study, StudyConfig};

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dim = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_dofs = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20_000);

    for degree in [1, 2] {
        let config = StudyConfig {
            problem: "smooth".into(),
            dim,
            degree,
            sigma: 0.0,
            max_dofs,
            ..StudyConfig::default()
        };
        let study = run_study(&config)?;
        println!("p = {degree}");
        println!(
            "{:>8} {:>12} {:>12} {:>8} {:>6} {:>8}",
            "dofs", "energy", "eta", "rate", "iters", "time"
        );
        for r in &study.records {
            println!(
                "{:>8} {:>12.4e} {:>12.4e} {:>8} {:>6} {:>8.3}",
                r.dofs,
                r.energy_error.unwrap_or(f64::NAN),
                r.eta_total,
                r.rate_dofs.map(|x| format!("{x:.3}")).unwrap_or_default(),
                r.iterations,
                r.assemble_s + r.solve_s + r.estimate_s,
            );
        }
        if let Some(rate) = study.fitted_rate(3, dim) {
            println!("rate over the last three levels: {rate:.3}\n");
        }
    }
    Ok(())
}
