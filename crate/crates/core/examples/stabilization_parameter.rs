//! Sensitivity of the discrete solution to the stabilization weight: the
//! smooth problem is solved on a fixed sequence of meshes with `θ` scaled
//! around its default, and with `θ = h` regardless of the polynomial degree.
//!
//! ```text
//! cargo run --release --example stabilization_parameter -- [degree] [max_dofs]
//! ```

use stfem::assembly::{AssemblyOptions, ThetaStrategy};
use stfem::driver::{run_study, StudyConfig};

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let degree: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let max_dofs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5_000);

    let strategies = [
        (
            "0.1 x default",
            ThetaStrategy::InverseEstimate { scale: 0.1 },
        ),
        (
            "0.5 x default",
            ThetaStrategy::InverseEstimate { scale: 0.5 },
        ),
        ("default", ThetaStrategy::InverseEstimate { scale: 1.0 }),
        ("4 x default", ThetaStrategy::InverseEstimate { scale: 4.0 }),
        ("theta = h", ThetaStrategy::Proportional { factor: 1.0 }),
    ];
    println!("smooth problem, d = 1, p = {degree}; energy error on the finest mesh");
    for (label, theta) in strategies {
        let config = StudyConfig {
            degree,
            max_dofs,
            assembly: AssemblyOptions {
                theta,
                ..AssemblyOptions::default()
            },
            ..StudyConfig::default()
        };
        let study = run_study(&config)?;
        let last = study.records.last().expect("at least one level");
        let rate = study.fitted_rate(3, 1).unwrap_or(f64::NAN);
        println!(
            "{label:>14}: {:>6} dofs, error {:.4e}, rate {rate:.3}, {} iterations{}",
            last.dofs,
            last.energy_error.unwrap_or(f64::NAN),
            last.iterations,
            study
                .aborted
                .as_deref()
                .map(|a| format!(" (stopped: {a})"))
                .unwrap_or_default()
        );
    }
    Ok(())
}
