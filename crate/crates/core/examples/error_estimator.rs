//! Effectivity of the residual estimator along an adaptive run: the ratio
//! `η / ‖u − u_h‖_h` and how much of `η²` comes from the element residuals
//! versus the flux jumps.
//!
//! ```text
//! cargo run --release --example error_estimator -- [problem] [dim] [degree] [sigma] [max_dofs]
//! ```

use stfem::driver::{builtin_problem, run_study_on, StudyConfig};
use stfem::estimator::mark;
use stfem::mesh::SpaceTimeMesh;

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let problem = args.get(1).cloned().unwrap_or_else(|| "peak".into());
    let dim: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let degree: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let sigma: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let max_dofs: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(20_000);

    let config = StudyConfig {
        problem: problem.clone(),
        dim,
        degree,
        sigma,
        max_dofs,
        ..StudyConfig::default()
    };
    config.validate()?;
    let spec = builtin_problem(&problem, dim)?;
    let mesh = SpaceTimeMesh::build_box_mesh(dim, config.initial_n, 1.0)?;

    println!(
        "{:>7} {:>11} {:>11} {:>8} {:>8} {:>11}",
        "dofs", "error", "eta", "eff.", "jump %", "marked"
    );
    run_study_on(&spec, mesh, &config, |view| {
        let eta = view.indicators;
        let residual: f64 = eta.residual_part().iter().sum();
        let jump: f64 = eta.jump_part().iter().sum();
        let marked = mark(eta, sigma)?.len();
        let error = view.record.energy_error.unwrap_or(f64::NAN);
        println!(
            "{:>7} {:>11.4e} {:>11.4e} {:>8.3} {:>7.1}% {:>11}",
            view.record.dofs,
            error,
            eta.total(),
            eta.total() / error,
            100.0 * jump / (residual + jump),
            format!("{marked}/{}", eta.len())
        );
        Ok(())
    })?;
    Ok(())
}
