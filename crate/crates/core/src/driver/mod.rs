//! Convergence studies: the solve, estimate, mark, refine loop, error norms,
//! observed rates, reports and the built-in manufactured problems.

mod norms;
mod problems;
mod report;
mod study;

pub use norms::{energy_error, energy_error_parts, energy_norm, l2_error, EnergyParts};
pub use problems::{
    builtin_problem, custom_problem, MovingPeak, Oscillatory, SineProduct, BUILTIN_PROBLEMS,
};
pub use report::{
    csv_row, write_csv, write_json_summary, write_level_vtk, CSV_DETERMINISTIC_COLUMNS, CSV_HEADER,
};
pub use study::{
    fitted_rate, galerkin_residual, observed_rates, run_study, run_study_on, ConvergenceRecord,
    LevelView, Study, StudyConfig,
};
