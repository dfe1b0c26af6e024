use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::norms::{energy_error, l2_error};
use super::problems::builtin_problem;
use crate::assembly::{assemble, AssembledSystem, AssemblyOptions, ProblemSpec};
use crate::error::{Error, Result};
use crate::estimator::{compute_indicators, mark, IndicatorField};
use crate::fespace::{DofMap, FeFunction};
use crate::linalg::{gmres, GmresOptions, Preconditioner, SolveStats};
use crate::mesh::SpaceTimeMesh;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub problem: String,
    /// Spatial dimension `d`.
    pub dim: usize,
    /// Polynomial degree `p`.
    pub degree: usize,
    /// Marking threshold; 0 refines uniformly.
    pub sigma: f64,
    /// No level with more dofs than this is solved.
    pub max_dofs: usize,
    /// Cells per axis of the initial box mesh.
    pub initial_n: usize,
    pub max_levels: usize,
    pub final_time: f64,
    /// Stop after the first level whose energy error is at or below this.
    pub target_error: Option<f64>,
    pub gmres: GmresOptions,
    pub assembly: AssemblyOptions,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            problem: "smooth".into(),
            dim: 1,
            degree: 1,
            sigma: 0.0,
            max_dofs: 10_000,
            initial_n: 2,
            max_levels: 200,
            final_time: 1.0,
            target_error: None,
            gmres: GmresOptions::default(),
            assembly: AssemblyOptions::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::InvalidArgument(format!(
                "sigma must lie in [0, 1], got {}",
                self.sigma
            )));
        }
        if !(1..=2).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if !(1..=2).contains(&self.degree) {
            return Err(Error::InvalidArgument(format!(
                "degree must be 1 or 2, got {}",
                self.degree
            )));
        }
        if self.initial_n == 0 || self.max_levels == 0 {
            return Err(Error::InvalidArgument(
                "initial_n and max_levels must be positive".into(),
            ));
        }
        if !(self.final_time > 0.0) {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        if self.target_error.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::InvalidArgument(
                "target error must be positive".into(),
            ));
        }
        let g = &self.gmres;
        if g.restart == 0 || g.max_iter == 0 || !(g.rtol > 0.0 && g.rtol < 1.0) {
            return Err(Error::InvalidArgument(
                "solver needs restart > 0, max_iter > 0 and rtol in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn is_uniform(&self) -> bool {
        self.sigma == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub level: usize,
    /// `N_h`, every Lagrange node including constrained ones.
    pub dofs: usize,
    pub free_dofs: usize,
    pub elements: usize,
    pub h_max: f64,
    pub energy_error: Option<f64>,
    pub l2_error: Option<f64>,
    pub eta_total: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `max_i |l_h(φ_i) − a_h(u_h, φ_i)| / ‖f_h‖` over free dofs.
    pub galerkin_residual: f64,
    pub rate_dofs: Option<f64>,
    pub rate_h: Option<f64>,
    pub assemble_s: f64,
    pub solve_s: f64,
    pub estimate_s: f64,
}

/// Everything computed on one level, handed to the per-level callback.
pub struct LevelView<'a> {
    pub level: usize,
    pub mesh: &'a SpaceTimeMesh,
    pub dofs: &'a DofMap,
    pub system: &'a AssembledSystem,
    pub solution: &'a FeFunction,
    pub stats: &'a SolveStats,
    pub indicators: &'a IndicatorField,
    pub record: &'a ConvergenceRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub problem: String,
    pub records: Vec<ConvergenceRecord>,
    /// Set when a level failed to solve; the records before it are kept.
    pub aborted: Option<String>,
    /// False when boundary or initial data had to be lifted.
    pub homogeneous_data: bool,
}

impl Study {
    pub fn energy_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.energy_error).collect()
    }

    pub fn dofs(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.dofs).collect()
    }

    /// Least-squares dof-based rate over the last `levels` records.
    pub fn fitted_rate(&self, levels: usize, d: usize) -> Option<f64> {
        let errors = self.energy_errors()?;
        fitted_rate(&self.dofs(), &errors, d, levels).ok()
    }
}

/// Runs the configured built-in problem from a uniform box mesh.
pub fn run_study(config: &StudyConfig) -> Result<Study> {
    config.validate()?;
    let problem = builtin_problem(&config.problem, config.dim)?;
    let mesh = SpaceTimeMesh::build_box_mesh(config.dim, config.initial_n, config.final_time)?;
    run_study_on(&problem, mesh, config, |_| Ok(()))
}

/// Solve, estimate, mark and refine from `mesh` until the dof budget is spent.
///
/// `on_level` sees every solved level; an error from it stops the study.
pub fn run_study_on(
    problem: &ProblemSpec,
    mut mesh: SpaceTimeMesh,
    config: &StudyConfig,
    mut on_level: impl FnMut(&LevelView<'_>) -> Result<()>,
) -> Result<Study> {
    config.validate()?;
    if problem.spatial_dim() != mesh.spatial_dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.spatial_dim(),
            found: problem.spatial_dim(),
        });
    }
    let d = mesh.spatial_dim();
    let mut study = Study {
        problem: problem.name().to_string(),
        records: Vec::new(),
        aborted: None,
        homogeneous_data: problem.has_homogeneous_data(200, 1e-12),
    };

    for level in 0..config.max_levels {
        let dofs = DofMap::build(&mesh, config.degree)?;
        if dofs.n_dofs() > config.max_dofs {
            if level == 0 {
                return Err(Error::InvalidArgument(format!(
                    "initial mesh already has {} dofs, above max_dofs = {}",
                    dofs.n_dofs(),
                    config.max_dofs
                )));
            }
            break;
        }

        let t0 = Instant::now();
        let system = assemble(&mesh, &dofs, problem, &config.assembly)?;
        let assemble_s = t0.elapsed().as_secs_f64();

        let precond = Preconditioner::new(config.gmres.preconditioner, &system.matrix)?;
        let (x, stats) = gmres(&system.matrix, &system.rhs, &precond, &config.gmres)?;
        if !stats.converged {
            study.aborted = Some(format!(
                "solver did not converge on level {level} ({} dofs): relative residual {:.3e} after {} iterations",
                dofs.n_dofs(),
                stats.relative_residual,
                stats.iterations
            ));
            break;
        }
        let galerkin_residual = galerkin_residual(&system, &dofs, &x)?;
        let uh = FeFunction { coeffs: x };

        let t1 = Instant::now();
        let (energy, l2) = match problem.exact() {
            Some(_) => (
                Some(energy_error(
                    &mesh,
                    &dofs,
                    &uh,
                    problem,
                    &system.theta,
                    &system.nu,
                )?),
                Some(l2_error(&mesh, &dofs, &uh, problem)?),
            ),
            None => (None, None),
        };
        let indicators = compute_indicators(&mesh, &dofs, &uh, problem)?;
        let estimate_s = t1.elapsed().as_secs_f64();

        let mut record = ConvergenceRecord {
            level,
            dofs: dofs.n_dofs(),
            free_dofs: dofs.n_free(),
            elements: mesh.n_elements(),
            h_max: mesh.h_max(),
            energy_error: energy,
            l2_error: l2,
            eta_total: indicators.total(),
            iterations: stats.iterations,
            relative_residual: stats.relative_residual,
            galerkin_residual,
            rate_dofs: None,
            rate_h: None,
            assemble_s,
            solve_s: stats.wall_time,
            estimate_s,
        };
        if let (Some(prev), Some(e)) = (study.records.last(), energy) {
            if let Some(e0) = prev.energy_error {
                record.rate_dofs = pair_rate_dofs(prev.dofs, record.dofs, e0, e, d);
                record.rate_h = pair_rate_h(prev.h_max, record.h_max, e0, e);
            }
        }

        on_level(&LevelView {
            level,
            mesh: &mesh,
            dofs: &dofs,
            system: &system,
            solution: &uh,
            stats: &stats,
            indicators: &indicators,
            record: &record,
        })?;
        study.records.push(record);

        let reached = matches!((energy, config.target_error), (Some(e), Some(t)) if e <= t);
        if reached || level + 1 == config.max_levels {
            break;
        }
        let marked = mark(&indicators, config.sigma)?;
        mesh = mesh.refine(&marked)?.mesh;
    }
    Ok(study)
}

/// `max_i |b_i − (K x)_i| / ‖b‖` over unconstrained rows.
pub fn galerkin_residual(system: &AssembledSystem, dofs: &DofMap, x: &[f64]) -> Result<f64> {
    let kx = system.matrix.spmv(x)?;
    let norm_b = crate::linalg::norm2(&system.rhs);
    let worst = (0..dofs.n_dofs())
        .filter(|&i| !dofs.is_dirichlet(i))
        .map(|i| (system.rhs[i] - kx[i]).abs())
        .fold(0.0, f64::max);
    Ok(if norm_b > 0.0 { worst / norm_b } else { worst })
}

fn pair_rate_dofs(n0: usize, n1: usize, e0: f64, e1: f64, d: usize) -> Option<f64> {
    if n1 == n0 || e0 <= 0.0 || e1 <= 0.0 {
        return None;
    }
    Some((e0 / e1).ln() / (n1 as f64 / n0 as f64).ln() * (d + 1) as f64)
}

fn pair_rate_h(h0: f64, h1: f64, e0: f64, e1: f64) -> Option<f64> {
    let ratio = h0 / h1;
    if (ratio - 1.0).abs() < 1e-12 || e0 <= 0.0 || e1 <= 0.0 {
        return None;
    }
    Some((e0 / e1).ln() / ratio.ln())
}

fn check_rate_input(dofs: &[usize], errors: &[f64]) -> Result<()> {
    if dofs.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: dofs.len(),
            found: errors.len(),
        });
    }
    if dofs.len() < 2 {
        return Err(Error::InvalidArgument(
            "rates need at least two levels".into(),
        ));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "rates need positive errors, got {e}"
        )));
    }
    if dofs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "dof counts must increase strictly".into(),
        ));
    }
    Ok(())
}

/// `rate_i = log(e_{i−1}/e_i) / log(N_i/N_{i−1}) · (d+1)`, one per consecutive pair.
pub fn observed_rates(dofs: &[usize], errors: &[f64], d: usize) -> Result<Vec<f64>> {
    check_rate_input(dofs, errors)?;
    Ok(dofs
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| pair_rate_dofs(n[0], n[1], e[0], e[1], d).unwrap())
        .collect())
}

/// Least-squares slope of `log e` against `log N^{−1/(d+1)}` over the last
/// `levels` entries.
pub fn fitted_rate(dofs: &[usize], errors: &[f64], d: usize, levels: usize) -> Result<f64> {
    check_rate_input(dofs, errors)?;
    if levels < 2 || levels > dofs.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot fit over {levels} of {} levels",
            dofs.len()
        )));
    }
    let start = dofs.len() - levels;
    let xs: Vec<f64> = dofs[start..]
        .iter()
        .map(|&n| -(n as f64).ln() / (d + 1) as f64)
        .collect();
    let ys: Vec<f64> = errors[start..].iter().map(|e| e.ln()).collect();
    let m = levels as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
