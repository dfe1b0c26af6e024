//! CSV, JSON and VTK output for studies.
//!
//! Numbers in the CSV use a fixed `{:.12e}` format so repeated runs produce
//! byte-identical error columns; timings are grouped at the end of each row.

use std::io::Write;

use serde::Serialize;

use super::study::{ConvergenceRecord, Study, StudyConfig};
use crate::error::Result;
use crate::mesh::{write_vtk, VtkField};

use super::study::LevelView;

pub const CSV_HEADER: &str = "level,dofs,free_dofs,elements,h_max,energy_error,l2_error,eta_total,\
iterations,relative_residual,galerkin_residual,rate_dofs,rate_h,assemble_s,solve_s,estimate_s";

/// Number of leading CSV columns that do not depend on timing.
pub const CSV_DETERMINISTIC_COLUMNS: usize = 13;

fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

pub fn csv_row(r: &ConvergenceRecord) -> String {
    [
        r.level.to_string(),
        r.dofs.to_string(),
        r.free_dofs.to_string(),
        r.elements.to_string(),
        sci(r.h_max),
        opt(r.energy_error),
        opt(r.l2_error),
        sci(r.eta_total),
        r.iterations.to_string(),
        sci(r.relative_residual),
        sci(r.galerkin_residual),
        opt(r.rate_dofs),
        opt(r.rate_h),
        format!("{:.6}", r.assemble_s),
        format!("{:.6}", r.solve_s),
        format!("{:.6}", r.estimate_s),
    ]
    .join(",")
}

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Environment {
    package_version: &'static str,
    os: &'static str,
    arch: &'static str,
    threads: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a StudyConfig,
    problem: &'a str,
    homogeneous_data: bool,
    /// Present when boundary or initial data were imposed by lifting.
    note: Option<&'static str>,
    aborted: &'a Option<String>,
    fitted_rate_last3: Option<f64>,
    records: &'a [ConvergenceRecord],
    environment: Environment,
}

pub fn write_json_summary<W: Write>(config: &StudyConfig, study: &Study, out: W) -> Result<()> {
    let summary = Summary {
        config,
        problem: &study.problem,
        homogeneous_data: study.homogeneous_data,
        note: (!study.homogeneous_data).then_some(
            "exact solution is nonzero on the lateral or bottom boundary; its nodal values were imposed there",
        ),
        aborted: &study.aborted,
        fitted_rate_last3: study.fitted_rate(3, config.dim),
        records: &study.records,
        environment: Environment {
            package_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        },
    };
    serde_json::to_writer_pretty(out, &summary).map_err(std::io::Error::from)?;
    Ok(())
}

/// Mesh with the solution at vertices and the indicators per element.
pub fn write_level_vtk<W: Write>(view: &LevelView<'_>, out: W) -> Result<()> {
    let uh: Vec<f64> = view
        .dofs
        .vertex_dofs()
        .iter()
        .map(|&g| view.solution.coeffs[g])
        .collect();
    write_vtk(
        view.mesh,
        &[VtkField {
            name: "u_h",
            values: &uh,
        }],
        &[VtkField {
            name: "eta",
            values: view.indicators.values(),
        }],
        out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: usize) -> ConvergenceRecord {
        ConvergenceRecord {
            level,
            dofs: 10 * (level + 1),
            free_dofs: 3,
            elements: 8,
            h_max: 0.5,
            energy_error: Some(0.125),
            l2_error: None,
            eta_total: 1.0,
            iterations: 4,
            relative_residual: 1e-9,
            galerkin_residual: 1e-10,
            rate_dofs: None,
            rate_h: Some(1.0),
            assemble_s: 0.1,
            solve_s: 0.2,
            estimate_s: 0.3,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&[record(0), record(1)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let ncols = CSV_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == ncols));
        let header: Vec<&str> = CSV_HEADER.split(',').collect();
        assert_eq!(header[CSV_DETERMINISTIC_COLUMNS], "assemble_s");
        assert!(lines[1].starts_with("0,10,3,8,5.000000000000e-1,1.250000000000e-1,,"));
    }
}
