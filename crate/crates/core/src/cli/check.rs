//! Invariant self-tests run by `stfem check`. Each check is small enough to
//! finish in well under a second.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble, assemble_unconstrained, element_blocks, AssemblyOptions, ThetaStrategy,
};
use crate::driver::{builtin_problem, energy_norm, galerkin_residual};
use crate::error::Result;
use crate::estimator::{mark, IndicatorField};
use crate::fespace::{DofMap, FeFunction};
use crate::linalg::{gmres, GmresOptions, Preconditioner};
use crate::mesh::SpaceTimeMesh;
use crate::quadrature;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(u64) -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 7] = [
    ("quadrature exactness", quadrature_exactness),
    ("refinement conformity and volume", refinement_conformity),
    ("p=1 divergence block vanishes", divergence_block),
    ("marking rule", marking_rule),
    ("gmres against dense solve", gmres_dense),
    ("galerkin residual", galerkin),
    ("coercivity on random functions", coercivity),
];

pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, f)| {
            let (passed, detail) = match f(seed) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn quadrature_exactness(_: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for dim in 1..=3 {
        for order in 0..=quadrature::MAX_ORDER {
            let rule = quadrature::rule(dim, order)?;
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let c_max = if dim == 3 { order as u32 - a - b } else { 0 };
                    for c in 0..=c_max {
                        if dim == 1 && b > 0 {
                            continue;
                        }
                        let exact = factorial(a) * factorial(b) * factorial(c)
                            / factorial(a + b + c + dim as u32);
                        let approx: f64 = rule
                            .iter()
                            .map(|(q, w)| {
                                w * q[0].powi(a as i32) * q[1].powi(b as i32) * q[2].powi(c as i32)
                            })
                            .sum();
                        worst = worst.max((approx - exact).abs());
                    }
                }
            }
        }
    }
    Ok((worst <= 1e-13, format!("max error {worst:.2e}")))
}

/// Single-element facets must lie on the boundary of the cylinder.
fn hanging_facets(mesh: &SpaceTimeMesh) -> usize {
    let dim = mesh.dim();
    let t_end = mesh.final_time();
    mesh.facets()
        .iter()
        .filter(|f| f.elements.1.is_none())
        .filter(|f| {
            let pts: Vec<_> = f.vertices[..dim].iter().map(|&v| mesh.vertex(v)).collect();
            let on_face = (0..dim).any(|a| {
                let top = if a == dim - 1 { t_end } else { 1.0 };
                pts.iter().all(|p| p[a].abs() < 1e-12)
                    || pts.iter().all(|p| (p[a] - top).abs() < 1e-12)
            });
            !on_face
        })
        .count()
}

fn refinement_conformity(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut details = Vec::new();
    let mut ok = true;
    for d in 1..=2 {
        let mut mesh = SpaceTimeMesh::build_box_mesh(d, 2, 1.0)?;
        for _ in 0..10 {
            let n = mesh.n_elements();
            let count = rng.gen_range(1..=n.div_ceil(4));
            let marked: Vec<usize> = sample(&mut rng, n, count).into_vec();
            mesh = mesh.refine(&marked)?.mesh;
        }
        let hanging = hanging_facets(&mesh);
        let vol_err = (mesh.total_volume() - 1.0).abs();
        ok &= hanging == 0 && vol_err <= 1e-12;
        details.push(format!(
            "d={d}: {} elements, {hanging} hanging facets, volume error {vol_err:.1e}",
            mesh.n_elements()
        ));
    }
    Ok((ok, details.join("; ")))
}

fn divergence_block(_: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for d in 1..=2 {
        let mesh = SpaceTimeMesh::build_box_mesh(d, 2, 1.0)?;
        let rule = quadrature::rule(mesh.dim(), 2)?;
        for k in 0..mesh.n_elements() {
            let geom = mesh.geometry(k).expect("box mesh elements are regular");
            let blocks = element_blocks(&geom, 1, 1.0, mesh.element_size(k), 1.0, &rule);
            for row in &blocks.divergence_stabilization {
                for v in row {
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    Ok((worst == 0.0, format!("max |entry| {worst:.1e}")))
}

fn marking_rule(_: u64) -> Result<(bool, String)> {
    let field = IndicatorField::from_values(vec![1.0, 0.6, 0.4, 0.5])?;
    let cases: [(f64, Vec<usize>); 4] = [
        (0.0, vec![0, 1, 2, 3]),
        (0.5, vec![0, 1, 3]),
        (0.6, vec![0, 1]),
        (1.0, vec![0]),
    ];
    let ok = cases
        .iter()
        .all(|(s, want)| mark(&field, *s).ok().as_ref() == Some(want));
    Ok((ok, format!("{} hand-built cases", cases.len())))
}

fn gmres_dense(_: u64) -> Result<(bool, String)> {
    let problem = builtin_problem("peak", 1)?;
    let mesh = SpaceTimeMesh::build_box_mesh(1, 6, 1.0)?;
    let dofs = DofMap::build(&mesh, 2)?;
    let system = assemble(&mesh, &dofs, &problem, &AssemblyOptions::default())?;
    let n = dofs.n_dofs();
    let opts = GmresOptions {
        rtol: 1e-12,
        ..GmresOptions::default()
    };
    let precond = Preconditioner::new(opts.preconditioner, &system.matrix)?;
    let (x, _) = gmres(&system.matrix, &system.rhs, &precond, &opts)?;
    let dense = DMatrix::from_row_slice(n, n, &system.matrix.to_dense().concat());
    let Some(exact) = dense.lu().solve(&DVector::from_column_slice(&system.rhs)) else {
        return Ok((false, "dense matrix is singular".into()));
    };
    let diff: f64 = x
        .iter()
        .zip(exact.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let rel = diff / exact.norm();
    Ok((
        rel <= 1e-6,
        format!("{n} dofs, relative difference {rel:.2e}"),
    ))
}

fn galerkin(_: u64) -> Result<(bool, String)> {
    let problem = builtin_problem("smooth", 1)?;
    let mesh = SpaceTimeMesh::build_box_mesh(1, 8, 1.0)?;
    let dofs = DofMap::build(&mesh, 1)?;
    let system = assemble(&mesh, &dofs, &problem, &AssemblyOptions::default())?;
    let opts = GmresOptions::default();
    let precond = Preconditioner::new(opts.preconditioner, &system.matrix)?;
    let (x, _) = gmres(&system.matrix, &system.rhs, &precond, &opts)?;
    let r = galerkin_residual(&system, &dofs, &x)?;
    Ok((
        r <= 10.0 * opts.rtol,
        format!("max residual / ‖f_h‖ = {r:.2e}"),
    ))
}

fn coercivity(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = builtin_problem("smooth", 1)?;
    let mut mins = Vec::new();
    for degree in 1..=2 {
        let mesh = SpaceTimeMesh::build_box_mesh(1, 4, 1.0)?;
        let dofs = DofMap::build(&mesh, degree)?;
        let opts = AssemblyOptions {
            theta: ThetaStrategy::default(),
            load_order: None,
        };
        let system = assemble_unconstrained(&mesh, &dofs, &problem, &opts)?;
        let mut min = f64::INFINITY;
        for _ in 0..100 {
            let coeffs: Vec<f64> = (0..dofs.n_dofs())
                .map(|i| {
                    if dofs.is_dirichlet(i) {
                        0.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect();
            let a = system.matrix.quadratic_form(&coeffs)?;
            let v = FeFunction { coeffs };
            let norm = energy_norm(&mesh, &dofs, &v, &system.theta, &system.nu)?;
            min = min.min(a / (norm * norm));
        }
        mins.push(min);
    }
    let ok = mins.iter().all(|&m| m > 0.0);
    Ok((
        ok,
        format!("min ratio p=1 {:.3}, p=2 {:.3}", mins[0], mins[1]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks(7) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
