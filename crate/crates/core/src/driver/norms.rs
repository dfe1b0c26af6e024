//! Error norms against a manufactured solution, evaluated by quadrature.
//!
//! `‖v‖_h² = ½‖v‖²_{L2(Σ_T)} + Σ_K θ_K h_K ‖∂_t v‖²_{L2(K)} + ‖ν^½ ∇_x v‖²_{L2(K)}`

use rayon::prelude::*;

use crate::assembly::{ExactSolution, ProblemSpec};
use crate::error::{Error, Result};
use crate::fespace::{DofMap, FeFunction, MAX_LOCAL};
use crate::geometry::{facet_measure_and_normal, Point, SimplexGeometry};
use crate::mesh::{BoundaryTag, SpaceTimeMesh};
use crate::quadrature::{self, QuadRule};

/// The three contributions to `‖·‖_h²`, kept apart for inspection.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyParts {
    /// `½‖v‖²_{L2(Σ_T)}`
    pub top_trace: f64,
    /// `Σ θ_K h_K ‖∂_t v‖²`
    pub time_derivative: f64,
    /// `Σ ν_K ‖∇_x v‖²`
    pub spatial_gradient: f64,
}

impl EnergyParts {
    pub fn norm(&self) -> f64 {
        (self.top_trace + self.time_derivative + self.spatial_gradient).sqrt()
    }
}

/// Value, time derivative and spatial gradient of `u − u_h` (or of `u_h` alone).
struct Difference<'a> {
    mesh: &'a SpaceTimeMesh,
    dofs: &'a DofMap,
    uh: &'a FeFunction,
    exact: Option<&'a dyn ExactSolution>,
}

impl Difference<'_> {
    fn at(&self, geom: &SimplexGeometry, k: usize, bary: &[f64]) -> (f64, f64, [f64; 2]) {
        let sd = self.mesh.spatial_dim();
        let basis = self.dofs.basis();
        let mut vals = [0.0; MAX_LOCAL];
        let mut grads = [[0.0; 3]; MAX_LOCAL];
        basis.values(bary, &mut vals);
        basis.gradients(geom, bary, &mut grads);
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (i, &dof) in self.dofs.element_dofs(k).iter().enumerate() {
            let c = self.uh.coeffs[dof];
            v += c * vals[i];
            for a in 0..=sd {
                g[a] += c * grads[i][a];
            }
        }
        let mut vt = g[sd];
        let mut vx = [g[0], g[1]];
        if let Some(u) = self.exact {
            let x = geom.to_physical(bary);
            let ux = u.spatial_gradient(&x);
            v = u.value(&x) - v;
            vt = u.time_derivative(&x) - vt;
            for a in 0..sd {
                vx[a] = ux[a] - vx[a];
            }
        }
        if sd == 1 {
            vx[1] = 0.0;
        }
        (v, vt, vx)
    }
}

fn check_lengths(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    uh: &FeFunction,
    theta: &[f64],
    nu: &[f64],
) -> Result<()> {
    if uh.coeffs.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_dofs(),
            found: uh.coeffs.len(),
        });
    }
    for len in [theta.len(), nu.len()] {
        if len != mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_elements(),
                found: len,
            });
        }
    }
    Ok(())
}

fn energy_parts_impl(
    diff: &Difference<'_>,
    theta: &[f64],
    nu: &[f64],
    order: usize,
) -> Result<EnergyParts> {
    let mesh = diff.mesh;
    let dim = mesh.dim();
    let vol_rule = quadrature::rule(dim, order)?;
    let facet_rule = quadrature::rule(dim - 1, order)?;

    let (time_derivative, spatial_gradient) = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let geom = mesh.geometry(k).ok_or(Error::DegenerateElement(k))?;
            let h = mesh.element_size(k);
            let (mut at, mut ax) = (0.0, 0.0);
            for (q, w) in vol_rule.iter() {
                let (_, vt, vx) = diff.at(&geom, k, q);
                at += w * vt * vt;
                ax += w * (vx[0] * vx[0] + vx[1] * vx[1]);
            }
            let jac = geom.det().abs();
            Ok((theta[k] * h * at * jac, nu[k] * ax * jac))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));

    let top_trace = 0.5 * top_integral(diff, &facet_rule)?;
    Ok(EnergyParts {
        top_trace,
        time_derivative,
        spatial_gradient,
    })
}

fn top_integral(diff: &Difference<'_>, rule: &QuadRule) -> Result<f64> {
    let mesh = diff.mesh;
    let dim = mesh.dim();
    let top: Vec<_> = mesh
        .facets()
        .iter()
        .filter(|f| f.tag == BoundaryTag::Top)
        .collect();
    let parts: Vec<f64> = top
        .par_iter()
        .map(|facet| {
            let k = facet.elements.0;
            let geom = mesh.geometry(k).ok_or(Error::DegenerateElement(k))?;
            let pts: Vec<Point> = facet.vertices[..dim]
                .iter()
                .map(|&v| *mesh.vertex(v))
                .collect();
            let (measure, _) = facet_measure_and_normal(dim, &pts);
            let mut acc = 0.0;
            for (q, w) in rule.iter() {
                let mut x = [0.0; 3];
                for (l, p) in q[..dim].iter().zip(&pts) {
                    for a in 0..dim {
                        x[a] += l * p[a];
                    }
                }
                let (v, _, _) = diff.at(&geom, k, &geom.to_barycentric(&x));
                acc += w * v * v;
            }
            // facet reference simplex has measure 1/(dim-1)!
            let ref_measure = if dim == 3 { 0.5 } else { 1.0 };
            Ok(acc * measure / ref_measure)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

fn error_order(dofs: &DofMap) -> usize {
    2 * dofs.degree() + 4
}

/// The three parts of `‖u − u_h‖_h²` with `u` the problem's exact solution.
pub fn energy_error_parts(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    uh: &FeFunction,
    problem: &ProblemSpec,
    theta: &[f64],
    nu: &[f64],
) -> Result<EnergyParts> {
    let exact = problem.exact().ok_or(Error::MissingExactSolution)?;
    check_lengths(mesh, dofs, uh, theta, nu)?;
    let diff = Difference {
        mesh,
        dofs,
        uh,
        exact: Some(exact),
    };
    energy_parts_impl(&diff, theta, nu, error_order(dofs))
}

/// `‖u − u_h‖_h`
pub fn energy_error(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    uh: &FeFunction,
    problem: &ProblemSpec,
    theta: &[f64],
    nu: &[f64],
) -> Result<f64> {
    Ok(energy_error_parts(mesh, dofs, uh, problem, theta, nu)?.norm())
}

/// `‖v_h‖_h` of a discrete function.
pub fn energy_norm(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    vh: &FeFunction,
    theta: &[f64],
    nu: &[f64],
) -> Result<f64> {
    check_lengths(mesh, dofs, vh, theta, nu)?;
    let diff = Difference {
        mesh,
        dofs,
        uh: vh,
        exact: None,
    };
    // the integrands are polynomials of degree 2p
    Ok(energy_parts_impl(&diff, theta, nu, 2 * dofs.degree())?.norm())
}

/// `‖u − u_h‖_{L2(Q)}`
pub fn l2_error(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    uh: &FeFunction,
    problem: &ProblemSpec,
) -> Result<f64> {
    let exact = problem.exact().ok_or(Error::MissingExactSolution)?;
    if uh.coeffs.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_dofs(),
            found: uh.coeffs.len(),
        });
    }
    let diff = Difference {
        mesh,
        dofs,
        uh,
        exact: Some(exact),
    };
    let rule = quadrature::rule(mesh.dim(), error_order(dofs))?;
    let sq: f64 = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let geom = mesh.geometry(k).ok_or(Error::DegenerateElement(k))?;
            let acc: f64 = rule
                .iter()
                .map(|(q, w)| {
                    let (v, _, _) = diff.at(&geom, k, q);
                    w * v * v
                })
                .sum();
            Ok(acc * geom.det().abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{element_parameters, ThetaStrategy};
    use std::sync::Arc;

    struct Affine;

    impl ExactSolution for Affine {
        fn value(&self, p: &Point) -> f64 {
            1.0 + 2.0 * p[0] - 3.0 * p[1]
        }
        fn time_derivative(&self, _: &Point) -> f64 {
            -3.0
        }
        fn spatial_gradient(&self, _: &Point) -> [f64; 2] {
            [2.0, 0.0]
        }
        fn spatial_laplacian(&self, _: &Point) -> f64 {
            0.0
        }
    }

    #[test]
    fn interpolant_of_affine_is_exact() {
        let mesh = SpaceTimeMesh::build_box_mesh(1, 3, 1.0).unwrap();
        let problem = ProblemSpec::manufactured("affine", 1, 1.0, 1.0, Arc::new(Affine)).unwrap();
        let dofs = DofMap::build(&mesh, 1).unwrap();
        let uh = dofs.interpolate_all(|p| Affine.value(p));
        let (theta, nu) = element_parameters(&mesh, 1, &problem, ThetaStrategy::default()).unwrap();
        assert!(energy_error(&mesh, &dofs, &uh, &problem, &theta, &nu).unwrap() < 1e-12);
        assert!(l2_error(&mesh, &dofs, &uh, &problem).unwrap() < 1e-12);
    }

    #[test]
    fn top_trace_of_constant() {
        // v ≡ 1: only the trace term survives, ½ |Ω| = ½
        let mesh = SpaceTimeMesh::build_box_mesh(2, 2, 1.0).unwrap();
        let dofs = DofMap::build(&mesh, 2).unwrap();
        let v = dofs.interpolate_all(|_| 1.0);
        let ones = vec![1.0; mesh.n_elements()];
        let n = energy_norm(&mesh, &dofs, &v, &ones, &ones).unwrap();
        assert!((n * n - 0.5).abs() < 1e-13);
    }

    #[test]
    fn missing_exact_solution() {
        let mesh = SpaceTimeMesh::build_box_mesh(1, 2, 1.0).unwrap();
        let problem = super::super::builtin_problem("custom", 1).unwrap();
        let dofs = DofMap::build(&mesh, 1).unwrap();
        let uh = FeFunction::zeros(dofs.n_dofs());
        let ones = vec![1.0; mesh.n_elements()];
        assert!(matches!(
            energy_error(&mesh, &dofs, &uh, &problem, &ones, &ones),
            Err(Error::MissingExactSolution)
        ));
    }
}
