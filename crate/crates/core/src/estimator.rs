//! Residual error indicator and maximum marking.
//!
//! `η_K² = h_K² ‖f + div_x(ν∇_x u_h) − ∂_t u_h‖²_{L2(K)} + h_K Σ_e ‖[ν∇_x u_h]·n_x‖²_{L2(e)}`
//! where `e` runs over the interior facets of `K` and `n_x` is the spatial part
//! of the unit space-time facet normal. Each interior facet contributes fully to
//! both of its elements.

use rayon::prelude::*;

use crate::assembly::ProblemSpec;
use crate::error::{Error, Result};
use crate::fespace::{DofMap, FeFunction, LagrangeBasis, MAX_LOCAL};
use crate::geometry::{facet_measure_and_normal, Point, SimplexGeometry};
use crate::mesh::SpaceTimeMesh;
use crate::quadrature;

#[derive(Debug, Clone)]
pub struct IndicatorField {
    eta: Vec<f64>,
    residual_sq: Vec<f64>,
    jump_sq: Vec<f64>,
    total: f64,
    max: f64,
}

impl IndicatorField {
    /// From per-element values, which must be finite and nonnegative.
    pub fn from_values(eta: Vec<f64>) -> Result<Self> {
        if eta.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "indicators must be finite and nonnegative".into(),
            ));
        }
        let residual_sq = eta.iter().map(|e| e * e).collect();
        let jump_sq = vec![0.0; eta.len()];
        Ok(Self::finish(eta, residual_sq, jump_sq))
    }

    fn finish(eta: Vec<f64>, residual_sq: Vec<f64>, jump_sq: Vec<f64>) -> Self {
        let total = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        let max = eta.iter().cloned().fold(0.0, f64::max);
        Self {
            eta,
            residual_sq,
            jump_sq,
            total,
            max,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.eta
    }

    /// `h_K² ‖R_h‖²_{L2(K)}` per element.
    pub fn residual_part(&self) -> &[f64] {
        &self.residual_sq
    }

    /// `h_K ‖J_h‖²_{L2(∂K)}` per element.
    pub fn jump_part(&self) -> &[f64] {
        &self.jump_sq
    }

    /// `(Σ η_K²)^½`
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

pub fn compute_indicators(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    uh: &FeFunction,
    problem: &ProblemSpec,
) -> Result<IndicatorField> {
    if uh.coeffs.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_dofs(),
            found: uh.coeffs.len(),
        });
    }
    let dim = mesh.dim();
    let sd = dim - 1;
    let p = dofs.degree();
    let basis = dofs.basis();
    let vol_rule = quadrature::rule(dim, 2 * p + 2)?;
    let facet_rule = quadrature::rule(dim - 1, 2 * p)?;
    let facet_scale = if dim == 3 { 2.0 } else { 1.0 };

    let geoms: Vec<SimplexGeometry> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| mesh.geometry(k).ok_or(Error::DegenerateElement(k)))
        .collect::<Result<_>>()?;
    let nu: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| problem.element_diffusion(mesh, k))
        .collect::<Result<_>>()?;

    let residual_sq: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let geom = &geoms[k];
            let h = mesh.element_size(k);
            let ld = dofs.element_dofs(k);
            let mut lap = [0.0; MAX_LOCAL];
            basis.spatial_laplacians(geom, &mut lap);
            let div: f64 = nu[k]
                * ld.iter()
                    .zip(&lap)
                    .map(|(&g, l)| uh.coeffs[g] * l)
                    .sum::<f64>();
            let mut grads = [[0.0; 3]; MAX_LOCAL];
            let mut acc = 0.0;
            for (q, w) in vol_rule.iter() {
                basis.gradients(geom, q, &mut grads);
                let dt: f64 = ld
                    .iter()
                    .zip(&grads)
                    .map(|(&g, gr)| uh.coeffs[g] * gr[sd])
                    .sum();
                let r = problem.source(&geom.to_physical(q)) + div - dt;
                acc += w * r * r;
            }
            h * h * acc * geom.det().abs()
        })
        .collect();

    let interior: Vec<usize> = mesh
        .facets()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.elements.1.is_some())
        .map(|(i, _)| i)
        .collect();
    let facet_jumps: Vec<(usize, usize, f64)> = interior
        .par_iter()
        .map(|&fi| {
            let facet = &mesh.facets()[fi];
            let (ka, kb) = (facet.elements.0, facet.elements.1.unwrap());
            let pts: Vec<Point> = facet.vertices[..dim]
                .iter()
                .map(|&v| *mesh.vertex(v))
                .collect();
            let (measure, normal) = facet_measure_and_normal(dim, &pts);
            let mut acc = 0.0;
            for (q, w) in facet_rule.iter() {
                let mut x = [0.0; 3];
                for (l, pt) in q[..dim].iter().zip(&pts) {
                    for a in 0..dim {
                        x[a] += l * pt[a];
                    }
                }
                let ga = flux(&basis, dofs, uh, &geoms[ka], ka, &x);
                let gb = flux(&basis, dofs, uh, &geoms[kb], kb, &x);
                let jump: f64 = (0..sd)
                    .map(|a| (nu[ka] * ga[a] - nu[kb] * gb[a]) * normal[a])
                    .sum();
                acc += w * jump * jump;
            }
            (ka, kb, acc * measure * facet_scale)
        })
        .collect();

    let mut jump_sq = vec![0.0; mesh.n_elements()];
    for (ka, kb, j) in facet_jumps {
        jump_sq[ka] += j;
        jump_sq[kb] += j;
    }
    for (k, j) in jump_sq.iter_mut().enumerate() {
        *j *= mesh.element_size(k);
    }
    let eta = residual_sq
        .iter()
        .zip(&jump_sq)
        .map(|(r, j)| (r + j).sqrt())
        .collect();
    Ok(IndicatorField::finish(eta, residual_sq, jump_sq))
}

fn flux(
    basis: &LagrangeBasis,
    dofs: &DofMap,
    uh: &FeFunction,
    geom: &SimplexGeometry,
    k: usize,
    x: &Point,
) -> Point {
    let bary = geom.to_barycentric(x);
    let mut grads = [[0.0; 3]; MAX_LOCAL];
    basis.gradients(geom, &bary, &mut grads);
    let mut g = [0.0; 3];
    for (&dof, gr) in dofs.element_dofs(k).iter().zip(&grads) {
        for a in 0..3 {
            g[a] += uh.coeffs[dof] * gr[a];
        }
    }
    g
}

/// Elements with `η_K ≥ σ · max η`, in increasing id order.
pub fn mark(indicators: &IndicatorField, sigma: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidArgument(format!(
            "marking threshold must lie in [0, 1], got {sigma}"
        )));
    }
    if indicators.is_empty() {
        return Err(Error::InvalidArgument("empty indicator field".into()));
    }
    let threshold = sigma * indicators.max();
    Ok(indicators
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= threshold)
        .map(|(k, _)| k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mark_examples() {
        let f = IndicatorField::from_values(vec![1.0, 0.6, 0.4]).unwrap();
        assert_eq!(mark(&f, 0.5).unwrap(), vec![0, 1]);
        assert_eq!(mark(&f, 0.0).unwrap(), vec![0, 1, 2]);
        assert_eq!(mark(&f, 1.0).unwrap(), vec![0]);
        let tie = IndicatorField::from_values(vec![0.2, 0.9, 0.9]).unwrap();
        assert_eq!(mark(&tie, 1.0).unwrap(), vec![1, 2]);
        assert!(mark(&f, 1.5).is_err());
        assert!(mark(&f, -0.1).is_err());
    }

    #[test]
    fn totals() {
        let f = IndicatorField::from_values(vec![3.0, 4.0]).unwrap();
        assert!((f.total() - 5.0).abs() < 1e-15);
        assert_eq!(f.max(), 4.0);
        assert!(IndicatorField::from_values(vec![-1.0]).is_err());
    }
}
