//! Assembly of the time-upwind stabilized space-time system.
//!
//! Testing with `v + θ_K h_K ∂_t v` gives, per element,
//!
//! ```text
//! a_K(u, v) = ∫_K ∂_t u v + θ_K h_K ∂_t u ∂_t v + ν ∇_x u·∇_x v − θ_K h_K div_x(ν ∇_x u) ∂_t v
//! l_K(v)    = ∫_K f v + θ_K h_K f ∂_t v
//! ```
//!
//! Dirichlet conditions on `Σ ∪ Σ_0` are imposed by row replacement.

mod problem;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{DofMap, LagrangeBasis, MAX_LOCAL};
use crate::geometry::SimplexGeometry;
use crate::linalg::CsrMatrix;
use crate::mesh::SpaceTimeMesh;
use crate::quadrature::{self, QuadRule};

pub use problem::{ExactSolution, ProblemSpec, ScalarField};

pub type LocalMatrix = [[f64; MAX_LOCAL]; MAX_LOCAL];
pub type LocalVector = [f64; MAX_LOCAL];

/// How `θ_K` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThetaStrategy {
    /// `θ_K = scale · h_K / (c̃² ν_K)` with `c̃` from the local inverse inequality
    /// (`c̃ = 1` for `p = 1`).
    InverseEstimate { scale: f64 },
    /// `θ_K = factor · h_K`, ignoring `ν` and `p`.
    Proportional { factor: f64 },
}

impl Default for ThetaStrategy {
    fn default() -> Self {
        Self::InverseEstimate { scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub theta: ThetaStrategy,
    /// Quadrature order for the load vector; `2p + 2` when unset.
    pub load_order: Option<usize>,
}

/// The four element-level terms of the bilinear form, kept apart for
/// inspection. Entry `[i][j]` pairs test function `i` with trial function `j`.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    pub n: usize,
    /// `∫ ∂_t φ_j φ_i`
    pub time_derivative: LocalMatrix,
    /// `θ h ∫ ∂_t φ_j ∂_t φ_i`
    pub time_stabilization: LocalMatrix,
    /// `∫ ν ∇_x φ_j · ∇_x φ_i`
    pub diffusion: LocalMatrix,
    /// `−θ h ∫ div_x(ν ∇_x φ_j) ∂_t φ_i`
    pub divergence_stabilization: LocalMatrix,
}

impl LocalBlocks {
    pub fn sum(&self) -> LocalMatrix {
        let mut m = [[0.0; MAX_LOCAL]; MAX_LOCAL];
        for i in 0..self.n {
            for j in 0..self.n {
                m[i][j] = self.time_derivative[i][j]
                    + self.time_stabilization[i][j]
                    + self.diffusion[i][j]
                    + self.divergence_stabilization[i][j];
            }
        }
        m
    }
}

fn geometry_of(mesh: &SpaceTimeMesh, k: usize) -> Result<SimplexGeometry> {
    mesh.geometry(k).ok_or(Error::DegenerateElement(k))
}

/// Stabilization parameter of element `k`.
///
/// For `p = 2`, `c̃²` is the largest eigenvalue of `D v = λ (ν/h²) G v` on the
/// complement of `ker G`, with `D_ij = ∫ div_x(ν∇φ_i) div_x(ν∇φ_j)` and
/// `G_ij = ∫ ν ∇_x φ_i · ∇_x φ_j`.
pub fn compute_theta(
    mesh: &SpaceTimeMesh,
    k: usize,
    degree: usize,
    nu: f64,
    strategy: ThetaStrategy,
) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ν on element {k} must be positive"
        )));
    }
    let h = mesh.element_size(k);
    match strategy {
        ThetaStrategy::Proportional { factor } => Ok(factor * h),
        ThetaStrategy::InverseEstimate { scale } => {
            let c2 = if degree == 1 {
                1.0
            } else {
                let geom = geometry_of(mesh, k)?;
                inverse_constant_sq(&geom, degree, nu, h).ok_or(Error::EigenFailure(k))?
            };
            Ok(scale * h / (c2 * nu))
        }
    }
}

/// Local matrices of the inverse inequality `‖div_x(ν∇v)‖² ≤ c̃² (ν/h²) ‖ν^½ ∇_x v‖²`.
pub fn inverse_inequality_matrices(
    geom: &SimplexGeometry,
    degree: usize,
    nu: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = geom.dim();
    let basis = LagrangeBasis::new(dim, degree);
    let n = basis.len();
    let sd = dim - 1;
    let mut lap = [0.0; MAX_LOCAL];
    basis.spatial_laplacians(geom, &mut lap);
    let vol = geom.volume();
    let d = DMatrix::from_fn(n, n, |i, j| vol * nu * nu * lap[i] * lap[j]);
    let rule = quadrature::rule(dim, 2 * degree - 2).expect("low orders are always available");
    let mut g = DMatrix::zeros(n, n);
    let mut grads = [[0.0; 3]; MAX_LOCAL];
    for (p, w) in rule.iter() {
        basis.gradients(geom, p, &mut grads);
        let wd = w * geom.det().abs() * nu;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..sd).map(|a| grads[i][a] * grads[j][a]).sum();
                g[(i, j)] += wd * s;
            }
        }
    }
    (d, g)
}

fn inverse_constant_sq(geom: &SimplexGeometry, degree: usize, nu: f64, h: f64) -> Option<f64> {
    let (d, g) = inverse_inequality_matrices(geom, degree, nu);
    if d.iter().all(|v| *v == 0.0) {
        return Some(1.0);
    }
    let n = g.nrows();
    let eg = SymmetricEigen::try_new(g, 1e-15, 1000)?;
    let mu_max = eg.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eg.eigenvalues[i] > 1e-10 * mu_max)
        .collect();
    if keep.is_empty() {
        return None;
    }
    // whitened reduced pencil: Λ^{-1/2} Zᵀ D Z Λ^{-1/2}
    let m = keep.len();
    let mut c = DMatrix::zeros(m, m);
    for (a, &ia) in keep.iter().enumerate() {
        let za = eg.eigenvectors.column(ia);
        let dza = &d * za;
        for (b, &ib) in keep.iter().enumerate() {
            let zb = eg.eigenvectors.column(ib);
            c[(a, b)] = zb.dot(&dza) / (eg.eigenvalues[ia] * eg.eigenvalues[ib]).sqrt();
        }
    }
    let ec = SymmetricEigen::try_new(c, 1e-15, 1000)?;
    let lambda = ec
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !lambda.is_finite() {
        return None;
    }
    if lambda <= 1e-14 * (nu / (h * h)) {
        return Some(1.0);
    }
    Some(lambda * h * h / nu)
}

/// Element blocks with quadrature exact for elementwise-constant `ν`.
pub fn element_blocks(
    geom: &SimplexGeometry,
    degree: usize,
    theta: f64,
    h: f64,
    nu: f64,
    rule: &QuadRule,
) -> LocalBlocks {
    let dim = geom.dim();
    let t = dim - 1;
    let basis = LagrangeBasis::new(dim, degree);
    let n = basis.len();
    let th = theta * h;
    let mut lap = [0.0; MAX_LOCAL];
    basis.spatial_laplacians(geom, &mut lap);
    let zero = [[0.0; MAX_LOCAL]; MAX_LOCAL];
    let mut blocks = LocalBlocks {
        n,
        time_derivative: zero,
        time_stabilization: zero,
        diffusion: zero,
        divergence_stabilization: zero,
    };
    let det = geom.det().abs();
    let mut vals = [0.0; MAX_LOCAL];
    let mut grads = [[0.0; 3]; MAX_LOCAL];
    for (p, w) in rule.iter() {
        basis.values(p, &mut vals);
        basis.gradients(geom, p, &mut grads);
        let wd = w * det;
        for i in 0..n {
            let dti = grads[i][t];
            for j in 0..n {
                let dtj = grads[j][t];
                blocks.time_derivative[i][j] += wd * dtj * vals[i];
                blocks.time_stabilization[i][j] += wd * th * dtj * dti;
                let mut g = 0.0;
                for a in 0..t {
                    g += grads[i][a] * grads[j][a];
                }
                blocks.diffusion[i][j] += wd * nu * g;
                if degree > 1 {
                    blocks.divergence_stabilization[i][j] -= wd * th * nu * lap[j] * dti;
                }
            }
        }
    }
    blocks
}

/// Local stiffness of element `k`.
pub fn element_matrix(
    mesh: &SpaceTimeMesh,
    k: usize,
    degree: usize,
    theta: f64,
    nu: f64,
) -> Result<LocalMatrix> {
    let geom = geometry_of(mesh, k)?;
    let rule = quadrature::rule(mesh.dim(), 2 * degree)?;
    Ok(element_blocks(&geom, degree, theta, mesh.element_size(k), nu, &rule).sum())
}

pub fn element_load_with(
    geom: &SimplexGeometry,
    degree: usize,
    theta: f64,
    h: f64,
    f: &(dyn Fn(&crate::geometry::Point) -> f64 + Send + Sync),
    rule: &QuadRule,
) -> LocalVector {
    let dim = geom.dim();
    let t = dim - 1;
    let basis = LagrangeBasis::new(dim, degree);
    let n = basis.len();
    let th = theta * h;
    let det = geom.det().abs();
    let mut load = [0.0; MAX_LOCAL];
    let mut vals = [0.0; MAX_LOCAL];
    let mut grads = [[0.0; 3]; MAX_LOCAL];
    for (p, w) in rule.iter() {
        let fx = f(&geom.to_physical(p));
        if fx == 0.0 {
            continue;
        }
        basis.values(p, &mut vals);
        basis.gradients(geom, p, &mut grads);
        let wf = w * det * fx;
        for i in 0..n {
            load[i] += wf * (vals[i] + th * grads[i][t]);
        }
    }
    load
}

/// Local load vector of element `k`; quadrature order `2p + 2` unless given.
pub fn element_load(
    mesh: &SpaceTimeMesh,
    k: usize,
    degree: usize,
    theta: f64,
    f: &(dyn Fn(&crate::geometry::Point) -> f64 + Send + Sync),
    order: Option<usize>,
) -> Result<LocalVector> {
    let geom = geometry_of(mesh, k)?;
    let rule = quadrature::rule(mesh.dim(), order.unwrap_or(2 * degree + 2))?;
    Ok(element_load_with(
        &geom,
        degree,
        theta,
        mesh.element_size(k),
        f,
        &rule,
    ))
}

/// `θ_K` and `ν_K` for every element.
pub fn element_parameters(
    mesh: &SpaceTimeMesh,
    degree: usize,
    problem: &ProblemSpec,
    strategy: ThetaStrategy,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nu: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| problem.element_diffusion(mesh, k))
        .collect::<Result<_>>()?;
    let theta = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| compute_theta(mesh, k, degree, nu[k], strategy))
        .collect::<Result<_>>()?;
    Ok((theta, nu))
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// `θ_K` per element.
    pub theta: Vec<f64>,
    /// `ν_K` per element.
    pub nu: Vec<f64>,
    /// Values imposed at Dirichlet dofs (zero where the data is homogeneous).
    pub dirichlet_values: Vec<f64>,
}

/// Assembles `K_h u_h = f_h` with Dirichlet rows replaced by identity rows.
///
/// With an exact solution present, its nodal values on `Σ ∪ Σ_0` are the
/// prescribed data; their column contributions move to the right-hand side.
pub fn assemble(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    problem: &ProblemSpec,
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    let g = match problem.exact() {
        Some(u) => dofs.dirichlet_values(|p| u.value(p)),
        None => vec![0.0; dofs.n_dofs()],
    };
    assemble_impl(mesh, dofs, problem, opts, Some(g))
}

/// Global matrix and load vector without any boundary treatment.
pub fn assemble_unconstrained(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    problem: &ProblemSpec,
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    assemble_impl(mesh, dofs, problem, opts, None)
}

const CHUNK: usize = 8192;

fn assemble_impl(
    mesh: &SpaceTimeMesh,
    dofs: &DofMap,
    problem: &ProblemSpec,
    opts: &AssemblyOptions,
    dirichlet: Option<Vec<f64>>,
) -> Result<AssembledSystem> {
    let ne = mesh.n_elements();
    let n = dofs.n_dofs();
    let nloc = dofs.n_local();
    let degree = dofs.degree();
    if dofs.dim() != mesh.dim() || dofs.element_dofs(ne.saturating_sub(1)).len() != nloc {
        return Err(Error::Index("dof map does not belong to this mesh".into()));
    }
    let mask = dofs.dirichlet_mask();
    let constrained = dirichlet.is_some();

    let (theta, nu) = element_parameters(mesh, degree, problem, opts.theta)?;

    // sparsity: dof -> elements, then per-row sorted column sets
    let mut dof_elems_ptr = vec![0usize; n + 1];
    for k in 0..ne {
        for &g in dofs.element_dofs(k) {
            if g >= n {
                return Err(Error::Index(format!("element {k} maps to dof {g} >= {n}")));
            }
            dof_elems_ptr[g + 1] += 1;
        }
    }
    for i in 0..n {
        dof_elems_ptr[i + 1] += dof_elems_ptr[i];
    }
    let mut fill = dof_elems_ptr.clone();
    let mut dof_elems = vec![0usize; dof_elems_ptr[n]];
    for k in 0..ne {
        for &g in dofs.element_dofs(k) {
            dof_elems[fill[g]] = k;
            fill[g] += 1;
        }
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if constrained && mask[i] {
                return vec![i];
            }
            let mut cols: Vec<usize> = dof_elems[dof_elems_ptr[i]..dof_elems_ptr[i + 1]]
                .iter()
                .flat_map(|&k| dofs.element_dofs(k).iter().copied())
                .filter(|&j| !(constrained && mask[j]))
                .collect();
            cols.sort_unstable();
            cols.dedup();
            cols
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    for r in &rows {
        row_ptr.push(row_ptr.last().unwrap() + r.len());
    }
    let col_idx: Vec<usize> = rows.into_iter().flatten().collect();
    let nnz = col_idx.len();
    let mut matrix = CsrMatrix::new(n, n, row_ptr, col_idx, vec![0.0; nnz])?;
    let mut rhs = vec![0.0; n];

    let mat_rule = quadrature::rule(mesh.dim(), 2 * degree)?;
    let load_rule = quadrature::rule(mesh.dim(), opts.load_order.unwrap_or(2 * degree + 2))?;
    let source = problem.source_field();
    let g = dirichlet.unwrap_or_default();

    let elements: Vec<usize> = (0..ne).collect();
    for chunk in elements.chunks(CHUNK) {
        let locals: Vec<(LocalMatrix, LocalVector)> = chunk
            .par_iter()
            .map(|&k| {
                let geom = geometry_of(mesh, k)?;
                let h = mesh.element_size(k);
                let blocks = element_blocks(&geom, degree, theta[k], h, nu[k], &mat_rule);
                let load =
                    element_load_with(&geom, degree, theta[k], h, source.as_ref(), &load_rule);
                Ok((blocks.sum(), load))
            })
            .collect::<Result<_>>()?;
        for (&k, (local, load)) in chunk.iter().zip(&locals) {
            let ld = dofs.element_dofs(k);
            for (a, &i) in ld.iter().enumerate() {
                if constrained && mask[i] {
                    continue;
                }
                rhs[i] += load[a];
                for (b, &j) in ld.iter().enumerate() {
                    if constrained && mask[j] {
                        rhs[i] -= local[a][b] * g[j];
                        continue;
                    }
                    let pos = matrix.find(i, j).ok_or_else(|| {
                        Error::Index(format!("entry ({i}, {j}) missing from pattern"))
                    })?;
                    matrix.values_mut()[pos] += local[a][b];
                }
            }
        }
    }
    if constrained {
        let rp = matrix.row_ptr().to_vec();
        let vals = matrix.values_mut();
        for i in 0..n {
            if mask[i] {
                vals[rp[i]] = 1.0;
                rhs[i] = g[i];
            }
        }
    }
    let dirichlet_values = if constrained { g } else { vec![0.0; n] };
    Ok(AssembledSystem {
        matrix,
        rhs,
        theta,
        nu,
        dirichlet_values,
    })
}
