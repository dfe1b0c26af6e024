//! Continuous Lagrange spaces of degree 1 or 2 on space-time meshes.
//!
//! Local numbering: the element's vertices first (in mesh order), then for
//! `p = 2` the edge midpoints in the order of [`local_edges`]. Global dofs are
//! sorted by nondecreasing node time so that a forward Gauss–Seidel sweep
//! follows the direction of time.

use crate::error::{Error, Result};
use crate::geometry::{Point, SimplexGeometry};
use crate::mesh::{BoundaryTag, SpaceTimeMesh};

/// Maximum number of local shape functions (P2 on a tetrahedron).
pub const MAX_LOCAL: usize = 10;

const EDGES_2: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const EDGES_3: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &EDGES_2
    } else {
        &EDGES_3
    }
}

/// Number of local shape functions of degree `p` on a `dim`-simplex.
pub fn n_local(dim: usize, p: usize) -> usize {
    match p {
        1 => dim + 1,
        _ => (dim + 1) * (dim + 2) / 2,
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    degree: usize,
    dim: usize,
    n_local: usize,
    local_to_global: Vec<usize>,
    dirichlet: Vec<bool>,
    nodes: Vec<Point>,
    vertex_dof: Vec<usize>,
}

impl DofMap {
    pub fn build(mesh: &SpaceTimeMesh, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree must be 1 or 2, got {degree}"
            )));
        }
        let dim = mesh.dim();
        let nv = mesh.n_vertices();
        let nloc = n_local(dim, degree);

        // entity numbering before the time sort: vertices, then sorted unique edges
        let mut edges: Vec<(usize, usize)> = Vec::new();
        if degree == 2 {
            edges.reserve(mesh.n_elements() * local_edges(dim).len());
            for k in 0..mesh.n_elements() {
                let ev = mesh.element(k);
                for &(i, j) in local_edges(dim) {
                    edges.push((ev[i].min(ev[j]), ev[i].max(ev[j])));
                }
            }
            edges.sort_unstable();
            edges.dedup();
        }
        let edge_id = |a: usize, b: usize| -> usize {
            let e = (a.min(b), a.max(b));
            nv + edges.binary_search(&e).expect("edge collected above")
        };

        let mut nodes: Vec<Point> = mesh.vertices().to_vec();
        for &(a, b) in &edges {
            nodes.push(crate::geometry::midpoint(mesh.vertex(a), mesh.vertex(b)));
        }

        let mut entity_mask = vec![false; nodes.len()];
        for facet in mesh.facets() {
            if !matches!(facet.tag, BoundaryTag::Lateral | BoundaryTag::Bottom) {
                continue;
            }
            let fv = &facet.vertices[..dim];
            for &v in fv {
                entity_mask[v] = true;
            }
            if degree == 2 {
                for i in 0..dim {
                    for j in i + 1..dim {
                        entity_mask[edge_id(fv[i], fv[j])] = true;
                    }
                }
            }
        }

        let t = dim - 1;
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a][t].total_cmp(&nodes[b][t]).then(a.cmp(&b)));
        let mut renumber = vec![0usize; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            renumber[old] = new;
        }

        let mut local_to_global = Vec::with_capacity(mesh.n_elements() * nloc);
        for k in 0..mesh.n_elements() {
            let ev = mesh.element(k);
            local_to_global.extend(ev.iter().map(|&v| renumber[v]));
            if degree == 2 {
                for &(i, j) in local_edges(dim) {
                    local_to_global.push(renumber[edge_id(ev[i], ev[j])]);
                }
            }
        }
        let dirichlet = order.iter().map(|&old| entity_mask[old]).collect();
        let vertex_dof = renumber[..nv].to_vec();
        let nodes = order.iter().map(|&old| nodes[old]).collect();

        Ok(Self {
            degree,
            dim,
            n_local: nloc,
            local_to_global,
            dirichlet,
            nodes,
            vertex_dof,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N_h`
    pub fn n_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn element_dofs(&self, k: usize) -> &[usize] {
        &self.local_to_global[k * self.n_local..(k + 1) * self.n_local]
    }

    /// True for dofs on the lateral or bottom boundary.
    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    pub fn n_free(&self) -> usize {
        self.dirichlet.iter().filter(|&&m| !m).count()
    }

    /// Lagrange node of each dof.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Dof located at each mesh vertex.
    pub fn vertex_dofs(&self) -> &[usize] {
        &self.vertex_dof
    }

    pub fn basis(&self) -> LagrangeBasis {
        LagrangeBasis {
            dim: self.dim,
            degree: self.degree,
        }
    }

    /// Nodal interpolant of `f`, with Dirichlet dofs forced to zero.
    pub fn interpolate(&self, f: impl Fn(&Point) -> f64) -> FeFunction {
        let coeffs = self
            .nodes
            .iter()
            .zip(&self.dirichlet)
            .map(|(x, &m)| if m { 0.0 } else { f(x) })
            .collect();
        FeFunction { coeffs }
    }

    /// Nodal values of `g` on Dirichlet dofs, zero elsewhere.
    pub fn dirichlet_values(&self, g: impl Fn(&Point) -> f64) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.dirichlet)
            .map(|(x, &m)| if m { g(x) } else { 0.0 })
            .collect()
    }

    /// Nodal interpolant of `f` on every dof, boundary included.
    pub fn interpolate_all(&self, f: impl Fn(&Point) -> f64) -> FeFunction {
        FeFunction {
            coeffs: self.nodes.iter().map(f).collect(),
        }
    }
}

/// Coefficient vector of a finite element function.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![0.0; n],
        }
    }

    /// Value at barycentric point `bary` of element `k`.
    pub fn eval(&self, dofs: &DofMap, k: usize, bary: &[f64]) -> f64 {
        let mut vals = [0.0; MAX_LOCAL];
        dofs.basis().values(bary, &mut vals);
        dofs.element_dofs(k)
            .iter()
            .zip(&vals)
            .map(|(&g, v)| self.coeffs[g] * v)
            .sum()
    }

    /// Space-time gradient at barycentric point `bary` of element `k`.
    pub fn gradient(&self, dofs: &DofMap, geom: &SimplexGeometry, k: usize, bary: &[f64]) -> Point {
        let mut grads = [[0.0; 3]; MAX_LOCAL];
        dofs.basis().gradients(geom, bary, &mut grads);
        let mut g = [0.0; 3];
        for (&dof, gr) in dofs.element_dofs(k).iter().zip(&grads) {
            for a in 0..3 {
                g[a] += self.coeffs[dof] * gr[a];
            }
        }
        g
    }
}

/// Lagrange shape functions in barycentric form.
#[derive(Debug, Clone, Copy)]
pub struct LagrangeBasis {
    dim: usize,
    degree: usize,
}

impl LagrangeBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        Self { dim, degree }
    }

    pub fn len(&self) -> usize {
        n_local(self.dim, self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self, bary: &[f64], out: &mut [f64]) {
        let nv = self.dim + 1;
        if self.degree == 1 {
            out[..nv].copy_from_slice(&bary[..nv]);
            return;
        }
        for i in 0..nv {
            out[i] = bary[i] * (2.0 * bary[i] - 1.0);
        }
        for (e, &(i, j)) in local_edges(self.dim).iter().enumerate() {
            out[nv + e] = 4.0 * bary[i] * bary[j];
        }
    }

    /// Physical space-time gradients.
    pub fn gradients(&self, geom: &SimplexGeometry, bary: &[f64], out: &mut [Point]) {
        let nv = self.dim + 1;
        let gl = geom.bary_grads();
        if self.degree == 1 {
            out[..nv].copy_from_slice(gl);
            return;
        }
        for i in 0..nv {
            let s = 4.0 * bary[i] - 1.0;
            out[i] = [s * gl[i][0], s * gl[i][1], s * gl[i][2]];
        }
        for (e, &(i, j)) in local_edges(self.dim).iter().enumerate() {
            let mut g = [0.0; 3];
            for (a, ga) in g.iter_mut().enumerate() {
                *ga = 4.0 * (bary[i] * gl[j][a] + bary[j] * gl[i][a]);
            }
            out[nv + e] = g;
        }
    }

    /// Spatial Laplacian `Σ_a ∂²φ/∂x_a²` of each shape function; constant on the
    /// element for `p ≤ 2`.
    pub fn spatial_laplacians(&self, geom: &SimplexGeometry, out: &mut [f64]) {
        let nv = self.dim + 1;
        let n = self.len();
        if self.degree == 1 {
            out[..n].iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let gl = geom.bary_grads();
        let sd = self.dim - 1;
        let dot = |i: usize, j: usize| -> f64 { (0..sd).map(|a| gl[i][a] * gl[j][a]).sum() };
        for i in 0..nv {
            out[i] = 4.0 * dot(i, i);
        }
        for (e, &(i, j)) in local_edges(self.dim).iter().enumerate() {
            out[nv + e] = 8.0 * dot(i, j);
        }
    }

    /// Barycentric coordinates of the local Lagrange nodes.
    pub fn local_nodes(&self) -> Vec<[f64; 4]> {
        let nv = self.dim + 1;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..nv {
            let mut b = [0.0; 4];
            b[i] = 1.0;
            out.push(b);
        }
        if self.degree == 2 {
            for &(i, j) in local_edges(self.dim) {
                let mut b = [0.0; 4];
                b[i] = 0.5;
                b[j] = 0.5;
                out.push(b);
            }
        }
        out
    }
}

/// Values and physical gradients of all shape functions at a set of points.
pub struct BasisTable {
    pub values: Vec<[f64; MAX_LOCAL]>,
    pub gradients: Vec<[Point; MAX_LOCAL]>,
    /// `|det J|`, the measure scaling of the reference simplex.
    pub det: f64,
}

/// Tabulates the basis on element `k` at barycentric `points`.
pub fn eval_basis(
    mesh: &SpaceTimeMesh,
    degree: usize,
    k: usize,
    points: &[[f64; 4]],
) -> Result<BasisTable> {
    let geom = mesh.geometry(k).ok_or(Error::DegenerateElement(k))?;
    let basis = LagrangeBasis::new(mesh.dim(), degree);
    let mut values = Vec::with_capacity(points.len());
    let mut gradients = Vec::with_capacity(points.len());
    for p in points {
        let mut v = [0.0; MAX_LOCAL];
        let mut g = [[0.0; 3]; MAX_LOCAL];
        basis.values(p, &mut v);
        basis.gradients(&geom, p, &mut g);
        values.push(v);
        gradients.push(g);
    }
    Ok(BasisTable {
        values,
        gradients,
        det: geom.det().abs(),
    })
}
