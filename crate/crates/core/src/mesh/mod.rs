//! Conforming simplicial meshes of the space-time cylinder `Q = Ω × (0, T)`.
//!
//! The last coordinate of every vertex is time. Elements keep their vertices in
//! bisection order: the refinement edge of an element with tag `k` joins local
//! vertices `0` and `k`.

mod io;
mod refine;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::geometry::{self, Point, SimplexGeometry};

pub use io::{read_stmesh, write_stmesh, write_vtk, VtkField};
pub use refine::Refinement;

/// Classification of a facet relative to the cylinder boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum BoundaryTag {
    /// `∂Ω × (0, T)`
    Lateral,
    /// `Ω × {0}`
    Bottom,
    /// `Ω × {T}`
    Top,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    vertices: [usize; 4],
    tag: u8,
}

impl Element {
    pub(crate) fn new(vertices: [usize; 4], tag: u8) -> Self {
        Self { vertices, tag }
    }

    /// Refinement tag in `1..=dim`.
    pub fn tag(&self) -> u8 {
        self.tag
    }
}

/// A `(dim-1)`-simplex shared by one or two elements.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Sorted vertex indices; only the first `dim` are meaningful.
    pub vertices: [usize; 3],
    pub elements: (usize, Option<usize>),
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct SpaceTimeMesh {
    dim: usize,
    final_time: f64,
    vertices: Vec<Point>,
    elements: Vec<Element>,
    facets: Vec<Facet>,
    domain_measure: f64,
}

impl SpaceTimeMesh {
    /// Box mesh of `(0,1)^d × (0,T)` with `n` cells per axis.
    ///
    /// Each cell is split into `(d+1)!` Kuhn simplices, mirrored in alternate
    /// cells so that bisection stays conforming.
    pub fn build_box_mesh(d: usize, n: usize, final_time: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("box mesh needs n >= 1".into()));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let dim = d + 1;
        let np = n + 1;
        let index = |c: &[usize]| -> usize { c.iter().rev().fold(0, |acc, &ci| acc * np + ci) };

        let nv = np.pow(dim as u32);
        let mut vertices = Vec::with_capacity(nv);
        for v in 0..nv {
            let mut p = [0.0; 3];
            let mut rem = v;
            for (a, coord) in p.iter_mut().enumerate().take(dim) {
                let c = rem % np;
                rem /= np;
                let s = c as f64 / n as f64;
                *coord = if a == dim - 1 { final_time * s } else { s };
            }
            vertices.push(p);
        }

        let perms = permutations(dim);
        let ncells = n.pow(dim as u32);
        let mut elements = Vec::with_capacity(ncells * perms.len());
        for cell in 0..ncells {
            let mut c = [0usize; 3];
            let mut rem = cell;
            for ca in c.iter_mut().take(dim) {
                *ca = rem % n;
                rem /= n;
            }
            let corner = |bits: &[usize; 3]| -> usize {
                let mut g = [0usize; 3];
                for a in 0..dim {
                    let b = bits[a] ^ (c[a] & 1);
                    g[a] = c[a] + b;
                }
                index(&g[..dim])
            };
            for perm in &perms {
                let mut bits = [0usize; 3];
                let mut verts = [usize::MAX; 4];
                verts[0] = corner(&bits);
                for (k, &axis) in perm.iter().enumerate() {
                    bits[axis] = 1;
                    verts[k + 1] = corner(&bits);
                }
                elements.push(Element::new(verts, dim as u8));
            }
        }
        let measure = final_time;
        Self::assemble(dim, final_time, vertices, elements, Some(measure))
    }

    /// Mesh from raw vertices and element connectivity (e.g. a file import).
    ///
    /// The final time is the largest time coordinate. Vertices of each element
    /// are reordered so the longest edge (ties broken by the lowest vertex pair)
    /// becomes the refinement edge.
    pub fn from_raw(dim: usize, vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim.saturating_sub(1)));
        }
        let nv = vertices.len();
        let final_time = vertices
            .iter()
            .map(|p| p[dim - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut elements = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(Error::Index(format!(
                    "element {k} has {} vertices, expected {}",
                    cell.len(),
                    dim + 1
                )));
            }
            if let Some(&bad) = cell.iter().find(|&&v| v >= nv) {
                return Err(Error::Index(format!("element {k} references vertex {bad}")));
            }
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for i in 0..=dim {
                for j in i + 1..=dim {
                    let (a, b) = (cell[i].min(cell[j]), cell[i].max(cell[j]));
                    let len = geometry::distance(&vertices[a], &vertices[b]);
                    let better = len > best.0 + 1e-14 * len
                        || ((len - best.0).abs() <= 1e-14 * len && (a, b) < (best.1, best.2));
                    if better {
                        best = (len, a, b);
                    }
                }
            }
            let mut verts = [usize::MAX; 4];
            verts[0] = best.1;
            verts[dim] = best.2;
            let mut rest = cell.iter().copied().filter(|&v| v != best.1 && v != best.2);
            for slot in verts.iter_mut().take(dim).skip(1) {
                *slot = rest.next().expect("simplex vertices are distinct");
            }
            elements.push(Element::new(verts, dim as u8));
        }
        Self::assemble(dim, final_time, vertices, elements, None)
    }

    pub(crate) fn assemble(
        dim: usize,
        final_time: f64,
        vertices: Vec<Point>,
        elements: Vec<Element>,
        domain_measure: Option<f64>,
    ) -> Result<Self> {
        let mut mesh = Self {
            dim,
            final_time,
            vertices,
            elements,
            facets: Vec::new(),
            domain_measure: 0.0,
        };
        for k in 0..mesh.elements.len() {
            let mut seen = mesh.element(k).to_vec();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != dim + 1 {
                return Err(Error::Index(format!("element {k} repeats a vertex")));
            }
            if mesh.geometry(k).is_none() {
                return Err(Error::DegenerateElement(k));
            }
        }
        mesh.domain_measure = match domain_measure {
            Some(m) => m,
            None => mesh.total_volume(),
        };
        mesh.build_facets()?;
        Ok(mesh)
    }

    fn build_facets(&mut self) -> Result<()> {
        let dim = self.dim;
        let mut map: FxHashMap<[usize; 3], usize> = FxHashMap::default();
        let mut facets: Vec<Facet> = Vec::with_capacity(self.elements.len() * 2);
        for k in 0..self.elements.len() {
            let ev = self.elements[k].vertices;
            for skip in 0..=dim {
                let mut key = [usize::MAX; 3];
                let mut m = 0;
                for (i, &v) in ev.iter().enumerate().take(dim + 1) {
                    if i != skip {
                        key[m] = v;
                        m += 1;
                    }
                }
                key[..dim].sort_unstable();
                match map.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.elements.1.is_some() {
                            return Err(Error::Index(format!(
                                "facet {:?} shared by more than two elements",
                                &key[..dim]
                            )));
                        }
                        facet.elements.1 = Some(k);
                    }
                    None => {
                        map.insert(key, facets.len());
                        facets.push(Facet {
                            vertices: key,
                            elements: (k, None),
                            tag: BoundaryTag::Interior,
                        });
                    }
                }
            }
        }
        let tol = 1e-12 * self.final_time;
        let t = dim - 1;
        for facet in facets.iter_mut() {
            if facet.elements.1.is_some() {
                continue;
            }
            let times = facet.vertices[..dim].iter().map(|&v| self.vertices[v][t]);
            facet.tag = if times.clone().all(|s| s.abs() <= tol) {
                BoundaryTag::Bottom
            } else if times.clone().all(|s| (s - self.final_time).abs() <= tol) {
                BoundaryTag::Top
            } else {
                BoundaryTag::Lateral
            };
        }
        self.facets = facets;
        Ok(())
    }

    /// Space-time dimension `d + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spatial_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    /// Vertex indices of element `k` in bisection order.
    pub fn element(&self, k: usize) -> &[usize] {
        &self.elements[k].vertices[..=self.dim]
    }

    pub fn element_data(&self, k: usize) -> &Element {
        &self.elements[k]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Measure of `Q` this mesh decomposes.
    pub fn domain_measure(&self) -> f64 {
        self.domain_measure
    }

    pub fn element_points(&self, k: usize) -> Vec<Point> {
        self.element(k).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn geometry(&self, k: usize) -> Option<SimplexGeometry> {
        SimplexGeometry::new(self.dim, &self.element_points(k))
    }

    /// `h_K = diam(K)`
    pub fn element_size(&self, k: usize) -> f64 {
        geometry::diameter(&self.element_points(k))
    }

    pub fn element_volume(&self, k: usize) -> f64 {
        self.geometry(k).map_or(0.0, |g| g.volume())
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.element_volume(k)).sum()
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements())
            .map(|k| self.element_size(k))
            .fold(0.0, f64::max)
    }

    /// Refinement edge of element `k` as a sorted vertex pair.
    pub fn refinement_edge(&self, k: usize) -> (usize, usize) {
        let e = &self.elements[k];
        let (a, b) = (e.vertices[0], e.vertices[e.tag as usize]);
        (a.min(b), a.max(b))
    }

    /// All elements sharing at least one vertex with `k`, including `k`, sorted.
    pub fn element_patch(&self, k: usize) -> Vec<usize> {
        let own = self.element(k);
        let mut patch: Vec<usize> = (0..self.n_elements())
            .filter(|&j| self.element(j).iter().any(|v| own.contains(v)))
            .collect();
        patch.sort_unstable();
        patch
    }

    /// For every vertex, the sorted list of incident elements.
    pub fn vertex_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for k in 0..self.n_elements() {
            for &v in self.element(k) {
                out[v].push(k);
            }
        }
        out
    }

    /// Bisects every marked element at least once and closes the result
    /// conformingly.
    pub fn refine(&self, marked: &[usize]) -> Result<Refinement> {
        refine::refine(self, marked)
    }

    /// Number of boundary facets with the given tag.
    pub fn count_facets(&self, tag: BoundaryTag) -> usize {
        self.facets.iter().filter(|f| f.tag == tag).count()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|r| if r >= first { r + 1 } else { r }));
            out.push(p);
        }
    }
    out
}
