//! Marked-edge bisection (newest-vertex in 2D, Maubach ordering in 3D) with
//! conforming closure.

use rustc_hash::{FxHashMap, FxHashSet};

use super::{Element, SpaceTimeMesh};
use crate::error::{Error, Result};
use crate::geometry;

const MAX_ROUNDS: usize = 256;

/// Output of [`SpaceTimeMesh::refine`].
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: SpaceTimeMesh,
    /// `parent[k]` is the element of the input mesh that new element `k` came from.
    pub parent: Vec<usize>,
}

impl Refinement {
    /// Children of each input element, indexed by input element id.
    pub fn children(&self, n_parents: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); n_parents];
        for (k, &p) in self.parent.iter().enumerate() {
            out[p].push(k);
        }
        out
    }
}

#[inline]
fn key(a: usize, b: usize) -> u64 {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    ((a as u64) << 32) | b as u64
}

fn ref_key(e: &Element) -> u64 {
    key(e.vertices[0], e.vertices[e.tag as usize])
}

/// Splits `e` at its refinement edge; `z` is the midpoint vertex.
fn bisect(e: &Element, z: usize, dim: usize) -> (Element, Element) {
    let k = e.tag as usize;
    let x = &e.vertices;
    let mut c1 = [usize::MAX; 4];
    let mut c2 = [usize::MAX; 4];
    c1[..=dim].copy_from_slice(&x[..=dim]);
    c1[k] = z;
    c2[..k].copy_from_slice(&x[1..=k]);
    c2[k] = z;
    c2[k + 1..=dim].copy_from_slice(&x[k + 1..=dim]);
    let tag = if k > 1 { k - 1 } else { dim } as u8;
    (Element::new(c1, tag), Element::new(c2, tag))
}

pub(super) fn refine(mesh: &SpaceTimeMesh, marked: &[usize]) -> Result<Refinement> {
    let dim = mesh.dim;
    let ne = mesh.n_elements();
    if let Some(&bad) = marked.iter().find(|&&k| k >= ne) {
        return Err(Error::InvalidArgument(format!(
            "marked element {bad} out of range ({ne} elements)"
        )));
    }
    if marked.is_empty() {
        return Ok(Refinement {
            mesh: mesh.clone(),
            parent: (0..ne).collect(),
        });
    }

    let mut vertices = mesh.vertices.clone();
    let mut elements: Vec<(Element, usize)> = mesh
        .elements
        .iter()
        .enumerate()
        .map(|(k, e)| (*e, k))
        .collect();
    let mut split: FxHashSet<u64> = marked.iter().map(|&k| ref_key(&mesh.elements[k])).collect();
    let mut midpoints: FxHashMap<u64, usize> = FxHashMap::default();

    let mut round = 0;
    loop {
        if round == MAX_ROUNDS {
            return Err(Error::RefinementDiverged(MAX_ROUNDS));
        }
        round += 1;

        // edge -> element incidence, sorted by edge key
        let mut incidence: Vec<(u64, u32)> =
            Vec::with_capacity(elements.len() * dim * (dim + 1) / 2);
        for (k, (e, _)) in elements.iter().enumerate() {
            for i in 0..=dim {
                for j in i + 1..=dim {
                    incidence.push((key(e.vertices[i], e.vertices[j]), k as u32));
                }
            }
        }
        incidence.sort_unstable();
        let containing = |edge: u64| -> &[(u64, u32)] {
            let lo = incidence.partition_point(|p| p.0 < edge);
            let hi = incidence.partition_point(|p| p.0 <= edge);
            &incidence[lo..hi]
        };

        // close the split set: an element with an edge to split must first split its own refinement edge
        let mut queue: Vec<u64> = split.iter().copied().collect();
        while let Some(edge) = queue.pop() {
            for &(_, k) in containing(edge) {
                let r = ref_key(&elements[k as usize].0);
                if split.insert(r) {
                    queue.push(r);
                }
            }
        }

        let active: Vec<bool> = elements
            .iter()
            .map(|(e, _)| split.contains(&ref_key(e)))
            .collect();
        if !active.iter().any(|&a| a) {
            break;
        }

        let mut next = Vec::with_capacity(elements.len() + active.iter().filter(|&&a| a).count());
        for ((e, origin), act) in elements.iter().zip(active) {
            if !act {
                next.push((*e, *origin));
                continue;
            }
            let (a, b) = (e.vertices[0], e.vertices[e.tag as usize]);
            let z = *midpoints.entry(key(a, b)).or_insert_with(|| {
                vertices.push(geometry::midpoint(&vertices[a], &vertices[b]));
                vertices.len() - 1
            });
            let (c1, c2) = bisect(e, z, dim);
            next.push((c1, *origin));
            next.push((c2, *origin));
        }
        elements = next;
    }

    let parent = elements.iter().map(|(_, o)| *o).collect();
    let elements = elements.into_iter().map(|(e, _)| e).collect();
    let mesh = SpaceTimeMesh::assemble(
        dim,
        mesh.final_time,
        vertices,
        elements,
        Some(mesh.domain_measure),
    )?;
    Ok(Refinement { mesh, parent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_marking_is_identity() {
        let m = SpaceTimeMesh::build_box_mesh(1, 2, 1.0).unwrap();
        let r = m.refine(&[]).unwrap();
        assert_eq!(r.mesh.n_elements(), m.n_elements());
        assert_eq!(r.mesh.vertices(), m.vertices());
        for k in 0..m.n_elements() {
            assert_eq!(r.mesh.element(k), m.element(k));
        }
    }

    #[test]
    fn uniform_bisection_doubles_box_meshes() {
        for d in 1..=2 {
            let mut m = SpaceTimeMesh::build_box_mesh(d, 2, 1.0).unwrap();
            for _ in 0..4 {
                let all: Vec<usize> = (0..m.n_elements()).collect();
                let r = m.refine(&all).unwrap();
                assert_eq!(r.mesh.n_elements(), 2 * m.n_elements(), "d = {d}");
                m = r.mesh;
            }
        }
    }

    #[test]
    fn triangle_bisection_is_newest_vertex() {
        let e = Element::new([0, 1, 2, usize::MAX], 2);
        let (c1, c2) = bisect(&e, 9, 2);
        assert_eq!(&c1.vertices[..3], &[0, 1, 9]);
        assert_eq!(&c2.vertices[..3], &[1, 2, 9]);
        // refinement edges are opposite the new vertex
        assert_eq!(ref_key(&c1), key(0, 1));
        assert_eq!(ref_key(&c2), key(1, 2));
    }

    #[test]
    fn out_of_range_mark_is_rejected() {
        let m = SpaceTimeMesh::build_box_mesh(1, 1, 1.0).unwrap();
        assert!(m.refine(&[5]).is_err());
    }
}
