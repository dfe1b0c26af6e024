use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stfem::geometry::SimplexGeometry;
use stfem::mesh::{read_stmesh, write_stmesh, BoundaryTag, SpaceTimeMesh};

/// No vertex may lie inside or on the closure of an element it is not a
/// vertex of. Together with volume conservation this rules out hanging nodes
/// and overlaps.
fn assert_conforming(mesh: &SpaceTimeMesh) {
    let dim = mesh.dim();
    for k in 0..mesh.n_elements() {
        let ev = mesh.element(k);
        let geom = mesh.geometry(k).expect("regular element");
        for v in 0..mesh.n_vertices() {
            if ev.contains(&v) {
                continue;
            }
            let b = geom.to_barycentric(mesh.vertex(v));
            let inside = b[..=dim].iter().all(|&l| l > -1e-10);
            assert!(
                !inside,
                "vertex {v} touches element {k} ({ev:?}), barycentric {b:?}"
            );
        }
    }
}

fn random_rounds(d: usize, n: usize, rounds: usize, seed: u64) -> SpaceTimeMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = SpaceTimeMesh::build_box_mesh(d, n, 1.0).unwrap();
    for _ in 0..rounds {
        let ne = mesh.n_elements();
        let count = rng.gen_range(1..=ne.div_ceil(5));
        let marked = sample(&mut rng, ne, count).into_vec();
        mesh = mesh.refine(&marked).unwrap().mesh;
    }
    mesh
}

#[test]
fn conforming_after_ten_random_rounds() {
    for d in 1..=2 {
        for seed in 0..3 {
            let mesh = random_rounds(d, 1, 10, seed);
            assert_conforming(&mesh);
            assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn volume_conserved_on_long_final_time() {
    let mut mesh = SpaceTimeMesh::build_box_mesh(2, 2, 3.5).unwrap();
    for round in 0..6 {
        let marked: Vec<usize> = (0..mesh.n_elements())
            .filter(|k| k % 3 == round % 3)
            .collect();
        mesh = mesh.refine(&marked).unwrap().mesh;
        assert!((mesh.total_volume() - 3.5).abs() < 1e-12 * 3.5);
    }
}

#[test]
fn children_partition_their_parent() {
    let mesh = random_rounds(2, 1, 3, 11);
    let marked = vec![0, mesh.n_elements() / 2, mesh.n_elements() - 1];
    let r = mesh.refine(&marked).unwrap();
    let children = r.children(mesh.n_elements());
    for (p, kids) in children.iter().enumerate() {
        assert!(!kids.is_empty());
        let vol: f64 = kids.iter().map(|&c| r.mesh.element_volume(c)).sum();
        assert!((vol - mesh.element_volume(p)).abs() < 1e-14);
    }
    for &m in &marked {
        assert!(children[m].len() >= 2, "marked element {m} was not split");
    }
}

/// `h^D / |K|` over every element.
fn max_shape_ratio(mesh: &SpaceTimeMesh) -> f64 {
    let dim = mesh.dim() as i32;
    (0..mesh.n_elements())
        .map(|k| mesh.element_size(k).powi(dim) / mesh.element_volume(k))
        .fold(0.0, f64::max)
}

#[test]
fn shape_regularity_bounded_over_generations() {
    for d in 1..=2 {
        let dim = d + 1;
        let mut mesh = SpaceTimeMesh::build_box_mesh(d, 1, 1.0).unwrap();
        let mut ratios = vec![max_shape_ratio(&mesh)];
        for _ in 0..10 {
            let all: Vec<usize> = (0..mesh.n_elements()).collect();
            mesh = mesh.refine(&all).unwrap().mesh;
            ratios.push(max_shape_ratio(&mesh));
        }
        // bisection produces finitely many shapes; after one full cycle of
        // `dim` generations no new worst shape may appear
        let first_cycle = ratios[..=dim].iter().cloned().fold(0.0, f64::max);
        let later = ratios[dim..].iter().cloned().fold(0.0, f64::max);
        assert!(later <= first_cycle * (1.0 + 1e-9), "d={d}: {ratios:?}");
    }
}

#[test]
fn uniform_bisection_halves_h_every_cycle() {
    for d in 1..=2 {
        let dim = d + 1;
        let mut mesh = SpaceTimeMesh::build_box_mesh(d, 2, 1.0).unwrap();
        let h0 = mesh.h_max();
        for _ in 0..dim {
            let all: Vec<usize> = (0..mesh.n_elements()).collect();
            mesh = mesh.refine(&all).unwrap().mesh;
        }
        assert!((mesh.h_max() - h0 / 2.0).abs() < 1e-14, "d={d}");
    }
}

#[test]
fn patch_matches_vertex_incidence() {
    let mesh = random_rounds(1, 2, 4, 5);
    let incidence = mesh.vertex_elements();
    for k in 0..mesh.n_elements() {
        let mut expect: Vec<usize> = mesh
            .element(k)
            .iter()
            .flat_map(|&v| incidence[v].clone())
            .collect();
        expect.sort_unstable();
        expect.dedup();
        assert_eq!(mesh.element_patch(k), expect);
    }
}

#[test]
fn box_boundary_counts() {
    for (d, n) in [(1, 3), (2, 2), (2, 3)] {
        let mesh = SpaceTimeMesh::build_box_mesh(d, n, 1.0).unwrap();
        let bottom = mesh.count_facets(BoundaryTag::Bottom);
        assert_eq!(bottom, mesh.count_facets(BoundaryTag::Top));
        // each boundary square of the box carries (dim-1)! facets
        let per_square = if d == 1 { 1 } else { 2 };
        assert_eq!(bottom, n.pow(d as u32) * per_square);
        assert_eq!(
            mesh.count_facets(BoundaryTag::Lateral),
            2 * d * n.pow(d as u32) * per_square
        );
    }
}

#[test]
fn facet_incidence_is_consistent() {
    let mesh = random_rounds(2, 1, 5, 3);
    let dim = mesh.dim();
    for f in mesh.facets() {
        for k in std::iter::once(f.elements.0).chain(f.elements.1) {
            let ev = mesh.element(k);
            assert!(f.vertices[..dim].iter().all(|v| ev.contains(v)));
        }
    }
    // Euler-type count: each element has dim+1 facets
    let sides: usize = mesh
        .facets()
        .iter()
        .map(|f| 1 + f.elements.1.is_some() as usize)
        .sum();
    assert_eq!(sides, mesh.n_elements() * (dim + 1));
}

#[test]
fn stmesh_round_trip_of_refined_mesh() {
    let mesh = random_rounds(2, 1, 4, 9);
    let mut buf = Vec::new();
    write_stmesh(&mesh, &mut buf).unwrap();
    let back = read_stmesh(buf.as_slice()).unwrap();
    assert_eq!(back.n_elements(), mesh.n_elements());
    assert_eq!(back.vertices(), mesh.vertices());
    assert!((back.total_volume() - mesh.total_volume()).abs() < 1e-14);
    // the imported mesh refines conformingly too
    let again = back.refine(&[0, 1, 2]).unwrap().mesh;
    assert_conforming(&again);
}

#[test]
fn imported_single_triangle_splits_longest_edge() {
    let verts = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mesh = SpaceTimeMesh::from_raw(2, verts, vec![vec![0, 1, 2]]).unwrap();
    assert_eq!(mesh.refinement_edge(0), (1, 2));
    let fine = mesh.refine(&[0]).unwrap().mesh;
    assert_eq!(fine.n_elements(), 2);
    let mid = fine.vertex(3);
    assert!((mid[0] - 1.0).abs() < 1e-15 && (mid[1] - 0.5).abs() < 1e-15);
    let _ = SimplexGeometry::new(2, &fine.element_points(0)).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_marking_stays_conforming(seed in any::<u64>(), d in 1usize..=2, rounds in 1usize..6) {
        let mesh = random_rounds(d, 1, rounds, seed);
        prop_assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
        let dim = mesh.dim();
        // every single-sided facet lies on the boundary of the cylinder
        for f in mesh.facets().iter().filter(|f| f.elements.1.is_none()) {
            let on_face = (0..dim).any(|a| {
                f.vertices[..dim].iter().all(|&v| mesh.vertex(v)[a].abs() < 1e-12)
                    || f.vertices[..dim].iter().all(|&v| (mesh.vertex(v)[a] - 1.0).abs() < 1e-12)
            });
            prop_assert!(on_face);
        }
    }
}
