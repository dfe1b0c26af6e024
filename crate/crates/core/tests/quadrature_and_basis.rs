use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stfem::fespace::{DofMap, FeFunction, LagrangeBasis, MAX_LOCAL};
use stfem::geometry::facet_measure_and_normal;
use stfem::mesh::SpaceTimeMesh;
use stfem::quadrature::{rule, MAX_ORDER};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫_{T} λ_1^a λ_2^b λ_3^c = a! b! c! / (a + b + c + dim)!` on the unit simplex.
#[test]
fn monomial_exactness_sweep() {
    for dim in 1..=3usize {
        for order in 0..=MAX_ORDER {
            let r = rule(dim, order).unwrap();
            assert!(
                r.weights().iter().all(|&w| w > 0.0),
                "dim {dim} order {order}"
            );
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    for c in 0..=(order as u32 - a - b) {
                        if (dim < 2 && b > 0) || (dim < 3 && c > 0) {
                            continue;
                        }
                        let exact = factorial(a) * factorial(b) * factorial(c)
                            / factorial(a + b + c + dim as u32);
                        let got: f64 = r
                            .iter()
                            .map(|(q, w)| {
                                w * q[1].powi(a as i32) * q[2].powi(b as i32) * q[3].powi(c as i32)
                            })
                            .sum();
                        assert!(
                            (got - exact).abs() <= 1e-13,
                            "dim {dim} order {order} ({a},{b},{c}): {got} vs {exact}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn points_are_barycentric() {
    for dim in 1..=3 {
        let r = rule(dim, 7).unwrap();
        for q in r.points() {
            let s: f64 = q[..=dim].iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(q[..=dim].iter().all(|&l| l > 0.0));
        }
    }
}

#[test]
fn partition_of_unity() {
    let mesh = SpaceTimeMesh::build_box_mesh(2, 1, 1.0).unwrap();
    let geom = mesh.geometry(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for degree in 1..=2 {
        let basis = LagrangeBasis::new(3, degree);
        for _ in 0..20 {
            let mut b: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = b.iter().sum();
            b.iter_mut().for_each(|x| *x /= s);
            let mut vals = [0.0; MAX_LOCAL];
            let mut grads = [[0.0; 3]; MAX_LOCAL];
            basis.values(&b, &mut vals);
            basis.gradients(&geom, &b, &mut grads);
            assert!((vals[..basis.len()].iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..3 {
                let g: f64 = grads[..basis.len()].iter().map(|g| g[a]).sum();
                assert!(g.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn quadratic_interpolation_is_exact() {
    let mesh = SpaceTimeMesh::build_box_mesh(1, 3, 2.0).unwrap();
    let dofs = DofMap::build(&mesh, 2).unwrap();
    let f = |p: &[f64; 3]| p[0] * p[1] + 3.0 * p[0] * p[0] - p[1];
    let uh = dofs.interpolate_all(f);
    let r = rule(2, 4).unwrap();
    for k in 0..mesh.n_elements() {
        let geom = mesh.geometry(k).unwrap();
        for (q, _) in r.iter() {
            let x = geom.to_physical(q);
            assert!((uh.eval(&dofs, k, q) - f(&x)).abs() < 1e-13);
            let g = uh.gradient(&dofs, &geom, k, q);
            assert!((g[0] - (x[1] + 6.0 * x[0])).abs() < 1e-12);
            assert!((g[1] - (x[0] - 1.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn continuity_across_interior_facets() {
    let mut mesh = SpaceTimeMesh::build_box_mesh(2, 1, 1.0).unwrap();
    mesh = mesh.refine(&[0, 2, 4]).unwrap().mesh;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for degree in 1..=2 {
        let dofs = DofMap::build(&mesh, degree).unwrap();
        let uh = FeFunction {
            coeffs: (0..dofs.n_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        };
        let fr = rule(2, 4).unwrap();
        for f in mesh.facets().iter().filter(|f| f.elements.1.is_some()) {
            let (ka, kb) = (f.elements.0, f.elements.1.unwrap());
            let pts: Vec<_> = f.vertices[..3].iter().map(|&v| *mesh.vertex(v)).collect();
            let (ga, gb) = (mesh.geometry(ka).unwrap(), mesh.geometry(kb).unwrap());
            for (q, _) in fr.iter() {
                let mut x = [0.0; 3];
                for (l, p) in q[..3].iter().zip(&pts) {
                    for a in 0..3 {
                        x[a] += l * p[a];
                    }
                }
                let va = uh.eval(&dofs, ka, &ga.to_barycentric(&x));
                let vb = uh.eval(&dofs, kb, &gb.to_barycentric(&x));
                assert!((va - vb).abs() < 1e-12, "p={degree}: jump {}", va - vb);
            }
        }
    }
}

#[test]
fn dof_counts() {
    let mesh = SpaceTimeMesh::build_box_mesh(2, 2, 1.0).unwrap();
    let p1 = DofMap::build(&mesh, 1).unwrap();
    assert_eq!(p1.n_dofs(), 27);
    // P2 dofs sit on the vertices of the once-uniformly-subdivided cube lattice
    // plus face and cell diagonals; the count is vertices + edges
    let mut edges = std::collections::BTreeSet::new();
    for k in 0..mesh.n_elements() {
        let e = mesh.element(k);
        for i in 0..4 {
            for j in i + 1..4 {
                edges.insert((e[i].min(e[j]), e[i].max(e[j])));
            }
        }
    }
    let p2 = DofMap::build(&mesh, 2).unwrap();
    assert_eq!(p2.n_dofs(), 27 + edges.len());
}

#[test]
fn dirichlet_mask_matches_geometry() {
    for (d, degree) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let mesh = SpaceTimeMesh::build_box_mesh(d, 3, 1.5).unwrap();
        let dofs = DofMap::build(&mesh, degree).unwrap();
        for (i, node) in dofs.nodes().iter().enumerate() {
            let lateral = (0..d).any(|a| node[a].abs() < 1e-14 || (node[a] - 1.0).abs() < 1e-14);
            let bottom = node[d].abs() < 1e-14;
            assert_eq!(
                dofs.is_dirichlet(i),
                lateral || bottom,
                "d={d} p={degree} node {node:?}"
            );
        }
        let times: Vec<f64> = dofs.nodes().iter().map(|p| p[d]).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn facet_normals_are_unit_and_orthogonal() {
    let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.5], [0.0, 2.0, 1.0]];
    let (m, n) = facet_measure_and_normal(3, &pts);
    let len: f64 = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((len - 1.0).abs() < 1e-14);
    for p in &pts[1..] {
        let dot: f64 = (0..3).map(|a| (p[a] - pts[0][a]) * n[a]).sum();
        assert!(dot.abs() < 1e-14);
    }
    // |u × v| / 2 with u = (1,0,0.5), v = (0,2,1): u × v = (-1, -1, 2)
    assert!((m - 6f64.sqrt() / 2.0).abs() < 1e-14);
}
