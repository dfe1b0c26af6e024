#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stfem::assembly::{
    assemble, assemble_unconstrained, compute_theta, element_blocks, element_load, element_matrix,
    AssemblyOptions, ExactSolution, ProblemSpec, ThetaStrategy,
};
use stfem::driver::{builtin_problem, custom_problem};
use stfem::fespace::{DofMap, LagrangeBasis, MAX_LOCAL};
use stfem::geometry::{Point, SimplexGeometry};
use stfem::mesh::SpaceTimeMesh;
use stfem::quadrature::rule;

fn two_element_mesh(d: usize) -> SpaceTimeMesh {
    if d == 1 {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        SpaceTimeMesh::from_raw(2, v, vec![vec![0, 1, 3], vec![0, 3, 2]]).unwrap()
    } else {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        SpaceTimeMesh::from_raw(3, v, vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]]).unwrap()
    }
}

fn diameter(pts: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for a in pts {
        for b in pts {
            h = h.max((0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt());
        }
    }
    h
}

/// P1 element matrix from the inverse Jacobian, with the constant-gradient
/// integrals written out by hand.
fn p1_element_oracle(pts: &[Point], nu: f64) -> DMatrix<f64> {
    let dim = pts.len() - 1;
    let jac = DMatrix::from_fn(dim, dim, |r, c| pts[c + 1][r] - pts[0][r]);
    let vol = jac.determinant().abs() / (1..=dim).product::<usize>() as f64;
    let inv = jac.try_inverse().unwrap();
    let mut grads = vec![vec![0.0; dim]; dim + 1];
    for i in 1..=dim {
        for a in 0..dim {
            grads[i][a] = inv[(i - 1, a)];
            grads[0][a] -= inv[(i - 1, a)];
        }
    }
    let t = dim - 1;
    let h = diameter(pts);
    let theta = h / nu;
    DMatrix::from_fn(dim + 1, dim + 1, |i, j| {
        let time = grads[j][t] * vol / (dim + 1) as f64;
        let stab = theta * h * grads[j][t] * grads[i][t] * vol;
        let diff: f64 = nu * (0..t).map(|a| grads[j][a] * grads[i][a]).sum::<f64>() * vol;
        time + stab + diff
    })
}

#[test]
fn global_matrix_matches_dense_scatter_of_hand_element_matrices() {
    for d in 1..=2 {
        let mesh = two_element_mesh(d);
        let nu = 0.7;
        let problem = custom_problem(d, 1.0, nu, 1.0).unwrap();
        let dofs = DofMap::build(&mesh, 1).unwrap();
        let sys =
            assemble_unconstrained(&mesh, &dofs, &problem, &AssemblyOptions::default()).unwrap();
        let n = dofs.n_dofs();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for k in 0..mesh.n_elements() {
            let local = p1_element_oracle(&mesh.element_points(k), nu);
            let g = dofs.element_dofs(k);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    dense[(g[i], g[j])] += local[(i, j)];
                }
            }
        }
        let assembled = sys.matrix.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (assembled[i][j] - dense[(i, j)]).abs() <= 1e-12,
                    "d={d} ({i},{j}): {} vs {}",
                    assembled[i][j],
                    dense[(i, j)]
                );
            }
        }
    }
}

#[test]
fn p2_global_matrix_is_scatter_of_element_matrices() {
    for d in 1..=2 {
        let mesh = two_element_mesh(d);
        let problem = custom_problem(d, 1.0, 1.3, 1.0).unwrap();
        let dofs = DofMap::build(&mesh, 2).unwrap();
        let sys =
            assemble_unconstrained(&mesh, &dofs, &problem, &AssemblyOptions::default()).unwrap();
        let n = dofs.n_dofs();
        let mut dense = vec![vec![0.0; n]; n];
        for k in 0..mesh.n_elements() {
            let theta = compute_theta(&mesh, k, 2, 1.3, ThetaStrategy::default()).unwrap();
            let local = element_matrix(&mesh, k, 2, theta, 1.3).unwrap();
            let g = dofs.element_dofs(k);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    dense[g[i]][g[j]] += local[i][j];
                }
            }
        }
        let assembled = sys.matrix.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!((assembled[i][j] - dense[i][j]).abs() <= 1e-12);
            }
        }
    }
}

/// Basis values at a physical point, through the element's own barycentric map.
fn basis_at(basis: &LagrangeBasis, geom: &SimplexGeometry, x: &Point) -> [f64; MAX_LOCAL] {
    let mut v = [0.0; MAX_LOCAL];
    basis.values(&geom.to_barycentric(x), &mut v);
    v
}

fn fd_gradient(
    basis: &LagrangeBasis,
    geom: &SimplexGeometry,
    x: &Point,
    dim: usize,
) -> Vec<[f64; 3]> {
    let step = 1e-5;
    let mut out = vec![[0.0; 3]; basis.len()];
    for a in 0..dim {
        let (mut xp, mut xm) = (*x, *x);
        xp[a] += step;
        xm[a] -= step;
        let (vp, vm) = (basis_at(basis, geom, &xp), basis_at(basis, geom, &xm));
        for i in 0..basis.len() {
            out[i][a] = (vp[i] - vm[i]) / (2.0 * step);
        }
    }
    out
}

fn fd_spatial_laplacian(
    basis: &LagrangeBasis,
    geom: &SimplexGeometry,
    x: &Point,
    d: usize,
) -> Vec<f64> {
    let step = 1e-3;
    let v0 = basis_at(basis, geom, x);
    let mut out = vec![0.0; basis.len()];
    for a in 0..d {
        let (mut xp, mut xm) = (*x, *x);
        xp[a] += step;
        xm[a] -= step;
        let (vp, vm) = (basis_at(basis, geom, &xp), basis_at(basis, geom, &xm));
        for i in 0..basis.len() {
            out[i] += (vp[i] - 2.0 * v0[i] + vm[i]) / (step * step);
        }
    }
    out
}

#[test]
fn p2_divergence_block_matches_finite_differences() {
    for d in 1..=2 {
        let dim = d + 1;
        let mesh = SpaceTimeMesh::build_box_mesh(d, 1, 1.0).unwrap();
        let basis = LagrangeBasis::new(dim, 2);
        let (theta, h, nu) = (0.3, mesh.element_size(1), 1.7);
        let geom = mesh.geometry(1).unwrap();
        let r = rule(dim, 4).unwrap();
        let blocks = element_blocks(&geom, 2, theta, h, nu, &r);
        let n = basis.len();
        let mut oracle = vec![vec![0.0; n]; n];
        for (q, w) in r.iter() {
            let x = geom.to_physical(q);
            let lap = fd_spatial_laplacian(&basis, &geom, &x, d);
            let grad = fd_gradient(&basis, &geom, &x, dim);
            for i in 0..n {
                for j in 0..n {
                    oracle[i][j] -= w * geom.det().abs() * theta * h * nu * lap[j] * grad[i][d];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let got = blocks.divergence_stabilization[i][j];
                assert!(
                    (got - oracle[i][j]).abs() < 1e-5,
                    "d={d} ({i},{j}): {got} vs {}",
                    oracle[i][j]
                );
            }
        }
    }
}

#[test]
fn p2_inverse_constant_bounds_sampled_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 1..=2 {
        let dim = d + 1;
        let mesh = SpaceTimeMesh::build_box_mesh(d, 2, 1.0).unwrap();
        let basis = LagrangeBasis::new(dim, 2);
        let nu = 0.8;
        let k = 3;
        let geom = mesh.geometry(k).unwrap();
        let h = mesh.element_size(k);
        let theta = compute_theta(&mesh, k, 2, nu, ThetaStrategy::default()).unwrap();
        let c2 = h / (theta * nu);
        let centroid = geom.to_physical(&[1.0 / (dim + 1) as f64; 4]);
        let lap = fd_spatial_laplacian(&basis, &geom, &centroid, d);
        let r = rule(dim, 2).unwrap();
        let grads: Vec<Vec<[f64; 3]>> = r
            .points()
            .iter()
            .map(|q| fd_gradient(&basis, &geom, &geom.to_physical(q), dim))
            .collect();
        let mut best: f64 = 0.0;
        for _ in 0..20_000 {
            let v: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let div: f64 = nu * v.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
            let num = geom.volume() * div * div;
            let mut den = 0.0;
            for (gq, w) in grads.iter().zip(r.weights()) {
                let g: f64 = (0..d)
                    .map(|a| {
                        v.iter()
                            .zip(gq)
                            .map(|(c, gr)| c * gr[a])
                            .sum::<f64>()
                            .powi(2)
                    })
                    .sum();
                den += w * geom.det().abs() * nu * g;
            }
            let ratio = num / (nu / (h * h) * den);
            assert!(
                ratio <= c2 * (1.0 + 1e-5),
                "d={d}: sample {ratio} above {c2}"
            );
            best = best.max(ratio);
        }
        assert!(best >= 0.9 * c2, "d={d}: best sample {best}, constant {c2}");
    }
}

#[test]
fn load_of_time_on_unit_triangle() {
    let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mesh = SpaceTimeMesh::from_raw(2, v, vec![vec![0, 1, 2]]).unwrap();
    let k = 0;
    let ev = mesh.element(k).to_vec();
    let theta = 0.25;
    let th = theta * 2f64.sqrt();
    let f = |p: &Point| p[1];
    let load = element_load(&mesh, k, 1, theta, &f, None).unwrap();
    // φ_(0,0) = 1 − x − t, φ_(1,0) = x, φ_(0,1) = t
    let expect = |vertex: usize| match vertex {
        0 => 1.0 / 24.0 - th / 6.0,
        1 => 1.0 / 24.0,
        _ => 1.0 / 12.0 + th / 6.0,
    };
    for (i, &vtx) in ev.iter().enumerate() {
        assert!((load[i] - expect(vtx)).abs() < 1e-15, "vertex {vtx}");
    }
}

#[test]
fn random_free_vectors_have_positive_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in 1..=2 {
        for degree in 1..=2 {
            let mut mesh = SpaceTimeMesh::build_box_mesh(d, 2, 1.0).unwrap();
            mesh = mesh.refine(&[0, 3]).unwrap().mesh;
            let problem = builtin_problem("smooth", d).unwrap();
            let dofs = DofMap::build(&mesh, degree).unwrap();
            let sys = assemble_unconstrained(&mesh, &dofs, &problem, &AssemblyOptions::default())
                .unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..dofs.n_dofs())
                    .map(|i| {
                        if dofs.is_dirichlet(i) {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect();
                assert!(sys.matrix.quadratic_form(&x).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn constrained_rows_and_lifting() {
    let mesh = SpaceTimeMesh::build_box_mesh(1, 3, 1.0).unwrap();
    let problem = builtin_problem("peak", 1).unwrap();
    let dofs = DofMap::build(&mesh, 2).unwrap();
    let opts = AssemblyOptions::default();
    let full = assemble_unconstrained(&mesh, &dofs, &problem, &opts).unwrap();
    let sys = assemble(&mesh, &dofs, &problem, &opts).unwrap();
    let a = full.matrix.to_dense();
    let c = sys.matrix.to_dense();
    let g = &sys.dirichlet_values;
    for i in 0..dofs.n_dofs() {
        if dofs.is_dirichlet(i) {
            for j in 0..dofs.n_dofs() {
                assert_eq!(c[i][j], if i == j { 1.0 } else { 0.0 });
            }
            assert_eq!(sys.rhs[i], g[i]);
        } else {
            let moved: f64 = (0..dofs.n_dofs())
                .filter(|&j| dofs.is_dirichlet(j))
                .map(|j| a[i][j] * g[j])
                .sum();
            assert!((sys.rhs[i] - (full.rhs[i] - moved)).abs() < 1e-13);
            for j in 0..dofs.n_dofs() {
                let want = if dofs.is_dirichlet(j) { 0.0 } else { a[i][j] };
                assert!((c[i][j] - want).abs() < 1e-15);
            }
        }
    }
}

struct Quadratic;

impl ExactSolution for Quadratic {
    fn value(&self, p: &Point) -> f64 {
        p[0] * p[0] + p[0] * p[1] + 2.0 * p[1]
    }
    fn time_derivative(&self, p: &Point) -> f64 {
        p[0] + 2.0
    }
    fn spatial_gradient(&self, p: &Point) -> [f64; 2] {
        [2.0 * p[0] + p[1], 0.0]
    }
    fn spatial_laplacian(&self, _: &Point) -> f64 {
        2.0
    }
}

/// The scheme is consistent, so a solution inside the discrete space is
/// reproduced exactly.
#[test]
fn discrete_solutions_are_reproduced() {
    let problem = ProblemSpec::manufactured("quadratic", 1, 1.0, 0.9, Arc::new(Quadratic)).unwrap();
    let mesh = SpaceTimeMesh::build_box_mesh(1, 3, 1.0).unwrap();
    let dofs = DofMap::build(&mesh, 2).unwrap();
    let sys = assemble(&mesh, &dofs, &problem, &AssemblyOptions::default()).unwrap();
    let n = dofs.n_dofs();
    let a = DMatrix::from_row_slice(n, n, &sys.matrix.to_dense().concat());
    let x = a.lu().solve(&DVector::from_column_slice(&sys.rhs)).unwrap();
    let interp = dofs.interpolate_all(|p| Quadratic.value(p));
    for i in 0..n {
        assert!((x[i] - interp.coeffs[i]).abs() < 1e-11, "dof {i}");
    }
}
