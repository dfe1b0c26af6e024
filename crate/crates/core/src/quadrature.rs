//! Quadrature on reference simplices.
//!
//! Rules are conical (collapsed-coordinate) products of Gauss–Jacobi rules,
//! so every weight is positive and any order up to [`MAX_ORDER`] is available
//! in dimensions 1, 2 and 3. Points are stored in barycentric coordinates
//! `(λ_0, ..., λ_dim)` of the reference simplex `{x_i ≥ 0, Σ x_i ≤ 1}`,
//! where `x_i = λ_i` for `i ≥ 1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Highest polynomial degree for which a rule is shipped.
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone)]
pub struct QuadRule {
    dim: usize,
    order: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest total degree integrated exactly.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    /// Weights summing to the reference measure `1 / dim!`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Returns a rule on the reference `dim`-simplex exact for total degree `order`.
pub fn rule(dim: usize, order: usize) -> Result<QuadRule> {
    if !(1..=3).contains(&dim) || order > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            dim,
            order,
            max: MAX_ORDER,
        });
    }
    let npts = order / 2 + 1;
    let mut cart = vec![(Vec::<f64>::new(), 1.0)];
    // Build from the innermost coordinate outwards: a point of the (k-1)-simplex
    // is scaled by (1 - ξ) and prefixed with ξ, which carries the weight (1 - ξ)^(k-1).
    for k in 1..=dim {
        let (nodes, weights) = gauss_jacobi_unit(npts, (k - 1) as f64);
        let mut next = Vec::with_capacity(cart.len() * nodes.len());
        for (&xi, &wx) in nodes.iter().zip(&weights) {
            for (tail, wt) in &cart {
                let mut p = Vec::with_capacity(k);
                p.push(xi);
                p.extend(tail.iter().map(|y| (1.0 - xi) * y));
                next.push((p, wx * wt));
            }
        }
        cart = next;
    }
    let mut points = Vec::with_capacity(cart.len());
    let mut weights = Vec::with_capacity(cart.len());
    for (p, w) in cart {
        let mut bary = [0.0; 4];
        let s: f64 = p.iter().sum();
        bary[0] = 1.0 - s;
        bary[1..=dim].copy_from_slice(&p);
        points.push(bary);
        weights.push(w);
    }
    Ok(QuadRule {
        dim,
        order,
        points,
        weights,
    })
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - ξ)^alpha`.
fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let (s, w) = gauss_jacobi(n, alpha, 0.0);
    let scale = 0.5f64.powf(alpha + 1.0);
    let nodes = s.iter().map(|s| 0.5 * (1.0 + s)).collect();
    let weights = w.iter().map(|w| w * scale).collect();
    (nodes, weights)
}

/// Golub–Welsch for the weight `(1 - s)^a (1 + s)^b` on `[-1, 1]`.
fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        jac[(i, i)] = if i == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        if i + 1 < n {
            let m = k + 1.0;
            let num = 4.0 * m * (m + a) * (m + b) * (m + ab);
            let den = (2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

// Only integer and half-integer arguments small enough for exact products occur here.
fn gamma(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-14 {
        (1..x.round() as u64).map(|k| k as f64).product()
    } else {
        let mut acc = std::f64::consts::PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            acc *= y;
            y += 1.0;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for dim in 1..=3 {
            for order in 0..=MAX_ORDER {
                let r = rule(dim, order).unwrap();
                let s: f64 = r.weights().iter().sum();
                assert!(
                    (s - 1.0 / factorial(dim)).abs() < 1e-14,
                    "dim {dim} order {order}"
                );
                assert!(r.weights().iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn xy_on_triangle() {
        let r = rule(2, 2).unwrap();
        let v: f64 = r.iter().map(|(p, w)| w * p[1] * p[2]).sum();
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn xyz_on_tetrahedron() {
        let r = rule(3, 3).unwrap();
        let v: f64 = r.iter().map(|(p, w)| w * p[1] * p[2] * p[3]).sum();
        assert!((v - 1.0 / 720.0).abs() < 1e-16);
    }

    #[test]
    fn rejects_unsupported() {
        assert!(matches!(rule(2, 11), Err(Error::UnsupportedOrder { .. })));
        assert!(rule(4, 2).is_err());
    }
}
