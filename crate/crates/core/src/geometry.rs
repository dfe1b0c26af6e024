//! Affine geometry of a single simplex in 2 or 3 space-time dimensions.

pub type Point = [f64; 3];

/// Affine map from the reference simplex onto a physical simplex.
///
/// Coordinates beyond `dim` are zero and ignored. The last active coordinate
/// (`dim - 1`) is time.
#[derive(Debug, Clone)]
pub struct SimplexGeometry {
    dim: usize,
    vertices: [Point; 4],
    det: f64,
    inv: [[f64; 3]; 3],
    bary_grad: [Point; 4],
}

impl SimplexGeometry {
    /// Returns `None` for a degenerate simplex.
    pub fn new(dim: usize, verts: &[Point]) -> Option<Self> {
        debug_assert_eq!(verts.len(), dim + 1);
        let mut vertices = [[0.0; 3]; 4];
        vertices[..=dim].copy_from_slice(verts);
        let mut jac = [[0.0; 3]; 3];
        for c in 0..dim {
            for r in 0..dim {
                jac[r][c] = vertices[c + 1][r] - vertices[0][r];
            }
        }
        let (det, inv) = match dim {
            2 => {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                let mut inv = [[0.0; 3]; 3];
                inv[0][0] = jac[1][1] / det;
                inv[0][1] = -jac[0][1] / det;
                inv[1][0] = -jac[1][0] / det;
                inv[1][1] = jac[0][0] / det;
                (det, inv)
            }
            3 => {
                let m = &jac;
                let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
                let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
                let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
                let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
                let mut inv = [[0.0; 3]; 3];
                inv[0][0] = c00 / det;
                inv[1][0] = c01 / det;
                inv[2][0] = c02 / det;
                inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
                inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
                inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
                inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
                inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
                inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
                (det, inv)
            }
            _ => return None,
        };
        let scale = vertices[..=dim]
            .iter()
            .flat_map(|v| v[..dim].iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()))
            .max(1.0);
        if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(dim as i32) {
            return None;
        }
        let mut bary_grad = [[0.0; 3]; 4];
        for i in 1..=dim {
            for a in 0..dim {
                bary_grad[i][a] = inv[i - 1][a];
                bary_grad[0][a] -= inv[i - 1][a];
            }
        }
        Some(Self {
            dim,
            vertices,
            det,
            inv,
            bary_grad,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices[..=self.dim]
    }

    /// Signed Jacobian determinant.
    pub fn det(&self) -> f64 {
        self.det
    }

    /// `|det J| / dim!`
    pub fn volume(&self) -> f64 {
        let fact = if self.dim == 3 { 6.0 } else { 2.0 };
        self.det.abs() / fact
    }

    /// Gradients of the barycentric coordinates (constant on the simplex).
    pub fn bary_grads(&self) -> &[Point] {
        &self.bary_grad[..=self.dim]
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices[..=self.dim])
    }

    pub fn to_physical(&self, bary: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for (l, v) in bary.iter().zip(&self.vertices[..=self.dim]) {
            for a in 0..self.dim {
                x[a] += l * v[a];
            }
        }
        x
    }

    pub fn to_barycentric(&self, x: &Point) -> [f64; 4] {
        let mut bary = [0.0; 4];
        let mut s = 0.0;
        for i in 0..self.dim {
            let mut xi = 0.0;
            for a in 0..self.dim {
                xi += self.inv[i][a] * (x[a] - self.vertices[0][a]);
            }
            bary[i + 1] = xi;
            s += xi;
        }
        bary[0] = 1.0 - s;
        bary
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn diameter(points: &[Point]) -> f64 {
    let mut h = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            h = h.max(distance(&points[i], &points[j]));
        }
    }
    h
}

pub fn midpoint(a: &Point, b: &Point) -> Point {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

/// Measure of a `k`-simplex embedded in `k+1` dimensions (a facet) and the
/// unit normal of its supporting hyperplane.
pub fn facet_measure_and_normal(dim: usize, pts: &[Point]) -> (f64, Point) {
    match dim {
        2 => {
            let tx = pts[1][0] - pts[0][0];
            let tt = pts[1][1] - pts[0][1];
            let len = (tx * tx + tt * tt).sqrt();
            (len, [tt / len, -tx / len, 0.0])
        }
        3 => {
            let u = [
                pts[1][0] - pts[0][0],
                pts[1][1] - pts[0][1],
                pts[1][2] - pts[0][2],
            ];
            let v = [
                pts[2][0] - pts[0][0],
                pts[2][1] - pts[0][1],
                pts[2][2] - pts[0][2],
            ];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            (0.5 * norm, [n[0] / norm, n[1] / norm, n[2] / norm])
        }
        _ => unreachable!("facets exist only for dim 2 and 3"),
    }
}
