use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::SpaceTimeMesh;

/// A manufactured solution with the derivatives the scheme and the error
/// norms need. Points carry the spatial coordinates first and time last.
pub trait ExactSolution: Send + Sync {
    fn value(&self, p: &Point) -> f64;
    fn time_derivative(&self, p: &Point) -> f64;
    /// `∇_x u`; entries beyond the spatial dimension are ignored.
    fn spatial_gradient(&self, p: &Point) -> [f64; 2];
    /// `Δ_x u`
    fn spatial_laplacian(&self, p: &Point) -> f64;
}

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Data of `∂_t u − div_x(ν ∇_x u) = f` on `(0,1)^d × (0,T)`.
///
/// `ν` is sampled at element centroids, so it is elementwise constant on any
/// mesh. When an exact solution is present its nodal values supply the
/// Dirichlet data on the lateral and bottom boundary.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    spatial_dim: usize,
    final_time: f64,
    diffusion: ScalarField,
    source: ScalarField,
    exact: Option<Arc<dyn ExactSolution>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("spatial_dim", &self.spatial_dim)
            .field("final_time", &self.final_time)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        spatial_dim: usize,
        final_time: f64,
        diffusion: ScalarField,
        source: ScalarField,
    ) -> Result<Self> {
        if !(1..=2).contains(&spatial_dim) {
            return Err(Error::UnsupportedDimension(spatial_dim));
        }
        if !(final_time > 0.0) {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            spatial_dim,
            final_time,
            diffusion,
            source,
            exact: None,
        })
    }

    /// Problem with constant `ν` whose source is derived from `exact` as
    /// `f = ∂_t u − ν Δ_x u`.
    pub fn manufactured(
        name: impl Into<String>,
        spatial_dim: usize,
        final_time: f64,
        nu: f64,
        exact: Arc<dyn ExactSolution>,
    ) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion must be positive, got {nu}"
            )));
        }
        let u = exact.clone();
        let source: ScalarField =
            Arc::new(move |p: &Point| u.time_derivative(p) - nu * u.spatial_laplacian(p));
        let mut spec = Self::new(name, spatial_dim, final_time, Arc::new(move |_| nu), source)?;
        spec.exact = Some(exact);
        Ok(spec)
    }

    pub fn with_exact(mut self, exact: Arc<dyn ExactSolution>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn diffusion(&self, p: &Point) -> f64 {
        (self.diffusion)(p)
    }

    pub fn source(&self, p: &Point) -> f64 {
        (self.source)(p)
    }

    pub fn source_field(&self) -> &ScalarField {
        &self.source
    }

    pub fn exact(&self) -> Option<&dyn ExactSolution> {
        self.exact.as_deref()
    }

    /// `ν_K`, sampled at the centroid of element `k`.
    pub fn element_diffusion(&self, mesh: &SpaceTimeMesh, k: usize) -> Result<f64> {
        let pts = mesh.element_points(k);
        let mut c = [0.0; 3];
        for p in &pts {
            for a in 0..3 {
                c[a] += p[a] / pts.len() as f64;
            }
        }
        let nu = self.diffusion(&c);
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "diffusion coefficient on element {k} is {nu}, must be positive"
            )));
        }
        Ok(nu)
    }

    /// Spot check at `samples` deterministic points on `Σ ∪ Σ_0` that the exact
    /// solution vanishes there (within `tol`). True when no exact solution is set.
    pub fn has_homogeneous_data(&self, samples: usize, tol: f64) -> bool {
        let Some(u) = self.exact() else {
            return true;
        };
        let d = self.spatial_dim;
        let faces = 2 * d + 1;
        // additive recurrence with irrational increments
        let alpha = [0.754_877_666_246_693, 0.569_840_290_998_053];
        (0..samples).all(|i| {
            let s = [
                ((i as f64 + 0.5) * alpha[0]).fract(),
                ((i as f64 + 0.5) * alpha[1]).fract(),
            ];
            let face = i % faces;
            let mut p = [0.0; 3];
            if face == 2 * d {
                // bottom
                p[..d].copy_from_slice(&s[..d]);
                p[d] = 0.0;
            } else {
                let axis = face / 2;
                let mut m = 0;
                for a in 0..d {
                    if a == axis {
                        p[a] = (face % 2) as f64;
                    } else {
                        p[a] = s[m];
                        m += 1;
                    }
                }
                p[d] = self.final_time * s[m];
            }
            u.value(&p).abs() <= tol
        })
    }
}
