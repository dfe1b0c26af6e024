//! Built-in manufactured solutions on the unit cylinder with `ν ≡ 1`, `T = 1`.
//!
//! The one-dimensional oscillatory and peak problems drop the second spatial
//! coordinate of their two-dimensional originals.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{ExactSolution, ProblemSpec, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const BUILTIN_PROBLEMS: [&str; 4] = ["smooth", "oscillatory", "peak", "custom"];

/// `Π_i sin(π x_i) · sin(π t)`
#[derive(Debug, Clone, Copy)]
pub struct SineProduct {
    pub d: usize,
}

impl ExactSolution for SineProduct {
    fn value(&self, p: &Point) -> f64 {
        (0..=self.d).map(|a| (PI * p[a]).sin()).product()
    }

    fn time_derivative(&self, p: &Point) -> f64 {
        let sx: f64 = (0..self.d).map(|a| (PI * p[a]).sin()).product();
        sx * PI * (PI * p[self.d]).cos()
    }

    fn spatial_gradient(&self, p: &Point) -> [f64; 2] {
        let st = (PI * p[self.d]).sin();
        let mut g = [0.0; 2];
        for (a, ga) in g.iter_mut().enumerate().take(self.d) {
            let others: f64 = (0..self.d)
                .filter(|&b| b != a)
                .map(|b| (PI * p[b]).sin())
                .product();
            *ga = PI * (PI * p[a]).cos() * others * st;
        }
        g
    }

    fn spatial_laplacian(&self, p: &Point) -> f64 {
        -(self.d as f64) * PI * PI * self.value(p)
    }
}

/// `sin(1 / (1/(10π) + |(x, t)|))`, oscillating ever faster towards the origin.
#[derive(Debug, Clone, Copy)]
pub struct Oscillatory {
    pub d: usize,
}

const OSC_SHIFT: f64 = 1.0 / (10.0 * PI);

impl Oscillatory {
    fn radius(&self, p: &Point) -> f64 {
        (0..=self.d).map(|a| p[a] * p[a]).sum::<f64>().sqrt()
    }

    /// `(φ'(r), φ''(r))` for `φ(r) = sin(1/(a + r))`.
    fn radial_derivatives(r: f64) -> (f64, f64) {
        let s = OSC_SHIFT + r;
        let g = 1.0 / s;
        let g1 = -1.0 / (s * s);
        let g2 = 2.0 / (s * s * s);
        (g.cos() * g1, -g.sin() * g1 * g1 + g.cos() * g2)
    }
}

impl ExactSolution for Oscillatory {
    fn value(&self, p: &Point) -> f64 {
        (1.0 / (OSC_SHIFT + self.radius(p))).sin()
    }

    fn time_derivative(&self, p: &Point) -> f64 {
        let r = self.radius(p);
        if r == 0.0 {
            return 0.0;
        }
        Self::radial_derivatives(r).0 * p[self.d] / r
    }

    fn spatial_gradient(&self, p: &Point) -> [f64; 2] {
        let r = self.radius(p);
        let mut g = [0.0; 2];
        if r == 0.0 {
            return g;
        }
        let d1 = Self::radial_derivatives(r).0;
        for (a, ga) in g.iter_mut().enumerate().take(self.d) {
            *ga = d1 * p[a] / r;
        }
        g
    }

    fn spatial_laplacian(&self, p: &Point) -> f64 {
        let r = self.radius(p);
        if r == 0.0 {
            return 0.0;
        }
        let (d1, d2) = Self::radial_derivatives(r);
        let rho2: f64 = (0..self.d).map(|a| p[a] * p[a]).sum();
        d2 * rho2 / (r * r) + d1 * (self.d as f64 / r - rho2 / (r * r * r))
    }
}

/// `Π_i (x_i² − x_i) · exp(−100 Σ_i (x_i − t)²)`, concentrated along the
/// space-time diagonal.
#[derive(Debug, Clone, Copy)]
pub struct MovingPeak {
    pub d: usize,
}

impl MovingPeak {
    fn envelope(&self, p: &Point) -> f64 {
        let t = p[self.d];
        (-100.0 * (0..self.d).map(|a| (p[a] - t).powi(2)).sum::<f64>()).exp()
    }

    fn poly(&self, p: &Point, skip: Option<usize>) -> f64 {
        (0..self.d)
            .filter(|&a| Some(a) != skip)
            .map(|a| p[a] * p[a] - p[a])
            .product()
    }
}

impl ExactSolution for MovingPeak {
    fn value(&self, p: &Point) -> f64 {
        self.poly(p, None) * self.envelope(p)
    }

    fn time_derivative(&self, p: &Point) -> f64 {
        let t = p[self.d];
        let s: f64 = (0..self.d).map(|a| p[a] - t).sum();
        self.value(p) * 200.0 * s
    }

    fn spatial_gradient(&self, p: &Point) -> [f64; 2] {
        let t = p[self.d];
        let e = self.envelope(p);
        let full = self.poly(p, None);
        let mut g = [0.0; 2];
        for (a, ga) in g.iter_mut().enumerate().take(self.d) {
            let q1 = 2.0 * p[a] - 1.0;
            *ga = e * (q1 * self.poly(p, Some(a)) - 200.0 * (p[a] - t) * full);
        }
        g
    }

    fn spatial_laplacian(&self, p: &Point) -> f64 {
        let t = p[self.d];
        let e = self.envelope(p);
        let full = self.poly(p, None);
        (0..self.d)
            .map(|a| {
                let rest = self.poly(p, Some(a));
                let q1 = 2.0 * p[a] - 1.0;
                let z = p[a] - t;
                e * (2.0 * rest - 400.0 * q1 * rest * z - 200.0 * full + 40000.0 * z * z * full)
            })
            .sum()
    }
}

/// The named built-in problem in `d` spatial dimensions.
///
/// `custom` has `ν ≡ 1`, `f ≡ 1`, homogeneous data and no exact solution;
/// see [`custom_problem`] for other constants.
pub fn builtin_problem(name: &str, d: usize) -> Result<ProblemSpec> {
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    match name {
        "smooth" => ProblemSpec::manufactured("smooth", d, 1.0, 1.0, Arc::new(SineProduct { d })),
        "oscillatory" => {
            ProblemSpec::manufactured("oscillatory", d, 1.0, 1.0, Arc::new(Oscillatory { d }))
        }
        "peak" => ProblemSpec::manufactured("peak", d, 1.0, 1.0, Arc::new(MovingPeak { d })),
        "custom" => custom_problem(d, 1.0, 1.0, 1.0),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Constant diffusion and source with homogeneous data.
pub fn custom_problem(d: usize, final_time: f64, nu: f64, source: f64) -> Result<ProblemSpec> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "diffusion must be positive, got {nu}"
        )));
    }
    let diffusion: ScalarField = Arc::new(move |_| nu);
    let f: ScalarField = Arc::new(move |_| source);
    ProblemSpec::new("custom", d, final_time, diffusion, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_source_matches_closed_form() {
        let p = builtin_problem("smooth", 1).unwrap();
        for &(x, t) in &[(0.3, 0.7), (0.11, 0.5), (0.9, 0.05)] {
            let pt = [x, t, 0.0];
            let expect =
                PI * (PI * t).cos() * (PI * x).sin() + PI * PI * (PI * x).sin() * (PI * t).sin();
            assert!((p.source(&pt) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn plug_in_values() {
        let osc = Oscillatory { d: 2 };
        assert!(osc.value(&[0.0, 0.0, 0.0]).abs() < 1e-14);
        let peak = MovingPeak { d: 2 };
        assert_eq!(peak.value(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            builtin_problem("nope", 1),
            Err(Error::UnknownProblem(_))
        ));
    }

    #[test]
    fn boundary_data_checks() {
        assert!(builtin_problem("smooth", 2)
            .unwrap()
            .has_homogeneous_data(100, 1e-12));
        assert!(!builtin_problem("oscillatory", 1)
            .unwrap()
            .has_homogeneous_data(100, 1e-12));
        assert!(!builtin_problem("peak", 2)
            .unwrap()
            .has_homogeneous_data(100, 1e-12));
    }
}
