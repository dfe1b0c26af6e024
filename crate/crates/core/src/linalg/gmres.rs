//! Restarted GMRES with right preconditioning.
//!
//! Right preconditioning keeps the Arnoldi least-squares residual equal to the
//! true residual `‖b − A x‖` in exact arithmetic, so the stopping test applies to
//! the unpreconditioned system. Each restart recomputes the true residual.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{dot, norm2, CsrMatrix, Preconditioner, PreconditionerKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmresOptions {
    pub restart: usize,
    /// Relative reduction of the initial residual (`x0 = 0`).
    pub rtol: f64,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 50,
            rtol: 1e-8,
            max_iter: 10_000,
            preconditioner: PreconditionerKind::GaussSeidel,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub restarts: usize,
    /// True relative residual `‖b − A x‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
    /// Least-squares residual estimate after each inner iteration, relative
    /// to `‖b‖`. Cycles are separated by the restart boundaries.
    #[serde(skip)]
    pub residual_history: Vec<Vec<f64>>,
}

pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Preconditioner<'_>,
    opts: &GmresOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let start = Instant::now();
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.n_cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    if opts.restart == 0 || !(opts.rtol > 0.0) {
        return Err(Error::InvalidArgument(
            "GMRES needs restart >= 1 and rtol > 0".into(),
        ));
    }

    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    let mut stats = SolveStats {
        iterations: 0,
        restarts: 0,
        relative_residual: 0.0,
        converged: true,
        wall_time: 0.0,
        residual_history: Vec::new(),
    };
    if bnorm == 0.0 {
        stats.wall_time = start.elapsed().as_secs_f64();
        return Ok((x, stats));
    }

    let m = opts.restart.min(n.max(1));
    let mut basis: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut prev_true = f64::INFINITY;

    loop {
        for (v, ri) in basis[0].iter_mut().zip(&r) {
            *v = ri / beta;
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut history = Vec::new();
        let mut k = 0;
        let mut breakdown = false;

        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            a.spmv_into(&z, &mut w)?;
            let wnorm0 = norm2(&w);
            for i in 0..=j {
                let h = dot(&w, &basis[i]);
                hess[i][j] = h;
                for (wl, vl) in w.iter_mut().zip(&basis[i]) {
                    *wl -= h * vl;
                }
            }
            let hnext = norm2(&w);
            hess[j + 1][j] = hnext;

            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (hjj, hj1) = (hess[j][j], hess[j + 1][j]);
            let rho = hjj.hypot(hj1);
            if rho == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hjj / rho;
                sn[j] = hj1 / rho;
            }
            hess[j][j] = rho;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            stats.iterations += 1;
            k = j + 1;
            let est = g[j + 1].abs() / bnorm;
            if !est.is_finite() || !rho.is_finite() {
                return Err(Error::NonFinite("GMRES iteration"));
            }
            history.push(est);

            if hnext <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE) {
                breakdown = true;
                break;
            }
            if est <= opts.rtol || stats.iterations >= opts.max_iter {
                break;
            }
            for (v, wl) in basis[j + 1].iter_mut().zip(&w) {
                *v = wl / hnext;
            }
        }
        stats.residual_history.push(history);

        // back substitution on the triangularized Hessenberg system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= hess[i][l] * y[l];
            }
            y[i] = if hess[i][i] != 0.0 {
                s / hess[i][i]
            } else {
                0.0
            };
        }
        let mut u = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (ul, vl) in u.iter_mut().zip(v) {
                *ul += yi * vl;
            }
        }
        precond.apply(&u, &mut z);
        for (xl, zl) in x.iter_mut().zip(&z) {
            *xl += zl;
        }

        a.spmv_into(&x, &mut w)?;
        for ((rl, bl), wl) in r.iter_mut().zip(b).zip(&w) {
            *rl = bl - wl;
        }
        beta = norm2(&r);
        if !beta.is_finite() {
            return Err(Error::NonFinite("GMRES residual"));
        }
        let rel = beta / bnorm;
        stats.relative_residual = rel;
        if rel <= opts.rtol {
            stats.converged = true;
            break;
        }
        if stats.iterations >= opts.max_iter || (breakdown && rel >= prev_true) {
            stats.converged = false;
            break;
        }
        prev_true = rel;
        stats.restarts += 1;
    }
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &CsrMatrix, b: &[f64]) -> (Vec<f64>, SolveStats) {
        let p = Preconditioner::new(PreconditionerKind::Identity, a).unwrap();
        gmres(a, b, &p, &GmresOptions::default()).unwrap()
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, st) = solve(&a, &b);
        assert_eq!(st.iterations, 1);
        assert!(st.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 3.0]]);
        let (x, st) = solve(&a, &[2.0, 3.0]);
        assert!(st.converged);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = CsrMatrix::identity(3);
        let (x, st) = solve(&a, &[0.0; 3]);
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(st.iterations, 0);
    }

    #[test]
    fn nan_rhs_is_an_error() {
        let a = CsrMatrix::identity(2);
        let p = Preconditioner::new(PreconditionerKind::Identity, &a).unwrap();
        let err = gmres(&a, &[f64::NAN, 1.0], &p, &GmresOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn reports_non_convergence() {
        // rotation by 90 degrees stagnates for restart 1
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let p = Preconditioner::new(PreconditionerKind::Identity, &a).unwrap();
        let opts = GmresOptions {
            restart: 1,
            max_iter: 20,
            ..Default::default()
        };
        let (_, st) = gmres(&a, &[1.0, 0.0], &p, &opts).unwrap();
        assert!(!st.converged);
    }
}
