use serde::{Deserialize, Serialize};

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerKind {
    Identity,
    Jacobi,
    GaussSeidel,
}

impl std::fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Identity => "identity",
            Self::Jacobi => "jacobi",
            Self::GaussSeidel => "gauss-seidel",
        };
        f.write_str(s)
    }
}

/// A preconditioner bound to a matrix, applied as `z = M⁻¹ r`.
#[derive(Debug)]
pub enum Preconditioner<'a> {
    Identity,
    Jacobi {
        inv_diag: Vec<f64>,
    },
    /// One forward sweep of `(L + D) z = r`.
    GaussSeidel {
        matrix: &'a CsrMatrix,
        diag_pos: Vec<usize>,
    },
}

impl<'a> Preconditioner<'a> {
    pub fn new(kind: PreconditionerKind, a: &'a CsrMatrix) -> Result<Self> {
        match kind {
            PreconditionerKind::Identity => Ok(Self::Identity),
            PreconditionerKind::Jacobi => {
                let inv_diag = (0..a.n_rows())
                    .map(|i| {
                        let d = a.get(i, i);
                        if d == 0.0 {
                            Err(Error::ZeroDiagonal(i))
                        } else {
                            Ok(1.0 / d)
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok(Self::Jacobi { inv_diag })
            }
            PreconditionerKind::GaussSeidel => {
                let diag_pos = (0..a.n_rows())
                    .map(|i| match a.find(i, i) {
                        Some(p) if a.values()[p] != 0.0 => Ok(p),
                        _ => Err(Error::ZeroDiagonal(i)),
                    })
                    .collect::<Result<_>>()?;
                Ok(Self::GaussSeidel {
                    matrix: a,
                    diag_pos,
                })
            }
        }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Identity => z.copy_from_slice(r),
            Self::Jacobi { inv_diag } => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv_diag) {
                    *zi = ri * di;
                }
            }
            Self::GaussSeidel { matrix, diag_pos } => {
                let rp = matrix.row_ptr();
                let cols = matrix.col_idx();
                let vals = matrix.values();
                for i in 0..r.len() {
                    let mut s = r[i];
                    for p in rp[i]..diag_pos[i] {
                        s -= vals[p] * z[cols[p]];
                    }
                    z[i] = s / vals[diag_pos[i]];
                }
            }
        }
    }
}

/// One-shot application of a preconditioner of the given kind.
pub fn precond_apply(kind: PreconditionerKind, a: &CsrMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            found: r.len(),
        });
    }
    let m = Preconditioner::new(kind, a)?;
    let mut z = vec![0.0; r.len()];
    m.apply(r, &mut z);
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_copies() {
        let a = CsrMatrix::identity(3);
        let r = [1.0, 2.0, 3.0];
        assert_eq!(
            precond_apply(PreconditionerKind::Identity, &a, &r).unwrap(),
            r
        );
    }

    #[test]
    fn jacobi_solves_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let z = precond_apply(PreconditionerKind::Jacobi, &a, &[1.0, 1.0]).unwrap();
        assert_eq!(z, vec![0.5, 0.25]);
    }

    #[test]
    fn gauss_seidel_solves_lower_triangular() {
        let rows = vec![
            vec![2.0, 0.0, 0.0],
            vec![1.0, 4.0, 0.0],
            vec![-1.0, 2.0, 5.0],
        ];
        let a = CsrMatrix::from_dense(&rows);
        let r = [2.0, 9.0, 10.0];
        let z = precond_apply(PreconditionerKind::GaussSeidel, &a, &r).unwrap();
        // forward substitution
        let mut expect = [0.0; 3];
        for i in 0..3 {
            let s: f64 = (0..i).map(|j| rows[i][j] * expect[j]).sum();
            expect[i] = (r[i] - s) / rows[i][i];
        }
        for i in 0..3 {
            assert!((z[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_diagonal_names_row() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(
            precond_apply(PreconditionerKind::GaussSeidel, &a, &[1.0, 1.0]),
            Err(Error::ZeroDiagonal(1))
        ));
        assert!(matches!(
            Preconditioner::new(PreconditionerKind::Jacobi, &a),
            Err(Error::ZeroDiagonal(1))
        ));
    }
}
