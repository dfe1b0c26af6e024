//! MatrixMarket coordinate (sparse) and array (dense vector) text formats.

use std::io::{BufRead, Write};

use super::CsrMatrix;
use crate::error::{Error, Result};

pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_vector_market<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.17e}")?;
    }
    Ok(())
}

fn data_lines<R: BufRead>(input: R) -> Result<(String, Vec<(usize, String)>)> {
    let mut banner = None;
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            banner = Some(line.to_lowercase());
            continue;
        }
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        lines.push((i + 1, t.to_string()));
    }
    let banner = banner.ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    if !banner.starts_with("%%matrixmarket matrix") {
        return Err(Error::Parse {
            line: 1,
            msg: "missing %%MatrixMarket banner".into(),
        });
    }
    Ok((banner, lines))
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse '{s}'"),
    })
}

/// Reads a real `coordinate` matrix; `symmetric` storage is expanded.
pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CsrMatrix> {
    let (banner, lines) = data_lines(input)?;
    if !banner.contains("coordinate") || !(banner.contains("real") || banner.contains("integer")) {
        return Err(Error::Parse {
            line: 1,
            msg: "only real coordinate matrices are supported".into(),
        });
    }
    let symmetric = banner.contains("symmetric");
    let mut it = lines.into_iter();
    let (lno, size) = it.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: lno,
            msg: "size line needs rows, columns and entry count".into(),
        });
    }
    let (nr, nc, nnz): (usize, usize, usize) = (
        parse(dims[0], lno)?,
        parse(dims[1], lno)?,
        parse(dims[2], lno)?,
    );
    let mut triplets = Vec::with_capacity(nnz);
    for (lno, line) in it.by_ref().take(nnz) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 3 {
            return Err(Error::Parse {
                line: lno,
                msg: "entry needs row, column and value".into(),
            });
        }
        let (i, j, v): (usize, usize, f64) =
            (parse(f[0], lno)?, parse(f[1], lno)?, parse(f[2], lno)?);
        if i == 0 || j == 0 {
            return Err(Error::Parse {
                line: lno,
                msg: "indices are 1-based".into(),
            });
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if triplets.len() < nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {nnz} entries"),
        });
    }
    CsrMatrix::from_triplets(nr, nc, &triplets)
}

/// Reads a dense `array` column vector.
pub fn read_vector_market<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let (banner, lines) = data_lines(input)?;
    if !banner.contains("array") {
        return Err(Error::Parse {
            line: 1,
            msg: "expected an array vector".into(),
        });
    }
    let mut it = lines.into_iter();
    let (lno, size) = it.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let n: usize = parse(dims[0], lno)?;
    let v = it
        .take(n)
        .map(|(l, s)| parse::<f64>(&s, l))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {n} values"),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let a = CsrMatrix::from_dense(&[
            vec![1.5, 0.0, -2.0],
            vec![0.0, 0.1, 0.0],
            vec![3.0, 0.0, 1e-20],
        ]);
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), a);

        let v = vec![1.0, -0.3, 7e10];
        let mut buf = Vec::new();
        write_vector_market(&v, &mut buf).unwrap();
        assert_eq!(read_vector_market(&buf[..]).unwrap(), v);
    }

    #[test]
    fn symmetric_is_expanded() {
        let text =
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4.0\n2 1 1.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![vec![4.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn rejects_missing_banner() {
        assert!(read_matrix_market("2 2 0\n".as_bytes()).is_err());
    }
}
