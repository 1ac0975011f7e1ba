//! Shared matrix text format.
//!
//! First line: the dimension `d`; then `d` lines of `d` whitespace-separated
//! decimals. Writers emit 17 significant digits so values round-trip
//! bit-exactly. SPD readers apply symmetric-part averaging.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spd::{SpdMatrix, SymMatrix};

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|e| Error::Parse(format!("bad float {tok:?}: {e}")))
}

/// Read a square matrix in the shared text format (no symmetrization).
pub fn read_square<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let d: usize = first
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad dimension {first:?}: {e}")))?;
    if d == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {d} rows, got {i}")))??;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {d}", toks.len())));
        }
        for (j, tok) in toks.iter().enumerate() {
            m[(i, j)] = parse_f64(tok)?;
        }
    }
    Ok(m)
}

/// Read an SPD matrix; the symmetric part `(A + Aᵀ)/2` is taken on read.
pub fn read_spd<R: BufRead>(r: R) -> Result<SpdMatrix> {
    let m = read_square(r)?;
    SpdMatrix::new(SymMatrix::from_average(m).into_matrix())
}

pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{}", m.nrows())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Read sample rows (n lines of d whitespace-separated floats, no header).
pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<DVector<f64>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let vals: Vec<f64> = trimmed
            .split_whitespace()
            .map(parse_f64)
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(vals.len()),
            Some(w) if w != vals.len() => {
                return Err(Error::Parse(format!(
                    "inconsistent row width: {} vs {w}",
                    vals.len()
                )))
            }
            _ => {}
        }
        rows.push(DVector::from_vec(vals));
    }
    if rows.is_empty() {
        return Err(Error::Parse("no sample rows".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = crate::test_rng(31);
        let x = crate::spd::random_spd(5, 8.0, &mut rng);
        let mut buf = Vec::new();
        write_matrix(&mut buf, x.as_matrix()).unwrap();
        let back = read_spd(buf.as_slice()).unwrap();
        assert_eq!(x.as_matrix(), back.as_matrix());
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = "2\n1.0 0.0\n0.0\n";
        assert!(matches!(read_square(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn samples_reader() {
        let text = "1.0 2.0\n3.0 4.0\n\n5.0 6.0\n";
        let rows = read_samples(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2][1], 6.0);
    }
}
