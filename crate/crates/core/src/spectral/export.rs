//! Columnar spectrum export and a raw eigenvector dump.
//!
//! Dump layout: u64 LE dimension, u64 LE vector count, then dim·count f64 LE values
//! in column-major order (one eigenvector after another).

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::Serialize;

use super::{participation_ratio, EigenSystem, SpectralError};
use crate::model::Site;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub eigenvalue: String,
    pub center: String,
    pub participation_ratio: String,
}

/// Render with 17 significant digits, enough to round-trip an f64.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn fmt_site(x: &Site) -> String {
    x.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn spectrum_rows(es: &EigenSystem, centers: &[Site]) -> Vec<SpectrumRow> {
    (0..es.dim())
        .map(|i| SpectrumRow {
            index: i,
            eigenvalue: fmt_f64(es.eigenvalue(i)),
            center: centers.get(i).map(fmt_site).unwrap_or_default(),
            participation_ratio: fmt_f64(participation_ratio(es.vector(i))),
        })
        .collect()
}

pub fn write_spectrum_csv<W: Write>(w: W, es: &EigenSystem, centers: &[Site]) -> Result<(), SpectralError> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in spectrum_rows(es, centers) {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_eigenvector_dump<W: Write>(mut w: W, vectors: &DMatrix<f64>) -> Result<(), SpectralError> {
    w.write_all(&(vectors.nrows() as u64).to_le_bytes())?;
    w.write_all(&(vectors.ncols() as u64).to_le_bytes())?;
    for v in vectors.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_eigenvector_dump<R: Read>(mut r: R) -> Result<DMatrix<f64>, SpectralError> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(dim * count);
    for _ in 0..dim * count {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok(DMatrix::from_vec(dim, count, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{diagonalize_matrix, OperatorDescriptor};

    #[test]
    fn dump_round_trip() {
        let m = DMatrix::from_fn(3, 2, |r, c| (r as f64 + 0.1) * (c as f64 - 0.7));
        let mut buf = Vec::new();
        write_eigenvector_dump(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(read_eigenvector_dump(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn csv_has_one_row_per_eigenvalue() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![0.1, -0.2]);
        let es = diagonalize_matrix(
            &a,
            1e-10,
            OperatorDescriptor {
                kind: None,
                basis: None,
                lattice: None,
                dim: 2,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &es, &[Site::new([1]), Site::new([0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,eigenvalue,center,participation_ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,-2.0000000000000001e-1,1,"));
        let parsed: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, -0.2);
    }
}
