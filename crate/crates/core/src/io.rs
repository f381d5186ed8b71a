//! File formats.
//!
//! * Headerless CSV, row-major. Values are written with Rust's shortest
//!   round-trip float formatting, so reading a file back gives bit-identical
//!   values. Vectors are one value per line.
//! * `DCEN1` binary: the magic bytes `DCEN1`, rows and columns as little-endian
//!   `u64`, then `rows·cols` little-endian `f64` in row-major order.
//! * Binary PGM (`P5`, 8-bit), pixel values min-max scaled to `0..=255`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{DcenError, Result};
use crate::tv::Image2D;

pub const MAGIC: &[u8; 5] = b"DCEN1";

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| DcenError::Parse(format!("not a number: {s:?}")))
}

/// Parses headerless CSV into rows of floats. Blank lines are skipped.
pub fn read_csv_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(parse_f64).collect::<Result<Vec<_>>>()?);
    }
    Ok(rows)
}

pub fn matrix_from_rows(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let m = rows.len();
    if m == 0 {
        return Err(DcenError::Parse("matrix file is empty".into()));
    }
    let n = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(DcenError::Parse(format!(
            "row {} has {} columns, expected {n}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(m, n, rows.into_iter().flatten()))
}

pub fn write_matrix_csv_to<W: Write>(writer: W, a: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..a.nrows() {
        w.write_record(a.row(i).iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv_to<W: Write>(writer: W, x: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for v in x {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// A vector stored either one value per line or as a single row.
pub fn vector_from_rows(rows: Vec<Vec<f64>>) -> Result<DVector<f64>> {
    match rows.len() {
        0 => Err(DcenError::Parse("vector file is empty".into())),
        1 => Ok(DVector::from_vec(rows.into_iter().next().unwrap())),
        _ => {
            if rows.iter().any(|r| r.len() != 1) {
                return Err(DcenError::Parse("vector file must have one value per line".into()));
            }
            Ok(DVector::from_iterator(rows.len(), rows.into_iter().map(|r| r[0])))
        }
    }
}

pub fn write_matrix_bin_to<W: Write>(writer: W, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(MAGIC)?;
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    for i in 0..a.nrows() {
        for v in a.row(i).iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_bin_from<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DcenError::Parse("missing DCEN1 header".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let m = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let len = m
        .checked_mul(n)
        .ok_or_else(|| DcenError::Parse("binary dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(len.min(1 << 28));
    for _ in 0..len {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    if r.read(&mut word)? != 0 {
        return Err(DcenError::Parse("trailing bytes after DCEN1 payload".into()));
    }
    Ok(DMatrix::from_row_slice(m, n, &data))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(File::create(path)?)
}

fn is_binary(path: &Path) -> Result<bool> {
    let mut head = [0u8; 5];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    Ok(n == 5 && &head == MAGIC)
}

/// Reads a matrix from CSV or `DCEN1`, detected by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    if is_binary(path)? {
        read_matrix_bin_from(File::open(path)?)
    } else {
        matrix_from_rows(read_csv_rows(File::open(path)?)?)
    }
}

/// Reads a vector from CSV or from a one-column / one-row `DCEN1` file.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    if is_binary(path)? {
        let a = read_matrix_bin_from(File::open(path)?)?;
        if a.ncols() != 1 && a.nrows() != 1 {
            return Err(DcenError::Parse("binary vector must have one row or one column".into()));
        }
        Ok(DVector::from_column_slice(a.transpose().as_slice()))
    } else {
        vector_from_rows(read_csv_rows(File::open(path)?)?)
    }
}

pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv_to(create(path)?, a)
}

pub fn write_matrix_bin(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    write_matrix_bin_to(create(path)?, a)
}

pub fn write_vector_csv(path: &Path, x: &[f64]) -> Result<()> {
    write_vector_csv_to(create(path)?, x)
}

/// `N×N` image as CSV, one image row per line.
pub fn write_image_csv(path: &Path, img: &Image2D) -> Result<()> {
    let n = img.n_side();
    write_matrix_csv(path, &DMatrix::from_row_slice(n, n, img.data()))
}

pub fn read_image_csv(path: &Path) -> Result<Image2D> {
    let a = matrix_from_rows(read_csv_rows(File::open(path)?)?)?;
    if a.nrows() != a.ncols() {
        return Err(DcenError::Parse("image must be square".into()));
    }
    Image2D::new(a.nrows(), a.transpose().as_slice().to_vec())
}

/// Mask as a 0/1 CSV grid.
pub fn write_mask_csv(path: &Path, mask: &[bool], n_side: usize) -> Result<()> {
    let a = DMatrix::from_row_iterator(n_side, n_side, mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
    write_matrix_csv(path, &a)
}

pub fn read_mask_csv(path: &Path) -> Result<(Vec<bool>, usize)> {
    let rows = read_csv_rows(File::open(path)?)?;
    let a = matrix_from_rows(rows)?;
    if a.nrows() != a.ncols() {
        return Err(DcenError::Parse("mask must be square".into()));
    }
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for v in a.row(i).iter() {
            out.push(match *v {
                0.0 => false,
                1.0 => true,
                other => return Err(DcenError::Parse(format!("mask entries must be 0 or 1, got {other}"))),
            });
        }
    }
    Ok((out, a.nrows()))
}

/// 8-bit binary PGM; a constant image maps to all zeros.
pub fn write_pgm_to<W: Write>(writer: W, img: &Image2D) -> Result<()> {
    let n = img.n_side();
    let (lo, hi) = img
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = hi - lo;
    let mut w = BufWriter::new(writer);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn write_pgm(path: &Path, img: &Image2D) -> Result<()> {
    write_pgm_to(create(path)?, img)
}
