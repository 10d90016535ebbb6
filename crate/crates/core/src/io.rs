//! Text formats: the coordinate tensor file and the factor export directory.
//!
//! Coordinate file (UTF-8):
//!
//! ```text
//! # comment lines start with '#'
//! K J
//! k i j value
//! ...
//! ```
//!
//! Indices are 0-based, `k < K`, `j < J`; the row count of subject `k` is
//! its largest row index plus one. Repeated `(k, i, j)` entries are summed
//! and all-zero rows are removed on load.
//!
//! Factor matrices are written as tab-separated rows of 17-significant-digit
//! numbers after a `#` header, which reads back bit-for-bit.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::parafac2::{Parafac2Factors, SolverConfig, PRNG_NAME};
use crate::tensor::{IrregularTensor, SparseSlice};

/// A tensor read from a coordinate file.
#[derive(Debug, Clone)]
pub struct LoadedTensor {
    pub tensor: IrregularTensor,
    /// All-zero rows removed while loading.
    pub removed_rows: usize,
}

pub fn parse_coordinate_file(path: impl AsRef<Path>) -> Result<LoadedTensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_coordinate(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_coordinate_str(text: &str) -> Result<LoadedTensor> {
    parse_coordinate(text.as_bytes())
}

pub fn parse_coordinate(reader: impl BufRead) -> Result<LoadedTensor> {
    let mut header: Option<(usize, usize)> = None;
    let mut entries: Vec<Vec<(usize, usize, f64)>> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        match header {
            None => {
                let [k, j] = fields[..] else {
                    return Err(parse_err("malformed header, expected \"K J\""));
                };
                let k: i64 = k.parse().map_err(|_| parse_err("malformed header"))?;
                let j: i64 = j.parse().map_err(|_| parse_err("malformed header"))?;
                if k <= 0 || j <= 0 {
                    return Err(parse_err("K and J must be positive"));
                }
                header = Some((k as usize, j as usize));
                entries = vec![Vec::new(); k as usize];
            }
            Some((n_slices, n_cols)) => {
                let [k, i, j, v] = fields[..] else {
                    return Err(parse_err("malformed line, expected \"k i j value\""));
                };
                let k: usize = k
                    .parse()
                    .map_err(|_| parse_err("malformed subject index"))?;
                let i: usize = i.parse().map_err(|_| parse_err("malformed row index"))?;
                let j: usize = j.parse().map_err(|_| parse_err("malformed column index"))?;
                let v: f64 = v.parse().map_err(|_| parse_err("malformed value"))?;
                if k >= n_slices {
                    return Err(parse_err("subject index out of range"));
                }
                if j >= n_cols {
                    return Err(parse_err("column index out of range"));
                }
                if !v.is_finite() {
                    return Err(parse_err("non-finite value"));
                }
                entries[k].push((i, j, v));
            }
        }
    }

    let (_, n_cols) = header.ok_or_else(|| Error::Format("empty file".into()))?;
    let mut slices = Vec::with_capacity(entries.len());
    let mut removed_rows = 0;
    for (k, triplets) in entries.into_iter().enumerate() {
        let n_rows = triplets.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let slice = SparseSlice::from_triplets(n_rows, n_cols, triplets)?;
        let (filtered, _) = slice.filter_zero_rows().map_err(|e| match e {
            Error::EmptySlice => Error::EmptySubject(k),
            other => other,
        })?;
        removed_rows += slice.n_rows() - filtered.n_rows();
        slices.push(filtered);
    }
    Ok(LoadedTensor {
        tensor: IrregularTensor::new(n_cols, slices)?,
        removed_rows,
    })
}

/// Writes `tensor` in coordinate format, subject by subject in storage order.
pub fn write_coordinate(tensor: &IrregularTensor, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# k i j value")?;
    writeln!(out, "{} {}", tensor.n_slices(), tensor.n_cols())?;
    for (k, slice) in tensor.slices().iter().enumerate() {
        for (i, j, v) in slice.triplets() {
            writeln!(out, "{k} {i} {j} {v:?}")?;
        }
    }
    out.flush()
}

pub fn write_coordinate_file(tensor: &IrregularTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_coordinate(tensor, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn coordinate_to_string(tensor: &IrregularTensor) -> String {
    let mut buf = Vec::new();
    write_coordinate(tensor, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("coordinate output is ASCII")
}

/// Writes a matrix as tab-separated rows with 17 significant digits.
pub fn write_matrix(m: &DenseMatrix, name: &str, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# {name} {} {}", m.n_rows(), m.n_cols())?;
    let mut line = String::new();
    for row in m.rows_iter() {
        line.clear();
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                line.push('\t');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

pub fn write_matrix_file(m: &DenseMatrix, name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(m, name, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(reader: impl BufRead) -> Result<DenseMatrix> {
    let mut shape: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        if let Some(rest) = line.strip_prefix('#') {
            if shape.is_none() {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let [_, rows, cols] = f[..] else {
                    return Err(err("malformed matrix header"));
                };
                let rows = rows.parse().map_err(|_| err("malformed row count"))?;
                let cols = cols.parse().map_err(|_| err("malformed column count"))?;
                shape = Some((rows, cols));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (_, cols) = shape.ok_or_else(|| err("matrix data before header"))?;
        let before = data.len();
        for field in line.split('\t') {
            data.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| err("malformed value"))?,
            );
        }
        if data.len() - before != cols {
            return Err(err("wrong number of columns"));
        }
    }
    let (rows, cols) = shape.ok_or_else(|| Error::Format("missing matrix header".into()))?;
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Contents of `manifest.json` in a factor directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subjects: usize,
    pub variables: usize,
    pub rank: usize,
    pub rows_per_subject: Vec<usize>,
    pub v_file: String,
    pub s_file: String,
    pub h_file: String,
    pub u_files: Vec<String>,
    pub config: Option<SolverConfig>,
    pub prng: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `V`, `S` (row `k` = diagonal of `S_k`), `H`, every `U_k` and a
/// manifest into `out_dir`, creating it if needed.
pub fn write_factors(
    factors: &Parafac2Factors,
    config: Option<&SolverConfig>,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    let dir = out_dir.as_ref();
    let u_dir = dir.join("U");
    fs::create_dir_all(&u_dir).map_err(|e| Error::io(&u_dir, e))?;

    write_matrix_file(&factors.v, "V", dir.join("V.tsv"))?;
    write_matrix_file(&factors.s, "S", dir.join("S.tsv"))?;
    write_matrix_file(&factors.h, "H", dir.join("H.tsv"))?;
    let mut u_files = Vec::with_capacity(factors.q.len());
    for (k, u) in factors.assemble_u().iter().enumerate() {
        let name = format!("U/U_{k:06}.tsv");
        write_matrix_file(u, &format!("U_{k}"), dir.join(&name))?;
        u_files.push(name);
    }
    let manifest = Manifest {
        subjects: factors.n_subjects(),
        variables: factors.v.n_rows(),
        rank: factors.rank(),
        rows_per_subject: factors.q.iter().map(DenseMatrix::n_rows).collect(),
        v_file: "V.tsv".into(),
        s_file: "S.tsv".into(),
        h_file: "H.tsv".into(),
        u_files,
        config: config.cloned(),
        prng: PRNG_NAME.into(),
    };
    write_json(&manifest, dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Factor matrices read back from an export directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedFactors {
    pub manifest: Manifest,
    pub v: DenseMatrix,
    pub s: DenseMatrix,
    pub h: DenseMatrix,
    pub u: Vec<DenseMatrix>,
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_factors(dir: impl AsRef<Path>) -> Result<ExportedFactors> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let load = |name: &str| read_matrix_file(dir.join(name));
    let u = manifest
        .u_files
        .iter()
        .map(|f| load(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExportedFactors {
        v: load(&manifest.v_file)?,
        s: load(&manifest.s_file)?,
        h: load(&manifest.h_file)?,
        u,
        manifest,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: impl Into<PathBuf>) -> Result<()> {
    let path = path.into();
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
