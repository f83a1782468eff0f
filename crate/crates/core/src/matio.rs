//! Matrix files.
//!
//! * CSV: no header, one row per line, comma-separated values written with
//!   17 significant digits, newline-terminated.
//! * BIN: the 8-byte magic `NLRMMAT1`, rows and cols as little-endian `u64`,
//!   then the entries row-major as little-endian `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const BIN_MAGIC: &[u8; 8] = b"NLRMMAT1";
const BIN_HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Bin,
}

impl MatrixFormat {
    /// `.bin` means BIN; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => MatrixFormat::Bin,
            _ => MatrixFormat::Csv,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "bin" => Ok(MatrixFormat::Bin),
            other => Err(Error::contract(format!("unknown matrix format '{other}'"))),
        }
    }
}

pub fn read_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MatrixFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format {
                path: path.into(),
                message: "CSV file is not valid UTF-8".into(),
            })?;
            parse_csv(&text, path)
        }
        MatrixFormat::Bin => decode_bin(&bytes, path),
    }
}

pub fn write_matrix(a: &DenseMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        MatrixFormat::Csv => to_csv(a).into_bytes(),
        MatrixFormat::Bin => encode_bin(a),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn to_csv(a: &DenseMatrix) -> String {
    let mut out = String::with_capacity(a.rows() * a.cols() * 24);
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str, path: &Path) -> Result<DenseMatrix> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("cannot parse '{field}' as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value '{field}'")));
            }
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(parse_err(
                    line_no,
                    format!("expected {c} values, found {count}"),
                ));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Format {
        path: path.into(),
        message: "CSV file contains no rows".into(),
    })?;
    DenseMatrix::new(rows, cols, data).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn encode_bin(a: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(BIN_HEADER_LEN + 8 * a.as_slice().len());
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&(a.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(a.cols() as u64).to_le_bytes());
    for v in a.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_bin(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let format_err = |message: String| Error::Format {
        path: path.into(),
        message,
    };
    if bytes.len() < BIN_HEADER_LEN || &bytes[..8] != BIN_MAGIC {
        return Err(format_err("missing NLRMMAT1 header".into()));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(8), word(16));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(BIN_HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(format_err(format!(
            "header says {rows}x{cols} but payload is {} bytes",
            bytes.len() - BIN_HEADER_LEN
        )));
    }
    let data = bytes[BIN_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| format_err(e.to_string()))
}
