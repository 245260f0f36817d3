//! Matrix Market reader and writer for general real and complex matrices in
//! `array` and `coordinate` layouts.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, C64};

#[derive(Debug, Error)]
pub enum MtxError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },

    #[error("line {line}: unsupported symmetry class {symmetry:?} (only \"general\")")]
    UnsupportedSymmetry { line: usize, symmetry: String },

    #[error("line {line}: unsupported field {field:?} (expected real, integer or complex)")]
    UnsupportedField { line: usize, field: String },

    #[error("line {line}: malformed size line: {detail}")]
    MalformedSize { line: usize, detail: String },

    #[error("line {line}: non-numeric token {token:?}")]
    NonNumeric { line: usize, token: String },

    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },

    #[error("line {line}: index ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfRange {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("line {line}: expected {expected} tokens, found {found}")]
    TokenCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MtxLayout {
    #[default]
    Array,
    Coordinate,
}

impl std::str::FromStr for MtxLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "array" => Ok(Self::Array),
            "coordinate" => Ok(Self::Coordinate),
            other => Err(format!("unknown layout {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Header {
    layout: MtxLayout,
    complex: bool,
}

fn parse_header(line_no: usize, line: &str) -> Result<Header, MtxError> {
    let malformed = |detail: &str| MtxError::MalformedHeader {
        line: line_no,
        detail: detail.to_string(),
    };
    let mut words = line.split_whitespace();
    if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("%%MatrixMarket")) {
        return Err(malformed("first line must start with %%MatrixMarket"));
    }
    if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("matrix")) {
        return Err(malformed("object must be \"matrix\""));
    }
    let layout = match words.next().map(str::to_ascii_lowercase).as_deref() {
        Some("array") => MtxLayout::Array,
        Some("coordinate") => MtxLayout::Coordinate,
        Some(other) => return Err(malformed(&format!("unknown format {other:?}"))),
        None => return Err(malformed("missing format")),
    };
    let complex = match words.next().map(str::to_ascii_lowercase) {
        Some(f) if f == "real" || f == "integer" => false,
        Some(f) if f == "complex" => true,
        Some(field) => return Err(MtxError::UnsupportedField { line: line_no, field }),
        None => return Err(malformed("missing field")),
    };
    match words.next().map(str::to_ascii_lowercase) {
        Some(s) if s == "general" => {}
        Some(symmetry) => return Err(MtxError::UnsupportedSymmetry { line: line_no, symmetry }),
        None => return Err(malformed("missing symmetry")),
    }
    if let Some(extra) = words.next() {
        return Err(malformed(&format!("unexpected trailing token {extra:?}")));
    }
    Ok(Header { layout, complex })
}

fn parse_usize(line: usize, token: &str) -> Result<usize, MtxError> {
    token.parse().map_err(|_| MtxError::NonNumeric {
        line,
        token: token.to_string(),
    })
}

fn parse_f64(line: usize, token: &str) -> Result<f64, MtxError> {
    let v: f64 = token.parse().map_err(|_| MtxError::NonNumeric {
        line,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(MtxError::NonFinite { line });
    }
    Ok(v)
}

fn parse_value(line: usize, tokens: &[&str], complex: bool) -> Result<C64, MtxError> {
    let re = parse_f64(line, tokens[0])?;
    let im = if complex { parse_f64(line, tokens[1])? } else { 0.0 };
    Ok(C64::new(re, im))
}

/// Parses Matrix Market text. Duplicate coordinate entries are summed.
pub fn parse_matrix<R: Read>(reader: R) -> Result<Matrix, MtxError> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let io_err = |source| MtxError::Io {
        path: "<input>".into(),
        source,
    };

    let (first_no, first) = match lines.next() {
        Some((n, l)) => (n, l.map_err(io_err)?),
        None => {
            return Err(MtxError::MalformedHeader {
                line: 1,
                detail: "empty input".into(),
            })
        }
    };
    let header = parse_header(first_no, &first)?;

    // Remaining non-comment, non-blank lines as (line number, tokens).
    let mut data = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        data.push((no, trimmed.split_whitespace().map(str::to_string).collect::<Vec<_>>()));
    }
    let mut data = data.into_iter();

    let (size_no, size) = data.next().ok_or(MtxError::MalformedSize {
        line: first_no + 1,
        detail: "missing size line".into(),
    })?;
    let expected_size_tokens = match header.layout {
        MtxLayout::Array => 2,
        MtxLayout::Coordinate => 3,
    };
    if size.len() != expected_size_tokens {
        return Err(MtxError::MalformedSize {
            line: size_no,
            detail: format!("expected {expected_size_tokens} integers, found {}", size.len()),
        });
    }
    let rows = parse_usize(size_no, &size[0])?;
    let cols = parse_usize(size_no, &size[1])?;
    let value_tokens = if header.complex { 2 } else { 1 };
    let mut out = Matrix::zeros(rows, cols);

    match header.layout {
        MtxLayout::Array => {
            let expected = rows * cols;
            let mut found = 0;
            for (no, tokens) in data {
                if tokens.len() != value_tokens {
                    return Err(MtxError::TokenCount {
                        line: no,
                        expected: value_tokens,
                        found: tokens.len(),
                    });
                }
                if found == expected {
                    return Err(MtxError::EntryCount {
                        expected,
                        found: found + 1,
                    });
                }
                let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
                // Column-major order.
                out[(found % rows, found / rows)] = parse_value(no, &refs, header.complex)?;
                found += 1;
            }
            if found != expected {
                return Err(MtxError::EntryCount { expected, found });
            }
        }
        MtxLayout::Coordinate => {
            let expected = parse_usize(size_no, &size[2])?;
            let mut found = 0;
            for (no, tokens) in data {
                if tokens.len() != 2 + value_tokens {
                    return Err(MtxError::TokenCount {
                        line: no,
                        expected: 2 + value_tokens,
                        found: tokens.len(),
                    });
                }
                let row = parse_usize(no, &tokens[0])?;
                let col = parse_usize(no, &tokens[1])?;
                if row == 0 || col == 0 || row > rows || col > cols {
                    return Err(MtxError::OutOfRange {
                        line: no,
                        row,
                        col,
                        rows,
                        cols,
                    });
                }
                let refs: Vec<&str> = tokens[2..].iter().map(String::as_str).collect();
                out[(row - 1, col - 1)] += parse_value(no, &refs, header.complex)?;
                found += 1;
            }
            if found != expected {
                return Err(MtxError::EntryCount { expected, found });
            }
        }
    }
    Ok(out)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix, MtxError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| MtxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix(file).map_err(|e| match e {
        MtxError::Io { source, .. } => MtxError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

fn write_value<W: Write>(w: &mut W, z: C64, complex: bool) -> io::Result<()> {
    if complex {
        write!(w, "{:.16e} {:.16e}", z.re, z.im)
    } else {
        write!(w, "{:.16e}", z.re)
    }
}

/// Writes `m` as Matrix Market; the field is `complex` whenever any entry has
/// a nonzero imaginary part. Values carry 17 significant digits.
pub fn format_matrix<W: Write>(m: &Matrix, layout: MtxLayout, mut w: W) -> io::Result<()> {
    let complex = m.has_nonzero_imag();
    let field = if complex { "complex" } else { "real" };
    let (rows, cols) = m.shape();
    match layout {
        MtxLayout::Array => {
            writeln!(w, "%%MatrixMarket matrix array {field} general")?;
            writeln!(w, "{rows} {cols}")?;
            for j in 0..cols {
                for i in 0..rows {
                    write_value(&mut w, m[(i, j)], complex)?;
                    writeln!(w)?;
                }
            }
        }
        MtxLayout::Coordinate => {
            let entries: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| (0..rows).map(move |i| (i, j)))
                .filter(|&(i, j)| m[(i, j)] != C64::new(0.0, 0.0))
                .collect();
            writeln!(w, "%%MatrixMarket matrix coordinate {field} general")?;
            writeln!(w, "{rows} {cols} {}", entries.len())?;
            for (i, j) in entries {
                write!(w, "{} {} ", i + 1, j + 1)?;
                write_value(&mut w, m[(i, j)], complex)?;
                writeln!(w)?;
            }
        }
    }
    w.flush()
}

pub fn write_matrix(m: &Matrix, path: impl AsRef<Path>, layout: MtxLayout) -> Result<(), MtxError> {
    let path = path.as_ref();
    let io_err = |source| MtxError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    format_matrix(m, layout, io::BufWriter::new(file)).map_err(io_err)
}
