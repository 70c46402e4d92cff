//! svmlight / libsvm text format.
//!
//! ```text
//! # optional comment lines
//! +1 1:0.5 7:2.0
//! -1 3:1.25
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. Labels may be
//! `+1`/`1`/`-1`, or `0`/`1` in which case `0` is read as `-1`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CscMatrix, Dataset};
use crate::error::{Error, ParseErrorKind, Result};

pub fn load_svmlight(path: impl AsRef<Path>) -> Result<Dataset> {
    load_svmlight_with_dim(path, None)
}

/// Loads a file, forcing the feature count to `dim` when given.
pub fn load_svmlight_with_dim(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_svmlight(BufReader::new(file), dim).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Convention {
    Unknown,
    MinusOne,
    Zero,
}

pub fn parse_svmlight<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut max_idx = 0usize;
    let mut convention = Convention::Unknown;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line,
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label = parse_label(label_tok).map_err(|k| Error::parse(lineno, k))?;
        let label = match label {
            RawLabel::Plus => 1.0,
            RawLabel::Minus | RawLabel::Zero => {
                let seen = if label == RawLabel::Zero {
                    Convention::Zero
                } else {
                    Convention::MinusOne
                };
                if convention != Convention::Unknown && convention != seen {
                    return Err(Error::parse(lineno, ParseErrorKind::MixedLabelConventions));
                }
                convention = seen;
                -1.0
            }
        };
        let row = labels.len();
        labels.push(label);

        let mut prev = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, ParseErrorKind::BadToken(tok.into())))?;
            let idx: usize = idx_s
                .parse()
                .ok()
                .filter(|&i| i > 0)
                .ok_or_else(|| Error::parse(lineno, ParseErrorKind::BadIndex(idx_s.into())))?;
            if idx == prev {
                return Err(Error::parse(lineno, ParseErrorKind::DuplicateIndex(idx)));
            }
            if idx < prev {
                return Err(Error::parse(
                    lineno,
                    ParseErrorKind::NonIncreasingIndex { prev, idx },
                ));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(Error::parse(
                        lineno,
                        ParseErrorKind::IndexBeyondDimension { idx, dim: d },
                    ));
                }
            }
            let val: f64 = val_s
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, ParseErrorKind::NonFinite(val_s.into())))?;
            prev = idx;
            max_idx = max_idx.max(idx);
            triplets.push((row, idx - 1, label * val));
        }
    }

    if convention == Convention::Zero {
        log::warn!("labels use the 0/1 convention; reading 0 as -1");
    }
    let p = dim.unwrap_or(max_idx);
    let xbar = CscMatrix::from_triplets(labels.len(), p, &triplets);
    Dataset::from_folded(labels, xbar)
}

#[derive(Clone, Copy, PartialEq)]
enum RawLabel {
    Plus,
    Minus,
    Zero,
}

fn parse_label(tok: &str) -> std::result::Result<RawLabel, ParseErrorKind> {
    match tok.parse::<f64>() {
        Ok(v) if v == 1.0 => Ok(RawLabel::Plus),
        Ok(v) if v == -1.0 => Ok(RawLabel::Minus),
        Ok(v) if v == 0.0 => Ok(RawLabel::Zero),
        _ => Err(ParseErrorKind::BadLabel(tok.into())),
    }
}

/// Writes the raw (unfolded) data with `+1`/`-1` labels. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_svmlight<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    let rows = ds.xbar().to_rows();
    for (row, &b) in rows.iter().zip(ds.labels()) {
        write!(out, "{}", if b > 0.0 { "+1" } else { "-1" })?;
        for &(j, v) in row {
            write!(out, " {}:{}", j + 1, b * v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
