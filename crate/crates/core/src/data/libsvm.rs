//! LIBSVM / SVMlight text format.
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ... [# comment]
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. Absent
//! indices are zero. Blank lines and `#` comment lines are ignored.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::Dataset;
use crate::error::{OrfError, Result};
use crate::point::LabeledPoint;

#[derive(Debug, Clone, Default)]
pub struct LibsvmOptions {
    /// Pad every vector to at least this many features.
    pub min_dims: usize,
    /// Use this label map instead of deriving one from the file. Labels not
    /// in the map are a parse error. Typical for test splits.
    pub label_map: Option<Vec<f64>>,
}

struct Row {
    label: f64,
    features: Vec<(usize, f64)>,
}

fn parse_error(line: usize, message: impl Into<String>) -> OrfError {
    OrfError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_row(text: &str, line: usize) -> Result<Option<Row>> {
    let body = text.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let mut tokens = body.split_ascii_whitespace();
    let label_tok = tokens.next().expect("non-empty body has a token");
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_error(line, format!("label `{label_tok}` is not a number")))?;
    if !label.is_finite() {
        return Err(parse_error(
            line,
            format!("label `{label_tok}` is not finite"),
        ));
    }
    let mut features = Vec::new();
    let mut prev = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_error(line, format!("feature `{tok}` is not index:value")))?;
        let idx: usize = idx.parse().map_err(|_| {
            parse_error(
                line,
                format!("feature index `{idx}` is not a positive integer"),
            )
        })?;
        if idx == 0 {
            return Err(parse_error(line, "feature indices are 1-based"));
        }
        if idx <= prev {
            return Err(parse_error(
                line,
                format!("feature index {idx} does not increase after {prev}"),
            ));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_error(line, format!("feature value `{val}` is not a number")))?;
        if !val.is_finite() {
            return Err(parse_error(line, format!("feature {idx} is not finite")));
        }
        prev = idx;
        features.push((idx, val));
    }
    Ok(Some(Row { label, features }))
}

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_libsvm_with(reader, &LibsvmOptions::default())
}

pub fn parse_libsvm_with<R: BufRead>(reader: R, opts: &LibsvmOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| parse_error(line_no, e.to_string()))?;
        if let Some(row) = parse_row(&text, line_no)? {
            rows.push((line_no, row));
        }
    }
    if rows.is_empty() {
        return Err(OrfError::EmptyDataset);
    }
    let dims = rows
        .iter()
        .filter_map(|(_, r)| r.features.last().map(|&(i, _)| i))
        .max()
        .unwrap_or(0)
        .max(opts.min_dims);
    if dims == 0 {
        return Err(OrfError::Parse {
            line: rows[0].0,
            message: "no features in any line".into(),
        });
    }
    let label_map = match &opts.label_map {
        Some(map) => map.clone(),
        None => {
            let mut labels: Vec<f64> = rows.iter().map(|(_, r)| r.label).collect();
            labels.sort_by(f64::total_cmp);
            labels.dedup();
            labels
        }
    };
    let points = rows
        .into_iter()
        .map(|(line, row)| {
            let y = label_map
                .binary_search_by(|v| v.total_cmp(&row.label))
                .map_err(|_| parse_error(line, format!("label {} not in label map", row.label)))?;
            let mut x = vec![0.0; dims];
            for (idx, val) in row.features {
                x[idx - 1] = val;
            }
            Ok(LabeledPoint { x, y })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        points,
        dims,
        classes: label_map.len(),
        label_map,
    })
}

pub fn parse_libsvm_file(path: &Path, opts: &LibsvmOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| OrfError::io(path, e))?;
    parse_libsvm_with(BufReader::new(file), opts)
}

/// Render `ds` with original labels, writing only nonzero features. The
/// first line always carries index `dims` so the width survives a reparse.
pub fn write_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for (row, p) in ds.points.iter().enumerate() {
        write!(out, "{}", ds.label_map[p.y]).unwrap();
        for (i, &v) in p.x.iter().enumerate() {
            if v != 0.0 || (row == 0 && i + 1 == ds.dims) {
                write!(out, " {}:{}", i + 1, v).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
