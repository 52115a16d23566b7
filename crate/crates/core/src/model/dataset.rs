//! Tabular dataset ingestion.
//!
//! One sample per line, either dense CSV
//!
//! ```text
//! label,f1,f2,...
//! ```
//!
//! or sparse LIBSVM style with 1-based feature indices
//!
//! ```text
//! label idx:val idx:val ...
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. A file must use one
//! format throughout; a line containing `:` selects LIBSVM.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Libsvm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

fn num(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("not a number: {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, reason: format!("non-finite value {tok:?}") });
    }
    Ok(v)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |r| r.len())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if lines.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let format = if lines.iter().any(|(_, l)| l.contains(':')) {
            Format::Libsvm
        } else {
            Format::Csv
        };
        let mut labels = Vec::with_capacity(lines.len());
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(lines.len());
        let mut width = 0usize;
        for &(no, line) in &lines {
            match format {
                Format::Csv => {
                    let mut toks = line.split(',');
                    labels.push(num(toks.next().unwrap_or(""), no)?);
                    let row: Vec<(usize, f64)> = toks
                        .enumerate()
                        .map(|(j, t)| num(t, no).map(|v| (j, v)))
                        .collect::<Result<_>>()?;
                    if !rows.is_empty() && row.len() != width {
                        return Err(Error::Parse {
                            line: no,
                            reason: format!("expected {width} features, found {}", row.len()),
                        });
                    }
                    width = row.len();
                    rows.push(row);
                }
                Format::Libsvm => {
                    let mut toks = line.split_whitespace();
                    labels.push(num(toks.next().unwrap_or(""), no)?);
                    let mut row = Vec::new();
                    for t in toks {
                        let (i, v) = t.split_once(':').ok_or_else(|| Error::Parse {
                            line: no,
                            reason: format!("expected idx:val, got {t:?}"),
                        })?;
                        let i: usize = i.parse().map_err(|_| Error::Parse {
                            line: no,
                            reason: format!("bad index {i:?}"),
                        })?;
                        if i == 0 {
                            return Err(Error::Parse { line: no, reason: "indices are 1-based".into() });
                        }
                        width = width.max(i);
                        row.push((i - 1, num(v, no)?));
                    }
                    rows.push(row);
                }
            }
        }
        let features = rows
            .into_iter()
            .map(|r| {
                let mut dense = vec![0.0; width];
                for (j, v) in r {
                    dense[j] = v;
                }
                dense
            })
            .collect();
        Ok(Dataset { features, labels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Maps labels to `{0, 1}`: `label == positive` becomes 1, anything else 0.
    pub fn binarize(mut self, positive: f64) -> Self {
        for l in &mut self.labels {
            *l = if *l == positive { 1.0 } else { 0.0 };
        }
        self
    }

    /// Keeps the first `n` samples.
    pub fn truncate(mut self, n: usize) -> Self {
        self.features.truncate(n);
        self.labels.truncate(n);
        self
    }

    /// Multiplies every feature by `s` (e.g. `1/255` for pixel data).
    pub fn scale_features(mut self, s: f64) -> Self {
        for r in &mut self.features {
            for v in r {
                *v *= s;
            }
        }
        self
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        for (row, label) in self.features.iter().zip(&self.labels) {
            match format {
                Format::Csv => {
                    write!(out, "{label}").unwrap();
                    for v in row {
                        write!(out, ",{v}").unwrap();
                    }
                }
                Format::Libsvm => {
                    write!(out, "{label}").unwrap();
                    for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                        write!(out, " {}:{v}", j + 1).unwrap();
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
