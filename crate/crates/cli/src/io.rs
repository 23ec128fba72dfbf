//! File formats: the dataset CSV, draws CSVs and hashing.
//!
//! Dataset CSV: a header `y, x1..xk, w1..wm` (any order of the covariate
//! columns, names `x<digits>` or `w<digits>`); intercepts are not stored and
//! are injected on load. Outcomes are integers; their distinct values, sorted
//! ascending, become categories `1..J` (category 1 is the highest-utility
//! band) unless the configuration lists the labels explicitly.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use lcop_core::model::{param_names, Dataset, ParamDraw};

use crate::config::ModelColumns;
use crate::error::{CliError, CliResult};

/// Render a float with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Rows of floats as CSV text under `header`.
pub fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A dataset loaded from CSV, with the bookkeeping the manifest records.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub sha256: String,
    /// `labels[j]` is the user label of internal category `j + 1`.
    pub labels: Vec<i64>,
    pub x_names: Vec<String>,
    pub w_names: Vec<String>,
}

fn column_kind(name: &str) -> Option<char> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest = chars.as_str();
    ((head == 'x' || head == 'w') && !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())).then_some(head)
}

fn select(available: &[String], wanted: Option<&Vec<String>>, block: &str) -> CliResult<Vec<usize>> {
    match wanted {
        None => Ok((0..available.len()).collect()),
        Some(names) => names
            .iter()
            .map(|n| {
                available
                    .iter()
                    .position(|a| a == n)
                    .ok_or_else(|| CliError::Validation(format!("configured {block} column '{n}' is not in the data (have {available:?})")))
            })
            .collect(),
    }
}

/// Parse a dataset CSV, keeping the covariate columns selected by `model`.
pub fn load_dataset(path: &Path, model: &ModelColumns, categories: Option<&[i64]>) -> CliResult<LoadedData> {
    let bytes = read_bytes(path)?;
    let sha256 = sha256_hex(&bytes);
    let where_ = path.display();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{where_}: unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("y") {
        return Err(CliError::Validation(format!("{where_}: first column must be 'y', found {:?}", header.first())));
    }
    let mut x_cols = Vec::new();
    let mut w_cols = Vec::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        match column_kind(name) {
            Some('x') => x_cols.push(c),
            Some('w') => w_cols.push(c),
            _ => return Err(CliError::Validation(format!("{where_}: column {} has unrecognized name '{name}' (expected x<k> or w<k>)", c + 1))),
        }
        if header[..c].contains(name) {
            return Err(CliError::Validation(format!("{where_}: duplicate column '{name}'")));
        }
    }
    let x_avail: Vec<String> = x_cols.iter().map(|&c| header[c].clone()).collect();
    let w_avail: Vec<String> = w_cols.iter().map(|&c| header[c].clone()).collect();
    let x_keep = select(&x_avail, model.x.as_ref(), "x")?;
    let w_keep = select(&w_avail, model.w.as_ref(), "w")?;

    let mut raw_y = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| CliError::Validation(format!("{where_}: line {line}: {e}")))?;
        if record.len() != header.len() {
            return Err(CliError::Validation(format!("{where_}: line {line} has {} fields, header has {}", record.len(), header.len())));
        }
        let cell = |c: usize| record.get(c).unwrap_or("");
        let y_text = cell(0);
        let y: i64 = y_text
            .parse()
            .map_err(|_| CliError::Validation(format!("{where_}: line {line}, column 'y': '{y_text}' is not an integer label")))?;
        raw_y.push(y);
        let mut row = Vec::with_capacity(header.len() - 1);
        for c in 1..header.len() {
            let text = cell(c);
            if text.is_empty() {
                return Err(CliError::Validation(format!("{where_}: line {line}, column '{}': missing value", header[c])));
            }
            let v: f64 = text
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::Validation(format!("{where_}: line {line}, column '{}': '{text}' is not a finite number", header[c])))?;
            row.push(v);
        }
        values.push(row);
    }
    let n = raw_y.len();
    if n == 0 {
        return Err(CliError::Validation(format!("{where_}: no data rows")));
    }

    let labels: Vec<i64> = match categories {
        Some(list) => {
            let distinct: BTreeSet<i64> = list.iter().copied().collect();
            if distinct.len() != list.len() {
                return Err(CliError::Validation("configured category labels contain duplicates".into()));
            }
            list.to_vec()
        }
        None => raw_y.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let mut y = Vec::with_capacity(n);
    for (i, label) in raw_y.iter().enumerate() {
        let j = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CliError::Validation(format!("{where_}: line {}, column 'y': label {label} is not among {labels:?}", i + 2)))?;
        y.push(j + 1);
    }
    if labels.len() < 3 {
        return Err(CliError::Validation(format!("{where_}: need at least 3 outcome categories, found {}", labels.len())));
    }

    // the value matrix excludes column 0 (y), hence the `- 1`
    let x = DMatrix::from_fn(n, x_keep.len() + 1, |i, c| if c == 0 { 1.0 } else { values[i][x_cols[x_keep[c - 1]] - 1] });
    let w = DMatrix::from_fn(n, w_keep.len() + 1, |i, c| if c == 0 { 1.0 } else { values[i][w_cols[w_keep[c - 1]] - 1] });
    let dataset = Dataset::new(y, x, w, labels.len()).map_err(|e| CliError::Validation(format!("{where_}: {e}")))?;
    Ok(LoadedData {
        dataset,
        sha256,
        labels,
        x_names: x_keep.iter().map(|&k| x_avail[k].clone()).collect(),
        w_names: w_keep.iter().map(|&k| w_avail[k].clone()).collect(),
    })
}

/// Dataset CSV text (intercepts dropped, categories written as `1..J`).
pub fn dataset_csv(data: &Dataset) -> String {
    let (q, p) = (data.q(), data.p());
    let mut header = vec!["y".to_string()];
    header.extend((1..q).map(|k| format!("x{k}")));
    header.extend((1..p).map(|k| format!("w{k}")));
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..data.n() {
        let mut cells = vec![data.y()[i].to_string()];
        cells.extend((1..q).map(|k| fmt_f64(data.x()[(i, k)])));
        cells.extend((1..p).map(|k| fmt_f64(data.w()[(i, k)])));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Draws CSV text, one row per draw with columns named by [`param_names`].
pub fn draws_csv(draws: &[ParamDraw], p: usize, q: usize, n_categories: usize) -> String {
    csv_text(&param_names(p, q, n_categories), draws.iter().map(ParamDraw::flatten))
}

/// Parse a numeric CSV with a header into its column names and rows.
pub fn read_numeric_csv(path: &Path, bytes: &[u8]) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let where_ = path.display();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{where_}: unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| CliError::Validation(format!("{where_}: line {line}: {e}")))?;
        let row = record
            .iter()
            .zip(&header)
            .map(|(text, name)| {
                text.parse::<f64>()
                    .map_err(|_| CliError::Validation(format!("{where_}: line {line}, column '{name}': '{text}' is not a number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(CliError::Validation(format!("{where_}: line {line} has {} fields, header has {}", row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Parse a draws CSV written by `fit` back into parameter draws.
pub fn parse_draws(path: &Path, bytes: &[u8], p: usize, q: usize, n_categories: usize) -> CliResult<Vec<ParamDraw>> {
    let (header, rows) = read_numeric_csv(path, bytes)?;
    let expected = param_names(p, q, n_categories);
    if header != expected {
        return Err(CliError::Validation(format!("{}: columns {header:?} do not match the model's parameters {expected:?}", path.display())));
    }
    rows.iter().map(|r| ParamDraw::unflatten(r, p, q, n_categories).map_err(CliError::from)).collect()
}
