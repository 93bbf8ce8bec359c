//! Dataset CSV format.
//!
//! UTF-8, comma separated, one header row. Columns `f0..f{d-1}` hold
//! decimal features, `candidates` holds zero-based class indices joined by
//! `|`, and the optional `label` column holds the zero-based true class.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::dataset::PartialDataset;
use crate::error::{Error, Result};
use crate::linalg_nn::Matrix;

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Class count; inferred as `max index + 1` when absent.
    pub num_classes: Option<usize>,
    /// Z-score every feature column after loading.
    pub normalize: bool,
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<PartialDataset> {
    let path = path.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_to_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_to_error(path, e))?.clone();

    let mut feature_cols = Vec::new();
    let mut cand_col = None;
    let mut label_col = None;
    for (c, name) in headers.iter().enumerate() {
        let name = name.trim();
        match name {
            "candidates" => cand_col = Some(c),
            "label" => label_col = Some(c),
            _ => match name.strip_prefix('f').and_then(|s| s.parse::<usize>().ok()) {
                Some(k) => feature_cols.push((k, c)),
                None => return Err(parse_err(1, format!("unexpected column `{name}`"))),
            },
        }
    }
    feature_cols.sort_unstable();
    if feature_cols.iter().enumerate().any(|(i, (k, _))| i != *k) {
        return Err(parse_err(1, "feature columns must be f0..f{d-1}".into()));
    }
    let cand_col = cand_col.ok_or_else(|| parse_err(1, "missing `candidates` column".into()))?;

    let d = feature_cols.len();
    let mut data = Vec::new();
    let mut cand_lists: Vec<Vec<usize>> = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_to_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for &(k, c) in &feature_cols {
            let raw = record.get(c).unwrap_or("").trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("f{k}: `{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("f{k}: non-finite value")));
            }
            data.push(v);
        }
        let raw = record.get(cand_col).unwrap_or("").trim();
        let cands = raw
            .split('|')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("candidates: `{raw}` is malformed")))
            })
            .collect::<Result<Vec<_>>>()?;
        cand_lists.push(cands);
        if let Some(lc) = label_col {
            let raw = record.get(lc).unwrap_or("").trim();
            let y = raw
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("label: `{raw}` is not a class index")))?;
            labels.push(y);
        }
    }

    let cand_lists_len = cand_lists.len();
    let inferred = cand_lists
        .iter()
        .flatten()
        .chain(&labels)
        .max()
        .map_or(0, |m| m + 1);
    let m = match opts.num_classes {
        Some(m) if m < inferred => {
            return Err(Error::Validation(format!(
                "class index {} out of range for {m} classes",
                inferred - 1
            )))
        }
        Some(m) => m,
        None => inferred,
    };
    let candidates = cand_lists
        .into_iter()
        .map(|list| {
            let mut mask = vec![false; m];
            list.into_iter().for_each(|k| mask[k] = true);
            mask
        })
        .collect();

    let n = cand_lists_len;
    let mut features = Matrix::from_vec(n, d, data)?;
    if opts.normalize {
        features.standardize_columns();
    }
    PartialDataset::new(features, candidates, label_col.map(|_| labels), m)
}

/// Headerless CSV whose first column is the class label (offset by
/// `label_offset`, e.g. 1 for one-based files) followed by the features.
/// Candidate sets are the true-label singletons.
pub fn load_label_first(path: impl AsRef<Path>, label_offset: usize) -> Result<PartialDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_to_error(path, e))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_to_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut fields = record.iter();
        let raw = fields.next().unwrap_or("").trim();
        let y: usize = raw.parse().map_err(|_| err(format!("bad label `{raw}`")))?;
        let y = y
            .checked_sub(label_offset)
            .ok_or_else(|| err(format!("label {y} below offset {label_offset}")))?;
        let row = fields
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("bad feature `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        labels.push(y);
    }
    let m = labels.iter().max().map_or(0, |m| m + 1);
    PartialDataset::supervised(Matrix::from_rows(&rows)?, labels, m)
}

pub fn write_csv(ds: &PartialDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_to(ds, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(ds: &PartialDataset, w: &mut W) -> std::io::Result<()> {
    let labels = ds.true_labels();
    let mut header: Vec<String> = (0..ds.dim()).map(|k| format!("f{k}")).collect();
    header.push("candidates".into());
    if labels.is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut fields: Vec<String> = ds.feature(i).iter().map(|v| format!("{v}")).collect();
        let cands: Vec<String> = ds
            .candidates(i)
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k.to_string())
            .collect();
        fields.push(cands.join("|"));
        if let Some(l) = labels {
            fields.push(l[i].to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

fn csv_to_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}
