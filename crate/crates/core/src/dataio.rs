//! Dataset loading, writing and self-replication.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Column layout of the UCI Abalone file `abalone.data` (no header row).
pub const ABALONE_COLUMNS: [&str; 9] = [
    "Sex",
    "Length",
    "Diameter",
    "Height",
    "Whole weight",
    "Shucked weight",
    "Viscera weight",
    "Shell weight",
    "Rings",
];

/// The seven continuous Abalone attributes; `Sex` is nominal and excluded.
pub const ABALONE_FEATURES: [&str; 7] = [
    "Length",
    "Diameter",
    "Height",
    "Whole weight",
    "Shucked weight",
    "Viscera weight",
    "Shell weight",
];

pub const ABALONE_LABEL: &str = "Rings";

/// Dense row-major matrix of finite feature values with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    labels: Option<Labels>,
}

/// Integer class ids plus the original label strings they stand for.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub column: String,
    pub ids: Vec<usize>,
    pub names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows; every row must have one value per feature
    /// and all values must be finite.
    pub fn from_rows<R: AsRef<[f64]>>(feature_names: Vec<String>, rows: &[R]) -> Result<Self> {
        let d = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            if let Some(component) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, component });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            feature_names,
            values,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.ids.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: labels.ids.len(),
            });
        }
        if let Some(&bad) = labels.ids.iter().find(|&&id| id >= labels.names.len()) {
            return Err(Error::InvalidParameter(format!(
                "class id {bad} has no name ({} classes)",
                labels.names.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        if self.dim() == 0 {
            0
        } else {
            self.values.len() / self.dim()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim().max(1))
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Class id per row, if the dataset is labeled.
    pub fn class_ids(&self) -> Option<&[usize]> {
        self.labels.as_ref().map(|l| l.ids.as_slice())
    }
}

/// How to read a delimited file.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Feature columns, in the order they should appear in the dataset.
    pub features: Vec<String>,
    /// Optional class-label column (any string values).
    pub label: Option<String>,
    /// Whether the first record names the columns.
    pub has_header: bool,
    /// Column names for a header-less file. When absent, columns are named
    /// by their zero-based position ("0", "1", ...).
    pub column_names: Option<Vec<String>>,
}

impl CsvOptions {
    /// Options for the original header-less UCI Abalone file.
    pub fn abalone() -> Self {
        Self {
            features: ABALONE_FEATURES.iter().map(|s| s.to_string()).collect(),
            label: Some(ABALONE_LABEL.to_string()),
            has_header: false,
            column_names: Some(ABALONE_COLUMNS.iter().map(|s| s.to_string()).collect()),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path, opts)
}

/// Reads CSV from any reader; `source` is only used in error messages.
pub fn read_csv<R: Read>(reader: R, source: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let path = source.to_path_buf();
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut next_record = || -> Result<Option<csv::StringRecord>> {
        for rec in records.by_ref() {
            let rec = rec.map_err(csv_err)?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            return Ok(Some(rec));
        }
        Ok(None)
    };

    let empty = || Error::EmptyInput {
        context: path.display().to_string(),
    };

    let mut first = next_record()?.ok_or_else(empty)?;
    let names: Vec<String> = if opts.has_header {
        let header = first.iter().map(str::to_string).collect();
        first = next_record()?.ok_or_else(empty)?;
        header
    } else if let Some(names) = &opts.column_names {
        names.clone()
    } else {
        (0..first.len()).map(|i| i.to_string()).collect()
    };

    let column = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.clone(),
                column: name.to_string(),
            })
    };
    let feature_idx = opts.features.iter().map(|f| column(f)).collect::<Result<Vec<_>>>()?;
    let label_idx = opts.label.as_deref().map(column).transpose()?;

    let mut values = Vec::new();
    let mut label_ids = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut rec = Some(first);
    while let Some(r) = rec {
        let line = r.position().map_or(0, |p| p.line());
        if r.len() != names.len() {
            return Err(Error::FieldCount {
                path: path.clone(),
                line,
                found: r.len(),
                expected: names.len(),
            });
        }
        for &j in &feature_idx {
            let cell = &r[j];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::BadCell {
                        path: path.clone(),
                        line,
                        column: names[j].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        if let Some(j) = label_idx {
            let name = &r[j];
            let id = match label_names.iter().position(|n| n == name) {
                Some(id) => id,
                None => {
                    label_names.push(name.to_string());
                    label_names.len() - 1
                }
            };
            label_ids.push(id);
        }
        rec = next_record()?;
    }

    let dataset = Dataset {
        feature_names: opts.features.clone(),
        values,
        labels: None,
    };
    match (&opts.label, label_idx) {
        (Some(column), Some(_)) => dataset.with_labels(Labels {
            column: column.clone(),
            ids: label_ids,
            names: label_names,
        }),
        _ => Ok(dataset),
    }
}

/// Writes the dataset as CSV with a header. Values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    if let Some(l) = &dataset.labels {
        header.push(&l.column);
    }
    w.write_record(&header)?;
    for (i, row) in dataset.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = &dataset.labels {
            rec.push(l.names[l.ids[i]].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Appends the dataset to itself until it holds `k` copies. Row ids of the
/// result are simply the new positions.
pub fn replicate(dataset: &Dataset, k: usize) -> Result<Dataset> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "replication factor must be >= 1, got {k}"
        )));
    }
    let labels = dataset.labels.as_ref().map(|l| Labels {
        column: l.column.clone(),
        ids: l.ids.repeat(k),
        names: l.names.clone(),
    });
    Ok(Dataset {
        feature_names: dataset.feature_names.clone(),
        values: dataset.values.repeat(k),
        labels,
    })
}
