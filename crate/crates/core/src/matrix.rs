//! Window × feature tables and their CSV encoding.
//!
//! CSV layout: header `start_time,label,<feature names...>`, then one row per
//! window. Only raw (un-normalized) matrices are written to disk; the
//! normalization parameters travel in the selection report and model file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Feature, FeatureVector};
use crate::trace_io::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParam {
    pub feature: String,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub start_times: Vec<f64>,
    pub labels: Vec<Label>,
    pub rows: Vec<Vec<f64>>,
    /// Present iff the columns have been passed through the robust sigmoid.
    pub norm_params: Option<Vec<NormParam>>,
}

/// What was discarded while assembling a matrix from feature vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        start_times: Vec<f64>,
        labels: Vec<Label>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if start_times.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::LengthMismatch(rows.len(), labels.len()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::LengthMismatch(bad.len(), feature_names.len()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::MalformedData("non-finite feature value".into()));
        }
        Ok(FeatureMatrix {
            feature_names,
            start_times,
            labels,
            rows,
            norm_params: None,
        })
    }

    /// Assemble rows from per-window vectors. Unusable windows are dropped,
    /// then any column still holding a missing value is dropped.
    pub fn from_vectors(
        meta: &[(f64, Label)],
        vectors: &[FeatureVector],
        features: &[Feature],
    ) -> Result<(FeatureMatrix, BuildReport)> {
        let mut report = BuildReport::default();
        let usable: Vec<usize> = (0..vectors.len())
            .filter(|&i| !vectors[i].unusable)
            .collect();
        report.dropped_rows = vectors.len() - usable.len();
        if usable.is_empty() {
            return Err(Error::NoUsableWindows);
        }
        let keep_cols: Vec<Feature> = features
            .iter()
            .copied()
            .filter(|&f| {
                let complete = usable.iter().all(|&i| vectors[i].get(f).is_some());
                if !complete {
                    report.dropped_columns.push(f.name().to_string());
                }
                complete
            })
            .collect();
        let rows = usable
            .iter()
            .map(|&i| keep_cols.iter().map(|&f| vectors[i].get(f).unwrap()).collect())
            .collect();
        let m = FeatureMatrix::new(
            keep_cols.iter().map(|f| f.name().to_string()).collect(),
            usable.iter().map(|&i| meta[i].0).collect(),
            usable.iter().map(|&i| meta[i].1).collect(),
            rows,
        )?;
        Ok((m, report))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_params.is_some()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingFeature(name.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let events = self.labels.iter().filter(|l| **l == Label::Event).count();
        let noise = self.labels.iter().filter(|l| **l == Label::Noise).count();
        (events, noise)
    }

    /// Keep only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let norm_params = self
            .norm_params
            .as_ref()
            .map(|p| idx.iter().map(|&j| p[j].clone()).collect());
        Ok(FeatureMatrix {
            feature_names: names.to_vec(),
            start_times: self.start_times.clone(),
            labels: self.labels.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            norm_params,
        })
    }

    pub fn subset_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            start_times: rows.iter().map(|&i| self.start_times[i]).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            norm_params: self.norm_params.clone(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["start_time".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        wtr.write_record(&header)?;
        for ((t, l), r) in self.start_times.iter().zip(&self.labels).zip(&self.rows) {
            let mut rec = vec![format!("{t:?}"), l.as_str().to_string()];
            rec.extend(r.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| Error::MalformedData(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "start_time" || header[1] != "label" {
            return Err(Error::MalformedHeader(
                "feature matrix header must start with start_time,label".into(),
            ));
        }
        let names = header[2..].to_vec();
        let (mut times, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::MalformedData(format!("row {}: {s:?}", i + 2)))
            };
            times.push(num(&rec[0])?);
            labels.push(Label::parse(&rec[1])?);
            rows.push(rec.iter().skip(2).map(num).collect::<Result<Vec<_>>>()?);
        }
        FeatureMatrix::new(names, times, labels, rows)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<FeatureMatrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FeatureMatrix::from_csv(&text)
    }
}
