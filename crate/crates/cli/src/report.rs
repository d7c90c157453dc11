//! Output files of one run. Everything is written from the calling thread in
//! a fixed order, so identical results give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use recursim::Estimate;

use crate::CliError;

/// Shortest decimal form that reads back to the same `f64`.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Serialize)]
pub(crate) struct SummaryRow {
    pub measure: String,
    pub mean: f64,
    pub variance: f64,
    pub ci95: [f64; 2],
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ties: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unstable: Option<bool>,
}

impl SummaryRow {
    pub fn new(measure: String, e: &Estimate, seed: u64) -> Self {
        let (lo, hi) = e.interval();
        Self {
            measure,
            mean: e.mean,
            variance: e.variance,
            ci95: [lo, hi],
            replications: e.replications,
            seed,
            method: None,
            estimator: None,
            ties: None,
            trend: None,
            unstable: None,
        }
    }

    pub fn with_method(mut self, method: &'static str) -> Self {
        self.method = Some(method);
        self
    }

    pub fn with_estimator(mut self, estimator: &'static str, ties: Option<u64>) -> Self {
        self.estimator = Some(estimator);
        self.ties = ties;
        self
    }

    pub fn with_trend(mut self, trend: f64, unstable: bool) -> Self {
        self.trend = Some(trend);
        self.unstable = Some(unstable);
        self
    }

    pub fn extra_columns(&self) -> Vec<&'static str> {
        let mut cols = Vec::new();
        if self.method.is_some() {
            cols.push("method");
        }
        if self.estimator.is_some() {
            cols.extend(["estimator", "ties"]);
        }
        if self.trend.is_some() {
            cols.extend(["trend", "unstable"]);
        }
        cols
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut row = vec![
            self.measure.clone(),
            num(self.mean),
            num(self.variance),
            num(self.ci95[0]),
            num(self.ci95[1]),
            self.replications.to_string(),
        ];
        if let Some(m) = self.method {
            row.push(m.into());
        }
        if let Some(e) = self.estimator {
            row.push(e.into());
            row.push(self.ties.map(|t| t.to_string()).unwrap_or_default());
        }
        if let (Some(t), Some(u)) = (self.trend, self.unstable) {
            row.push(num(t));
            row.push(u.to_string());
        }
        row
    }
}

pub(crate) struct Report {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub summary: Vec<SummaryRow>,
}

impl Report {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            summary: Vec::new(),
        })
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
        w.write_record(header).map_err(csv_error)?;
        for r in rows {
            w.write_record(&r).map_err(csv_error)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn print_summary(&self) {
        for r in &self.summary {
            println!(
                "{:<14} {:>14.6} ± {:<12.6} (R = {})",
                r.measure,
                r.mean,
                (r.ci95[1] - r.ci95[0]) / 2.0,
                r.replications
            );
        }
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}
