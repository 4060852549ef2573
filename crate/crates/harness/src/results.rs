//! Result rows, the CSV appender and the JSON run manifest.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

pub const CSV_FORMAT_VERSION: u32 = 1;

/// One measurement. Column order is the CSV contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub digest: String,
    pub launch_power_dbm: f64,
    pub receiver: String,
    pub metric: String,
    pub value: f64,
    /// Samples behind the value (bits, symbols or grid points).
    pub count: u64,
    pub seed: u64,
    /// BP iterations per decoder pass, for post-FEC metrics.
    pub bp_iters: Option<usize>,
    /// Metric-specific abscissa: code rate for code-family rows, `I_in`
    /// for EXIT rows, pass index for turbo pass rows.
    pub param: Option<f64>,
}

impl ResultRow {
    pub fn new(digest: &str, power: f64, receiver: &str, metric: &str, value: f64, count: u64, seed: u64) -> Self {
        Self {
            digest: digest.to_string(),
            launch_power_dbm: power,
            receiver: receiver.to_string(),
            metric: metric.to_string(),
            value,
            count,
            seed,
            bp_iters: None,
            param: None,
        }
    }

    pub fn with_bp(mut self, iters: usize) -> Self {
        self.bp_iters = Some(iters);
        self
    }

    pub fn with_param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }
}

/// Appends rows to a CSV file, writing the header only for a new file.
pub struct ResultSink {
    path: PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl ResultSink {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, rows: &[ResultRow]) -> Result<()> {
        for r in rows {
            self.writer.serialize(r)?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<ResultRow>, csv::Error> = rdr.deserialize().collect();
    Ok(rows?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub csv_format_version: u32,
    pub results_csv: PathBuf,
    pub rows: usize,
    pub threads: usize,
    pub config: serde_json::Value,
    pub extra: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_round_trips_and_keeps_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let a = ResultRow::new("d", -1.0, "le", "q_db", 7.25, 100, 3);
        let b = ResultRow::new("d", 0.5, "dnn_teq", "post_ldpc_ber", 1e-5, 4800, 3).with_bp(4);
        ResultSink::open(&path).unwrap().append(&[a.clone()]).unwrap();
        ResultSink::open(&path).unwrap().append(&[b.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("digest").count(), 1);
        assert_eq!(read_rows(&path).unwrap(), vec![a, b]);
    }
}
