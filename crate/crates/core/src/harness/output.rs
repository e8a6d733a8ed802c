//! CSV and JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(path.to_path_buf())
}

/// A header and numeric rows; missing values are written as empty fields.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(path.to_path_buf())
    }

    pub fn write_json(&self, path: &Path) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a> {
            columns: &'a [String],
            rows: &'a [Vec<Option<f64>>],
        }
        write_json(
            path,
            &Doc {
                columns: &self.header,
                rows: &self.rows,
            },
        )
    }

    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
        match format {
            Format::Csv => self.write_csv(&dir.join(format!("{stem}.csv"))),
            Format::Json => self.write_json(&dir.join(format!("{stem}.json"))),
        }
    }
}

/// `t`, the state components, then every recorded column.
pub fn trajectory_table(record: &TrajectoryRecord, state_names: &[String]) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend(state_names.iter().cloned());
    header.extend(record.columns.iter().map(|(n, _)| n.clone()));
    let rows = (0..record.times.len())
        .map(|i| {
            let mut r = vec![Some(record.times[i])];
            r.extend(record.states[i].iter().map(|v| Some(*v)));
            r.extend(record.columns.iter().map(|(_, c)| Some(c[i])));
            r
        })
        .collect();
    Table { header, rows }
}
