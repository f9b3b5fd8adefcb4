//! Time series output: one CSV row per sampling instant.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the series. Tip quantities are NaN when no interface is found
/// or too few samples exist for a velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub time: f64,
    pub tip_position: f64,
    pub tip_velocity: f64,
    pub conserved_integral: f64,
}

pub struct SeriesWriter<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
}

impl SeriesWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(SeriesWriter {
            inner: csv::Writer::from_writer(f),
            path: path.to_path_buf(),
        })
    }

    /// Appends to an existing series, writing the header only to a new file.
    pub fn append(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path)
            .map(|m| m.len() == 0)
            .unwrap_or(true);
        let f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(SeriesWriter {
            inner: csv::WriterBuilder::new().has_headers(fresh).from_writer(f),
            path: path.to_path_buf(),
        })
    }
}

impl<W: Write> SeriesWriter<W> {
    pub fn from_writer(w: W) -> Self {
        SeriesWriter {
            inner: csv::Writer::from_writer(w),
            path: PathBuf::from("<memory>"),
        }
    }

    pub fn write(&mut self, row: &SeriesRow) -> Result<()> {
        self.inner.serialize(row).map_err(|e| self.err(e))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path;
        self.inner
            .into_inner()
            .map_err(|e| Error::io(&path, std::io::Error::other(e.to_string())))
    }

    fn err(&self, e: csv::Error) -> Error {
        Error::io(&self.path, std::io::Error::other(e.to_string()))
    }
}

/// Reads a series file back.
pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::io(path, std::io::Error::other(e.to_string()))))
        .collect()
}

/// Number of rows a run to `t_end` sampled every `cadence` produces,
/// counting the initial state.
pub fn expected_rows(t_end: f64, cadence: f64) -> usize {
    (t_end / cadence + 1e-9).floor() as usize + 1
}
