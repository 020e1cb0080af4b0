//! CSV and report files, written to a temporary name and renamed into place.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::Result;

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
/// Negative zero is written as `0`.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_f64(x),
        }
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

fn temp_name(dest: &Path) -> PathBuf {
    let mut name = dest.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    dest.with_file_name(name)
}

/// A CSV file that appears under its final name only after [`finish`](Self::finish).
pub struct AtomicCsv {
    dest: PathBuf,
    tmp: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    width: usize,
    rows: usize,
}

impl AtomicCsv {
    pub fn create<S: AsRef<str>>(dest: impl AsRef<Path>, header: &[S]) -> Result<Self> {
        let dest = dest.as_ref().to_path_buf();
        let tmp = temp_name(&dest);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(BufWriter::new(File::create(&tmp)?));
        writer.write_record(header.iter().map(|h| h.as_ref()))?;
        Ok(Self {
            dest,
            tmp,
            writer,
            width: header.len(),
            rows: 0,
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        self.writer.write_record(cells.iter().map(|c| c.render()))?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes, renames into place and returns the data row count.
    pub fn finish(self) -> Result<usize> {
        let mut inner = self.writer.into_inner().map_err(|e| e.into_error())?;
        inner.flush()?;
        inner.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&self.tmp, &self.dest)?;
        Ok(self.rows)
    }
}

pub fn write_atomic(dest: impl AsRef<Path>, contents: &str) -> Result<()> {
    let dest = dest.as_ref();
    let tmp = temp_name(dest);
    let mut f = File::create(&tmp)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, dest)?;
    Ok(())
}
