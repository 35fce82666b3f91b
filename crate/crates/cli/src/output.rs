//! CSV files with a leading `# key=value` metadata block.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(meta: Vec<(String, String)>, header: &[&str]) -> Self {
        Self {
            meta,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `table` to `dir/file_name`. Numbers use the shortest representation
/// that round-trips, so repeated runs give identical bytes.
pub fn write_csv(dir: &Path, file_name: &str, table: &Table) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(file_name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut out = BufWriter::new(file);
    for (k, v) in &table.meta {
        writeln!(out, "# {k}={v}").map_err(io_err(&path))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.clone(),
        source: e.into(),
    };
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}
