//! Base matrices as headerless CSV: one line per row, entries separated by
//! commas.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use scsparc_core::BaseMatrix;

use crate::error::{SimError, SimResult};

pub fn read_base_matrix(path: &Path) -> SimResult<BaseMatrix> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut entries = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(SimError::config(format!("{}: ragged row {}", path.display(), rows + 1)));
        }
        cols = Some(record.len());
        for field in &record {
            let v: f64 = field
                .parse()
                .map_err(|_| SimError::config(format!("{}: bad entry `{field}`", path.display())))?;
            entries.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| SimError::config(format!("{}: empty base matrix", path.display())))?;
    let base = BaseMatrix::new(rows, cols, entries).and_then(|b| b.check_columns().map(|_| b));
    base.map_err(|e| SimError::config(format!("{}: {e}", path.display())))
}

/// Entries use the shortest representation that reads back exactly.
pub fn write_base_matrix(path: &Path, base: &BaseMatrix) -> SimResult<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in 0..base.rows() {
        let line: Vec<String> = base.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| SimError::io(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}
