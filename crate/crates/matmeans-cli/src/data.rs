//! CSV ingestion: a rectangular numeric table, one row per block, with an
//! optional header row (auto-detected by a non-numeric first row).

use std::fmt;
use std::path::Path;

use matmeans::ModelData;
use nalgebra::DMatrix;

#[derive(Debug)]
pub struct IngestError {
    pub message: String,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for IngestError {}

fn fail(message: impl Into<String>) -> IngestError {
    IngestError { message: message.into() }
}

pub fn ingest_csv(path: &Path) -> Result<ModelData, IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
    ingest_csv_text(&text)
}

pub fn ingest_csv_text(text: &str) -> Result<ModelData, IngestError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    // Header detection: if any cell of the first row is non-numeric, treat it
    // as column names.
    if let Some((_, first)) = lines.peek() {
        let is_header = first.split(',').any(|c| c.trim().parse::<f64>().is_err());
        if is_header {
            lines.next();
        }
    }

    let mut width: Option<usize> = None;
    for (lineno, line) in lines {
        let mut row = Vec::new();
        for (col, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                fail(format!(
                    "row {}, column {}: cannot parse `{}` as a number",
                    lineno + 1,
                    col + 1,
                    cell.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(fail(format!(
                    "row {}, column {}: non-finite value",
                    lineno + 1,
                    col + 1
                )));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(fail(format!(
                    "row {}: expected {} columns, got {} (ragged file)",
                    lineno + 1,
                    w,
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }

    let m = rows.len();
    let k = width.unwrap_or(0);
    if m == 0 {
        return Err(fail("no data rows"));
    }
    if k < 2 {
        return Err(fail(format!(
            "block dimension k must be >= 2, got {k} column(s)"
        )));
    }
    let x = DMatrix::from_fn(m, k, |i, j| rows[i][j]);
    ModelData::new(x).map_err(|e| fail(e.to_string()))
}
