//! On-disk formats: the chain CSV and flat key-value report records.
//!
//! Chain file: one row per saved draw, header row first. Columns are
//! theta_1_1..theta_m_k, beta_1..beta_k, v_1_1..v_k_k (full k x k block,
//! mirrored from the upper triangle), lambda (empty when absent) and
//! attempts. Values print in shortest round-trip form, so re-reading a file
//! reproduces the in-memory numbers exactly.

use std::fmt::Write as _;
use std::path::Path;

use matmeans::samplers::{ChainOutput, VUpdater};
use matmeans::ChainState;
use nalgebra::{DMatrix, DVector};

use crate::data::IngestError;

pub fn chain_header(m: usize, k: usize) -> String {
    let mut cols = Vec::new();
    for i in 1..=m {
        for j in 1..=k {
            cols.push(format!("theta_{i}_{j}"));
        }
    }
    for j in 1..=k {
        cols.push(format!("beta_{j}"));
    }
    for i in 1..=k {
        for j in 1..=k {
            cols.push(format!("v_{i}_{j}"));
        }
    }
    cols.push("lambda".into());
    cols.push("attempts".into());
    cols.join(",")
}

pub fn write_chain(output: &ChainOutput) -> String {
    let mut out = String::new();
    if let Some(first) = output.draws.first() {
        out.push_str(&chain_header(first.m(), first.k()));
        out.push('\n');
    }
    for (draw, attempts) in output.draws.iter().zip(&output.v_attempt_counts) {
        let (m, k) = (draw.m(), draw.k());
        let mut cells: Vec<String> = Vec::with_capacity(m * k + k + k * k + 2);
        for i in 0..m {
            for j in 0..k {
                cells.push(format!("{}", draw.theta[(i, j)]));
            }
        }
        for j in 0..k {
            cells.push(format!("{}", draw.beta[j]));
        }
        for i in 0..k {
            for j in 0..k {
                cells.push(format!("{}", draw.v[(i, j)]));
            }
        }
        cells.push(draw.lambda.map(|l| format!("{l}")).unwrap_or_default());
        cells.push(format!("{attempts}"));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn read_chain(text: &str, v_updater: VUpdater) -> Result<ChainOutput, IngestError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| IngestError { message: "empty chain file".into() })?;
    let cols: Vec<&str> = header.split(',').collect();
    let k = cols.iter().filter(|c| c.starts_with("beta_")).count();
    let theta_cells = cols.iter().filter(|c| c.starts_with("theta_")).count();
    if k == 0 || theta_cells == 0 || theta_cells % k != 0 {
        return Err(IngestError { message: "malformed chain header".into() });
    }
    let m = theta_cells / k;
    let expect = m * k + k + k * k + 2;
    if cols.len() != expect {
        return Err(IngestError {
            message: format!("chain header has {} columns, expected {expect}", cols.len()),
        });
    }
    let mut draws = Vec::new();
    let mut attempts = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expect {
            return Err(IngestError {
                message: format!("chain row {}: {} cells, expected {expect}", lineno + 2, cells.len()),
            });
        }
        let num = |s: &str| -> Result<f64, IngestError> {
            s.parse().map_err(|_| IngestError {
                message: format!("chain row {}: bad number `{s}`", lineno + 2),
            })
        };
        let mut it = cells.iter();
        let mut theta = DMatrix::zeros(m, k);
        for i in 0..m {
            for j in 0..k {
                theta[(i, j)] = num(it.next().unwrap())?;
            }
        }
        let mut beta = DVector::zeros(k);
        for j in 0..k {
            beta[j] = num(it.next().unwrap())?;
        }
        let mut v = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                v[(i, j)] = num(it.next().unwrap())?;
            }
        }
        let lam_cell = it.next().unwrap();
        let lambda = if lam_cell.is_empty() { None } else { Some(num(lam_cell)?) };
        let att: u64 = it.next().unwrap().parse().map_err(|_| IngestError {
            message: format!("chain row {}: bad attempts", lineno + 2),
        })?;
        draws.push(ChainState { theta, beta, v, lambda });
        attempts.push(att);
    }
    Ok(ChainOutput { draws, v_attempt_counts: attempts, acceptance_rate: f64::NAN, v_updater })
}

/// A flat key-value report record, written in the same syntax the config
/// files use so reports are greppable and re-parseable.
#[derive(Debug, Default)]
pub struct Record {
    lines: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
