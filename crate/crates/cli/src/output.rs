//! Plot-ready CSV layouts. Absent cells are empty fields; numbers use the
//! shortest text that parses back to the same value.

use rmt_ensemble::selection::{ErrorStats, SearchGrid};
use rmt_ensemble::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell: `m,lambda,error,std`.
pub fn long(grid: &SearchGrid, errors: &[Option<f64>], stds: &[Option<f64>]) -> String {
    let mut s = String::from("m,lambda,error,std\n");
    for (k, (m, l)) in grid.pairs().into_iter().enumerate() {
        let _ = writeln!(s, "{m},{l},{},{}", cell(errors[k]), cell(stds[k]));
    }
    s
}

/// Header row of `λ` values, then one row per `m`.
pub fn matrix(grid: &SearchGrid, values: &[Option<f64>]) -> String {
    let mut s = String::from("m");
    for l in &grid.lambda_values {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    let cols = grid.lambda_values.len();
    for (i, m) in grid.m_values.iter().enumerate() {
        s.push_str(&m.to_string());
        for v in &values[i * cols..(i + 1) * cols] {
            s.push(',');
            s.push_str(&cell(*v));
        }
        s.push('\n');
    }
    s
}

pub fn curve(pairs: &[(usize, f64)], empirical: &[Option<ErrorStats>], theory: &[Option<f64>]) -> String {
    let mut s = String::from("m,lambda,empirical_error,empirical_std,theoretical_error\n");
    for ((&(m, l), e), t) in pairs.iter().zip(empirical).zip(theory) {
        let _ = writeln!(
            s,
            "{m},{l},{},{},{}",
            cell(e.map(|e| e.mean)),
            cell(e.map(|e| e.std)),
            cell(*t)
        );
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<PathBuf, Error> {
    std::fs::write(path, contents)?;
    Ok(path.to_path_buf())
}
