//! Matrix CSV files, JSON output and view discovery.
//!
//! Matrices are stored without a header, one row per line, each entry
//! written with `{:.16e}` so that a write/read cycle is exact.

use std::cmp::Ordering;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use heterojive::{Matrix, MultiViewData};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "{}: row {}, column {}: `{field}` is not a number",
                        path.display(),
                        i + 1,
                        j + 1
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::Input(format!("{}: empty matrix", path.display())));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Matrix::from_row_slice(flat.len() / ncols, ncols, &flat))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    let mut out = BufWriter::new(file);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(CliError::io(path))?;
    }
    out.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Chunk {
    Text(String),
    // digit count without leading zeros, then the digits
    Number(usize, String),
}

fn natural_key(s: &str) -> Vec<Chunk> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        let digit = c.is_ascii_digit();
        let mut run = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_ascii_digit() != digit {
                break;
            }
            run.push(c);
            chars.next();
        }
        if digit {
            let trimmed = run.trim_start_matches('0').to_string();
            out.push(Chunk::Number(trimmed.len(), trimmed));
        } else {
            out.push(Chunk::Text(run));
        }
    }
    out
}

/// Orders `view_2` before `view_10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    natural_key(a).cmp(&natural_key(b)).then_with(|| a.cmp(b))
}

/// Files matching `pattern`, in natural order.
pub fn expand_views(pattern: &str) -> CliResult<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| CliError::Input(format!("views pattern `{pattern}`: {e}")))?;
    let mut files = Vec::new();
    for entry in paths {
        let path = entry.map_err(|e| CliError::Io { path: e.path().to_path_buf(), source: e.into() })?;
        if path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(CliError::Input(format!("no files match `{pattern}`")));
    }
    files.sort_by(|a, b| natural_cmp(&a.to_string_lossy(), &b.to_string_lossy()));
    Ok(files)
}

pub fn load_views(pattern: &str) -> CliResult<MultiViewData> {
    let files = expand_views(pattern)?;
    for f in &files {
        log::info!("view {}", f.display());
    }
    let views = files.iter().map(|f| read_matrix(f)).collect::<CliResult<Vec<_>>>()?;
    Ok(MultiViewData::new(views)?)
}
