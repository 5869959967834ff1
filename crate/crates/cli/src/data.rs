//! CSV ingestion and output.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rks_core::{Dataset, DenseMatrix, Task};

use crate::error::{CliError, Result};

/// Which columns of a CSV file hold the targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSelector {
    /// The trailing `n` columns.
    Last(usize),
    /// Zero-based column indices.
    Indices(Vec<usize>),
    /// Header names; requires a header row.
    Names(Vec<String>),
}

impl Default for TargetSelector {
    fn default() -> Self {
        TargetSelector::Last(1)
    }
}

impl FromStr for TargetSelector {
    type Err = CliError;

    /// `last`, `last:N`, `0,3` or `price,volume`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(CliError::Usage("empty target selector".into()));
        }
        if s == "last" {
            return Ok(TargetSelector::Last(1));
        }
        if let Some(n) = s.strip_prefix("last:") {
            return match n.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(TargetSelector::Last(n)),
                _ => Err(CliError::Usage(format!("bad target selector {s:?}"))),
            };
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if let Ok(idx) = parts.iter().map(|p| p.parse::<usize>()).collect::<Result<Vec<_>, _>>() {
            return Ok(TargetSelector::Indices(idx));
        }
        Ok(TargetSelector::Names(parts.into_iter().map(String::from).collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub header: bool,
    pub task: Task,
    /// Map 0/1 classification labels to -1/+1.
    pub remap01: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            header: false,
            task: Task::Regression,
            remap01: false,
        }
    }
}

/// A parsed numeric CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Option<Vec<String>>,
    pub values: DenseMatrix,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn read_table(path: &Path, header: bool) -> Result<Table> {
    parse_table(open(path)?, header, &path.display().to_string())
}

/// Parses numeric CSV from any reader. Lines starting with `#` are skipped.
pub fn parse_table<R: std::io::Read>(reader: R, header: bool, source: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{source}: line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if header && names.is_none() {
            names = Some(record.iter().map(String::from).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(CliError::Data(format!(
                    "{source}: line {line}: expected {w} fields, found {}",
                    record.len()
                )))
            }
            _ => width = Some(record.len()),
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("{source}: line {line}, column {}: cannot parse {field:?} as a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "{source}: line {line}, column {}: non-finite value {field:?}",
                    col + 1
                )));
            }
            values.push(v);
        }
    }
    let cols = width.unwrap_or(0);
    let rows = values.len().checked_div(cols).unwrap_or(0);
    if rows == 0 {
        return Err(CliError::Data(format!("{source}: no data rows")));
    }
    let values = Array2::from_shape_vec((rows, cols), values).expect("row widths were checked");
    Ok(Table { names, values })
}

impl Table {
    fn target_columns(&self, selector: &TargetSelector) -> Result<Vec<usize>> {
        let cols = self.values.ncols();
        let idx = match selector {
            TargetSelector::Last(n) => {
                if *n >= cols {
                    return Err(CliError::Data(format!(
                        "{n} target column(s) requested but the file has only {cols} column(s)"
                    )));
                }
                (cols - n..cols).collect()
            }
            TargetSelector::Indices(idx) => {
                if let Some(bad) = idx.iter().find(|&&i| i >= cols) {
                    return Err(CliError::Data(format!("target column {bad} does not exist ({cols} columns)")));
                }
                idx.clone()
            }
            TargetSelector::Names(wanted) => {
                let names = self
                    .names
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("target columns named but --header is not set".into()))?;
                wanted
                    .iter()
                    .map(|w| {
                        names
                            .iter()
                            .position(|n| n == w)
                            .ok_or_else(|| CliError::Data(format!("target column {w:?} not found in header")))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() {
            return Err(CliError::Usage("target columns repeat".into()));
        }
        if idx.len() == cols {
            return Err(CliError::Usage("every column is a target; no inputs remain".into()));
        }
        Ok(idx)
    }

    /// Splits into inputs and targets.
    pub fn split(&self, selector: &TargetSelector) -> Result<(DenseMatrix, DenseMatrix)> {
        let targets = self.target_columns(selector)?;
        let inputs: Vec<usize> = (0..self.values.ncols()).filter(|c| !targets.contains(c)).collect();
        Ok((
            self.values.select(Axis(1), &inputs),
            self.values.select(Axis(1), &targets),
        ))
    }
}

pub fn load_csv(path: &Path, selector: &TargetSelector, opts: CsvOptions) -> Result<Dataset> {
    let table = read_table(path, opts.header)?;
    to_dataset(&table, selector, opts)
}

pub fn to_dataset(table: &Table, selector: &TargetSelector, opts: CsvOptions) -> Result<Dataset> {
    let (x, mut y) = table.split(selector)?;
    if opts.task == Task::BinaryClassification {
        if opts.remap01 {
            for v in y.iter_mut() {
                *v = match *v {
                    0.0 => -1.0,
                    1.0 => 1.0,
                    other => return Err(CliError::Data(format!("label {other} is not 0 or 1"))),
                };
            }
        } else if y.iter().any(|v| *v == 0.0) {
            return Err(CliError::Data("labels must be -1/+1; pass --remap01 for 0/1 labels".into()));
        }
    }
    Ok(Dataset::new(x, y, opts.task)?)
}

/// Writes rows as CSV. Floats use the shortest representation that parses
/// back to the same value.
pub fn write_csv<W: Write>(out: W, header: Option<&[String]>, rows: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| CliError::Data(format!("writing CSV: {e}"));
    if let Some(h) = header {
        w.write_record(h).map_err(fail)?;
    }
    for row in rows.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("writing CSV: {e}")))?;
    Ok(())
}
