//! Delimited row parsing and streaming preprocessing.

use std::io::Read;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// One parsed input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// One-based data row number (the header is not counted).
    pub number: usize,
    /// Leading identifier column, when requested.
    pub id: Option<String>,
    pub values: Vec<f64>,
}

pub fn parse_delimiter(s: &str) -> CliResult<u8> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        _ if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err(CliError::input(format!("delimiter must be a single character, got `{s}`"))),
    }
}

pub struct RowReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    id_col: bool,
    number: usize,
    width: Option<usize>,
}

/// Rows of numeric fields; fields are parsed with `str::parse::<f64>`, so
/// the decimal separator is always `.`.
pub fn parse_rows<R: Read>(reader: R, delimiter: u8, header: bool, id_col: bool) -> RowReader<R> {
    let records = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
        .into_records();
    RowReader { records, id_col, number: 0, width: None }
}

impl<R: Read> Iterator for RowReader<R> {
    type Item = CliResult<Row>;

    fn next(&mut self) -> Option<CliResult<Row>> {
        let record = match self.records.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(CliError::input(format!("unreadable input: {e}")))),
        };
        self.number += 1;
        let line = record.position().map_or(self.number as u64, |p| p.line());
        let mut fields = record.iter();
        let id = if self.id_col { fields.next().map(str::to_string) } else { None };
        let offset = usize::from(self.id_col);
        let mut values = Vec::with_capacity(record.len());
        for (i, f) in fields.enumerate() {
            match f64::from_str(f) {
                Ok(v) => values.push(v),
                Err(_) => {
                    return Some(Err(CliError::input(format!(
                        "row {} (line {line}, column {}): `{f}` is not a number",
                        self.number,
                        i + 1 + offset
                    ))))
                }
            }
        }
        if values.is_empty() {
            return Some(Err(CliError::input(format!("row {} (line {line}) has no numeric fields", self.number))));
        }
        match self.width {
            None => self.width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Some(Err(CliError::input(format!(
                    "row {} (line {line}) has {} fields, expected {w}",
                    self.number,
                    values.len()
                ))))
            }
            _ => {}
        }
        Some(Ok(Row { number: self.number, id, values }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    BaselineNormalize,
    FirstDifference,
}

impl FromStr for Step {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "baseline_normalize" => Ok(Step::BaselineNormalize),
            "first_difference" => Ok(Step::FirstDifference),
            other => Err(CliError::input(format!("unknown preprocessing step `{other}`"))),
        }
    }
}

/// Comma-separated step list; `none` or empty means no preprocessing.
pub fn parse_steps(s: &str) -> CliResult<Vec<Step>> {
    s.split(',').filter(|x| !x.trim().is_empty() && x.trim() != "none").map(Step::from_str).collect()
}

#[derive(Debug, Clone)]
enum Stage {
    Normalize(Option<Vec<f64>>),
    Difference(Option<Vec<f64>>),
}

/// Preprocessing applied row by row in declared order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    stages: Vec<Stage>,
}

impl Pipeline {
    pub fn new(steps: &[Step]) -> Self {
        let stages = steps
            .iter()
            .map(|s| match s {
                Step::BaselineNormalize => Stage::Normalize(None),
                Step::FirstDifference => Stage::Difference(None),
            })
            .collect();
        Self { stages }
    }

    /// The transformed row, or `None` while a stage is still warming up.
    pub fn apply(&mut self, mut row: Vec<f64>) -> CliResult<Option<Vec<f64>>> {
        for stage in &mut self.stages {
            match stage {
                Stage::Normalize(base) => {
                    if base.is_none() {
                        if let Some(i) = row.iter().position(|&v| v == 0.0) {
                            return Err(CliError::input(format!("baseline of column {} is zero", i + 1)));
                        }
                        *base = Some(row.clone());
                    }
                    let b = base.as_ref().expect("baseline set");
                    row.iter_mut().zip(b).for_each(|(v, b)| *v /= b);
                }
                Stage::Difference(prev) => {
                    let last = prev.replace(row.clone());
                    match last {
                        None => return Ok(None),
                        Some(p) => row.iter_mut().zip(&p).for_each(|(v, p)| *v -= p),
                    }
                }
            }
        }
        Ok(Some(row))
    }
}

pub fn preprocess(rows: Vec<Vec<f64>>, steps: &[Step]) -> CliResult<Vec<Vec<f64>>> {
    let mut pipe = Pipeline::new(steps);
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        if let Some(v) = pipe.apply(r)? {
            out.push(v);
        }
    }
    Ok(out)
}
