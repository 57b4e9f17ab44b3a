//! Delimited-text ingestion and categorical schema derivation.
//!
//! Every non-target column becomes a categorical parameter whose level
//! vocabulary is the set of distinct cell values in order of first
//! appearance. The target column must hold finite numbers.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level name assigned to empty cells.
pub const MISSING_LEVEL: &str = "(missing)";

/// A parsed table of trimmed string cells. Every row has exactly
/// `header.len()` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawTable {
    /// Builds a table, checking the header and row-width invariants.
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        check_header(&header)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: header.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self { header, rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Writes the table back out as delimited text, quoting fields that
    /// contain the delimiter, quotes or line breaks.
    pub fn to_delimited(&self, delimiter: char) -> Result<String> {
        let delim = delimiter_byte(delimiter)?;
        let mut writer = csv::WriterBuilder::new()
            .delimiter(delim)
            .from_writer(Vec::new());
        let write_err = |e: csv::Error| Error::Malformed {
            row: 0,
            message: e.to_string(),
        };
        writer.write_record(&self.header).map_err(write_err)?;
        for row in &self.rows {
            writer.write_record(row).map_err(write_err)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Malformed {
            row: 0,
            message: e.to_string(),
        })?;
        // Only UTF-8 cells go in, so only UTF-8 comes out.
        Ok(String::from_utf8(bytes).expect("csv writer preserves UTF-8"))
    }
}

fn check_header(header: &[String]) -> Result<()> {
    if header.is_empty() {
        return Err(Error::EmptyInput("header row has no columns"));
    }
    let mut seen = HashSet::with_capacity(header.len());
    for (i, name) in header.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::EmptyHeaderName { column: i + 1 });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateHeader(name.clone()));
        }
    }
    Ok(())
}

fn delimiter_byte(delimiter: char) -> Result<u8> {
    if delimiter.is_ascii() && delimiter != '"' && delimiter != '\n' && delimiter != '\r' {
        Ok(delimiter as u8)
    } else {
        Err(Error::InvalidArgument(format!(
            "unsupported delimiter {delimiter:?}"
        )))
    }
}

/// Parses UTF-8 delimited text whose first line is a header.
///
/// Cells are whitespace-trimmed. Quoted fields follow the usual convention:
/// fields holding the delimiter or a newline are wrapped in double quotes and
/// embedded quotes are doubled. Row numbers in errors are 1-based and count
/// data rows only.
pub fn parse_table(bytes: &[u8], delimiter: char) -> Result<RawTable> {
    let delim = delimiter_byte(delimiter)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyInput("no header row"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec
            .map_err(|e| csv_error(e, 0))?
            .iter()
            .map(str::to_owned)
            .collect(),
        None => return Err(Error::EmptyInput("no header row")),
    };
    check_header(&header)?;

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_error(e, row))?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: rec.len(),
            });
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(RawTable { header, rows })
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => Error::Utf8 { row },
        _ => Error::Malformed {
            row,
            message: e.to_string(),
        },
    }
}

/// One categorical parameter and its ordered level vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub levels: Vec<String>,
}

impl Parameter {
    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub parameters: Vec<Parameter>,
    pub target_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_units: Option<String>,
}

impl Schema {
    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Total number of levels across all parameters.
    pub fn total_levels(&self) -> usize {
        self.parameters.iter().map(|p| p.levels.len()).sum()
    }

    pub fn with_units(mut self, units: Option<String>) -> Self {
        self.target_units = units;
        self
    }
}

/// Maps a raw cell to its level name.
pub(crate) fn level_name(cell: &str) -> &str {
    if cell.is_empty() {
        MISSING_LEVEL
    } else {
        cell
    }
}

/// Parses a target cell, rejecting anything that is not a finite number.
pub(crate) fn parse_target(cell: &str, row: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericTarget {
            row,
            value: cell.to_owned(),
        }),
    }
}

/// Derives the categorical schema: every column except `target_column` is a
/// parameter with levels in first-appearance order.
pub fn build_schema(table: &RawTable, target_column: &str) -> Result<Schema> {
    let target_idx = table
        .column_index(target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_owned()))?;
    for (i, row) in table.rows().iter().enumerate() {
        parse_target(&row[target_idx], i + 1)?;
    }

    let mut parameters = Vec::with_capacity(table.header().len() - 1);
    for (col, name) in table.header().iter().enumerate() {
        if col == target_idx {
            continue;
        }
        let mut seen = HashSet::new();
        let mut levels = Vec::new();
        for row in table.rows() {
            let level = level_name(&row[col]);
            if seen.insert(level) {
                levels.push(level.to_owned());
            }
        }
        parameters.push(Parameter {
            name: name.clone(),
            levels,
        });
    }
    if parameters.is_empty() {
        return Err(Error::NoParameters);
    }
    Ok(Schema {
        parameters,
        target_name: target_column.to_owned(),
        target_units: None,
    })
}

/// Reorders level vocabularies from a sidecar file with one
/// `name: level,level,...` line per parameter.
///
/// Listed levels move to the front in the given order; unlisted levels keep
/// their first-appearance order after them. Blank lines and lines starting
/// with `#` are ignored.
pub fn apply_level_order(mut schema: Schema, sidecar: &str) -> Result<Schema> {
    let mut seen_params = HashSet::new();
    for (i, line) in sidecar.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, levels) = line.split_once(':').ok_or_else(|| Error::BadOrdering {
            line: line_no,
            message: "expected 'name: level,level,...'".into(),
        })?;
        let name = name.trim();
        if !seen_params.insert(name.to_owned()) {
            return Err(Error::BadOrdering {
                line: line_no,
                message: format!("parameter '{name}' listed twice"),
            });
        }
        let param = schema
            .parameters
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))?;

        let mut ordered: Vec<String> = Vec::new();
        for level in levels.split(',').map(str::trim).filter(|l| !l.is_empty()) {
            if param.level_index(level).is_none() {
                return Err(Error::UnknownLevel {
                    parameter: param.name.clone(),
                    level: level.to_owned(),
                });
            }
            if ordered.iter().any(|l| l == level) {
                return Err(Error::BadOrdering {
                    line: line_no,
                    message: format!("level '{level}' listed twice"),
                });
            }
            ordered.push(level.to_owned());
        }
        let rank: HashMap<&str, usize> = ordered
            .iter()
            .enumerate()
            .map(|(r, l)| (l.as_str(), r))
            .collect();
        let mut rest: Vec<String> = param
            .levels
            .iter()
            .filter(|l| !rank.contains_key(l.as_str()))
            .cloned()
            .collect();
        ordered.append(&mut rest);
        param.levels = ordered;
    }
    Ok(schema)
}
