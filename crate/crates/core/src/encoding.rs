//! One-hot bit encoding of categorical records.
//!
//! Each parameter owns a contiguous span of bits, one per level, in schema
//! vocabulary order. A record sets exactly one bit inside every span. Bits
//! are packed into `u64` words, so testing a record against a selection is
//! a masked AND over a handful of words.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::{self, RawTable, Schema};

#[derive(Debug, Clone)]
pub struct EncodedDataset {
    schema: Schema,
    level_offsets: Vec<usize>,
    width: usize,
    words: usize,
    bits: Vec<u64>,
    target: Vec<f64>,
}

/// Inputs for loading a dataset from delimited text in one step.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target_column: String,
    pub delimiter: char,
    /// Optional sidecar level ordering (`name: level,level,...` lines).
    pub level_order: Option<String>,
    pub target_units: Option<String>,
}

impl LoadOptions {
    pub fn new(target_column: impl Into<String>) -> Self {
        Self {
            target_column: target_column.into(),
            delimiter: ',',
            level_order: None,
            target_units: None,
        }
    }
}

/// Parses, derives the schema and encodes. Rejects tables with no records.
pub fn load_dataset(bytes: &[u8], opts: &LoadOptions) -> Result<EncodedDataset> {
    let table = ingest::parse_table(bytes, opts.delimiter)?;
    if table.row_count() == 0 {
        return Err(Error::EmptyInput("dataset has no records"));
    }
    let mut schema = ingest::build_schema(&table, &opts.target_column)?;
    if let Some(order) = &opts.level_order {
        schema = ingest::apply_level_order(schema, order)?;
    }
    let schema = schema.with_units(opts.target_units.clone());
    encode(&table, &schema, &opts.target_column)
}

/// Encodes `table` under `schema`. Fails on any cell outside the vocabulary.
pub fn encode(table: &RawTable, schema: &Schema, target_column: &str) -> Result<EncodedDataset> {
    let target_idx = table
        .column_index(target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_owned()))?;

    let mut level_offsets = Vec::with_capacity(schema.parameters.len());
    let mut columns = Vec::with_capacity(schema.parameters.len());
    let mut lookups: Vec<HashMap<&str, usize>> = Vec::with_capacity(schema.parameters.len());
    let mut width = 0;
    for p in &schema.parameters {
        if p.levels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "parameter '{}' has no levels",
                p.name
            )));
        }
        let col = table
            .column_index(&p.name)
            .ok_or_else(|| Error::UnknownParameter(p.name.clone()))?;
        if col == target_idx {
            return Err(Error::InvalidArgument(format!(
                "parameter '{}' is also the target column",
                p.name
            )));
        }
        let mut lookup = HashMap::with_capacity(p.levels.len());
        for (i, level) in p.levels.iter().enumerate() {
            if lookup.insert(level.as_str(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "parameter '{}' lists level '{level}' twice",
                    p.name
                )));
            }
        }
        level_offsets.push(width);
        width += p.levels.len();
        columns.push(col);
        lookups.push(lookup);
    }

    let words = width.div_ceil(64).max(1);
    let n = table.row_count();
    let mut bits = vec![0u64; n * words];
    let mut target = Vec::with_capacity(n);
    for (i, row) in table.rows().iter().enumerate() {
        let rec = &mut bits[i * words..(i + 1) * words];
        for (p, param) in schema.parameters.iter().enumerate() {
            let cell = ingest::level_name(&row[columns[p]]);
            let level = *lookups[p].get(cell).ok_or_else(|| Error::UnknownCell {
                row: i + 1,
                column: param.name.clone(),
                value: cell.to_owned(),
            })?;
            let bit = level_offsets[p] + level;
            rec[bit / 64] |= 1u64 << (bit % 64);
        }
        target.push(ingest::parse_target(&row[target_idx], i + 1)?);
    }

    Ok(EncodedDataset {
        schema: schema.clone(),
        level_offsets,
        width,
        words,
        bits,
        target,
    })
}

impl EncodedDataset {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Number of records.
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Total bit width, the sum of all level counts.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of `u64` words per record.
    pub fn words_per_record(&self) -> usize {
        self.words
    }

    pub fn level_offsets(&self) -> &[usize] {
        &self.level_offsets
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Packed bit row for record `i`.
    #[inline]
    pub fn record_bits(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// All packed bit rows, record-major.
    pub fn packed_bits(&self) -> &[u64] {
        &self.bits
    }

    /// Global bit index of level `level` of parameter `param`.
    #[inline]
    pub fn bit_index(&self, param: usize, level: usize) -> usize {
        self.level_offsets[param] + level
    }

    /// Level index of record `i` for parameter `param`.
    pub fn level_of(&self, i: usize, param: usize) -> usize {
        let start = self.level_offsets[param];
        let end = start + self.schema.parameters[param].levels.len();
        first_set_in(self.record_bits(i), start, end)
            .map(|b| b - start)
            .expect("every parameter span holds exactly one set bit")
    }

    /// Popcount of one parameter's span for record `i`. Always 1 for a
    /// well-formed dataset.
    pub fn span_popcount(&self, i: usize, param: usize) -> u32 {
        let start = self.level_offsets[param];
        let end = start + self.schema.parameters[param].levels.len();
        let row = self.record_bits(i);
        (start..end)
            .filter(|&b| row[b / 64] >> (b % 64) & 1 == 1)
            .count() as u32
    }

    /// Recovers `(parameter, level)` pairs for record `i`.
    pub fn decode_record(&self, i: usize) -> Result<Vec<(String, String)>> {
        if i >= self.len() {
            return Err(Error::RecordOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(self
            .schema
            .parameters
            .iter()
            .enumerate()
            .map(|(p, param)| (param.name.clone(), param.levels[self.level_of(i, p)].clone()))
            .collect())
    }
}

fn first_set_in(row: &[u64], start: usize, end: usize) -> Option<usize> {
    let mut b = start;
    while b < end {
        let off = b % 64;
        let span = (end - b).min(64 - off);
        let mut word = row[b / 64] >> off;
        if span < 64 {
            word &= (1u64 << span) - 1;
        }
        if word != 0 {
            return Some(b + word.trailing_zeros() as usize);
        }
        b += span;
    }
    None
}
