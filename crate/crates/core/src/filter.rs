//! Selection states and record masks.
//!
//! A record matches a selection when, for every active parameter, its level
//! is among the selected ones. Matching compiles the selection into an
//! "allowed" bit mask over the one-hot width: selected bits for active
//! parameters, the whole span for inactive ones. Since each span of a record
//! holds exactly one set bit, the record matches iff
//! `popcount(record & allowed)` equals the parameter count.

use serde::{Deserialize, Serialize};

use crate::encoding::EncodedDataset;
use crate::error::{Error, Result};
use crate::ingest::Schema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSelection {
    pub name: String,
    pub active: bool,
    #[serde(default)]
    pub selected: Vec<String>,
}

/// Full toggle state: per parameter an active flag and a selected level set.
///
/// States built through [`SelectionState::validate`] list every schema
/// parameter in schema order with levels in vocabulary order, so equal
/// filters have equal (and byte-identical serialized) states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionState {
    pub parameters: Vec<ParameterSelection>,
}

impl SelectionState {
    /// Every parameter active with all of its levels selected.
    pub fn vacuous(schema: &Schema) -> Self {
        Self {
            parameters: schema
                .parameters
                .iter()
                .map(|p| ParameterSelection {
                    name: p.name.clone(),
                    active: true,
                    selected: p.levels.clone(),
                })
                .collect(),
        }
    }

    /// Checks the state against `schema` and returns its normal form.
    ///
    /// Parameters left out are taken as unconstrained (active, all levels).
    /// An active parameter needs a non-empty level set; an inactive one may
    /// carry any subset of its vocabulary, which is kept but ignored.
    pub fn validate(&self, schema: &Schema) -> Result<Self> {
        let mut slots: Vec<Option<&ParameterSelection>> = vec![None; schema.parameters.len()];
        for ps in &self.parameters {
            let idx = schema
                .parameter_index(&ps.name)
                .ok_or_else(|| Error::UnknownParameter(ps.name.clone()))?;
            if slots[idx].replace(ps).is_some() {
                return Err(Error::DuplicateParameter(ps.name.clone()));
            }
        }
        let parameters = schema
            .parameters
            .iter()
            .zip(slots)
            .map(|(param, slot)| {
                let Some(ps) = slot else {
                    return Ok(ParameterSelection {
                        name: param.name.clone(),
                        active: true,
                        selected: param.levels.clone(),
                    });
                };
                let mut chosen = vec![false; param.levels.len()];
                for level in &ps.selected {
                    let li = param.level_index(level).ok_or_else(|| Error::UnknownLevel {
                        parameter: param.name.clone(),
                        level: level.clone(),
                    })?;
                    chosen[li] = true;
                }
                if ps.active && !chosen.iter().any(|&c| c) {
                    return Err(Error::EmptySelection(param.name.clone()));
                }
                Ok(ParameterSelection {
                    name: param.name.clone(),
                    active: ps.active,
                    selected: param
                        .levels
                        .iter()
                        .zip(&chosen)
                        .filter(|(_, &c)| c)
                        .map(|(l, _)| l.clone())
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parameters })
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSelection> {
        self.parameters.iter().find(|p| p.name == name)
    }

    fn get_mut(&mut self, name: &str) -> Result<&mut ParameterSelection> {
        self.parameters
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    /// Returns a copy with `name` active and exactly `levels` selected.
    pub fn with_levels<S: AsRef<str>>(&self, name: &str, levels: &[S]) -> Result<Self> {
        let mut next = self.clone();
        let ps = next.get_mut(name)?;
        ps.active = true;
        ps.selected = levels.iter().map(|l| l.as_ref().to_owned()).collect();
        Ok(next)
    }

    /// Returns a copy with `name` switched on or off, keeping its level set.
    pub fn with_active(&self, name: &str, active: bool) -> Result<Self> {
        let mut next = self.clone();
        next.get_mut(name)?.active = active;
        Ok(next)
    }

    /// Whether `level` of parameter `name` is currently selected.
    pub fn is_selected(&self, name: &str, level: &str) -> bool {
        self.get(name)
            .is_some_and(|p| p.selected.iter().any(|l| l == level))
    }
}

/// A bitset over record indices with a cached population count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMask {
    words: Vec<u64>,
    len: usize,
    count: usize,
}

impl RecordMask {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
            count: 0,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        Self {
            words,
            len,
            count: len,
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(len);
        for i in indices {
            assert!(i < len, "index {i} out of range for mask of {len}");
            mask.words[i / 64] |= 1u64 << (i % 64);
        }
        mask.recount();
        mask
    }

    fn from_words(words: Vec<u64>, len: usize) -> Self {
        let mut mask = Self {
            words,
            len,
            count: 0,
        };
        mask.recount();
        mask
    }

    fn recount(&mut self) {
        self.count = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    /// Number of records the mask ranges over.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of set bits.
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn and(&self, other: &RecordMask) -> RecordMask {
        assert_eq!(self.len, other.len, "mask lengths differ");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        RecordMask::from_words(words, self.len)
    }

    /// Whether every bit set here is also set in `other`.
    pub fn is_subset_of(&self, other: &RecordMask) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Set indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

/// A selection compiled against one dataset's bit layout.
#[derive(Debug, Clone)]
pub struct CompiledFilter {
    allowed: Vec<u64>,
    required: u32,
}

impl CompiledFilter {
    /// Compiles `sel`, treating the parameter at `skip` (if any) as inactive.
    pub fn new(ds: &EncodedDataset, sel: &SelectionState, skip: Option<usize>) -> Result<Self> {
        let schema = ds.schema();
        let mut allowed = vec![0u64; ds.words_per_record()];
        let mut set = |bit: usize| allowed[bit / 64] |= 1u64 << (bit % 64);
        let mut seen = vec![false; schema.parameters.len()];
        for ps in &sel.parameters {
            let p = schema
                .parameter_index(&ps.name)
                .ok_or_else(|| Error::UnknownParameter(ps.name.clone()))?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::DuplicateParameter(ps.name.clone()));
            }
            let param = &schema.parameters[p];
            if !ps.active || skip == Some(p) {
                (0..param.levels.len()).for_each(|l| set(ds.bit_index(p, l)));
                continue;
            }
            for level in &ps.selected {
                let l = param.level_index(level).ok_or_else(|| Error::UnknownLevel {
                    parameter: param.name.clone(),
                    level: level.clone(),
                })?;
                set(ds.bit_index(p, l));
            }
        }
        // Parameters absent from the state impose no constraint.
        for (p, param) in schema.parameters.iter().enumerate() {
            if !seen[p] {
                (0..param.levels.len()).for_each(|l| set(ds.bit_index(p, l)));
            }
        }
        Ok(Self {
            allowed,
            required: schema.parameters.len() as u32,
        })
    }

    #[inline]
    pub fn matches(&self, record: &[u64]) -> bool {
        let hits: u32 = record
            .iter()
            .zip(&self.allowed)
            .map(|(r, a)| (r & a).count_ones())
            .sum();
        hits == self.required
    }

    /// Evaluates every record: one masked AND and popcount per word.
    pub fn evaluate(&self, ds: &EncodedDataset) -> RecordMask {
        let n = ds.len();
        let mut words = vec![0u64; n.div_ceil(64)];
        let bits = ds.packed_bits();
        if let [allowed] = self.allowed[..] {
            for (i, &rec) in bits.iter().enumerate() {
                if (rec & allowed).count_ones() == self.required {
                    words[i / 64] |= 1u64 << (i % 64);
                }
            }
        } else {
            let width = ds.words_per_record();
            for (i, rec) in bits.chunks_exact(width).enumerate() {
                if self.matches(rec) {
                    words[i / 64] |= 1u64 << (i % 64);
                }
            }
        }
        RecordMask::from_words(words, n)
    }
}

/// Whether record `i` satisfies `sel`.
///
/// # Panics
/// If `i` is not a valid record index.
pub fn match_record(ds: &EncodedDataset, i: usize, sel: &SelectionState) -> Result<bool> {
    let filter = CompiledFilter::new(ds, sel, None)?;
    Ok(filter.matches(ds.record_bits(i)))
}

/// Mask of all records matching `sel`.
pub fn apply_filter(ds: &EncodedDataset, sel: &SelectionState) -> Result<RecordMask> {
    Ok(CompiledFilter::new(ds, sel, None)?.evaluate(ds))
}

/// Mask of records matching every clause of `sel` except the one on
/// `parameter`, which is treated as inactive.
pub fn cross_filter_mask(
    ds: &EncodedDataset,
    sel: &SelectionState,
    parameter: &str,
) -> Result<RecordMask> {
    let p = ds
        .schema()
        .parameter_index(parameter)
        .ok_or_else(|| Error::UnknownParameter(parameter.to_owned()))?;
    Ok(CompiledFilter::new(ds, sel, Some(p))?.evaluate(ds))
}
