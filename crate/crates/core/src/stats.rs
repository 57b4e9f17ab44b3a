//! Range-distribution statistics for one level or one selection.
//!
//! Availability, count, min and max always come from the full dataset.
//! Mean, median, percentiles and the density curve come from the records
//! that are also in the sample.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedDataset;
use crate::error::{Error, Result};
use crate::filter::{CompiledFilter, RecordMask, SelectionState};
use crate::sampling::SampleSpec;

/// Percentile cut points shown as band boundaries.
pub const PERCENTILE_CUTS: [u32; 5] = [5, 25, 50, 75, 95];

/// Density grid size used for every bar.
pub const DENSITY_GRID_POINTS: usize = 64;

/// Label used for the aggregate bar.
pub const AGGREGATE_LABEL: &str = "(aggregate)";

// Kernel terms beyond this many bandwidths are below exp(-50) and dropped.
const KERNEL_CUTOFF: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: String,
    /// Matching records in the full dataset.
    pub count: usize,
    pub available: bool,
    /// Records the distributional fields were computed from.
    pub sampled_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentile_values: Option<BTreeMap<u32, f64>>,
    /// `(value, density)` pairs on a uniform grid over the sampled range.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density: Vec<(f64, f64)>,
}

impl LevelStats {
    fn unavailable(level: String) -> Self {
        Self {
            level,
            count: 0,
            available: false,
            sampled_count: 0,
            min: None,
            max: None,
            mean: None,
            median: None,
            percentile_values: None,
            density: Vec::new(),
        }
    }

    pub fn percentile_value(&self, cut: u32) -> Option<f64> {
        self.percentile_values.as_ref()?.get(&cut).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelView {
    pub selected: bool,
    pub stats: LevelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterView {
    pub name: String,
    pub active: bool,
    pub levels: Vec<LevelView>,
}

/// Per-parameter, per-level bars for the current selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorerView {
    pub parameters: Vec<ParameterView>,
}

impl ExplorerView {
    pub fn level(&self, parameter: &str, level: &str) -> Option<&LevelView> {
        self.parameters
            .iter()
            .find(|p| p.name == parameter)?
            .levels
            .iter()
            .find(|l| l.stats.level == level)
    }
}

/// The single bar over every record matching the full selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AggregateStats(pub LevelStats);

/// Linear interpolation between order statistics: `h = (n-1)q`,
/// `v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)])`.
///
/// `sorted` must be ascending.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("percentile of no values"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Exact statistics over `mask`, without a density curve.
pub fn summarize(ds: &EncodedDataset, mask: &RecordMask) -> LevelStats {
    let values: Vec<f64> = mask.iter().map(|i| ds.target()[i]).collect();
    let extent = extent(&values);
    describe(String::new(), values.len(), extent, values, None)
}

fn extent(values: &[f64]) -> Option<(f64, f64)> {
    values.iter().fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Assembles a `LevelStats` from an exact count and extent plus the values
/// the distributional fields are estimated from.
fn describe(
    level: String,
    count: usize,
    extent: Option<(f64, f64)>,
    mut dist: Vec<f64>,
    grid_points: Option<usize>,
) -> LevelStats {
    let Some((min, max)) = extent.filter(|_| count > 0) else {
        return LevelStats::unavailable(level);
    };
    dist.sort_unstable_by(f64::total_cmp);
    if dist.is_empty() {
        // Nothing sampled from a non-empty group: only the exact fields.
        return LevelStats {
            level,
            count,
            available: true,
            sampled_count: 0,
            min: Some(min),
            max: Some(max),
            ..LevelStats::unavailable(String::new())
        };
    }
    let lo = dist[0];
    let hi = dist[dist.len() - 1];
    // Rounding in the sum can push the mean a hair outside the data range.
    let mean = (dist.iter().sum::<f64>() / dist.len() as f64).clamp(lo, hi);
    let percentile_values: BTreeMap<u32, f64> = PERCENTILE_CUTS
        .iter()
        .map(|&c| (c, percentile(&dist, c as f64 / 100.0).expect("non-empty")))
        .collect();
    let density = grid_points
        .map(|g| density_sorted(&dist, g))
        .unwrap_or_default();
    LevelStats {
        level,
        count,
        available: true,
        sampled_count: dist.len(),
        min: Some(min),
        max: Some(max),
        mean: Some(mean),
        median: Some(percentile_values[&50]),
        percentile_values: Some(percentile_values),
        density,
    }
}

/// Gaussian kernel bandwidth `0.9 * min(sd, IQR/1.34) * n^(-1/5)`; a zero
/// IQR falls back to the standard deviation. `sorted` must be ascending.
pub fn bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let iqr = percentile(sorted, 0.75).unwrap() - percentile(sorted, 0.25).unwrap();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * nf.powf(-0.2)
}

/// Kernel density estimate on `grid_points` evenly spaced values spanning
/// `[min, max]` of `values`. Degenerate inputs (one value, or zero spread)
/// give the single point mass `[(value, 1)]`.
pub fn density_curve(values: &[f64], grid_points: usize) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("density of no values"));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "density grid needs at least 2 points, got {grid_points}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(density_sorted(&sorted, grid_points))
}

fn density_sorted(sorted: &[f64], grid_points: usize) -> Vec<(f64, f64)> {
    let h = bandwidth(sorted);
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    if h.is_nan() || h <= 0.0 || hi == lo {
        return vec![(lo, 1.0)];
    }
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
    let step = (hi - lo) / (grid_points - 1) as f64;
    let reach = KERNEL_CUTOFF * h;
    (0..grid_points)
        .map(|k| {
            let x = if k + 1 == grid_points { hi } else { lo + k as f64 * step };
            let start = sorted.partition_point(|&v| v < x - reach);
            let end = sorted.partition_point(|&v| v <= x + reach);
            let sum: f64 = sorted[start..end]
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum();
            (x, sum * norm)
        })
        .collect()
}

fn level_stats_for(
    ds: &EncodedDataset,
    mask: &RecordMask,
    sample: &RecordMask,
    level: String,
) -> LevelStats {
    let target = ds.target();
    let mut count = 0;
    let mut extent: Option<(f64, f64)> = None;
    let mut dist = Vec::new();
    for i in mask.iter() {
        let v = target[i];
        count += 1;
        extent = Some(match extent {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
        if sample.contains(i) {
            dist.push(v);
        }
    }
    describe(level, count, extent, dist, Some(DENSITY_GRID_POINTS))
}

/// Bars for every level of every parameter. Level bars of parameter `p` are
/// conditioned on every other parameter's selection, ignoring `p`'s own.
pub fn explorer_view(
    ds: &EncodedDataset,
    sel: &SelectionState,
    sample: &SampleSpec,
) -> Result<ExplorerView> {
    let schema = ds.schema();
    let filters = (0..schema.parameters.len())
        .map(|p| CompiledFilter::new(ds, sel, Some(p)))
        .collect::<Result<Vec<_>>>()?;
    let target = ds.target();
    let parameters = schema
        .parameters
        .par_iter()
        .zip(filters.par_iter())
        .enumerate()
        .map(|(p, (param, filter))| {
            let k = param.levels.len();
            let mut counts = vec![0usize; k];
            let mut extents: Vec<Option<(f64, f64)>> = vec![None; k];
            let mut dists: Vec<Vec<f64>> = vec![Vec::new(); k];
            for i in filter.evaluate(ds).iter() {
                let l = ds.level_of(i, p);
                let v = target[i];
                counts[l] += 1;
                extents[l] = Some(match extents[l] {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
                if sample.mask.contains(i) {
                    dists[l].push(v);
                }
            }
            let levels = param
                .levels
                .iter()
                .zip(counts.into_iter().zip(extents).zip(dists))
                .map(|(name, ((count, extent), dist))| LevelView {
                    selected: sel.is_selected(&param.name, name),
                    stats: describe(name.clone(), count, extent, dist, Some(DENSITY_GRID_POINTS)),
                })
                .collect();
            ParameterView {
                name: param.name.clone(),
                active: sel.get(&param.name).is_none_or(|ps| ps.active),
                levels,
            }
        })
        .collect();
    Ok(ExplorerView { parameters })
}

/// One bar over all records matching `sel`.
pub fn aggregate_view(
    ds: &EncodedDataset,
    sel: &SelectionState,
    sample: &SampleSpec,
) -> Result<AggregateStats> {
    let mask = CompiledFilter::new(ds, sel, None)?.evaluate(ds);
    Ok(AggregateStats(level_stats_for(
        ds,
        &mask,
        &sample.mask,
        AGGREGATE_LABEL.to_owned(),
    )))
}
