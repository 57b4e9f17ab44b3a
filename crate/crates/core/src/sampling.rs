//! Random sampling calibrated with a two-sample Kolmogorov-Smirnov test.
//!
//! Small datasets are used whole. Larger ones are searched over sample
//! fractions in 5% steps; the first fraction whose sampled target
//! distribution is KS-indistinguishable from the full one (p at or above the
//! target) wins. Samples for all fractions are prefixes of one seeded random
//! permutation, so a larger fraction always contains a smaller one.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedDataset;
use crate::error::{Error, Result};
use crate::filter::{RecordMask, SelectionState};
use crate::stats;

pub const DEFAULT_NO_SAMPLE_THRESHOLD: usize = 20_000;
pub const DEFAULT_P_TARGET: f64 = 0.5;
/// Fraction search step, in twentieths.
const FRACTION_STEPS: usize = 20;

const SERIES_TOLERANCE: f64 = 1e-10;
const SERIES_MAX_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub seed: u64,
    pub no_sample_threshold: usize,
    pub p_target: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            no_sample_threshold: DEFAULT_NO_SAMPLE_THRESHOLD,
            p_target: DEFAULT_P_TARGET,
        }
    }
}

/// The rows used for distribution estimates, and why that many.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub mask: RecordMask,
    pub fraction: f64,
    pub p_value: f64,
    pub seed: u64,
}

impl SampleSpec {
    /// Every row, no sampling.
    pub fn all(n: usize) -> Self {
        Self {
            mask: RecordMask::full(n),
            fraction: 1.0,
            p_value: 1.0,
            seed: 0,
        }
    }

    pub fn from_mask(mask: RecordMask, p_value: f64, seed: u64) -> Self {
        let fraction = if mask.is_empty() {
            1.0
        } else {
            mask.count() as f64 / mask.len() as f64
        };
        Self {
            mask,
            fraction,
            p_value,
            seed,
        }
    }

    pub fn size(&self) -> usize {
        self.mask.count()
    }
}

fn sorted_copy(values: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(format!("{what} contains NaN")));
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Largest vertical distance between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_copy(a, "first KS sample")?;
    let b = sorted_copy(b, "second KS sample")?;
    Ok(ks_statistic_sorted(&a, &b))
}

/// [`ks_statistic`] for inputs already sorted ascending.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample p-value for statistic `d`:
/// `lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * d` with
/// `ne = n1*n2/(n1+n2)`, then `p = 2 * sum_k (-1)^(k-1) exp(-2 k^2 lambda^2)`.
///
/// The series stops once a term drops below 1e-10. If it has not settled
/// after 100 terms (lambda close to 0) the p-value is 1.
pub fn ks_pvalue(d: f64, n1: usize, n2: usize) -> f64 {
    if n1 == 0 || n2 == 0 || d.is_nan() {
        return 1.0;
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let root = ne.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d.clamp(0.0, 1.0);
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    for k in 1..=SERIES_MAX_TERMS {
        let term = sign * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() < SERIES_TOLERANCE {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    1.0
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx
}

fn fraction_at(step: usize) -> f64 {
    step as f64 / FRACTION_STEPS as f64
}

fn sample_size(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

/// KS p-value of a permutation prefix against the full (sorted) target.
fn prefix_pvalue(target: &[f64], full_sorted: &[f64], prefix: &[usize]) -> (f64, f64) {
    let mut sample: Vec<f64> = prefix.iter().map(|&i| target[i]).collect();
    sample.sort_unstable_by(f64::total_cmp);
    let d = ks_statistic_sorted(&sample, full_sorted);
    (d, ks_pvalue(d, sample.len(), full_sorted.len()))
}

/// Picks the sample used for every later distribution estimate.
pub fn choose_sample(ds: &EncodedDataset, cfg: &SamplingConfig) -> SampleSpec {
    let n = ds.len();
    if n <= cfg.no_sample_threshold {
        return SampleSpec {
            seed: cfg.seed,
            ..SampleSpec::all(n)
        };
    }
    let target = ds.target();
    let mut full_sorted = target.to_vec();
    full_sorted.sort_unstable_by(f64::total_cmp);
    let order = shuffled_indices(n, cfg.seed);

    for step in 1..FRACTION_STEPS {
        let fraction = fraction_at(step);
        let size = sample_size(fraction, n);
        if size == 0 {
            continue;
        }
        let (_, p) = prefix_pvalue(target, &full_sorted, &order[..size]);
        if p >= cfg.p_target {
            return SampleSpec {
                mask: RecordMask::from_indices(n, order[..size].iter().copied()),
                fraction,
                p_value: p,
                seed: cfg.seed,
            };
        }
    }
    SampleSpec {
        seed: cfg.seed,
        ..SampleSpec::all(n)
    }
}

/// Summary of a sampling decision, as reported to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub fraction: f64,
    pub sample_size: usize,
    pub p_value: f64,
    pub seed: u64,
}

impl From<&SampleSpec> for SampleReport {
    fn from(s: &SampleSpec) -> Self {
        Self {
            fraction: s.fraction,
            sample_size: s.size(),
            p_value: s.p_value,
            seed: s.seed,
        }
    }
}

/// One row of the fraction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub sample_size: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
    /// Wall time of a full explorer view computed from this sample.
    pub view_millis: f64,
}

/// Sweeps fractions 5%..100% in 5% steps, reporting KS p-value against the
/// full target and the time to build the unfiltered explorer view from each
/// sample. Datasets at or under the no-sample threshold get a single 100% row.
pub fn sample_sweep(ds: &EncodedDataset, cfg: &SamplingConfig) -> Result<Vec<SweepRow>> {
    let n = ds.len();
    let sel = SelectionState::vacuous(ds.schema());
    let timed = |spec: &SampleSpec| -> Result<f64> {
        let start = Instant::now();
        stats::explorer_view(ds, &sel, spec)?;
        Ok(start.elapsed().as_secs_f64() * 1e3)
    };
    if n <= cfg.no_sample_threshold {
        let spec = SampleSpec::all(n);
        return Ok(vec![SweepRow {
            fraction: 1.0,
            sample_size: n,
            ks_statistic: 0.0,
            p_value: 1.0,
            view_millis: timed(&spec)?,
        }]);
    }
    let target = ds.target();
    let mut full_sorted = target.to_vec();
    full_sorted.sort_unstable_by(f64::total_cmp);
    let order = shuffled_indices(n, cfg.seed);
    (1..=FRACTION_STEPS)
        .map(|step| {
            let fraction = fraction_at(step);
            let size = sample_size(fraction, n).max(1);
            let prefix = &order[..size];
            let (d, p) = prefix_pvalue(target, &full_sorted, prefix);
            let spec = SampleSpec {
                mask: RecordMask::from_indices(n, prefix.iter().copied()),
                fraction,
                p_value: p,
                seed: cfg.seed,
            };
            Ok(SweepRow {
                fraction,
                sample_size: size,
                ks_statistic: d,
                p_value: p,
                view_millis: timed(&spec)?,
            })
        })
        .collect()
}
