//! Brute-force oracles for the statistics layer. Everything here works from
//! the generator's strings and raw numbers, never from the one-hot bits.

use std::f64::consts::PI;

use levelscope_core::stats::{bandwidth, DENSITY_GRID_POINTS, PERCENTILE_CUTS};
use levelscope_core::synth::{generate, GeneratorConfig, SyntheticData};
use levelscope_core::{
    aggregate_view, density_curve, explorer_view, percentile, summarize, LevelStats, RecordMask,
    SampleSpec, SelectionState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Quantile by locating the bracketing order statistics through rank
/// counting on an unsorted copy.
fn oracle_quantile(values: &[f64], q: f64) -> f64 {
    let n = values.len();
    let pos = q * (n - 1) as f64;
    let rank_lo = pos.floor() as usize;
    let rank_hi = (rank_lo + 1).min(n - 1);
    let kth = |k: usize| {
        let mut v = values.to_vec();
        let (_, x, _) = v.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
        *x
    };
    let lo = kth(rank_lo);
    let hi = kth(rank_hi);
    lo + (pos - rank_lo as f64) * (hi - lo)
}

fn oracle_mean(values: &[f64]) -> f64 {
    // Pairwise summation, different association from a running sum.
    fn sum(v: &[f64]) -> f64 {
        if v.len() <= 8 {
            v.iter().sum()
        } else {
            let (a, b) = v.split_at(v.len() / 2);
            sum(a) + sum(b)
        }
    }
    sum(values) / values.len() as f64
}

fn assert_matches_oracle(stats: &LevelStats, full: &[f64], dist: &[f64], tol: f64) {
    assert_eq!(stats.count, full.len(), "count for {}", stats.level);
    assert_eq!(stats.available, !full.is_empty());
    if full.is_empty() {
        assert!(stats.min.is_none() && stats.max.is_none() && stats.mean.is_none());
        return;
    }
    let min = full.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(stats.min, Some(min));
    assert_eq!(stats.max, Some(max));
    assert_eq!(stats.sampled_count, dist.len());
    assert!(close(stats.mean.unwrap(), oracle_mean(dist), tol));
    assert!(close(stats.median.unwrap(), oracle_quantile(dist, 0.5), tol));
    for cut in PERCENTILE_CUTS {
        let got = stats.percentile_value(cut).unwrap();
        assert!(
            close(got, oracle_quantile(dist, cut as f64 / 100.0), tol),
            "p{cut} of {}",
            stats.level
        );
    }
}

fn assert_invariants(s: &LevelStats) {
    assert_eq!(s.available, s.count > 0);
    if !s.available {
        assert!(s.min.is_none() && s.percentile_values.is_none() && s.density.is_empty());
        return;
    }
    let (min, max) = (s.min.unwrap(), s.max.unwrap());
    assert!(min <= max);
    if let Some(pv) = &s.percentile_values {
        let cuts: Vec<f64> = PERCENTILE_CUTS.iter().map(|c| pv[c]).collect();
        assert!(min <= cuts[0], "min {min} > p5 {}", cuts[0]);
        assert!(cuts.windows(2).all(|w| w[0] <= w[1]), "{cuts:?}");
        assert!(cuts[4] <= max);
        assert_eq!(s.median, Some(pv[&50]));
        let mean = s.mean.unwrap();
        assert!(min <= mean && mean <= max);
    }
    assert!(s.density.iter().all(|&(_, d)| d >= 0.0));
}

#[test]
fn summarize_matches_recomputation_on_random_subsets() {
    let data = generate(&GeneratorConfig {
        rows: 20_000,
        levels: vec![3, 3],
        noise_sd: 3.0,
        seed: 101,
        ..GeneratorConfig::default()
    });
    let ds = data.encode().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..20 {
        let k = if round == 0 { 5_000 } else { rng.gen_range(1..3_000) };
        let idx = rand::seq::index::sample(&mut rng, ds.len(), k).into_vec();
        let values: Vec<f64> = idx.iter().map(|&i| data.target[i]).collect();
        let stats = summarize(&ds, &RecordMask::from_indices(ds.len(), idx));
        assert_matches_oracle(&stats, &values, &values, 1e-9);
        assert_invariants(&stats);
    }
}

#[test]
fn percentile_matches_oracle_on_uniform_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let mut v: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let shuffled = v.clone();
        v.sort_by(f64::total_cmp);
        for q in [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0, rng.gen()] {
            let got = percentile(&v, q).unwrap();
            assert!((got - oracle_quantile(&shuffled, q)).abs() < 1e-12);
        }
    }
}

/// Direct kernel sum at each grid point with an independently computed
/// bandwidth.
fn oracle_density(values: &[f64], grid: usize) -> Vec<(f64, f64)> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = oracle_quantile(values, 0.75) - oracle_quantile(values, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if h == 0.0 || lo == hi {
        return vec![(lo, 1.0)];
    }
    (0..grid)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
            let y = values
                .iter()
                .map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp() / (h * (2.0 * PI).sqrt()))
                .sum::<f64>()
                / n;
            (x, y)
        })
        .collect()
}

fn brute_stats(data: &SyntheticData, sel: &SelectionState, skip: Option<usize>, level: Option<(usize, &str)>) -> Vec<f64> {
    (0..data.len())
        .filter(|&i| {
            let row = data.truth_row(i);
            let constraints = sel.parameters.iter().enumerate().all(|(p, ps)| {
                Some(p) == skip || !ps.active || ps.selected.iter().any(|l| l == row[p])
            });
            constraints && level.is_none_or(|(p, l)| row[p] == l)
        })
        .map(|i| data.target[i])
        .collect()
}

#[test]
fn views_match_end_to_end_oracle_without_sampling() {
    for seed in 0..6u64 {
        let data = generate(&GeneratorConfig {
            rows: 1000,
            levels: vec![2, 3, 4, 5],
            missing_rate: 0.03,
            seed: 900 + seed,
            ..GeneratorConfig::default()
        });
        let ds = data.encode().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sel = SelectionState::vacuous(ds.schema());
        for ps in &mut sel.parameters {
            ps.active = rng.gen_bool(0.8);
            let keep: Vec<String> = ps.selected.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            if !keep.is_empty() {
                ps.selected = keep;
            }
        }
        let sample = SampleSpec::all(ds.len());
        let view = explorer_view(&ds, &sel, &sample).unwrap();
        for (p, pv) in view.parameters.iter().enumerate() {
            for lv in &pv.levels {
                let values = brute_stats(&data, &sel, Some(p), Some((p, &lv.stats.level)));
                assert_matches_oracle(&lv.stats, &values, &values, 1e-9);
                assert_invariants(&lv.stats);
                assert_eq!(lv.selected, sel.is_selected(&pv.name, &lv.stats.level));
                if values.len() >= 2 {
                    let want = oracle_density(&values, DENSITY_GRID_POINTS);
                    assert_eq!(lv.stats.density.len(), want.len());
                    for (g, w) in lv.stats.density.iter().zip(&want) {
                        assert!(close(g.0, w.0, 1e-12));
                        assert!(close(g.1, w.1, 1e-9), "{g:?} vs {w:?}");
                    }
                }
            }
        }
        let agg = aggregate_view(&ds, &sel, &sample).unwrap().0;
        let values = brute_stats(&data, &sel, None, None);
        assert_matches_oracle(&agg, &values, &values, 1e-9);
        assert_invariants(&agg);
    }
}

#[test]
fn sampled_views_keep_exact_extremes() {
    let data = generate(&GeneratorConfig {
        rows: 3000,
        levels: vec![3, 4],
        seed: 4242,
        ..GeneratorConfig::default()
    });
    let ds = data.encode().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let picked = rand::seq::index::sample(&mut rng, ds.len(), 600).into_vec();
    let sample = SampleSpec::from_mask(RecordMask::from_indices(ds.len(), picked), 0.9, 1);
    let sel = SelectionState::vacuous(ds.schema()).with_levels("p0", &["v1", "v2"]).unwrap();
    let view = explorer_view(&ds, &sel, &sample).unwrap();
    for (p, pv) in view.parameters.iter().enumerate() {
        for lv in &pv.levels {
            let full = brute_stats(&data, &sel, Some(p), Some((p, &lv.stats.level)));
            let dist: Vec<f64> = (0..data.len())
                .filter(|&i| sample.mask.contains(i))
                .filter(|&i| {
                    let row = data.truth_row(i);
                    row[p] == lv.stats.level
                        && sel.parameters.iter().enumerate().all(|(q, ps)| {
                            q == p || !ps.active || ps.selected.iter().any(|l| l == row[q])
                        })
                })
                .map(|i| data.target[i])
                .collect();
            assert_matches_oracle(&lv.stats, &full, &dist, 1e-9);
            assert_invariants(&lv.stats);
        }
    }
}

#[test]
fn density_oracle_agrees_on_awkward_inputs() {
    // Heavy ties: IQR is zero, so the bandwidth falls back to the standard deviation.
    let mut v = vec![5.0; 90];
    v.extend([1.0, 9.0, 2.0, 8.0, 3.0, 7.0, 4.0, 6.0, 0.0, 10.0]);
    let got = density_curve(&v, 32).unwrap();
    let want = oracle_density(&v, 32);
    for (g, w) in got.iter().zip(&want) {
        assert!(close(g.1, w.1, 1e-9));
    }
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    assert!(bandwidth(&sorted) > 0.0);
}

fn trapezoid(curve: &[(f64, f64)]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_like_densities_integrate_to_one(
        n in 100usize..4000,
        mean in -1e3f64..1e3,
        sd in 0.01f64..100.0,
        second in prop::option::of((0.5f64..2.5, 0.2f64..0.8)),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::new(mean, sd).unwrap();
        let values: Vec<f64> = (0..n)
            .map(|_| match second {
                Some((shift, w)) if rng.gen_bool(w) => a.sample(&mut rng) + shift * sd,
                _ => a.sample(&mut rng),
            })
            .collect();
        let curve = density_curve(&values, DENSITY_GRID_POINTS).unwrap();
        prop_assert!(curve.iter().all(|&(_, d)| d >= 0.0));
        let area = trapezoid(&curve);
        prop_assert!((area - 1.0).abs() <= 0.05, "area {}", area);
    }

    #[test]
    fn level_stats_invariants_hold(seed in any::<u64>(), sample_every in 1usize..7) {
        let data = generate(&GeneratorConfig {
            rows: 400,
            levels: vec![2, 3, 6],
            missing_rate: 0.05,
            seed,
            ..GeneratorConfig::default()
        });
        let ds = data.encode().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut sel = SelectionState::vacuous(ds.schema());
        for ps in &mut sel.parameters {
            ps.active = rng.gen_bool(0.7);
            let keep: Vec<String> = ps.selected.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            if !keep.is_empty() {
                ps.selected = keep;
            }
        }
        let sample = SampleSpec::from_mask(
            RecordMask::from_indices(ds.len(), (0..ds.len()).step_by(sample_every)),
            0.5,
            0,
        );
        let view = explorer_view(&ds, &sel, &sample).unwrap();
        for pv in &view.parameters {
            for lv in &pv.levels {
                assert_invariants(&lv.stats);
            }
        }
        assert_invariants(&aggregate_view(&ds, &sel, &sample).unwrap().0);
    }
}
