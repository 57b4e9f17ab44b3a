//! Seeded synthetic datasets for tests, benchmarks and demos.
//!
//! Generators keep the ground-truth level of every cell so that encoders and
//! filters can be checked against the rows they were built from.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::encoding::{self, EncodedDataset};
use crate::error::Result;
use crate::ingest::{self, RawTable};

/// A generated table: parameter columns followed by a numeric target column.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub parameter_names: Vec<String>,
    pub target_name: String,
    /// Ground-truth cells per row, parameter order. Empty string means missing.
    pub cells: Vec<Vec<String>>,
    pub target: Vec<f64>,
}

impl SyntheticData {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Level names of row `i` as the encoder sees them.
    pub fn truth_row(&self, i: usize) -> Vec<&str> {
        self.cells[i].iter().map(|c| ingest::level_name(c)).collect()
    }

    pub fn table(&self) -> RawTable {
        let mut header = self.parameter_names.clone();
        header.push(self.target_name.clone());
        let rows = self
            .cells
            .iter()
            .zip(&self.target)
            .map(|(cells, t)| {
                let mut row = cells.clone();
                row.push(t.to_string());
                row
            })
            .collect();
        RawTable::new(header, rows).expect("generator emits rectangular tables")
    }

    pub fn to_csv(&self) -> String {
        self.table()
            .to_delimited(',')
            .expect("comma is a valid delimiter")
    }

    pub fn encode(&self) -> Result<EncodedDataset> {
        let table = self.table();
        let schema = ingest::build_schema(&table, &self.target_name)?;
        encoding::encode(&table, &schema, &self.target_name)
    }
}

/// Random categorical table with additive per-level effects plus Gaussian noise.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub rows: usize,
    /// Level count per parameter.
    pub levels: Vec<usize>,
    /// Probability that a parameter cell is left empty.
    pub missing_rate: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            rows: 1000,
            levels: vec![3, 3, 3],
            missing_rate: 0.0,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

pub fn generate(cfg: &GeneratorConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let effects: Vec<Vec<f64>> = cfg
        .levels
        .iter()
        .map(|&k| (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let noise = Normal::new(0.0, cfg.noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");

    let mut cells = Vec::with_capacity(cfg.rows);
    let mut target = Vec::with_capacity(cfg.rows);
    for _ in 0..cfg.rows {
        let mut row = Vec::with_capacity(cfg.levels.len());
        let mut value = 100.0;
        for (p, &k) in cfg.levels.iter().enumerate() {
            if cfg.missing_rate > 0.0 && rng.gen_bool(cfg.missing_rate) {
                row.push(String::new());
                continue;
            }
            let level = rng.gen_range(0..k);
            value += effects[p][level];
            row.push(format!("v{level}"));
        }
        value += noise.sample(&mut rng);
        cells.push(row);
        target.push(value);
    }

    SyntheticData {
        parameter_names: (0..cfg.levels.len()).map(|p| format!("p{p}")).collect(),
        target_name: "target".into(),
        cells,
        target,
    }
}

/// Vocabulary of the systems-like generator.
pub const SYSTEMS_PARAMETERS: [(&str, &[&str]); 10] = [
    ("Workload", &["dbsrvr", "websrvr", "mailsrvr", "filesrvr"]),
    ("FileSystem", &["ext2", "ext3", "ext4", "xfs", "btrfs"]),
    ("BlockSize", &["1024", "2048", "4096"]),
    ("Device", &["sas", "sata", "ssd"]),
    ("InodeSize", &["128", "256", "512"]),
    ("Journal", &["ordered", "writeback", "journal"]),
    ("Atime", &["atime", "noatime", "relatime"]),
    ("IOScheduler", &["cfq", "deadline", "noop"]),
    ("Readahead", &["128", "256", "512", "1024"]),
    ("Compression", &["none", "lz4"]),
];

/// Levels that never co-occur with `ssd` in the systems-like generator.
pub const SSD_OMITTED_UNDER: [(&str, &str); 3] = [
    ("Workload", "mailsrvr"),
    ("FileSystem", "ext4"),
    ("BlockSize", "1024"),
];

/// Storage-stack benchmark lookalike with ten parameters and a throughput
/// target (ops/sec). Rows matching every pair in [`SSD_OMITTED_UNDER`] never
/// use the `ssd` device.
pub fn systems_like(rows: usize, seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::<f64>::new(0.0, 0.12).expect("finite sd");
    let workload_base = [5200.0, 3100.0, 1800.0, 2600.0];
    let multipliers: Vec<Vec<f64>> = SYSTEMS_PARAMETERS
        .iter()
        .map(|(_, levels)| (0..levels.len()).map(|_| rng.gen_range(0.7..1.35)).collect())
        .collect();

    let mut cells = Vec::with_capacity(rows);
    let mut target = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut idx: Vec<usize> = SYSTEMS_PARAMETERS
            .iter()
            .map(|(_, levels)| rng.gen_range(0..levels.len()))
            .collect();
        let omitted = SSD_OMITTED_UNDER.iter().all(|(name, level)| {
            let p = SYSTEMS_PARAMETERS.iter().position(|(n, _)| n == name).unwrap();
            SYSTEMS_PARAMETERS[p].1[idx[p]] == *level
        });
        if omitted && idx[3] == 2 {
            idx[3] = *[0usize, 1].choose(&mut rng).unwrap();
        }
        let mut value = workload_base[idx[0]];
        for (p, &l) in idx.iter().enumerate() {
            value *= multipliers[p][l];
        }
        value *= noise.sample(&mut rng).exp();
        target.push((value * 100.0).round() / 100.0);
        cells.push(
            idx.iter()
                .enumerate()
                .map(|(p, &l)| SYSTEMS_PARAMETERS[p].1[l].to_owned())
                .collect(),
        );
    }

    SyntheticData {
        parameter_names: SYSTEMS_PARAMETERS.iter().map(|(n, _)| (*n).to_owned()).collect(),
        target_name: "throughput".into(),
        cells,
        target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_seeded() {
        let cfg = GeneratorConfig::default();
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.target, b.target);
        let c = generate(&GeneratorConfig { seed: 1, ..cfg });
        assert_ne!(a.target, c.target);
    }

    #[test]
    fn csv_row_count_matches() {
        let cfg = GeneratorConfig {
            rows: 100_000,
            levels: vec![4; 10],
            seed: 5,
            ..GeneratorConfig::default()
        };
        let data = generate(&cfg);
        let csv = data.to_csv();
        let table = ingest::parse_table(csv.as_bytes(), ',').unwrap();
        assert_eq!(table.row_count(), 100_000);
        assert_eq!(table.header().len(), 11);
    }

    #[test]
    fn systems_like_omits_ssd_under_chain() {
        let data = systems_like(20_000, 9);
        let hits = (0..data.len())
            .filter(|&i| {
                let r = data.truth_row(i);
                r[0] == "mailsrvr" && r[1] == "ext4" && r[2] == "1024"
            })
            .collect::<Vec<_>>();
        assert!(hits.len() > 50);
        assert!(hits.iter().all(|&i| data.truth_row(i)[3] != "ssd"));
        assert!((0..data.len()).any(|i| data.truth_row(i)[3] == "ssd"));
    }
}
