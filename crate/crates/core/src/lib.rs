//! Exploration engine for categorical parameter spaces with one numeric
//! target: one-hot filtering, cross-filtered level statistics, KS-calibrated
//! sampling and an append-only provenance chain.

pub mod encoding;
pub mod error;
pub mod filter;
pub mod ingest;
pub mod provenance;
pub mod sampling;
pub mod session;
pub mod stats;
pub mod synth;
pub mod wire;

pub use encoding::{encode, load_dataset, EncodedDataset, LoadOptions};
pub use error::{Error, Result};
pub use filter::{
    apply_filter, cross_filter_mask, match_record, ParameterSelection, RecordMask, SelectionState,
};
pub use ingest::{build_schema, parse_table, Parameter, RawTable, Schema};
pub use provenance::{init_chain, ProvenanceChain, ProvenanceStage};
pub use sampling::{
    choose_sample, ks_pvalue, ks_statistic, SampleReport, SampleSpec, SamplingConfig,
};
pub use session::{Session, TriView};
pub use stats::{
    aggregate_view, density_curve, explorer_view, percentile, summarize, AggregateStats,
    ExplorerView, LevelStats,
};
