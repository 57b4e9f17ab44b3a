//! Analysis state for one loaded dataset: the sample, the current selection
//! and the provenance chain. Every mutation returns the complete tri-view
//! payload (explorer, aggregate, provenance) computed from the new state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::encoding::EncodedDataset;
use crate::error::Result;
use crate::filter::SelectionState;
use crate::ingest::Schema;
use crate::provenance::{init_chain, ProvenanceChain};
use crate::sampling::{choose_sample, SampleReport, SampleSpec, SamplingConfig};
use crate::stats::{aggregate_view, explorer_view, AggregateStats, ExplorerView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriView {
    pub explorer: ExplorerView,
    pub aggregate: AggregateStats,
    pub provenance: ProvenanceChain,
}

#[derive(Debug, Clone)]
pub struct Session {
    dataset: Arc<EncodedDataset>,
    sample: Arc<SampleSpec>,
    selection: SelectionState,
    chain: ProvenanceChain,
}

impl Session {
    /// Draws the sample once and starts the chain at the unfiltered stage.
    pub fn new(dataset: Arc<EncodedDataset>, sampling: &SamplingConfig) -> Self {
        let sample = Arc::new(choose_sample(&dataset, sampling));
        Self::with_sample(dataset, sample)
    }

    pub fn with_sample(dataset: Arc<EncodedDataset>, sample: Arc<SampleSpec>) -> Self {
        let selection = SelectionState::vacuous(dataset.schema());
        let chain = init_chain(&dataset);
        Self {
            dataset,
            sample,
            selection,
            chain,
        }
    }

    pub fn dataset(&self) -> &EncodedDataset {
        &self.dataset
    }

    pub fn schema(&self) -> &Schema {
        self.dataset.schema()
    }

    pub fn sample(&self) -> &SampleSpec {
        &self.sample
    }

    pub fn sample_report(&self) -> SampleReport {
        SampleReport::from(self.sample.as_ref())
    }

    pub fn selection(&self) -> &SelectionState {
        &self.selection
    }

    pub fn chain(&self) -> &ProvenanceChain {
        &self.chain
    }

    pub fn view(&self) -> Result<TriView> {
        Ok(TriView {
            explorer: explorer_view(&self.dataset, &self.selection, &self.sample)?,
            aggregate: aggregate_view(&self.dataset, &self.selection, &self.sample)?,
            provenance: self.chain.clone(),
        })
    }

    /// Replaces the selection and pushes a provenance stage. An invalid
    /// selection leaves the session untouched.
    pub fn update_selection(&mut self, sel: &SelectionState) -> Result<TriView> {
        let sel = sel.validate(self.dataset.schema())?;
        self.chain.push_stage(&sel, &self.dataset)?;
        self.selection = sel;
        self.view()
    }

    /// Appends a replica of stage `stage_index` and adopts its selection.
    pub fn rollback(&mut self, stage_index: usize) -> Result<TriView> {
        let replica = self.chain.rollback(stage_index, &self.dataset)?;
        self.selection = replica.selection.clone();
        self.view()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::synth::{self, GeneratorConfig};

    fn session() -> Session {
        let ds = synth::generate(&GeneratorConfig {
            rows: 800,
            levels: vec![3, 2, 4],
            seed: 31,
            ..GeneratorConfig::default()
        })
        .encode()
        .unwrap();
        Session::new(Arc::new(ds), &SamplingConfig::default())
    }

    #[test]
    fn fresh_session_view() {
        let s = session();
        let v = s.view().unwrap();
        assert_eq!(v.provenance.len(), 1);
        assert_eq!(v.aggregate.0.count, 800);
        assert_eq!(s.sample_report().fraction, 1.0);
    }

    #[test]
    fn toggle_off_and_on_restores_explorer() {
        let mut s = session();
        let initial = s.view().unwrap();
        let vac = s.selection().clone();
        let off = vac
            .with_levels("p0", &["v0", "v2"])
            .unwrap();
        let mid = s.update_selection(&off).unwrap();
        assert_ne!(mid.explorer, initial.explorer);
        let back = s.update_selection(&vac).unwrap();
        assert_eq!(back.provenance.len(), 3);
        assert_eq!(back.explorer, initial.explorer);
        assert_eq!(back.aggregate, initial.aggregate);
    }

    #[test]
    fn invalid_selection_changes_nothing() {
        let mut s = session();
        let bad = s.selection().with_levels("p1", &["nope"]).unwrap();
        assert!(matches!(s.update_selection(&bad), Err(Error::UnknownLevel { .. })));
        assert_eq!(s.chain().len(), 1);
        assert!(s.rollback(5).is_err());
        assert_eq!(s.chain().len(), 1);
    }

    #[test]
    fn rollback_to_start_restores_global_aggregate() {
        let mut s = session();
        let global = s.view().unwrap().aggregate;
        let sel = s.selection().with_levels("p2", &["v1"]).unwrap();
        s.update_selection(&sel).unwrap();
        let v = s.rollback(1).unwrap();
        assert_eq!(v.aggregate, global);
        assert_eq!(s.selection(), &SelectionState::vacuous(s.schema()));
        assert_eq!(v.provenance.len(), 3);
    }
}
