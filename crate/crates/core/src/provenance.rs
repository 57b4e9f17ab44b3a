//! Append-only history of filtering stages.
//!
//! Each stage records a selection and the exact target range it admits.
//! Rolling back never removes stages: it appends a replica of the chosen
//! stage, and later pushes continue from that replica.

use serde::{Deserialize, Serialize};

use crate::encoding::EncodedDataset;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, SelectionState};

pub const INITIAL_LABEL: &str = "all data";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStage {
    /// 1-based position in the chain.
    pub index: usize,
    pub label: String,
    pub selection: SelectionState,
    pub count: usize,
    pub available: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Stage this one replicates, for stages created by rollback.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replica_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProvenanceChain {
    stages: Vec<ProvenanceStage>,
}

/// Stage 1: the unfiltered dataset with its global extremes.
pub fn init_chain(ds: &EncodedDataset) -> ProvenanceChain {
    let sel = SelectionState::vacuous(ds.schema());
    let (count, min, max) = range_of(ds, &sel).expect("vacuous selection is valid");
    ProvenanceChain {
        stages: vec![ProvenanceStage {
            index: 1,
            label: INITIAL_LABEL.to_owned(),
            selection: sel,
            count,
            available: count > 0,
            min,
            max,
            replica_of: None,
        }],
    }
}

fn range_of(ds: &EncodedDataset, sel: &SelectionState) -> Result<(usize, Option<f64>, Option<f64>)> {
    let mask = apply_filter(ds, sel)?;
    let target = ds.target();
    let extent = mask.iter().map(|i| target[i]).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
    });
    Ok((mask.count(), extent.map(|e| e.0), extent.map(|e| e.1)))
}

impl ProvenanceChain {
    pub fn stages(&self) -> &[ProvenanceStage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn last(&self) -> &ProvenanceStage {
        self.stages.last().expect("chain always holds stage 1")
    }

    /// 1-based lookup.
    pub fn stage(&self, index: usize) -> Option<&ProvenanceStage> {
        index.checked_sub(1).and_then(|i| self.stages.get(i))
    }

    /// Appends a stage for `sel` with its exact range over the full dataset.
    pub fn push_stage(&mut self, sel: &SelectionState, ds: &EncodedDataset) -> Result<&ProvenanceStage> {
        let (count, min, max) = range_of(ds, sel)?;
        let label = describe_change(&self.last().selection, sel);
        self.stages.push(ProvenanceStage {
            index: self.stages.len() + 1,
            label,
            selection: sel.clone(),
            count,
            available: count > 0,
            min,
            max,
            replica_of: None,
        });
        Ok(self.last())
    }

    /// Appends a replica of stage `stage_index` (1-based).
    pub fn rollback(&mut self, stage_index: usize, _ds: &EncodedDataset) -> Result<&ProvenanceStage> {
        let source = self
            .stage(stage_index)
            .ok_or(Error::StageOutOfRange {
                index: stage_index,
                len: self.stages.len(),
            })?
            .clone();
        self.stages.push(ProvenanceStage {
            index: self.stages.len() + 1,
            label: format!("rollback to {stage_index}"),
            replica_of: Some(stage_index),
            ..source
        });
        Ok(self.last())
    }
}

/// Short text naming what changed between two selections, e.g.
/// `Workload:dbsrvr` or `-BlockSize`.
pub fn describe_change(prev: &SelectionState, next: &SelectionState) -> String {
    let mut parts = Vec::new();
    for ps in &next.parameters {
        let before = prev.get(&ps.name);
        let was_active = before.is_none_or(|b| b.active);
        let same_levels = before.is_some_and(|b| b.selected == ps.selected);
        match (was_active, ps.active) {
            (true, false) => parts.push(format!("-{}", ps.name)),
            (false, true) => parts.push(format!("+{}:{}", ps.name, ps.selected.join("|"))),
            (true, true) if !same_levels => {
                parts.push(format!("{}:{}", ps.name, ps.selected.join("|")))
            }
            _ => {}
        }
    }
    if parts.is_empty() {
        "(unchanged)".to_owned()
    } else {
        parts.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn nine() -> EncodedDataset {
        let mut csv = String::from("W,t\n");
        for v in 1..=9 {
            csv.push_str(&format!("{},{v}\n", if v % 2 == 0 { "even" } else { "odd" }));
        }
        crate::load_dataset(csv.as_bytes(), &crate::LoadOptions::new("t")).unwrap()
    }

    #[test]
    fn initial_stage_has_global_extremes() {
        let chain = init_chain(&nine());
        assert_eq!(chain.len(), 1);
        let s = chain.last();
        assert_eq!((s.index, s.min, s.max, s.count), (1, Some(1.0), Some(9.0), 9));
        assert_eq!(s.label, INITIAL_LABEL);
    }

    #[test]
    fn push_records_exact_subrange() {
        let ds = nine();
        let mut chain = init_chain(&ds);
        let sel = SelectionState::vacuous(ds.schema()).with_levels("W", &["even"]).unwrap();
        let s = chain.push_stage(&sel, &ds).unwrap();
        assert_eq!((s.index, s.min, s.max, s.count), (2, Some(2.0), Some(8.0), 4));
        assert_eq!(s.label, "W:even");
    }

    #[test]
    fn empty_match_stage_is_unavailable() {
        let csv = b"W,F,t\na,x,1\nb,y,2\n";
        let ds = crate::load_dataset(csv, &crate::LoadOptions::new("t")).unwrap();
        let mut chain = init_chain(&ds);
        let sel = SelectionState::vacuous(ds.schema())
            .with_levels("W", &["a"])
            .unwrap()
            .with_levels("F", &["y"])
            .unwrap();
        let s = chain.push_stage(&sel, &ds).unwrap();
        assert!(!s.available);
        assert_eq!((s.min, s.max, s.count), (None, None, 0));
    }

    #[test]
    fn pushes_and_rollbacks_only_append() {
        let ds = nine();
        let mut chain = init_chain(&ds);
        let vac = SelectionState::vacuous(ds.schema());
        for k in 0..5 {
            let levels: &[&str] = if k % 2 == 0 { &["odd"] } else { &["even", "odd"] };
            let before = chain.clone();
            chain.push_stage(&vac.with_levels("W", levels).unwrap(), &ds).unwrap();
            assert_eq!(chain.len(), before.len() + 1);
            assert_eq!(&chain.stages()[..before.len()], before.stages());
        }
        assert_eq!(chain.len(), 6);

        let before = chain.clone();
        let replica = chain.rollback(4, &ds).unwrap().clone();
        assert_eq!(chain.len(), 7);
        assert_eq!(&chain.stages()[..6], before.stages());
        let src = chain.stage(4).unwrap();
        assert_eq!(replica.selection, src.selection);
        assert_eq!((replica.min, replica.max), (src.min, src.max));
        assert_eq!(replica.replica_of, Some(4));
        assert_eq!(replica.index, 7);

        let last = chain.rollback(7, &ds).unwrap().clone();
        assert_eq!(last.selection, replica.selection);
        assert_eq!(chain.len(), 8);

        assert_eq!(
            chain.rollback(0, &ds).unwrap_err(),
            Error::StageOutOfRange { index: 0, len: 8 }
        );
        assert!(chain.rollback(9, &ds).is_err());
        assert_eq!(chain.len(), 8);
    }

    #[test]
    fn rollback_selection_serializes_identically() {
        let ds = nine();
        let mut chain = init_chain(&ds);
        let sel = SelectionState::vacuous(ds.schema()).with_levels("W", &["odd"]).unwrap();
        chain.push_stage(&sel, &ds).unwrap();
        chain.push_stage(&sel.with_active("W", false).unwrap(), &ds).unwrap();
        chain.rollback(2, &ds).unwrap();
        assert_eq!(
            serde_json::to_string(&chain.last().selection).unwrap(),
            serde_json::to_string(&chain.stage(2).unwrap().selection).unwrap()
        );
    }

    #[test]
    fn tightening_pushes_narrow_the_range() {
        let data = synth::systems_like(5_000, 1);
        let ds = data.encode().unwrap();
        let mut chain = init_chain(&ds);
        let mut sel = SelectionState::vacuous(ds.schema());
        for (p, level) in [("Workload", "dbsrvr"), ("FileSystem", "xfs"), ("BlockSize", "4096")] {
            sel = sel.with_levels(p, &[level]).unwrap();
            chain.push_stage(&sel, &ds).unwrap();
        }
        for w in chain.stages().windows(2) {
            assert!(w[1].min.unwrap() >= w[0].min.unwrap());
            assert!(w[1].max.unwrap() <= w[0].max.unwrap());
        }
    }

    #[test]
    fn labels_describe_the_delta() {
        let ds = synth::systems_like(200, 1).encode().unwrap();
        let vac = SelectionState::vacuous(ds.schema());
        assert_eq!(describe_change(&vac, &vac), "(unchanged)");
        let off = vac.with_active("BlockSize", false).unwrap();
        assert_eq!(describe_change(&vac, &off), "-BlockSize");
        let on = off.with_levels("BlockSize", &["1024"]).unwrap();
        assert_eq!(describe_change(&off, &on), "+BlockSize:1024");
        let two = vac
            .with_levels("Workload", &["dbsrvr"])
            .unwrap()
            .with_levels("FileSystem", &["ext2", "xfs"])
            .unwrap();
        assert_eq!(describe_change(&vac, &two), "Workload:dbsrvr, FileSystem:ext2|xfs");
    }
}
