//! JSON bodies exchanged over the HTTP API besides [`TriView`](crate::TriView)
//! and [`SelectionState`](crate::SelectionState).

use serde::{Deserialize, Serialize};

use crate::ingest::Schema;
use crate::sampling::SampleReport;

/// Response to a dataset upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub session_id: String,
    pub records: usize,
    pub schema: Schema,
    pub sample_fraction: f64,
    pub p_value: f64,
    pub sample: SampleReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollbackRequest {
    /// 1-based stage to replicate.
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionList {
    pub sessions: Vec<String>,
}
