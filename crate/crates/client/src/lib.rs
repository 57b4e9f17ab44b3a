//! Async client for the levelscope HTTP API.
//!
//! Typed methods decode responses into the shared core types; the `*_raw`
//! variants return the response body untouched, for callers that need the
//! exact bytes the service produced.

use levelscope_core::wire::{ErrorBody, RollbackRequest, SessionList, UploadResponse};
use levelscope_core::{SelectionState, TriView};
use reqwest::{RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: StatusCode, message: String },
    #[error("could not decode response: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            ClientError::Decode(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Options for [`Client::upload`]. Unset fields use the server defaults.
#[derive(Debug, Clone, Default)]
pub struct UploadOptions {
    pub seed: Option<u64>,
    pub delimiter: Option<char>,
    pub units: Option<String>,
    pub no_sample_threshold: Option<usize>,
    pub p_target: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_owned();
        Self {
            http: reqwest::Client::new(),
            base,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(&self, req: RequestBuilder) -> Result<String> {
        let resp = req.send().await?;
        let status = resp.status();
        let body = resp.text().await?;
        if status.is_success() {
            return Ok(body);
        }
        let message = serde_json::from_str::<ErrorBody>(&body)
            .map(|e| e.error)
            .unwrap_or(body);
        Err(ClientError::Api { status, message })
    }

    fn decode<T: DeserializeOwned>(body: &str) -> Result<T> {
        Ok(serde_json::from_str(body)?)
    }

    pub async fn upload(
        &self,
        body: impl Into<reqwest::Body>,
        target: &str,
        opts: &UploadOptions,
    ) -> Result<UploadResponse> {
        let mut query: Vec<(&str, String)> = vec![("target", target.to_owned())];
        if let Some(seed) = opts.seed {
            query.push(("seed", seed.to_string()));
        }
        if let Some(d) = opts.delimiter {
            query.push(("delimiter", d.to_string()));
        }
        if let Some(units) = &opts.units {
            query.push(("units", units.clone()));
        }
        if let Some(t) = opts.no_sample_threshold {
            query.push(("no_sample_threshold", t.to_string()));
        }
        if let Some(p) = opts.p_target {
            query.push(("p_target", p.to_string()));
        }
        let req = self
            .http
            .post(self.url("/api/dataset"))
            .query(&query)
            .header(reqwest::header::CONTENT_TYPE, "text/csv")
            .body(body);
        Self::decode(&self.send(req).await?)
    }

    pub async fn sessions(&self) -> Result<SessionList> {
        Self::decode(&self.send(self.http.get(self.url("/api/sessions"))).await?)
    }

    pub async fn view_raw(&self, session: &str) -> Result<String> {
        self.send(self.http.get(self.url(&format!("/api/session/{session}/view"))))
            .await
    }

    pub async fn view(&self, session: &str) -> Result<TriView> {
        Self::decode(&self.view_raw(session).await?)
    }

    pub async fn update_selection_raw(&self, session: &str, sel: &SelectionState) -> Result<String> {
        let req = self
            .http
            .post(self.url(&format!("/api/session/{session}/selection")))
            .json(sel);
        self.send(req).await
    }

    pub async fn update_selection(&self, session: &str, sel: &SelectionState) -> Result<TriView> {
        Self::decode(&self.update_selection_raw(session, sel).await?)
    }

    pub async fn rollback_raw(&self, session: &str, stage: usize) -> Result<String> {
        let req = self
            .http
            .post(self.url(&format!("/api/session/{session}/rollback")))
            .json(&RollbackRequest { stage });
        self.send(req).await
    }

    pub async fn rollback(&self, session: &str, stage: usize) -> Result<TriView> {
        Self::decode(&self.rollback_raw(session, stage).await?)
    }
}
