//! Chat-completion clients: benchmark sweeps over a dataset and the
//! three-stage overview/tag/assign flow for building tag libraries.

mod bench;
mod http;
mod mock;
mod osd;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{
    build_prompt, read_transcript, run_benchmark, BenchOptions, BenchOutput, Prompt, TranscriptEntry,
};
pub use http::HttpProvider;
pub use mock::{MockFault, MockFixture, MockMode, MockProvider};
pub use osd::{
    apply_osd_output, montage, osd_tag_category, render_asset_preview, AssetPreview, OsdTagOutput, StageExchange,
};

/// Where and how to reach a model. The API key is never stored here, only
/// the name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub name: String,
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
}

fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    4
}
fn default_concurrency() -> usize {
    4
}

impl ModelEndpoint {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_concurrency == 0 {
            return Err(ClientError::Config(format!("endpoint `{}`: max_concurrency must be ≥ 1", self.name)));
        }
        if self.timeout_s == 0 {
            return Err(ClientError::Config(format!("endpoint `{}`: timeout_s must be ≥ 1", self.name)));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    /// Free-form reasoning before the answer line.
    Thinking,
    /// Answer line only.
    Direct,
}

impl std::str::FromStr for PromptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "thinking" => Ok(PromptMode::Thinking),
            "direct" => Ok(PromptMode::Direct),
            _ => Err(format!("unknown mode `{s}` (thinking|direct)")),
        }
    }
}

/// One chat turn: a system instruction, a user text and PNG images.
#[derive(Clone)]
pub struct ChatRequest {
    /// Caller-side label (qid or stage name); not sent on the wire.
    pub tag: String,
    pub system: String,
    pub text: String,
    pub images: Vec<Vec<u8>>,
    pub seed: u64,
}

impl std::fmt::Debug for ChatRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatRequest")
            .field("tag", &self.tag)
            .field("text", &self.text)
            .field("images", &self.images.len())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Worth retrying: rate limits, 5xx, timeouts, dropped connections.
    #[error("transient failure ({status:?}): {message}")]
    Transient { status: Option<u16>, message: String },
    #[error("authentication rejected ({status})")]
    Auth { status: u16 },
    #[error("request failed ({status:?}): {message}")]
    Permanent { status: Option<u16>, message: String },
}

impl ProviderError {
    pub fn from_status(status: u16, message: String) -> ProviderError {
        match status {
            401 | 403 => ProviderError::Auth { status },
            408 | 409 | 425 | 429 | 500..=599 => ProviderError::Transient { status: Some(status), message },
            _ => ProviderError::Permanent { status: Some(status), message },
        }
    }
}

pub trait ChatProvider: Send + Sync {
    /// Endpoint name used in diagnostics.
    fn name(&self) -> &str;
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError>;
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint `{endpoint}` rejected the credentials")]
    Auth { endpoint: String },
    #[error("environment variable `{var}` holding the API key for `{endpoint}` is unset")]
    MissingKey { endpoint: String, var: String },
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("stage {stage}{}: {message}", asset.as_ref().map(|a| format!(" (asset `{a}`)")).unwrap_or_default())]
    Stage { stage: u8, asset: Option<String>, message: String, raw: String, transcript: Vec<StageExchange> },
    #[error("stage {stage}: {source}")]
    Provider { stage: u8, source: ProviderError },
}

pub(crate) fn sha256_hex(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
