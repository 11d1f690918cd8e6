//! HTTP client contract for a remote scene analyzer.
//!
//! The analyzer service receives `{"image": <base64>, "prompt": <text>}` by
//! POST and answers `{"description": <canonical text>}`. No model ships with
//! this crate; the client is the integration point for one, and the tests
//! exercise the contract against stub servers.

use crate::scene::{parse_description, DescriptionParseError, SceneDescription};
use serde::Deserialize;
use std::time::Duration;

/// Default instruction sent to the analyzer.
pub const DEFAULT_PROMPT: &str = "Analyze the drone arena image and identify all cylindrical stands or humans as obstacles in the scene. Count the total number of cylindrical stands or humans, specifying the number of obstacles before the gate and the number of obstacles after the gate. If there are no obstacles before the gate, mention that explicitly. Calculate the relative distances between each obstacle and describe their spacing as 'closely spaced' or 'widely spaced.' The spacing should be based on the distance between their feet in the image.";

/// Default request timeout; generous next to the several seconds a large
/// vision model needs per image.
pub const DEFAULT_TIMEOUT_SECS: u64 = 10;

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("analyzer returned HTTP status {0}")]
    Status(u16),
    #[error("malformed response payload ({reason}); raw payload: {raw:?}")]
    BadPayload { reason: String, raw: String },
    #[error("analyzer text does not parse ({source}); raw text: {raw:?}")]
    BadDescription {
        #[source]
        source: DescriptionParseError,
        raw: String,
    },
}

/// Client for a remote analyzer endpoint.
pub struct RemoteAnalyzer {
    endpoint: String,
    prompt: String,
    timeout: Duration,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ResponseBody {
    description: String,
}

impl RemoteAnalyzer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteAnalyzer {
            endpoint: endpoint.into(),
            prompt: DEFAULT_PROMPT.to_string(),
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
            agent: ureq::agent(),
        }
    }

    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt = prompt.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    /// Sends the image and prompt, parses the canonical description from the
    /// response.
    pub fn analyze(&self, image: &[u8]) -> Result<SceneDescription, RemoteError> {
        let body = serde_json::json!({
            "image": base64_encode(image),
            "prompt": self.prompt,
        })
        .to_string();
        let response = self
            .agent
            .post(&self.endpoint)
            .timeout(self.timeout)
            .set("Content-Type", "application/json")
            .send_string(&body)
            .map_err(|e| self.map_error(e))?;
        let raw = response
            .into_string()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        let parsed: ResponseBody = serde_json::from_str(&raw).map_err(|e| RemoteError::BadPayload {
            reason: e.to_string(),
            raw: raw.clone(),
        })?;
        parse_description(&parsed.description).map_err(|source| RemoteError::BadDescription {
            source,
            raw: parsed.description,
        })
    }

    fn map_error(&self, e: ureq::Error) -> RemoteError {
        match e {
            ureq::Error::Status(code, _) => RemoteError::Status(code),
            ureq::Error::Transport(t) => {
                let msg = t.to_string();
                if msg.contains("timed out") || msg.contains("timeout") {
                    RemoteError::Timeout(self.timeout)
                } else {
                    RemoteError::Transport(msg)
                }
            }
        }
    }
}

const BASE64_ALPHABET: &[u8; 64] =
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

/// Standard base64 with padding.
pub fn base64_encode(data: &[u8]) -> String {
    let mut out = String::with_capacity(data.len().div_ceil(3) * 4);
    for chunk in data.chunks(3) {
        let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
        let n = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
        let enc = [(n >> 18) & 63, (n >> 12) & 63, (n >> 6) & 63, n & 63];
        out.push(BASE64_ALPHABET[enc[0] as usize] as char);
        out.push(BASE64_ALPHABET[enc[1] as usize] as char);
        out.push(if chunk.len() > 1 { BASE64_ALPHABET[enc[2] as usize] as char } else { '=' });
        out.push(if chunk.len() > 2 { BASE64_ALPHABET[enc[3] as usize] as char } else { '=' });
    }
    out
}
