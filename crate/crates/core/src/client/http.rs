use base64::Engine;
use serde_json::{json, Value};

use super::{ChatProvider, ChatRequest, ClientError, ModelEndpoint, ProviderError};

/// Chat-completions JSON over HTTP with base64 data-URL images.
pub struct HttpProvider {
    endpoint: ModelEndpoint,
    key: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider").field("endpoint", &self.endpoint).field("key", &"<redacted>").finish()
    }
}

impl HttpProvider {
    /// Reads the key from the endpoint's environment variable.
    pub fn new(endpoint: ModelEndpoint) -> Result<HttpProvider, ClientError> {
        endpoint.validate()?;
        let key = std::env::var(&endpoint.api_key_env).map_err(|_| ClientError::MissingKey {
            endpoint: endpoint.name.clone(),
            var: endpoint.api_key_env.clone(),
        })?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpProvider { endpoint, key, agent })
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn body(&self, req: &ChatRequest) -> Value {
        let b64 = base64::engine::general_purpose::STANDARD;
        let mut content = vec![json!({"type": "text", "text": req.text})];
        for img in &req.images {
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", b64.encode(img))}
            }));
        }
        json!({
            "model": self.endpoint.model_name,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": content}
            ],
            "temperature": 0,
            "seed": req.seed,
        })
    }
}

fn content_text(v: &Value) -> Option<String> {
    let c = v.pointer("/choices/0/message/content")?;
    match c {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect()),
        _ => None,
    }
}

impl ChatProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.endpoint.name
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let url = format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'));
        let body = serde_json::to_vec(&self.body(req)).expect("json body");
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .header("Content-Type", "application/json")
            .send(&body[..]);
        let mut resp = match resp {
            Ok(r) => r,
            // transport-level trouble: timeouts, resets, DNS
            Err(e) => return Err(ProviderError::Transient { status: None, message: e.to_string() }),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        if !(200..300).contains(&status) {
            let mut msg = text;
            msg.truncate(500);
            return Err(ProviderError::from_status(status, msg));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Permanent { status: Some(status), message: format!("response is not JSON: {e}") })?;
        content_text(&v)
            .ok_or_else(|| ProviderError::Permanent { status: Some(status), message: "response has no message content".into() })
    }
}
