use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn user(model: &str, prompt: String) -> Self {
        ChatRequest {
            model: model.to_string(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt,
            }],
            temperature: 0.0,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct EndpointFailure {
    pub message: String,
}

impl EndpointFailure {
    pub fn new(message: impl Into<String>) -> Self {
        EndpointFailure {
            message: message.into(),
        }
    }
}

/// Anything that answers a chat request with completion text.
pub trait ChatEndpoint: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointFailure>;
}

impl<F> ChatEndpoint for F
where
    F: Fn(&ChatRequest) -> Result<String, EndpointFailure> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointFailure> {
        self(request)
    }
}

/// Describes an endpoint's wire shape: where the request fields go, where the
/// completion text is found, and how to authenticate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterSpec {
    pub url: String,
    pub model_field: String,
    pub messages_field: String,
    pub temperature_field: String,
    /// Dotted path to the completion text; numeric parts index arrays.
    pub response_path: String,
    /// Environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub auth_header: String,
    pub auth_prefix: String,
    /// Extra top-level body fields, copied verbatim.
    pub extra: serde_json::Map<String, Value>,
    pub timeout_secs: u64,
}

impl Default for AdapterSpec {
    fn default() -> Self {
        AdapterSpec {
            url: String::new(),
            model_field: "model".into(),
            messages_field: "messages".into(),
            temperature_field: "temperature".into(),
            response_path: "choices.0.message.content".into(),
            api_key_env: None,
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            extra: serde_json::Map::new(),
            timeout_secs: 60,
        }
    }
}

impl AdapterSpec {
    pub fn openai_compatible(url: impl Into<String>) -> Self {
        AdapterSpec {
            url: url.into(),
            ..Default::default()
        }
    }

    pub fn body(&self, request: &ChatRequest) -> Value {
        let mut body = self.extra.clone();
        body.insert(self.model_field.clone(), json!(request.model));
        body.insert(self.messages_field.clone(), json!(request.messages));
        body.insert(self.temperature_field.clone(), json!(request.temperature));
        Value::Object(body)
    }

    pub fn extract(&self, response: &Value) -> Option<String> {
        let mut v = response;
        for part in self.response_path.split('.').filter(|p| !p.is_empty()) {
            v = match part.parse::<usize>() {
                Ok(i) => v.get(i)?,
                Err(_) => v.get(part)?,
            };
        }
        v.as_str().map(str::to_string)
    }
}

#[cfg(feature = "http")]
pub use http::HttpEndpoint;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use super::*;

    /// Blocking HTTP client for an [`AdapterSpec`].
    pub struct HttpEndpoint {
        adapter: AdapterSpec,
        agent: ureq::Agent,
        api_key: Option<String>,
    }

    impl HttpEndpoint {
        /// Reads the API key from the adapter's environment variable, if named.
        pub fn new(adapter: AdapterSpec) -> Result<Self, EndpointFailure> {
            let api_key = match &adapter.api_key_env {
                Some(var) => Some(
                    std::env::var(var).map_err(|_| EndpointFailure::new(format!("environment variable {var} is not set")))?,
                ),
                None => None,
            };
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(adapter.timeout_secs.max(1))))
                .build()
                .into();
            Ok(HttpEndpoint { adapter, agent, api_key })
        }
    }

    impl ChatEndpoint for HttpEndpoint {
        fn complete(&self, request: &ChatRequest) -> Result<String, EndpointFailure> {
            let mut req = self.agent.post(&self.adapter.url);
            if let Some(key) = &self.api_key {
                req = req.header(&self.adapter.auth_header, &format!("{}{}", self.adapter.auth_prefix, key));
            }
            let mut resp = req
                .send_json(self.adapter.body(request))
                .map_err(|e| EndpointFailure::new(e.to_string()))?;
            let value: Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| EndpointFailure::new(format!("bad response body: {e}")))?;
            self.adapter
                .extract(&value)
                .ok_or_else(|| EndpointFailure::new(format!("no text at `{}`", self.adapter.response_path)))
        }
    }
}
