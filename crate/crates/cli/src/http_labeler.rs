//! Client for the `POST /label` headline protocol.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use signalscope_core::labeling::{HeadlineService, LabelRequest, ServiceError};
use ureq::Agent;

#[derive(Serialize)]
struct WireRequest<'a> {
    topic_id: usize,
    documents: &'a [String],
    max_tokens: usize,
}

#[derive(Deserialize)]
struct WireResponse {
    label: String,
}

pub struct HttpHeadlineService {
    agent: Agent,
    url: String,
}

impl HttpHeadlineService {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpHeadlineService {
            agent,
            url: format!("{}/label", endpoint.trim_end_matches('/')),
        }
    }
}

impl HeadlineService for HttpHeadlineService {
    fn headline(&self, request: &LabelRequest) -> Result<String, ServiceError> {
        let body = WireRequest {
            topic_id: request.topic_id,
            documents: &request.documents,
            max_tokens: request.max_tokens,
        };
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| ServiceError(e.to_string()))?;
        if resp.status() != 200 {
            return Err(ServiceError(format!("status {}", resp.status())));
        }
        let parsed: WireResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| ServiceError(format!("bad response body: {e}")))?;
        let label = parsed.label.trim();
        if label.is_empty() {
            return Err(ServiceError("empty label".into()));
        }
        Ok(label.to_string())
    }
}
