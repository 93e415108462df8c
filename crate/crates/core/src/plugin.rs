//! JSON-over-HTTP transport shared by the external decomposer, classifier and
//! extractor plug-ins.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum PluginError {
    #[error("request to {endpoint} failed after {attempts} attempt(s): {reason}")]
    Transport {
        endpoint: String,
        attempts: usize,
        reason: String,
    },
    #[error("malformed response from {endpoint}: {reason}")]
    BadResponse { endpoint: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    pub url: String,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub max_retries: usize,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration, max_retries: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEndpoint {
            url: url.into(),
            timeout,
            max_retries,
            agent,
        }
    }

    /// POSTs `body` as JSON and decodes the JSON reply. Transport errors and
    /// non-2xx statuses are retried; decoding errors are not.
    pub fn call<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, PluginError> {
        let mut last = String::new();
        for _ in 0..=self.max_retries {
            match self.agent.post(&self.url).send_json(body) {
                Ok(resp) => {
                    return resp.into_body().read_json::<R>().map_err(|e| {
                        PluginError::BadResponse {
                            endpoint: self.url.clone(),
                            reason: e.to_string(),
                        }
                    })
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(PluginError::Transport {
            endpoint: self.url.clone(),
            attempts: self.max_retries + 1,
            reason: last,
        })
    }
}
