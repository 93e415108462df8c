use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{DecomposeError, Decomposer, HistoryTurn};
use crate::plan::parse_plan;
use crate::plugin::HttpEndpoint;

/// Decomposer backed by an external plan generator reached over HTTP.
#[derive(Debug, Clone)]
pub struct GeneratorClient {
    endpoint: HttpEndpoint,
}

#[derive(Serialize)]
struct Request<'a> {
    question: &'a str,
    history: &'a [HistoryTurn],
}

#[derive(Deserialize)]
struct Response {
    plan_text: String,
}

impl GeneratorClient {
    pub fn new(url: impl Into<String>, timeout: Duration, max_retries: usize) -> Self {
        GeneratorClient {
            endpoint: HttpEndpoint::new(url, timeout, max_retries),
        }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }
}

impl Decomposer for GeneratorClient {
    /// An unparseable reply is retried once before giving up.
    fn step(&self, question: &str, history: &[HistoryTurn]) -> Result<String, DecomposeError> {
        let req = Request { question, history };
        let first: Response = self.endpoint.call(&req)?;
        if parse_plan(&first.plan_text).is_ok() {
            return Ok(first.plan_text);
        }
        let second: Response = self.endpoint.call(&req)?;
        match parse_plan(&second.plan_text) {
            Ok(_) => Ok(second.plan_text),
            Err(error) => Err(DecomposeError::UnparseablePlan {
                question: question.to_string(),
                raw: second.plan_text,
                error,
            }),
        }
    }
}
