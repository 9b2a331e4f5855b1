//! Shared JSON-over-HTTP plumbing for the embedder and model adapters.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::TransportError;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first one, only for retryable failures.
    pub retries: u32,
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }
}

pub(crate) struct JsonClient {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl JsonClient {
    pub fn new(config: HttpConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TransportError {
                message: format!("cannot build HTTP client: {e}"),
                retryable: false,
                attempts: 0,
            })?;
        Ok(Self { config, client })
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, TransportError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.post_once(body) {
                Ok(resp) => return Ok(resp),
                Err((message, retryable)) => {
                    if retryable && attempts <= self.config.retries {
                        log::debug!("retrying {} after: {message}", self.config.endpoint);
                        std::thread::sleep(self.config.backoff * attempts);
                        continue;
                    }
                    return Err(TransportError {
                        message,
                        retryable,
                        attempts,
                    });
                }
            }
        }
    }

    fn post_once<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, (String, bool)> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .json(body)
            .send()
            .map_err(|e| {
                let retryable = e.is_timeout() || e.is_connect() || e.is_request();
                (format!("POST {}: {e}", self.config.endpoint), retryable)
            })?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err((
                format!("POST {} returned {status}", self.config.endpoint),
                retryable,
            ));
        }
        response.json::<Resp>().map_err(|e| {
            (
                format!("invalid response body from {}: {e}", self.config.endpoint),
                false,
            )
        })
    }
}
