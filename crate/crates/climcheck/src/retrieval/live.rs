//! HTTP providers configured from the environment.
//!
//! Web search speaks the Serper API, fact checks the Google Fact Check
//! Tools API. Reverse image search has no de facto standard; the client
//! posts the base64 image to `IMAGE_SEARCH_ENDPOINT` and expects a payload
//! shaped like [`ImageSearchResponse`], so any provider can be fronted by a
//! small adapter.

use std::time::Duration;

use serde_json::json;

use super::sources::{
    FactCheckProvider, FactCheckResponse, ImageSearchProvider, ImageSearchResponse, WebSearchProvider,
    WebSearchResponse,
};
use super::{ClientError, Query};
use crate::error::ConfigError;
use crate::http::{self, HttpError};
use crate::inference::encode_image;

pub const SEARCH_KEY_VAR: &str = "SEARCH_API_KEY";
pub const IMAGE_SEARCH_KEY_VAR: &str = "IMAGE_SEARCH_API_KEY";
pub const IMAGE_SEARCH_ENDPOINT_VAR: &str = "IMAGE_SEARCH_ENDPOINT";
pub const FACTCHECK_KEY_VAR: &str = "FACTCHECK_API_KEY";

const SERPER_URL: &str = "https://google.serper.dev/search";
const FACTCHECK_URL: &str = "https://factchecktools.googleapis.com/v1alpha1/claims:search";
const TIMEOUT: Duration = Duration::from_secs(30);

fn env(var: &str) -> Result<String, ConfigError> {
    std::env::var(var).map_err(|_| ConfigError::Invalid(format!("{var} is not set")))
}

fn client_error(e: HttpError) -> ClientError {
    match e {
        HttpError::Transport(m) => ClientError::Transport(m),
        HttpError::Rejected(m) => ClientError::Provider(m),
    }
}

fn decode<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, ClientError> {
    serde_json::from_value(value).map_err(|e| ClientError::Provider(format!("unexpected payload: {e}")))
}

pub struct SerperSearch {
    agent: ureq::Agent,
    key: String,
}

impl SerperSearch {
    pub fn from_env() -> Result<Self, ConfigError> {
        Ok(SerperSearch { agent: http::agent(TIMEOUT), key: env(SEARCH_KEY_VAR)? })
    }
}

impl WebSearchProvider for SerperSearch {
    fn search(&self, _query: &Query<'_>, text: &str) -> Result<WebSearchResponse, ClientError> {
        let body = json!({ "q": text, "num": 10 });
        decode(http::post_json(&self.agent, SERPER_URL, &[("X-API-KEY", &self.key)], &body).map_err(client_error)?)
    }
}

pub struct GoogleFactCheck {
    agent: ureq::Agent,
    key: String,
}

impl GoogleFactCheck {
    pub fn from_env() -> Result<Self, ConfigError> {
        Ok(GoogleFactCheck { agent: http::agent(TIMEOUT), key: env(FACTCHECK_KEY_VAR)? })
    }
}

impl FactCheckProvider for GoogleFactCheck {
    fn lookup(&self, _query: &Query<'_>, claim: &str) -> Result<FactCheckResponse, ClientError> {
        let params = [("query", claim), ("languageCode", "en"), ("pageSize", "10"), ("key", self.key.as_str())];
        decode(http::get_json(&self.agent, FACTCHECK_URL, &params).map_err(client_error)?)
    }
}

pub struct ImageSearchEndpoint {
    agent: ureq::Agent,
    endpoint: String,
    key: String,
}

impl ImageSearchEndpoint {
    pub fn from_env() -> Result<Self, ConfigError> {
        Ok(ImageSearchEndpoint {
            agent: http::agent(TIMEOUT),
            endpoint: env(IMAGE_SEARCH_ENDPOINT_VAR)?,
            key: env(IMAGE_SEARCH_KEY_VAR)?,
        })
    }
}

impl ImageSearchProvider for ImageSearchEndpoint {
    fn reverse_search(&self, query: &Query<'_>) -> Result<ImageSearchResponse, ClientError> {
        let image =
            encode_image(query.image_path).map_err(|e| ClientError::Provider(format!("image is unreadable: {e}")))?;
        let body = json!({ "mime": image.mime, "image_base64": image.data_base64 });
        decode(http::post_json(&self.agent, &self.endpoint, &[("X-API-KEY", &self.key)], &body).map_err(client_error)?)
    }
}
