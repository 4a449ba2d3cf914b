//! Thin blocking JSON-over-HTTP helpers shared by the live clients.

use std::time::Duration;

use serde_json::Value;
use ureq::Agent;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HttpError {
    /// Connection problems, timeouts, 429 and 5xx responses.
    Transport(String),
    /// Any other non-success response, or an undecodable body.
    Rejected(String),
}

pub fn agent(timeout: Duration) -> Agent {
    Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into()
}

fn transport(e: ureq::Error) -> HttpError {
    HttpError::Transport(e.to_string())
}

fn finish(mut response: ureq::http::Response<ureq::Body>) -> Result<Value, HttpError> {
    let status = response.status().as_u16();
    let body = response.body_mut().read_to_string().map_err(transport)?;
    match status {
        200..=299 => {
            serde_json::from_str(&body).map_err(|e| HttpError::Rejected(format!("undecodable response body: {e}")))
        }
        429 | 500..=599 => Err(HttpError::Transport(format!("HTTP {status}"))),
        _ => Err(HttpError::Rejected(format!("HTTP {status}: {}", truncate(&body, 300)))),
    }
}

pub fn post_json(agent: &Agent, url: &str, headers: &[(&str, &str)], body: &Value) -> Result<Value, HttpError> {
    let mut req = agent.post(url);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    finish(req.send_json(body).map_err(transport)?)
}

pub fn get_json(agent: &Agent, url: &str, query: &[(&str, &str)]) -> Result<Value, HttpError> {
    let mut req = agent.get(url);
    for (k, v) in query {
        req = req.query(*k, *v);
    }
    finish(req.call().map_err(transport)?)
}

pub fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
