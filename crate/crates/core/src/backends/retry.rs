use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder, Response};
use tracing::warn;

use super::BackendError;

#[derive(Clone, Copy, Debug)]
pub(crate) struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff: Duration,
}

/// Sends the request built by `build` until it succeeds, fails with a 4xx, or the
/// attempt budget runs out. Each attempt sends an identical body.
pub(crate) fn send(
    policy: RetryPolicy,
    what: &str,
    build: impl Fn() -> RequestBuilder,
) -> Result<Response, BackendError> {
    if policy.max_attempts == 0 {
        return Err(BackendError::Transport(format!("{what}: retry budget is 0, nothing sent")));
    }
    let mut delay = policy.backoff;
    let mut last = None;
    for attempt in 1..=policy.max_attempts {
        let err = match build().send() {
            Ok(resp) if resp.status().is_success() => return Ok(resp),
            Ok(resp) => {
                let status = resp.status().as_u16();
                let body = resp.text().unwrap_or_default();
                let err = BackendError::Status { status, body };
                if (400..500).contains(&status) {
                    return Err(err);
                }
                err
            }
            Err(e) => BackendError::Transport(format!("{what}: {e}")),
        };
        if attempt < policy.max_attempts {
            warn!(attempt, error = %err, "{what} failed; retrying in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
        }
        last = Some(err);
    }
    Err(last.expect("at least one attempt was made"))
}

pub(crate) fn client(timeout: Duration) -> Result<Client, BackendError> {
    Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| BackendError::Transport(format!("cannot build HTTP client: {e}")))
}
