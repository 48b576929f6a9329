//! HTTP client for the segmentation/propagation model server.
//!
//! Wire contract (JSON bodies, masks as `{"w","h","runs"}` RLE records, frame
//! indices 1-based within the session's frame list):
//!
//! | call | request | response |
//! |------|---------|----------|
//! | `POST /segment` | `{image: b64 PNG, text}` | `{mask}` |
//! | `POST /sessions` | `{frames: [b64 PNG]}` | `{session_id}` |
//! | `POST /sessions/{id}/seed` | `{frame_index, mask}` | `{}` |
//! | `POST /sessions/{id}/run` | `{from, to}` | `{masks: [..]}` |
//! | `DELETE /sessions/{id}` | | |
//! | `GET /healthz` | | `{mode}` |

use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::retry::{self, RetryPolicy};
use super::{check_append, check_span, BackendError, ModelServerConfig, PropagationSession, Propagator, Segmenter};
use crate::io::encode_frame_png;
use crate::model::{decode_mask_rle, encode_mask_rle, BinaryMask, Frame, RleMask};

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SegmentRequest {
    pub image: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SegmentResponse {
    pub mask: RleMask,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CreateSessionRequest {
    pub frames: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CreateSessionResponse {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeedRequest {
    pub frame_index: usize,
    pub mask: RleMask,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunRequest {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunResponse {
    pub masks: Vec<RleMask>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HealthResponse {
    pub mode: String,
}

struct Inner {
    base: String,
    http: Client,
    policy: RetryPolicy,
}

impl Inner {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn post<T: Serialize, R: for<'de> Deserialize<'de>>(&self, path: &str, body: &T) -> Result<R, BackendError> {
        let url = self.url(path);
        let resp = retry::send(self.policy, path, || self.http.post(&url).json(body))?;
        resp.json()
            .map_err(|e| BackendError::Decode(format!("{path}: {e}")))
    }

    fn delete(&self, path: &str) -> Result<(), BackendError> {
        let url = self.url(path);
        retry::send(self.policy, path, || self.http.delete(&url)).map(|_| ())
    }
}

/// Client for one model server; acts as both [`Segmenter`] and [`Propagator`].
#[derive(Clone)]
pub struct ModelServerClient {
    inner: Arc<Inner>,
}

fn b64_png(frame: &Frame) -> Result<String, BackendError> {
    let png = encode_frame_png(frame).map_err(|e| BackendError::Usage(e.to_string()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(png))
}

fn decode_checked(rle: &RleMask, dims: (u32, u32)) -> Result<BinaryMask, BackendError> {
    let mask = decode_mask_rle(rle).map_err(|e| BackendError::Decode(e.to_string()))?;
    if mask.dims() != dims {
        return Err(BackendError::Decode(format!(
            "mask is {}x{}, frame is {}x{}",
            mask.width(),
            mask.height(),
            dims.0,
            dims.1
        )));
    }
    Ok(mask)
}

impl ModelServerClient {
    pub fn new(cfg: &ModelServerConfig) -> Result<Self, BackendError> {
        Ok(Self {
            inner: Arc::new(Inner {
                base: cfg.url.trim_end_matches('/').to_string(),
                http: retry::client(Duration::from_secs(cfg.timeout_secs))?,
                policy: RetryPolicy {
                    max_attempts: cfg.max_attempts,
                    backoff: Duration::from_millis(cfg.backoff_ms),
                },
            }),
        })
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let url = self.inner.url("/healthz");
        let resp = retry::send(self.inner.policy, "/healthz", || self.inner.http.get(&url))?;
        resp.json()
            .map_err(|e| BackendError::Decode(format!("/healthz: {e}")))
    }
}

impl Segmenter for ModelServerClient {
    fn segment(&self, frame: &Frame, description: &str) -> Result<BinaryMask, BackendError> {
        let req = SegmentRequest {
            image: b64_png(frame)?,
            text: description.to_string(),
        };
        let resp: SegmentResponse = self.inner.post("/segment", &req)?;
        decode_checked(&resp.mask, (frame.width(), frame.height()))
    }
}

impl Propagator for ModelServerClient {
    fn open(&self, frames: &[Frame]) -> Result<Box<dyn PropagationSession>, BackendError> {
        let first = frames
            .first()
            .ok_or_else(|| BackendError::Usage("cannot open a session without frames".into()))?;
        let mut session = HttpSession {
            inner: self.inner.clone(),
            remote_id: None,
            first: first.index(),
            dims: (first.width(), first.height()),
            frames: frames.to_vec(),
            uploaded: 0,
            seed: None,
            label: String::new(),
        };
        session.upload()?;
        Ok(Box::new(session))
    }
}

/// Server session mirrored client-side. The wire contract has no frame-append call,
/// so appending frames makes the next `run` re-create the remote session with the
/// full frame list and re-seed it.
struct HttpSession {
    inner: Arc<Inner>,
    remote_id: Option<String>,
    first: usize,
    dims: (u32, u32),
    frames: Vec<Frame>,
    uploaded: usize,
    seed: Option<(usize, BinaryMask)>,
    label: String,
}

impl HttpSession {
    fn local(&self, index: usize) -> usize {
        index - self.first + 1
    }

    fn close_remote(&mut self) {
        if let Some(id) = self.remote_id.take() {
            if let Err(e) = self.inner.delete(&format!("/sessions/{id}")) {
                warn!(session = %id, error = %e, "could not delete remote session");
            }
        }
    }

    fn upload(&mut self) -> Result<(), BackendError> {
        self.close_remote();
        let frames = self.frames.iter().map(b64_png).collect::<Result<Vec<_>, _>>()?;
        let resp: CreateSessionResponse = self.inner.post("/sessions", &CreateSessionRequest { frames })?;
        debug!(session = %resp.session_id, frames = self.frames.len(), "opened remote session");
        self.label = resp.session_id.clone();
        self.remote_id = Some(resp.session_id);
        self.uploaded = self.frames.len();
        if let Some((index, mask)) = self.seed.clone() {
            self.send_seed(index, &mask)?;
        }
        Ok(())
    }

    fn send_seed(&self, index: usize, mask: &BinaryMask) -> Result<(), BackendError> {
        let id = self.remote_id.as_deref().expect("session uploaded before seeding");
        let req = SeedRequest {
            frame_index: self.local(index),
            mask: encode_mask_rle(mask),
        };
        let _: serde_json::Value = self.inner.post(&format!("/sessions/{id}/seed"), &req)?;
        Ok(())
    }
}

impl PropagationSession for HttpSession {
    fn id(&self) -> &str {
        &self.label
    }

    fn span(&self) -> (usize, usize) {
        (self.first, self.first + self.frames.len() - 1)
    }

    fn append(&mut self, frame: &Frame) -> Result<(), BackendError> {
        check_append(self.span(), frame)?;
        if (frame.width(), frame.height()) != self.dims {
            return Err(BackendError::Usage(format!("frame {} changes resolution", frame.index())));
        }
        self.frames.push(frame.clone());
        Ok(())
    }

    fn seed(&mut self, frame_index: usize, mask: &BinaryMask) -> Result<(), BackendError> {
        let span = self.span();
        if frame_index < span.0 || frame_index > span.1 {
            return Err(BackendError::Usage(format!(
                "seed frame {frame_index} outside session frames {}..={}",
                span.0, span.1
            )));
        }
        if mask.dims() != self.dims {
            return Err(BackendError::Usage("seed mask does not match frame size".into()));
        }
        if self.uploaded == self.frames.len() {
            self.send_seed(frame_index, mask)?;
        }
        self.seed = Some((frame_index, mask.clone()));
        Ok(())
    }

    fn run(&mut self, from: usize, to: usize) -> Result<Vec<BinaryMask>, BackendError> {
        if self.seed.is_none() {
            return Err(BackendError::Usage("run before seed".into()));
        }
        check_span(self.span(), from, to)?;
        if self.uploaded != self.frames.len() {
            self.upload()?;
        }
        let id = self.remote_id.clone().expect("uploaded");
        let req = RunRequest {
            from: self.local(from),
            to: self.local(to),
        };
        let resp: RunResponse = self.inner.post(&format!("/sessions/{id}/run"), &req)?;
        if resp.masks.len() != to - from + 1 {
            return Err(BackendError::Decode(format!(
                "asked for {} masks, got {}",
                to - from + 1,
                resp.masks.len()
            )));
        }
        resp.masks.iter().map(|m| decode_checked(m, self.dims)).collect()
    }
}

impl Drop for HttpSession {
    fn drop(&mut self) {
        self.close_remote();
    }
}
