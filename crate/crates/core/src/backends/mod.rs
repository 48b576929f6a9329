//! The three model agents behind narrow traits: a keyframe selector (multimodal chat
//! model), a text-prompted image segmenter, and a video mask propagator.
//!
//! Implementations: deterministic mocks driven by a JSON fixture ([`mock`]), an
//! OpenAI-compatible chat client for the selector ([`openai`]), and an HTTP client for
//! the segmentation/propagation model server ([`model_server`]).

pub mod config;
pub mod mock;
pub mod model_server;
pub mod openai;
mod retry;

use std::sync::Arc;

use thiserror::Error;

use crate::model::{BinaryMask, Frame};
use crate::sampling::GridImage;

pub use config::{ModelServerConfig, SelectorConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("service answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("service returned an empty response")]
    EmptyResponse,
    #[error("usage error: {0}")]
    Usage(String),
    #[error("could not decode service response: {0}")]
    Decode(String),
    #[error("{0}")]
    Unavailable(String),
}

impl BackendError {
    /// Attaches which instance/frame the failing call was for.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            BackendError::Transport(m) => BackendError::Transport(format!("{what}: {m}")),
            BackendError::Usage(m) => BackendError::Usage(format!("{what}: {m}")),
            BackendError::Decode(m) => BackendError::Decode(format!("{what}: {m}")),
            BackendError::Unavailable(m) => BackendError::Unavailable(format!("{what}: {m}")),
            BackendError::Status { status, body } => BackendError::Status {
                status,
                body: format!("{what}: {body}"),
            },
            BackendError::EmptyResponse => BackendError::Unavailable(format!("{what}: empty response")),
        }
    }
}

/// Multimodal model asked to pick keyframes (offline) or judge one frame (online).
/// Both calls return the model's raw text; parsing happens in [`crate::cot`].
pub trait KeyframeSelector: Send + Sync {
    fn select_keyframes(&self, grid: &GridImage, prompt: &str) -> Result<String, BackendError>;
    fn judge_frame(&self, frame: &Frame, prompt: &str) -> Result<String, BackendError>;
}

/// Text-prompted image segmenter. The returned mask has the frame's dimensions and
/// may be empty.
pub trait Segmenter: Send + Sync {
    fn segment(&self, frame: &Frame, description: &str) -> Result<BinaryMask, BackendError>;
}

/// Opens propagation sessions over a run of consecutive frames.
pub trait Propagator: Send + Sync {
    fn open(&self, frames: &[Frame]) -> Result<Box<dyn PropagationSession>, BackendError>;
}

/// One seeded mask tracked across frames. Frame indices are the clip's 1-based
/// indices. Single owner: only one worker drives a session.
///
/// Contract: after `seed(s, m)`, `run(s, s)` returns exactly `[m]`; frames on either
/// side of the seed are propagated away from it.
pub trait PropagationSession: Send {
    fn id(&self) -> &str;
    /// Index range `(first, last)` of the frames the session holds.
    fn span(&self) -> (usize, usize);
    /// Adds the next frame (index `last + 1`) for streaming use.
    fn append(&mut self, frame: &Frame) -> Result<(), BackendError>;
    fn seed(&mut self, frame_index: usize, mask: &BinaryMask) -> Result<(), BackendError>;
    /// Masks for frames `from..=to`, ascending.
    fn run(&mut self, from: usize, to: usize) -> Result<Vec<BinaryMask>, BackendError>;
}

/// Shared bookkeeping checks for session implementations.
pub(crate) fn check_span(span: (usize, usize), from: usize, to: usize) -> Result<(), BackendError> {
    if from > to {
        return Err(BackendError::Usage(format!("run range {from}..={to} is reversed")));
    }
    if from < span.0 || to > span.1 {
        return Err(BackendError::Usage(format!(
            "run range {from}..={to} outside session frames {}..={}",
            span.0, span.1
        )));
    }
    Ok(())
}

pub(crate) fn check_append(span: (usize, usize), frame: &Frame) -> Result<(), BackendError> {
    if frame.index() != span.1 + 1 {
        return Err(BackendError::Usage(format!(
            "appended frame {} does not follow frame {}",
            frame.index(),
            span.1
        )));
    }
    Ok(())
}

/// The three agents a pipeline run talks to.
#[derive(Clone)]
pub struct Agents {
    pub selector: Arc<dyn KeyframeSelector>,
    pub segmenter: Arc<dyn Segmenter>,
    pub propagator: Arc<dyn Propagator>,
}

impl Agents {
    pub fn new(
        selector: Arc<dyn KeyframeSelector>,
        segmenter: Arc<dyn Segmenter>,
        propagator: Arc<dyn Propagator>,
    ) -> Self {
        Self {
            selector,
            segmenter,
            propagator,
        }
    }
}

impl std::fmt::Debug for Agents {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agents").finish_non_exhaustive()
    }
}
