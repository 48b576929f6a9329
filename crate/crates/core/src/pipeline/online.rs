//! Streaming tracker. Every `xi` frames (at t = 1, 1 + xi, ...) the selector judges
//! whether the incoming frame should become the keyframe. A Yes replaces the keyframe
//! greedily, re-segments it with the raw query, and starts a new propagation session
//! anchored there; frames in between are tracked from the most recent keyframe.
//! Until a first keyframe exists every output mask is empty.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::backends::{Agents, PropagationSession};
use crate::cot::{build_online_prompt, parse_binary_selectivity};
use crate::model::{BinaryMask, Frame, Query};

pub const DEFAULT_ONLINE_XI: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OnlineError {
    #[error("judgment period must be at least 1")]
    ZeroPeriod,
    #[error("expected frame {expected}, got frame {got}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("frame {t} is {got:?}, stream is {expected:?}")]
    Resolution {
        t: usize,
        expected: (u32, u32),
        got: (u32, u32),
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keyframe {
    /// Index `p` of the selected frame.
    pub index: usize,
    pub frame: Frame,
    /// Segmenter output on the keyframe; propagation seed.
    pub key_mask: BinaryMask,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineState {
    pub xi: usize,
    pub keyframe: Option<Keyframe>,
    /// Index of the last frame consumed (0 before the first).
    pub last_t: usize,
    pub last_judged_t: usize,
}

impl OnlineState {
    /// Current keyframe index `p` (0 while there is none).
    pub fn keyframe_index(&self) -> usize {
        self.keyframe.as_ref().map_or(0, |k| k.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum OnlineEvent {
    Judged {
        t: usize,
        selected: bool,
        ambiguous: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    KeyframeSwitch {
        t: usize,
        previous: usize,
        key_mask_pixels: usize,
    },
    SegmentFailed {
        t: usize,
        error: String,
    },
    PropagationFailed {
        t: usize,
        error: String,
    },
}

pub struct OnlineTracker {
    prompt: String,
    query: Query,
    agents: Agents,
    state: OnlineState,
    dims: Option<(u32, u32)>,
    session: Option<Box<dyn PropagationSession>>,
    events: Vec<OnlineEvent>,
}

/// Fresh tracker: no keyframe, no session.
pub fn online_init(query: Query, xi: usize, agents: Agents) -> Result<OnlineTracker, OnlineError> {
    OnlineTracker::new(query, xi, agents)
}

impl OnlineTracker {
    pub fn new(query: Query, xi: usize, agents: Agents) -> Result<Self, OnlineError> {
        if xi == 0 {
            return Err(OnlineError::ZeroPeriod);
        }
        Ok(Self {
            prompt: build_online_prompt(&query),
            query,
            agents,
            state: OnlineState {
                xi,
                keyframe: None,
                last_t: 0,
                last_judged_t: 0,
            },
            dims: None,
            session: None,
            events: Vec::new(),
        })
    }

    pub fn state(&self) -> &OnlineState {
        &self.state
    }

    pub fn events(&self) -> &[OnlineEvent] {
        &self.events
    }

    pub fn drain_events(&mut self) -> Vec<OnlineEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn is_judgment_time(&self, t: usize) -> bool {
        (t - 1).is_multiple_of(self.state.xi)
    }

    fn judge(&mut self, frame: &Frame) -> bool {
        let t = frame.index();
        self.state.last_judged_t = t;
        let (selected, ambiguous, error) = match self.agents.selector.judge_frame(frame, &self.prompt) {
            Ok(text) => {
                let s = parse_binary_selectivity(&text);
                if s.ambiguous {
                    warn!(event = "ambiguous_judgment", t, response = %text);
                }
                (s.is_selected(), s.ambiguous, None)
            }
            Err(e) => {
                warn!(event = "judgment_failed", t, error = %e);
                (false, false, Some(e.to_string()))
            }
        };
        info!(event = "judged", t, selected, ambiguous);
        self.events.push(OnlineEvent::Judged {
            t,
            selected,
            ambiguous,
            error,
        });
        selected
    }

    /// Tries to make `frame` the keyframe; keeps the previous one on failure.
    fn switch_keyframe(&mut self, frame: &Frame) -> bool {
        let t = frame.index();
        let attempt = self
            .agents
            .segmenter
            .segment(frame, self.query.as_str())
            .and_then(|mask| {
                let mut session = self.agents.propagator.open(std::slice::from_ref(frame))?;
                session.seed(t, &mask)?;
                Ok((mask, session))
            });
        match attempt {
            Ok((key_mask, session)) => {
                let previous = self.state.keyframe_index();
                info!(event = "keyframe_switch", t, previous, pixels = key_mask.count());
                self.events.push(OnlineEvent::KeyframeSwitch {
                    t,
                    previous,
                    key_mask_pixels: key_mask.count(),
                });
                self.state.keyframe = Some(Keyframe {
                    index: t,
                    frame: frame.clone(),
                    key_mask,
                });
                self.session = Some(session);
                true
            }
            Err(e) => {
                warn!(event = "segment_failed", t, error = %e);
                self.events.push(OnlineEvent::SegmentFailed {
                    t,
                    error: e.to_string(),
                });
                false
            }
        }
    }

    /// Consumes frame `t` (frames must arrive as 1, 2, 3, ...) and returns its mask.
    pub fn step(&mut self, frame: Frame) -> Result<BinaryMask, OnlineError> {
        let t = self.state.last_t + 1;
        if frame.index() != t {
            return Err(OnlineError::OutOfOrder {
                expected: t,
                got: frame.index(),
            });
        }
        let dims = (frame.width(), frame.height());
        match self.dims {
            Some(expected) if expected != dims => {
                return Err(OnlineError::Resolution { t, expected, got: dims });
            }
            _ => self.dims = Some(dims),
        }
        self.state.last_t = t;

        let switched = self.is_judgment_time(t) && self.judge(&frame) && self.switch_keyframe(&frame);

        let Some(session) = self.session.as_mut() else {
            return Ok(BinaryMask::empty(dims.0, dims.1));
        };
        let tracked = if switched {
            session.run(t, t)
        } else {
            session.append(&frame).and_then(|_| session.run(t, t))
        };
        match tracked {
            Ok(mut masks) if masks.len() == 1 && masks[0].dims() == dims => Ok(masks.remove(0)),
            Ok(_) => Ok(self.propagation_failed(t, "propagator returned a malformed result".into())),
            Err(e) => Ok(self.propagation_failed(t, e.to_string())),
        }
    }

    fn propagation_failed(&mut self, t: usize, error: String) -> BinaryMask {
        warn!(event = "propagation_failed", t, error = %error);
        self.events.push(OnlineEvent::PropagationFailed { t, error });
        let (w, h) = self.dims.expect("set before tracking");
        BinaryMask::empty(w, h)
    }
}

/// Direct evaluation of the keyframe recurrence, for equivalence testing.
///
/// Judged times are t = 1, 1 + xi, 1 + 2xi, ...; `p_t = t` if judged Yes, otherwise
/// `p_{t - xi}` (with `p_0 = 0`). Frame t is governed by the judgment at
/// `s = floor((t - 1) / xi) * xi + 1`, i.e. the latest judgment not after t; its
/// keyframe `t' = p_s` gives `m_t = propagate(segment(t'), t', t)`, or an empty mask
/// when `t' = 0`.
pub fn reference_online_simulator(
    judge: impl Fn(usize) -> bool,
    segment: impl Fn(usize) -> BinaryMask,
    propagate: impl Fn(&BinaryMask, usize, usize) -> BinaryMask,
    frame_count: usize,
    xi: usize,
    dims: (u32, u32),
) -> Vec<BinaryMask> {
    assert!(xi >= 1);
    let mut p = vec![0usize; frame_count + 1];
    for t in (1..=frame_count).step_by(xi) {
        p[t] = if judge(t) { t } else { p[t.saturating_sub(xi)] };
    }
    (1..=frame_count)
        .map(|t| {
            let s = (t - 1) / xi * xi + 1;
            let key = p[s];
            if key == 0 {
                BinaryMask::empty(dims.0, dims.1)
            } else {
                propagate(&segment(key), key, t)
            }
        })
        .collect()
}
