//! Deterministic stand-ins for the three agents, configured from a JSON fixture.
//!
//! A fixture maps scenario names to:
//! - a canned selector transcript and an online judging rule (scripted per frame, or
//!   "at least N non-black pixels");
//! - a geometric segmenter: a description containing `rect:x,y,w,h` yields that
//!   rectangle, optional per-frame rectangles cover prompts without the grammar, and
//!   anything else yields an empty mask;
//! - a linear-motion propagator: the seed mask is translated by `velocity * (t - seed)`;
//!   velocity rules pick a velocity by a point the seed mask covers;
//! - optionally a synthetic clip of moving coloured rectangles with analytic masks.
//!
//! Every mock is a pure function of (fixture, inputs).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{check_append, check_span, Agents, BackendError, KeyframeSelector, PropagationSession, Propagator, Segmenter};
use crate::model::{BinaryMask, Frame, MaskSequence, Rect, VideoClip};
use crate::sampling::GridImage;

/// Built-in scenarios shipped with the crate.
pub const BUILTIN_FIXTURE: &str = include_str!("../../fixtures/mock_scenarios.json");

pub const YES_TEXT: &str =
    "The image contains the target object. Therefore, the justification of using this image as keyframe is Yes.";
pub const NO_TEXT: &str =
    "The image contains nothing that matches the query. Therefore, the justification of using this image as keyframe is No.";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    pub scenarios: BTreeMap<String, MockScenario>,
}

impl MockFixture {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_FIXTURE).expect("built-in fixture is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text).map_err(|e| BackendError::Decode(format!("mock fixture: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scenario(&self, name: &str) -> Result<&MockScenario, BackendError> {
        self.scenarios.get(name).ok_or_else(|| {
            BackendError::Unavailable(format!(
                "no mock scenario {name:?} (have: {})",
                self.scenarios.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScenario {
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub selector_transcript: Option<String>,
    #[serde(default)]
    pub judge: JudgeRule,
    #[serde(default)]
    pub segmenter: SegmenterRule,
    #[serde(default)]
    pub propagator: MotionRule,
    #[serde(default)]
    pub clip: Option<SyntheticClip>,
}

impl MockScenario {
    pub fn agents(&self) -> Agents {
        Agents::new(
            Arc::new(MockSelector::new(self.selector_transcript.clone(), self.judge.clone())),
            Arc::new(GeometricSegmenter::new(self.segmenter.clone())),
            Arc::new(LinearMotionPropagator::new(self.propagator.clone())),
        )
    }
}

/// How the mock answers per-frame judgments.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeRule {
    /// Explicit answers by frame index; wins over `min_foreground`.
    #[serde(default)]
    pub script: BTreeMap<usize, bool>,
    /// Yes when the frame has at least this many non-black pixels.
    #[serde(default)]
    pub min_foreground: Option<usize>,
    /// Frames whose judgment call fails with a transport error.
    #[serde(default)]
    pub fail_frames: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MockSelector {
    transcript: Option<String>,
    judge: JudgeRule,
}

impl MockSelector {
    pub fn new(transcript: Option<String>, judge: JudgeRule) -> Self {
        Self { transcript, judge }
    }

    pub fn with_transcript(transcript: impl Into<String>) -> Self {
        Self::new(Some(transcript.into()), JudgeRule::default())
    }

    pub fn scripted(script: BTreeMap<usize, bool>) -> Self {
        Self::new(
            None,
            JudgeRule {
                script,
                ..Default::default()
            },
        )
    }

    pub fn judge_bool(&self, frame: &Frame) -> bool {
        if let Some(&answer) = self.judge.script.get(&frame.index()) {
            return answer;
        }
        self.judge
            .min_foreground
            .is_some_and(|n| frame.foreground_pixels() >= n)
    }
}

impl KeyframeSelector for MockSelector {
    fn select_keyframes(&self, _grid: &GridImage, _prompt: &str) -> Result<String, BackendError> {
        self.transcript
            .clone()
            .ok_or_else(|| BackendError::Unavailable("mock selector has no transcript".into()))
    }

    fn judge_frame(&self, frame: &Frame, _prompt: &str) -> Result<String, BackendError> {
        if self.judge.fail_frames.contains(&frame.index()) {
            return Err(BackendError::Transport(format!(
                "mock judgment failure at frame {}",
                frame.index()
            )));
        }
        Ok(if self.judge_bool(frame) { YES_TEXT } else { NO_TEXT }.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmenterRule {
    /// Rectangles by frame index for prompts without the `rect:` grammar.
    #[serde(default)]
    pub frame_rects: BTreeMap<usize, Rect>,
    /// Frames whose segment call fails.
    #[serde(default)]
    pub fail_frames: Vec<usize>,
}

static RECT_GRAMMAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"rect:\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)").expect("valid regex")
});

/// First `rect:x,y,w,h` in `text`.
pub fn parse_rect_grammar(text: &str) -> Option<Rect> {
    let c = RECT_GRAMMAR.captures(text)?;
    let n = |i: usize| c[i].parse::<u32>().ok();
    Some(Rect::new(n(1)?, n(2)?, n(3)?, n(4)?))
}

/// Formats a rectangle in the mock segmenter grammar.
pub fn rect_grammar(r: Rect) -> String {
    format!("rect:{},{},{},{}", r.x, r.y, r.w, r.h)
}

#[derive(Clone, Debug, Default)]
pub struct GeometricSegmenter {
    rule: SegmenterRule,
}

impl GeometricSegmenter {
    pub fn new(rule: SegmenterRule) -> Self {
        Self { rule }
    }
}

impl Segmenter for GeometricSegmenter {
    fn segment(&self, frame: &Frame, description: &str) -> Result<BinaryMask, BackendError> {
        if self.rule.fail_frames.contains(&frame.index()) {
            return Err(BackendError::Transport(format!(
                "mock segment failure at frame {}",
                frame.index()
            )));
        }
        let rect = parse_rect_grammar(description).or_else(|| self.rule.frame_rects.get(&frame.index()).copied());
        Ok(match rect {
            Some(r) => BinaryMask::from_rect(frame.width(), frame.height(), r),
            None => BinaryMask::empty(frame.width(), frame.height()),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Velocity {
    pub dx: i64,
    pub dy: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityRule {
    /// `(x, y)` pixel the seed mask must cover.
    pub seed_contains: (u32, u32),
    pub velocity: Velocity,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionRule {
    #[serde(default)]
    pub velocity: Velocity,
    #[serde(default)]
    pub rules: Vec<VelocityRule>,
}

impl MotionRule {
    pub fn velocity_for(&self, seed: &BinaryMask) -> Velocity {
        self.rules
            .iter()
            .find(|r| {
                let (x, y) = r.seed_contains;
                x < seed.width() && y < seed.height() && seed.get(x, y)
            })
            .map_or(self.velocity, |r| r.velocity)
    }
}

/// Translates the seed mask by `velocity * (t - seed_frame)`.
pub fn linear_motion(seed: &BinaryMask, velocity: Velocity, frames_from_seed: i64) -> BinaryMask {
    seed.translated(velocity.dx * frames_from_seed, velocity.dy * frames_from_seed)
}

#[derive(Debug, Default)]
pub struct LinearMotionPropagator {
    rule: MotionRule,
    next_id: AtomicU64,
}

impl LinearMotionPropagator {
    pub fn new(rule: MotionRule) -> Self {
        Self {
            rule,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn constant(dx: i64, dy: i64) -> Self {
        Self::new(MotionRule {
            velocity: Velocity { dx, dy },
            rules: Vec::new(),
        })
    }
}

impl Propagator for LinearMotionPropagator {
    fn open(&self, frames: &[Frame]) -> Result<Box<dyn PropagationSession>, BackendError> {
        let first = frames
            .first()
            .ok_or_else(|| BackendError::Usage("cannot open a session without frames".into()))?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        Ok(Box::new(MockSession {
            id: format!("mock-{id}"),
            rule: self.rule.clone(),
            span: (first.index(), first.index() + frames.len() - 1),
            dims: (first.width(), first.height()),
            seed: None,
        }))
    }
}

struct MockSession {
    id: String,
    rule: MotionRule,
    span: (usize, usize),
    dims: (u32, u32),
    seed: Option<(usize, BinaryMask, Velocity)>,
}

impl PropagationSession for MockSession {
    fn id(&self) -> &str {
        &self.id
    }

    fn span(&self) -> (usize, usize) {
        self.span
    }

    fn append(&mut self, frame: &Frame) -> Result<(), BackendError> {
        check_append(self.span, frame)?;
        self.span.1 += 1;
        Ok(())
    }

    fn seed(&mut self, frame_index: usize, mask: &BinaryMask) -> Result<(), BackendError> {
        if frame_index < self.span.0 || frame_index > self.span.1 {
            return Err(BackendError::Usage(format!(
                "seed frame {frame_index} outside session frames {}..={}",
                self.span.0, self.span.1
            )));
        }
        if mask.dims() != self.dims {
            return Err(BackendError::Usage("seed mask does not match frame size".into()));
        }
        let v = self.rule.velocity_for(mask);
        self.seed = Some((frame_index, mask.clone(), v));
        Ok(())
    }

    fn run(&mut self, from: usize, to: usize) -> Result<Vec<BinaryMask>, BackendError> {
        let (anchor, mask, v) = self
            .seed
            .as_ref()
            .ok_or_else(|| BackendError::Usage("run before seed".into()))?;
        check_span(self.span, from, to)?;
        Ok((from..=to)
            .map(|t| linear_motion(mask, *v, t as i64 - *anchor as i64))
            .collect())
    }
}

/// A coloured rectangle moving at constant velocity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticObject {
    /// Position at frame 1.
    pub rect: Rect,
    #[serde(default)]
    pub velocity: Velocity,
    pub color: [u8; 3],
    /// Frames (inclusive range) in which the object is drawn; all frames when absent.
    #[serde(default)]
    pub visible: Option<(usize, usize)>,
}

impl SyntheticObject {
    fn is_visible(&self, t: usize) -> bool {
        self.visible.is_none_or(|(a, b)| (a..=b).contains(&t))
    }

    /// Analytic mask at frame `t` (clipped to the frame).
    pub fn mask_at(&self, t: usize, width: u32, height: u32) -> BinaryMask {
        if !self.is_visible(t) {
            return BinaryMask::empty(width, height);
        }
        let base = BinaryMask::from_rect(width, height, self.rect);
        let k = t as i64 - 1;
        base.translated(self.velocity.dx * k, self.velocity.dy * k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticClip {
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub background: [u8; 3],
    pub objects: Vec<SyntheticObject>,
}

impl SyntheticClip {
    pub fn frame(&self, t: usize) -> Frame {
        let mut f = Frame::filled(t, self.width, self.height, self.background).expect("valid synthetic frame");
        for obj in &self.objects {
            for (x, y) in obj.mask_at(t, self.width, self.height).ones() {
                f.set_pixel(x, y, obj.color);
            }
        }
        f
    }

    pub fn render(&self) -> VideoClip {
        VideoClip::new((1..=self.frames).map(|t| self.frame(t)).collect()).expect("valid synthetic clip")
    }

    /// Analytic per-object sequences (instance id = object position + 1).
    pub fn ground_truth(&self) -> Vec<MaskSequence> {
        self.objects
            .iter()
            .enumerate()
            .map(|(i, obj)| {
                let masks = (1..=self.frames)
                    .map(|t| obj.mask_at(t, self.width, self.height))
                    .collect();
                MaskSequence::new(i + 1, masks).expect("uniform synthetic masks")
            })
            .collect()
    }
}
