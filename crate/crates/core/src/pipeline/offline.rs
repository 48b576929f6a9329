//! Whole-clip pipeline: sample candidates, compose the grid, ask the selector for
//! instances and keyframes, segment each instance on its keyframe, propagate the key
//! mask over the clip, and optionally make the instances disjoint.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::backends::{Agents, BackendError};
use crate::cot::{build_offline_prompt, parse_output_list, ParseError};
use crate::model::{
    resolve_non_overlap, union_masks, InstanceSelection, MaskSequence, ModelError, Query, VideoClip,
};
use crate::sampling::{
    compose_grid, compute_xi_offline, sample_clip, GridError, SamplingPlan, DEFAULT_CANDIDATE_TARGET,
    DEFAULT_SIDE_CAP,
};

pub const DEFAULT_WORKERS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Number of candidates the stride aims for (4, 8 or 16 work well).
    pub candidate_target: usize,
    pub grid_side_cap: u32,
    pub non_overlap: bool,
    pub vos_union: bool,
    /// Upper bound on concurrently processed instances.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            candidate_target: DEFAULT_CANDIDATE_TARGET,
            grid_side_cap: DEFAULT_SIDE_CAP,
            non_overlap: true,
            vos_union: false,
            workers: DEFAULT_WORKERS,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("grid composition failed: {0}")]
    Grid(#[from] GridError),
    #[error("keyframe selector failed: {0}")]
    Selector(BackendError),
    #[error("could not parse selector output: {source}")]
    Parse {
        source: ParseError,
        transcript: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl RunError {
    /// Selector transcript for parse failures.
    pub fn transcript(&self) -> Option<&str> {
        match self {
            RunError::Parse { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceResult {
    pub selection: InstanceSelection,
    /// Propagated sequence before overlap resolution.
    pub raw_sequence: MaskSequence,
    /// Final sequence (equal to `raw_sequence` when overlap resolution is off).
    pub resolved_sequence: MaskSequence,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub selection_ms: u64,
    pub instances_ms: u64,
    pub total_ms: u64,
}

#[derive(Clone, Debug)]
pub struct VisOutcome {
    pub plan: SamplingPlan,
    pub prompt: String,
    pub transcript: String,
    pub selections: Vec<InstanceSelection>,
    pub instances: Vec<InstanceResult>,
    /// Parser and per-instance warnings, in order of occurrence.
    pub warnings: Vec<String>,
    /// Some selected instance was dropped after a backend failure.
    pub partial: bool,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct VosOutcome {
    pub sequence: MaskSequence,
    pub vis: VisOutcome,
}

fn ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}

/// Segments the selection's keyframe and propagates the key mask both ways.
fn track_instance(clip: &VideoClip, sel: &InstanceSelection, agents: &Agents) -> Result<MaskSequence, BackendError> {
    let ctx = format!("instance {} (frame {})", sel.object_index, sel.source_frame_index);
    let anchor = sel.source_frame_index;
    let frame = clip
        .frame(anchor)
        .ok_or_else(|| BackendError::Usage(format!("{ctx}: frame not in clip")))?;
    let key_mask = agents
        .segmenter
        .segment(frame, &sel.description)
        .map_err(|e| e.context(&ctx))?;
    if key_mask.dims() != (clip.width(), clip.height()) {
        return Err(BackendError::Decode(format!("{ctx}: key mask has wrong size")));
    }
    let mut session = agents.propagator.open(clip.frames()).map_err(|e| e.context(&ctx))?;
    session.seed(anchor, &key_mask).map_err(|e| e.context(&ctx))?;
    let mut masks = session.run(1, anchor).map_err(|e| e.context(&ctx))?;
    let forward = session.run(anchor, clip.len()).map_err(|e| e.context(&ctx))?;
    if masks.len() != anchor || forward.len() != clip.len() - anchor + 1 {
        return Err(BackendError::Decode(format!("{ctx}: propagator returned the wrong frame count")));
    }
    masks.extend(forward.into_iter().skip(1));
    MaskSequence::new(sel.object_index, masks).map_err(|e| BackendError::Decode(format!("{ctx}: {e}")))
}

/// Runs `job` over `items` on at most `workers` threads, keeping input order.
fn fan_out<T: Sync, R: Send>(items: &[T], workers: usize, job: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = job(item);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

pub fn run_reasoning_vis(
    clip: &VideoClip,
    query: &Query,
    config: &RunConfig,
    agents: &Agents,
) -> Result<VisOutcome, RunError> {
    let started = Instant::now();
    let xi = compute_xi_offline(clip.len(), config.candidate_target);
    let plan = sample_clip(clip, xi);
    let grid = compose_grid(&plan, clip, config.grid_side_cap)?;
    let prompt = build_offline_prompt(plan.candidate_count, query);
    info!(
        event = "sampling",
        frames = clip.len(),
        xi,
        candidates = ?plan.candidate_frame_indices,
        grid_w = grid.width(),
        grid_h = grid.height()
    );

    let transcript = agents
        .selector
        .select_keyframes(&grid, &prompt)
        .map_err(RunError::Selector)?;
    let selection_ms = ms(started);
    info!(event = "selector_transcript", chars = transcript.len(), transcript = %transcript);

    let parsed = parse_output_list(&transcript, plan.candidate_count).map_err(|source| RunError::Parse {
        source,
        transcript: transcript.clone(),
    })?;
    let mut warnings = parsed.warnings;
    for w in &warnings {
        warn!(event = "parse_warning", message = %w);
    }
    let mut selections: Vec<InstanceSelection> = parsed
        .choices
        .into_iter()
        .map(|c| InstanceSelection {
            object_index: c.object_index,
            source_frame_index: plan
                .source_frame(c.candidate_index)
                .expect("parser keeps candidates in range"),
            candidate_index: c.candidate_index,
            description: c.description,
        })
        .collect();
    selections.sort_by_key(|s| s.object_index);
    info!(event = "selections", count = selections.len(), selections = ?selections);

    let inst_started = Instant::now();
    let tracked = fan_out(&selections, config.workers, |sel| track_instance(clip, sel, agents));
    let mut partial = false;
    let mut kept = Vec::new();
    for (sel, result) in selections.iter().zip(tracked) {
        match result {
            Ok(seq) => kept.push((sel.clone(), seq)),
            Err(e) => {
                partial = true;
                let msg = format!("instance {} dropped: {e}", sel.object_index);
                warn!(event = "instance_dropped", object_index = sel.object_index, error = %e);
                warnings.push(msg);
            }
        }
    }

    let raw: Vec<MaskSequence> = kept.iter().map(|(_, s)| s.clone()).collect();
    let resolved = if config.non_overlap {
        resolve_non_overlap(&raw)?
    } else {
        raw.clone()
    };
    let instances = kept
        .into_iter()
        .zip(resolved)
        .map(|((selection, raw_sequence), resolved_sequence)| InstanceResult {
            selection,
            raw_sequence,
            resolved_sequence,
        })
        .collect();

    Ok(VisOutcome {
        plan,
        prompt,
        transcript,
        selections,
        instances,
        warnings,
        partial,
        timings: Timings {
            selection_ms,
            instances_ms: ms(inst_started),
            total_ms: ms(started),
        },
    })
}

/// Union of all instance sequences; all-empty masks when nothing was selected.
pub fn vos_union(clip: &VideoClip, instances: &[InstanceResult]) -> Result<MaskSequence, ModelError> {
    if instances.is_empty() {
        return Ok(MaskSequence::empty(1, clip.len(), clip.width(), clip.height()));
    }
    let seqs: Vec<MaskSequence> = instances.iter().map(|i| i.resolved_sequence.clone()).collect();
    union_masks(&seqs)
}

pub fn run_reasoning_vos(
    clip: &VideoClip,
    query: &Query,
    config: &RunConfig,
    agents: &Agents,
) -> Result<VosOutcome, RunError> {
    let vis = run_reasoning_vis(clip, query, config, agents)?;
    let sequence = vos_union(clip, &vis.instances)?;
    Ok(VosOutcome { sequence, vis })
}
