//! Benchmark ingestion: DAVIS-style directory trees and JSONL job manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::EvalError;
use crate::io::{list_images, load_clip, read_label_png, LabelImage};
use crate::model::{BinaryMask, Query, VideoClip};

/// Binary ground truth for one object across a clip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthSequence {
    pub id: String,
    /// Label selected from multi-object annotations; `None` means any non-zero label.
    pub object_id: Option<u8>,
    pub masks: Vec<BinaryMask>,
}

impl GroundTruthSequence {
    pub fn from_labels(id: impl Into<String>, labels: &[LabelImage], object_id: Option<u8>) -> Self {
        Self {
            id: id.into(),
            object_id,
            masks: labels.iter().map(|l| l.object_mask(object_id)).collect(),
        }
    }

    /// Reads every PNG in `dir` (sorted by name) as one frame.
    pub fn load(dir: &Path, id: impl Into<String>, object_id: Option<u8>) -> Result<Self, EvalError> {
        let labels = read_labels(dir)?;
        Ok(Self::from_labels(id, &labels, object_id))
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

pub(crate) fn read_labels(dir: &Path) -> Result<Vec<LabelImage>, EvalError> {
    let paths = list_images(dir, &["png"])?;
    if paths.is_empty() {
        return Err(EvalError::Empty(format!("no annotation PNGs in {}", dir.display())));
    }
    Ok(paths.iter().map(|p| read_label_png(p)).collect::<Result<_, _>>()?)
}

fn stems(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .collect()
}

/// Fails with the names present on one side only.
pub(crate) fn check_pairing(what: &str, left: &[String], right: &[String]) -> Result<(), EvalError> {
    let l: BTreeSet<&String> = left.iter().collect();
    let r: BTreeSet<&String> = right.iter().collect();
    let missing: Vec<String> = l.symmetric_difference(&r).map(|s| s.to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(EvalError::Gaps {
            what: what.to_string(),
            missing,
        })
    }
}

/// One video of a DAVIS-style tree with its raw annotations.
#[derive(Clone, Debug)]
pub struct DavisVideo {
    pub name: String,
    pub clip: VideoClip,
    pub labels: Vec<LabelImage>,
}

impl DavisVideo {
    /// Non-zero labels occurring anywhere in the annotations.
    pub fn object_ids(&self) -> Vec<u8> {
        let ids: BTreeSet<u8> = self
            .labels
            .iter()
            .flat_map(|l| l.labels.iter().copied())
            .filter(|&v| v != 0)
            .collect();
        ids.into_iter().collect()
    }

    pub fn ground_truth(&self, object_id: Option<u8>) -> GroundTruthSequence {
        let id = match object_id {
            Some(o) => format!("{}/{o}", self.name),
            None => self.name.clone(),
        };
        GroundTruthSequence::from_labels(id, &self.labels, object_id)
    }
}

fn subdir(root: &Path, name: &str) -> PathBuf {
    let dir = root.join(name);
    let res = dir.join("480p");
    if res.is_dir() {
        res
    } else {
        dir
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let rd = std::fs::read_dir(dir).map_err(|e| EvalError::Empty(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = rd.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    out.sort();
    Ok(out)
}

/// Loads `root/JPEGImages/<video>/` frames with `root/Annotations/<video>/` labels
/// (a `480p/` level under either is used when present). Every frame needs an
/// annotation with the same file stem.
pub fn load_davis_layout(root: &Path) -> Result<Vec<DavisVideo>, EvalError> {
    let images = subdir(root, "JPEGImages");
    let annotations = subdir(root, "Annotations");
    let mut videos = Vec::new();
    for dir in sorted_subdirs(&images)? {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let ann_dir = annotations.join(&name);
        let frame_paths = list_images(&dir, &["jpg", "jpeg", "png"])?;
        let ann_paths = if ann_dir.is_dir() {
            list_images(&ann_dir, &["png"])?
        } else {
            Vec::new()
        };
        check_pairing(&format!("video {name}: frames vs annotations"), &stems(&frame_paths), &stems(&ann_paths))?;
        let clip = load_clip(&dir)?;
        let labels = read_labels(&ann_dir)?;
        videos.push(DavisVideo { name, clip, labels });
    }
    if videos.is_empty() {
        return Err(EvalError::Empty(format!("no videos under {}", images.display())));
    }
    Ok(videos)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    #[serde(default)]
    id: Option<String>,
    video_dir: PathBuf,
    query: String,
    gt_dir: PathBuf,
    #[serde(default)]
    object_id: Option<u8>,
}

/// One (video, query, ground truth) evaluation job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalJob {
    pub id: String,
    /// Video name used for per-video aggregation.
    pub video: String,
    pub video_dir: PathBuf,
    pub query: Query,
    pub gt_dir: PathBuf,
    pub object_id: Option<u8>,
}

impl EvalJob {
    pub fn load_clip(&self) -> Result<VideoClip, EvalError> {
        Ok(load_clip(&self.video_dir)?)
    }

    pub fn load_ground_truth(&self) -> Result<GroundTruthSequence, EvalError> {
        GroundTruthSequence::load(&self.gt_dir, self.id.clone(), self.object_id)
    }
}

/// Parses a JSONL manifest. Relative paths resolve against `base` (normally the
/// manifest's directory); blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<EvalJob>, EvalError> {
    let mut jobs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |reason: String| EvalError::Manifest { line: line_no, reason };
        let raw: ManifestLine = serde_json::from_str(trimmed).map_err(|e| bad(e.to_string()))?;
        let query = Query::new(raw.query).map_err(|e| bad(e.to_string()))?;
        let video_dir = base.join(&raw.video_dir);
        let video = video_dir
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("video")
            .to_string();
        jobs.push(EvalJob {
            id: raw.id.unwrap_or_else(|| format!("{video}_{line_no:03}")),
            video,
            video_dir,
            query,
            gt_dir: base.join(&raw.gt_dir),
            object_id: raw.object_id,
        });
    }
    let mut seen = BTreeSet::new();
    for j in &jobs {
        if !seen.insert(&j.id) {
            return Err(EvalError::Manifest {
                line: 0,
                reason: format!("duplicate job id {:?}", j.id),
            });
        }
    }
    Ok(jobs)
}

pub fn load_manifest(path: &Path) -> Result<Vec<EvalJob>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Manifest {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}
