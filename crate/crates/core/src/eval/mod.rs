//! Segmentation benchmark metrics (J, F, J&F), dataset ingestion and reports.

mod dataset;
mod metrics;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{list_images, read_mask_png, IoError};
use crate::model::{BinaryMask, MaskSequence, ModelError};

pub use dataset::{load_davis_layout, load_manifest, parse_manifest, DavisVideo, EvalJob, GroundTruthSequence};
pub use metrics::{
    boundary, boundary_f, boundary_f_default, default_tolerance, dilate_disk, region_similarity,
    BOUNDARY_TOLERANCE_FRACTION,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what}: unmatched files {missing:?}")]
    Gaps { what: String, missing: Vec<String> },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("sequence {id}: {pred} predicted frames, {gt} annotated frames")]
    Length { id: String, pred: usize, gt: usize },
    #[error("{0}")]
    Empty(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame: usize,
    pub j: f64,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub frames: Vec<FrameScore>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

impl Aggregate {
    fn mean<'a>(items: impl Iterator<Item = (f64, f64)> + 'a) -> Self {
        let (mut n, mut j, mut f) = (0usize, 0.0, 0.0);
        for (a, b) in items {
            n += 1;
            j += a;
            f += b;
        }
        if n == 0 {
            return Self {
                count: 0,
                j: 0.0,
                f: 0.0,
                jf: 0.0,
            };
        }
        let (j, f) = (j / n as f64, f / n as f64);
        Self {
            count: n,
            j,
            f,
            jf: (j + f) / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoAggregate {
    pub video: String,
    #[serde(flatten)]
    pub scores: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub records: Vec<SequenceRecord>,
    /// Unweighted mean over records (one per video/query pair).
    pub aggregate: Aggregate,
    pub by_video: Vec<VideoAggregate>,
    /// Records averaged per video first, then across videos.
    pub video_aggregate: Aggregate,
}

/// Frame-wise J and F with the default tolerance, averaged.
pub fn evaluate_masks(id: &str, pred: &[BinaryMask], gt: &[BinaryMask]) -> Result<SequenceRecord, EvalError> {
    if pred.len() != gt.len() || gt.is_empty() {
        return Err(EvalError::Length {
            id: id.to_string(),
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let frames = pred
        .iter()
        .zip(gt)
        .enumerate()
        .map(|(i, (p, g))| {
            Ok(FrameScore {
                frame: i + 1,
                j: region_similarity(p, g)?,
                f: boundary_f_default(p, g)?,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let agg = Aggregate::mean(frames.iter().map(|s| (s.j, s.f)));
    Ok(SequenceRecord {
        id: id.to_string(),
        video: id.to_string(),
        query: None,
        j: agg.j,
        f: agg.f,
        jf: agg.jf,
        frames,
    })
}

pub fn evaluate_sequence(pred: &MaskSequence, gt: &GroundTruthSequence) -> Result<SequenceRecord, EvalError> {
    evaluate_masks(&gt.id, pred.masks(), &gt.masks)
}

/// Reads mask PNGs from `pred_dir` and scores them against `gt`, pairing files by stem.
pub fn evaluate_dir(pred_dir: &Path, gt_dir: &Path, gt: &GroundTruthSequence) -> Result<SequenceRecord, EvalError> {
    let stem = |p: &std::path::PathBuf| p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let pred_paths = list_images(pred_dir, &["png"])?;
    let gt_paths = list_images(gt_dir, &["png"])?;
    let ps: Vec<String> = pred_paths.iter().map(stem).collect();
    let gs: Vec<String> = gt_paths.iter().map(stem).collect();
    dataset::check_pairing(&format!("sequence {}: predictions vs annotations", gt.id), &ps, &gs)?;
    let pred = pred_paths
        .iter()
        .map(|p| read_mask_png(p))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_masks(&gt.id, &pred, &gt.masks)
}

impl EvalReport {
    pub fn from_records(records: Vec<SequenceRecord>) -> Self {
        let aggregate = Aggregate::mean(records.iter().map(|r| (r.j, r.f)));
        let mut grouped: BTreeMap<&str, Vec<&SequenceRecord>> = BTreeMap::new();
        for r in &records {
            grouped.entry(&r.video).or_default().push(r);
        }
        let by_video: Vec<VideoAggregate> = grouped
            .into_iter()
            .map(|(video, rs)| VideoAggregate {
                video: video.to_string(),
                scores: Aggregate::mean(rs.iter().map(|r| (r.j, r.f))),
            })
            .collect();
        let video_aggregate = Aggregate::mean(by_video.iter().map(|v| (v.scores.j, v.scores.f)));
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            records,
            aggregate,
            by_video,
            video_aggregate,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Table with J&F, J and F as percentages, one row per record plus the mean.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,J&F,J,F\n");
        let row = |out: &mut String, name: &str, jf: f64, j: f64, f: f64| {
            let _ = writeln!(out, "{name},{:.1},{:.1},{:.1}", jf * 100.0, j * 100.0, f * 100.0);
        };
        for r in &self.records {
            row(&mut out, &r.id, r.jf, r.j, r.f);
        }
        let a = &self.aggregate;
        row(&mut out, "mean", a.jf, a.j, a.f);
        out
    }
}
