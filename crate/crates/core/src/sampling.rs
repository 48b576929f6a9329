//! Keyframe candidate sampling and the merged grid image shown to the selector.

use image::imageops::{self, FilterType};
use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{encode_rgb_png, frame_to_image, IoError};
use crate::model::{Frame, Rect, VideoClip};

/// Default long-side cap of the grid image in pixels.
pub const DEFAULT_SIDE_CAP: u32 = 1024;
/// Default number of candidates the offline stride aims for.
pub const DEFAULT_CANDIDATE_TARGET: usize = 8;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least one candidate")]
    EmptyPlan,
    #[error("side cap must be at least 1 pixel")]
    ZeroSideCap,
    #[error("candidate frame {0} is not in the clip")]
    MissingFrame(usize),
    #[error("candidate frames differ in size: {0}")]
    MixedSizes(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Offline sampling stride: `floor((T - 1) / target) + 1`.
pub fn compute_xi_offline(frame_count: usize, target: usize) -> usize {
    let target = target.max(1);
    frame_count.saturating_sub(1) / target + 1
}

/// Which clip frames go into the grid, in temporal order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub xi: usize,
    pub candidate_count: usize,
    pub candidate_frame_indices: Vec<usize>,
}

impl SamplingPlan {
    /// Clip frame behind 1-based grid slot `candidate`.
    pub fn source_frame(&self, candidate: usize) -> Option<usize> {
        candidate
            .checked_sub(1)
            .and_then(|i| self.candidate_frame_indices.get(i))
            .copied()
    }
}

/// Stride-`xi` candidates anchored at frame 1: indices `1, 1 + xi, ...`, count
/// `max(1, floor(T / xi))`.
pub fn sample_candidates(frame_count: usize, xi: usize) -> SamplingPlan {
    let xi = xi.max(1);
    let candidate_count = (frame_count / xi).max(1);
    let candidate_frame_indices = (0..candidate_count).map(|i| i * xi + 1).collect();
    SamplingPlan {
        xi,
        candidate_count,
        candidate_frame_indices,
    }
}

pub fn sample_clip(clip: &VideoClip, xi: usize) -> SamplingPlan {
    sample_candidates(clip.len(), xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Candidates placed left to right.
    Horizontal,
    /// Candidates stacked top to bottom.
    Vertical,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridImage {
    pub image: RgbImage,
    pub orientation: Orientation,
    pub cell_rects: Vec<Rect>,
    pub side_cap: u32,
}

impl GridImage {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    pub fn to_png(&self) -> Result<Vec<u8>, IoError> {
        encode_rgb_png(self.image.width(), self.image.height(), self.image.as_raw())
    }
}

fn scaled(v: u64, num: u64, den: u64) -> u32 {
    ((v * num + den / 2) / den) as u32
}

/// Concatenates the candidate frames (side by side when `W <= H`, stacked otherwise)
/// and shrinks the result uniformly so its long side is at most `side_cap`.
pub fn compose_grid(plan: &SamplingPlan, clip: &VideoClip, side_cap: u32) -> Result<GridImage, GridError> {
    let frames = plan
        .candidate_frame_indices
        .iter()
        .map(|&t| clip.frame(t).ok_or(GridError::MissingFrame(t)))
        .collect::<Result<Vec<_>, _>>()?;
    compose_frames(&frames, side_cap)
}

pub fn compose_frames(frames: &[&Frame], side_cap: u32) -> Result<GridImage, GridError> {
    if side_cap == 0 {
        return Err(GridError::ZeroSideCap);
    }
    let first = frames.first().ok_or(GridError::EmptyPlan)?;
    let (w, h) = (first.width(), first.height());
    if let Some(f) = frames.iter().find(|f| (f.width(), f.height()) != (w, h)) {
        return Err(GridError::MixedSizes(format!(
            "frame {} is {}x{}, expected {w}x{h}",
            f.index(),
            f.width(),
            f.height()
        )));
    }
    let n = frames.len() as u32;
    let orientation = if w <= h {
        Orientation::Horizontal
    } else {
        Orientation::Vertical
    };
    let (total_w, total_h) = match orientation {
        Orientation::Horizontal => (w * n, h),
        Orientation::Vertical => (w, h * n),
    };
    let mut merged = RgbImage::new(total_w, total_h);
    for (i, f) in frames.iter().enumerate() {
        let (ox, oy) = match orientation {
            Orientation::Horizontal => (i as u32 * w, 0),
            Orientation::Vertical => (0, i as u32 * h),
        };
        imageops::replace(&mut merged, &frame_to_image(f), ox as i64, oy as i64);
    }

    let long = total_w.max(total_h) as u64;
    let (num, den) = if long > side_cap as u64 {
        (side_cap as u64, long)
    } else {
        (1, 1)
    };
    let out_w = scaled(total_w as u64, num, den).max(1);
    let out_h = scaled(total_h as u64, num, den).max(1);
    let image = if (out_w, out_h) == (total_w, total_h) {
        merged
    } else {
        imageops::resize(&merged, out_w, out_h, FilterType::Triangle)
    };

    let cell = match orientation {
        Orientation::Horizontal => w,
        Orientation::Vertical => h,
    } as u64;
    let cell_rects = (0..n as u64)
        .map(|i| {
            let a = scaled(i * cell, num, den);
            let b = scaled((i + 1) * cell, num, den);
            match orientation {
                Orientation::Horizontal => Rect::new(a, 0, b - a, out_h),
                Orientation::Vertical => Rect::new(0, a, out_w, b - a),
            }
        })
        .collect();
    Ok(GridImage {
        image,
        orientation,
        cell_rects,
        side_cap,
    })
}
