//! Videos, masks, instance selections, and the mask algebra shared by the pipelines.

mod frame;
mod mask;
mod rle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{Frame, Query, VideoClip};
pub use mask::{resolve_non_overlap, union_masks, BinaryMask, MaskSequence, Rect};
pub use rle::{decode_mask_rle, encode_mask_rle, RleMask};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("instance {instance}, frame {frame}: {reason}")]
    Structure {
        instance: usize,
        frame: usize,
        reason: String,
    },
    #[error("malformed mask record: {0}")]
    Format(String),
}

/// One selected instance: which grid slot the selector picked, the clip frame that
/// slot came from, and the text handed to the segmenter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSelection {
    pub object_index: usize,
    pub candidate_index: usize,
    pub source_frame_index: usize,
    pub description: String,
}
