//! Run-length wire form for binary masks.
//!
//! Runs alternate over the row-major bit stream starting with a zero run; a mask
//! whose first pixel is set begins with a zero-length run. On the wire this is the
//! JSON object `{"w": .., "h": .., "runs": [..]}`.

use serde::{Deserialize, Serialize};

use super::{BinaryMask, ModelError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleMask {
    pub w: u32,
    pub h: u32,
    pub runs: Vec<u64>,
}

pub fn encode_mask_rle(mask: &BinaryMask) -> RleMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u64;
    for &bit in mask.bits() {
        if bit == current {
            len += 1;
        } else {
            runs.push(len);
            current = bit;
            len = 1;
        }
    }
    if len > 0 || runs.is_empty() {
        runs.push(len);
    }
    RleMask {
        w: mask.width(),
        h: mask.height(),
        runs,
    }
}

pub fn decode_mask_rle(rle: &RleMask) -> Result<BinaryMask, ModelError> {
    let total = rle.w as u64 * rle.h as u64;
    let sum = rle
        .runs
        .iter()
        .try_fold(0u64, |acc, &r| acc.checked_add(r))
        .ok_or_else(|| ModelError::Format("run lengths overflow".into()))?;
    if sum != total {
        return Err(ModelError::Format(format!(
            "run lengths sum to {sum}, expected {}x{} = {total}",
            rle.w, rle.h
        )));
    }
    let mut bits = Vec::with_capacity(total as usize);
    let mut value = false;
    for &run in &rle.runs {
        bits.extend(std::iter::repeat_n(value, run as usize));
        value = !value;
    }
    BinaryMask::from_bits(rle.w, rle.h, bits)
}

impl RleMask {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("RLE record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Format(format!("bad RLE JSON: {e}")))
    }
}
