use serde::{Deserialize, Serialize};

use super::ModelError;

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x - self.x < self.w && y - self.y < self.h
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

/// Row-major binary mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{} ({} set)", self.width, self.height, self.count())?;
        if self.width <= 64 && self.height <= 64 {
            for row in self.bits.chunks(self.width as usize) {
                let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, ModelError> {
        if bits.len() != width as usize * height as usize {
            return Err(ModelError::DimensionMismatch(format!(
                "{} bits cannot fill a {width}x{height} grid",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Mask of `rect` clipped to the grid.
    pub fn from_rect(width: u32, height: u32, rect: Rect) -> Self {
        Self::from_fn(width, height, |x, y| rect.contains(x, y))
    }

    /// Mask with exactly the listed `(x, y)` pixels set. Out-of-range points are ignored.
    pub fn from_points(width: u32, height: u32, points: &[(u32, u32)]) -> Self {
        let mut m = Self::empty(width, height);
        for &(x, y) in points {
            if x < width && y < height {
                m.set(x, y, true);
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    fn check_dims(&self, other: &Self) -> Result<(), ModelError> {
        if self.dims() != other.dims() {
            return Err(ModelError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self, ModelError> {
        self.check_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |a, b| a & b)
    }

    /// `self ∖ other`.
    pub fn difference(&self, other: &Self) -> Result<Self, ModelError> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn intersection_count(&self, other: &Self) -> Result<usize, ModelError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count())
    }

    pub fn union_count(&self, other: &Self) -> Result<usize, ModelError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a || b).count())
    }

    /// Shifts the mask content by `(dx, dy)`; pixels leaving the grid are dropped.
    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        let (w, h) = (self.width as i64, self.height as i64);
        Self::from_fn(self.width, self.height, |x, y| {
            let (sx, sy) = (x as i64 - dx, y as i64 - dy);
            sx >= 0 && sy >= 0 && sx < w && sy < h && self.bits[(sy * w + sx) as usize]
        })
    }
}

/// The per-frame masks of one instance over a whole clip (frame `t` at position `t - 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskSequence {
    instance_id: usize,
    masks: Vec<BinaryMask>,
}

impl MaskSequence {
    pub fn new(instance_id: usize, masks: Vec<BinaryMask>) -> Result<Self, ModelError> {
        if instance_id == 0 {
            return Err(ModelError::Invalid("instance ids start at 1".into()));
        }
        if let Some(first) = masks.first() {
            let dims = first.dims();
            if let Some((t, m)) = masks.iter().enumerate().find(|(_, m)| m.dims() != dims) {
                return Err(ModelError::Structure {
                    instance: instance_id,
                    frame: t + 1,
                    reason: format!(
                        "mask is {}x{}, sequence is {}x{}",
                        m.width(),
                        m.height(),
                        dims.0,
                        dims.1
                    ),
                });
            }
        }
        Ok(Self { instance_id, masks })
    }

    pub fn empty(instance_id: usize, len: usize, width: u32, height: u32) -> Self {
        Self {
            instance_id: instance_id.max(1),
            masks: vec![BinaryMask::empty(width, height); len],
        }
    }

    pub fn instance_id(&self) -> usize {
        self.instance_id
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[BinaryMask] {
        &self.masks
    }

    /// Mask at 1-based frame `t`.
    pub fn frame(&self, t: usize) -> Option<&BinaryMask> {
        t.checked_sub(1).and_then(|i| self.masks.get(i))
    }

    pub fn dims(&self) -> Option<(u32, u32)> {
        self.masks.first().map(BinaryMask::dims)
    }

    pub fn with_instance_id(mut self, instance_id: usize) -> Self {
        self.instance_id = instance_id.max(1);
        self
    }

    pub fn into_masks(self) -> Vec<BinaryMask> {
        self.masks
    }
}

fn check_compatible(seqs: &[MaskSequence]) -> Result<(), ModelError> {
    let Some(first) = seqs.first() else {
        return Ok(());
    };
    let len = first.len();
    let dims = first.dims();
    for s in seqs {
        if s.len() != len {
            return Err(ModelError::Structure {
                instance: s.instance_id,
                frame: s.len().min(len) + 1,
                reason: format!("sequence has {} frames, expected {len}", s.len()),
            });
        }
        if s.dims().is_some() && s.dims() != dims {
            let (w, h) = s.dims().unwrap_or_default();
            return Err(ModelError::Structure {
                instance: s.instance_id,
                frame: 1,
                reason: format!("masks are {w}x{h}, expected {:?}", dims.unwrap_or_default()),
            });
        }
    }
    Ok(())
}

/// Makes instance sequences pairwise disjoint per frame: each pixel stays with the
/// first sequence (in list order) that claims it. The list must already be ordered
/// by ascending object index.
pub fn resolve_non_overlap(raw: &[MaskSequence]) -> Result<Vec<MaskSequence>, ModelError> {
    check_compatible(raw)?;
    let Some(first) = raw.first() else {
        return Ok(Vec::new());
    };
    let mut claimed: Vec<BinaryMask> = first.masks.clone();
    let mut out = Vec::with_capacity(raw.len());
    out.push(first.clone());
    for seq in &raw[1..] {
        let mut masks = Vec::with_capacity(seq.len());
        for (m, taken) in seq.masks.iter().zip(claimed.iter_mut()) {
            let kept = m.difference(taken)?;
            *taken = taken.union(&kept)?;
            masks.push(kept);
        }
        out.push(MaskSequence {
            instance_id: seq.instance_id,
            masks,
        });
    }
    Ok(out)
}

/// Per-frame pixel-wise OR of all sequences. The result carries instance id 1.
pub fn union_masks(sequences: &[MaskSequence]) -> Result<MaskSequence, ModelError> {
    let first = sequences
        .first()
        .ok_or_else(|| ModelError::Invalid("union of an empty sequence list".into()))?;
    check_compatible(sequences)?;
    let mut masks = first.masks.clone();
    for seq in &sequences[1..] {
        for (acc, m) in masks.iter_mut().zip(&seq.masks) {
            *acc = acc.union(m)?;
        }
    }
    Ok(MaskSequence {
        instance_id: 1,
        masks,
    })
}
