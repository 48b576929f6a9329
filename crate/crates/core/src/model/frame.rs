use serde::{Deserialize, Serialize};

use super::ModelError;

/// One RGB video frame at a 1-based temporal index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    index: usize,
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    /// Wraps a row-major RGB8 buffer.
    pub fn new(index: usize, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ModelError> {
        if index == 0 {
            return Err(ModelError::Invalid("frame index is 1-based; got 0".into()));
        }
        if width == 0 || height == 0 {
            return Err(ModelError::Invalid(format!(
                "frame {index} has zero extent ({width}x{height})"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(ModelError::Invalid(format!(
                "frame {index}: pixel buffer holds {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
        })
    }

    /// A frame filled with one colour.
    pub fn filled(index: usize, width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ModelError> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self::new(index, width, height, pixels)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Same content under a different temporal index.
    pub fn with_index(mut self, index: usize) -> Result<Self, ModelError> {
        if index == 0 {
            return Err(ModelError::Invalid("frame index is 1-based; got 0".into()));
        }
        self.index = index;
        Ok(self)
    }

    /// Number of pixels with any non-zero channel.
    pub fn foreground_pixels(&self) -> usize {
        self.pixels
            .chunks_exact(3)
            .filter(|p| p.iter().any(|&c| c != 0))
            .count()
    }
}

/// Frames `1..=T` sharing one resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoClip {
    frames: Vec<Frame>,
}

impl VideoClip {
    pub fn new(frames: Vec<Frame>) -> Result<Self, ModelError> {
        let first = frames
            .first()
            .ok_or_else(|| ModelError::Invalid("a clip needs at least one frame".into()))?;
        let (w, h) = (first.width, first.height);
        for (pos, f) in frames.iter().enumerate() {
            if f.index != pos + 1 {
                return Err(ModelError::Invalid(format!(
                    "frame at position {} carries index {}; indices must run 1..T without gaps",
                    pos + 1,
                    f.index
                )));
            }
            if (f.width, f.height) != (w, h) {
                return Err(ModelError::DimensionMismatch(format!(
                    "frame {} is {}x{}, clip is {w}x{h}",
                    f.index, f.width, f.height
                )));
            }
        }
        Ok(Self { frames })
    }

    /// Builds a clip from frames in temporal order, renumbering them 1..T.
    pub fn from_ordered(frames: Vec<Frame>) -> Result<Self, ModelError> {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.with_index(i + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(frames)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Frame at 1-based index `t`.
    pub fn frame(&self, t: usize) -> Option<&Frame> {
        t.checked_sub(1).and_then(|i| self.frames.get(i))
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Free-text user query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Query(String);

impl Query {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::Invalid("query text must be non-empty".into()));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Query {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Query> for String {
    fn from(q: Query) -> Self {
        q.0
    }
}

impl std::fmt::Display for Query {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_bad_buffer() {
        assert!(Frame::new(1, 2, 2, vec![0; 11]).is_err());
        assert!(Frame::new(0, 2, 2, vec![0; 12]).is_err());
        assert!(Frame::new(1, 0, 2, vec![]).is_err());
        assert!(Frame::new(1, 2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn clip_requires_contiguous_indices() {
        let a = Frame::filled(1, 2, 2, [0, 0, 0]).unwrap();
        let c = Frame::filled(3, 2, 2, [0, 0, 0]).unwrap();
        assert!(VideoClip::new(vec![a.clone(), c.clone()]).is_err());
        let clip = VideoClip::from_ordered(vec![a, c]).unwrap();
        assert_eq!(clip.frame(2).unwrap().index(), 2);
        assert!(clip.frame(0).is_none());
        assert!(VideoClip::new(vec![]).is_err());
    }

    #[test]
    fn clip_requires_shared_dimensions() {
        let a = Frame::filled(1, 2, 2, [0, 0, 0]).unwrap();
        let b = Frame::filled(2, 3, 2, [0, 0, 0]).unwrap();
        assert!(matches!(
            VideoClip::new(vec![a, b]),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn query_must_be_non_empty() {
        assert!(Query::new("").is_err());
        assert_eq!(Query::new("  x  ").unwrap().as_str(), "  x  ");
    }
}
