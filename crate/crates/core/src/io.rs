//! Image files on disk: RGB frames, 0/255 mask PNGs, and label PNGs whose pixel
//! values are object ids (palette-indexed or grayscale).

use std::fs::File;
use std::io::{BufWriter, Cursor};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};
use thiserror::Error;

use crate::model::{BinaryMask, Frame, ModelError, VideoClip};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("image encoding failed: {0}")]
    Encode(String),
}

pub const FRAME_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

/// Image files directly inside `dir` with one of `extensions`, sorted by file name.
pub fn list_images(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, IoError> {
    let entries = std::fs::read_dir(dir).map_err(|source| IoError::Fs {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| IoError::Fs {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_frame(path: &Path, index: usize) -> Result<Frame, IoError> {
    let img = image::open(path).map_err(|e| IoError::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(Frame::new(index, w, h, rgb.into_raw())?)
}

pub fn decode_frame(bytes: &[u8], index: usize) -> Result<Frame, IoError> {
    let img = image::load_from_memory(bytes).map_err(|e| IoError::Decode {
        path: PathBuf::from("<memory>"),
        reason: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(Frame::new(index, w, h, rgb.into_raw())?)
}

/// Loads every frame image in `dir` (sorted by name) as frames `1..=T`.
pub fn load_clip(dir: &Path) -> Result<VideoClip, IoError> {
    let paths = list_images(dir, FRAME_EXTENSIONS)?;
    if paths.is_empty() {
        return Err(IoError::Decode {
            path: dir.to_path_buf(),
            reason: "no frame images (png/jpg) found".into(),
        });
    }
    let frames = paths
        .iter()
        .enumerate()
        .map(|(i, p)| read_frame(p, i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VideoClip::new(frames)?)
}

pub fn frame_to_image(frame: &Frame) -> RgbImage {
    ImageBuffer::<Rgb<u8>, _>::from_raw(frame.width(), frame.height(), frame.pixels().to_vec())
        .expect("frame buffer length is validated at construction")
}

pub fn encode_rgb_png(width: u32, height: u32, rgb: &[u8]) -> Result<Vec<u8>, IoError> {
    let mut buf = Cursor::new(Vec::new());
    image::write_buffer_with_format(
        &mut buf,
        rgb,
        width,
        height,
        image::ExtendedColorType::Rgb8,
        ImageFormat::Png,
    )
    .map_err(|e| IoError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn encode_frame_png(frame: &Frame) -> Result<Vec<u8>, IoError> {
    encode_rgb_png(frame.width(), frame.height(), frame.pixels())
}

pub fn write_frame_png(frame: &Frame, path: &Path) -> Result<(), IoError> {
    let bytes = encode_frame_png(frame)?;
    std::fs::write(path, bytes).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })
}

fn mask_image(mask: &BinaryMask) -> ImageBuffer<Luma<u8>, Vec<u8>> {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    ImageBuffer::from_raw(mask.width(), mask.height(), raw).expect("mask buffer length matches")
}

/// Writes an 8-bit grayscale PNG, 0 for background and 255 for foreground.
pub fn write_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })?;
    mask_image(mask)
        .write_to(&mut BufWriter::new(file), ImageFormat::Png)
        .map_err(|e| IoError::Encode(format!("{}: {e}", path.display())))
}

/// Reads a mask PNG; any non-zero label is foreground.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask, IoError> {
    let labels = read_label_png(path)?;
    Ok(labels.binary(|v| v != 0))
}

/// Raw per-pixel labels of an annotation image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u8>,
}

impl LabelImage {
    pub fn binary(&self, mut pred: impl FnMut(u8) -> bool) -> BinaryMask {
        let bits = self.labels.iter().map(|&v| pred(v)).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("label grid matches dims")
    }

    /// Mask of the pixels carrying `object_id`, or of every non-zero pixel when `None`.
    pub fn object_mask(&self, object_id: Option<u8>) -> BinaryMask {
        match object_id {
            Some(id) => self.binary(|v| v == id),
            None => self.binary(|v| v != 0),
        }
    }
}

/// Decodes a PNG keeping palette indices / gray levels as labels instead of expanding
/// them to colour. Colour PNGs map to "non-black = 255".
pub fn read_label_png(path: &Path) -> Result<LabelImage, IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })?;
    decode_label_png(&bytes).map_err(|reason| IoError::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn decode_label_png(bytes: &[u8]) -> Result<LabelImage, String> {
    use png::{BitDepth, ColorType, Transformations};

    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (info.width as usize, info.height as usize);
    let line = info.line_size;
    let mut labels = Vec::with_capacity(w * h);
    match (info.color_type, info.bit_depth) {
        (ColorType::Indexed | ColorType::Grayscale, depth) => {
            let bits = match depth {
                BitDepth::One => 1,
                BitDepth::Two => 2,
                BitDepth::Four => 4,
                BitDepth::Eight => 8,
                BitDepth::Sixteen => return Err("16-bit label images are not supported".into()),
            };
            let per_byte = 8 / bits;
            let max = ((1u16 << bits) - 1) as u8;
            for y in 0..h {
                let row = &buf[y * line..(y + 1) * line];
                for x in 0..w {
                    let byte = row[x / per_byte];
                    let shift = 8 - bits * (x % per_byte + 1);
                    let mut v = (byte >> shift) & max;
                    // Sub-byte grayscale masks use the top level as foreground.
                    if info.color_type == ColorType::Grayscale && bits < 8 && v == max {
                        v = 255;
                    }
                    labels.push(v);
                }
            }
        }
        (ColorType::GrayscaleAlpha | ColorType::Rgb | ColorType::Rgba, BitDepth::Eight) => {
            let channels = info.color_type.samples();
            let colour = match info.color_type {
                ColorType::GrayscaleAlpha => 1,
                _ => 3,
            };
            for y in 0..h {
                let row = &buf[y * line..(y + 1) * line];
                for px in row[..w * channels].chunks_exact(channels) {
                    let v = if colour == 1 {
                        px[0]
                    } else if px[..3].iter().any(|&c| c != 0) {
                        255
                    } else {
                        0
                    };
                    labels.push(v);
                }
            }
        }
        (ct, bd) => return Err(format!("unsupported label PNG layout {ct:?}/{bd:?}")),
    }
    Ok(LabelImage {
        width: w as u32,
        height: h as u32,
        labels,
    })
}

/// Writes a palette-indexed PNG whose pixel values are `labels` (used for fixtures).
pub fn write_palette_png(path: &Path, width: u32, height: u32, labels: &[u8]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width, height);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    let mut palette = Vec::with_capacity(256 * 3);
    for i in 0..=255u8 {
        palette.extend_from_slice(&[i.wrapping_mul(97), i.wrapping_mul(53), i.wrapping_mul(29)]);
    }
    enc.set_palette(palette);
    let mut writer = enc.write_header().map_err(|e| IoError::Encode(e.to_string()))?;
    writer
        .write_image_data(labels)
        .map_err(|e| IoError::Encode(e.to_string()))?;
    writer.finish().map_err(|e| IoError::Encode(e.to_string()))
}
