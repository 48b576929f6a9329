//! Region similarity (IoU) and boundary F-measure.

use crate::model::{BinaryMask, ModelError};

/// Fraction of the image diagonal used as the default boundary tolerance.
pub const BOUNDARY_TOLERANCE_FRACTION: f64 = 0.008;

fn check_dims(pred: &BinaryMask, gt: &BinaryMask) -> Result<(), ModelError> {
    if pred.dims() != gt.dims() {
        return Err(ModelError::DimensionMismatch(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// Intersection over union; 1.0 when both masks are empty.
pub fn region_similarity(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, ModelError> {
    check_dims(pred, gt)?;
    let union = pred.union_count(gt)?;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(pred.intersection_count(gt)? as f64 / union as f64)
}

/// Foreground pixels with at least one background 4-neighbour. Pixels outside the
/// image count as background.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y)
            && (x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1))
    })
}

/// `ceil(0.008 * diagonal)` pixels.
pub fn default_tolerance(width: u32, height: u32) -> u32 {
    let diag = (f64::from(width).powi(2) + f64::from(height).powi(2)).sqrt();
    (BOUNDARY_TOLERANCE_FRACTION * diag).ceil() as u32
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Every pixel within Euclidean distance `radius` of a set pixel.
pub fn dilate_disk(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = i64::from(radius);
    let spans: Vec<(i64, i64)> = (-r..=r)
        .map(|dy| (dy, isqrt((r * r - dy * dy) as u64) as i64))
        .collect();
    let mut out = vec![false; mask.bits().len()];
    for (x, y) in mask.ones() {
        for &(dy, half) in &spans {
            let yy = i64::from(y) + dy;
            if yy < 0 || yy >= i64::from(h) {
                continue;
            }
            let lo = (i64::from(x) - half).max(0) as usize;
            let hi = (i64::from(x) + half).min(i64::from(w) - 1) as usize;
            let row = yy as usize * w as usize;
            out[row + lo..=row + hi].fill(true);
        }
    }
    BinaryMask::from_bits(w, h, out).expect("same dims")
}

/// Precision/recall F-measure of boundary pixels matched within `tolerance` pixels.
/// 1.0 when both masks are empty, 0.0 when exactly one is.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tolerance: u32) -> Result<f64, ModelError> {
    check_dims(pred, gt)?;
    let bp = boundary(pred);
    let bg = boundary(gt);
    let (np, ng) = (bp.count(), bg.count());
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    let precision = bp.intersection_count(&dilate_disk(&bg, tolerance))? as f64 / np as f64;
    let recall = bg.intersection_count(&dilate_disk(&bp, tolerance))? as f64 / ng as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Boundary F with the default tolerance for the mask size.
pub fn boundary_f_default(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, ModelError> {
    boundary_f(pred, gt, default_tolerance(gt.width(), gt.height()))
}
