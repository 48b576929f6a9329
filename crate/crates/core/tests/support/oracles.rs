//! Brute-force reference implementations used to cross-check the library.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use reasonseg::model::{BinaryMask, MaskSequence};

/// Counts pixels directly.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (mut inter, mut uni) = (0usize, 0usize);
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let (p, g) = (pred.get(x, y), gt.get(x, y));
            inter += usize::from(p && g);
            uni += usize::from(p || g);
        }
    }
    if uni == 0 {
        1.0
    } else {
        inter as f64 / uni as f64
    }
}

/// Foreground pixels touching background or the image edge (4-neighbourhood).
pub fn boundary_pixels(mask: &BinaryMask) -> Vec<(i64, i64)> {
    let (w, h) = (i64::from(mask.width()), i64::from(mask.height()));
    let on = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as u32, y as u32);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if on(x, y) && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| !on(x + dx, y + dy)) {
                out.push((x, y));
            }
        }
    }
    out
}

fn matched_fraction(from: &[(i64, i64)], to: &[(i64, i64)], tol: i64) -> f64 {
    let hits = from
        .iter()
        .filter(|(x, y)| to.iter().any(|(u, v)| (x - u).pow(2) + (y - v).pow(2) <= tol * tol))
        .count();
    hits as f64 / from.len() as f64
}

/// All-pairs boundary matching.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tol: u32) -> f64 {
    let bp = boundary_pixels(pred);
    let bg = boundary_pixels(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let p = matched_fraction(&bp, &bg, i64::from(tol));
    let r = matched_fraction(&bg, &bp, i64::from(tol));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn default_tolerance(w: u32, h: u32) -> u32 {
    let d = ((w * w + h * h) as f64).sqrt();
    (0.008 * d).ceil() as u32
}

/// `m_i AND NOT (m_1 OR ... OR m_{i-1})` on the raw masks, pixel by pixel.
pub fn non_overlap(raw: &[MaskSequence]) -> Vec<Vec<BinaryMask>> {
    raw.iter()
        .enumerate()
        .map(|(i, seq)| {
            seq.masks()
                .iter()
                .enumerate()
                .map(|(t, m)| {
                    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
                        m.get(x, y) && !raw[..i].iter().any(|earlier| earlier.masks()[t].get(x, y))
                    })
                })
                .collect()
        })
        .collect()
}

/// Random mask: a few rectangles and discs plus salt noise, or empty/full.
pub fn random_mask(rng: &mut StdRng, w: u32, h: u32) -> BinaryMask {
    match rng.random_range(0..12) {
        0 => return BinaryMask::empty(w, h),
        1 => return BinaryMask::full(w, h),
        _ => {}
    }
    let mut m = BinaryMask::empty(w, h);
    for _ in 0..rng.random_range(1..4) {
        let (cx, cy) = (rng.random_range(0..w) as i64, rng.random_range(0..h) as i64);
        let r = rng.random_range(0..=(w.max(h) / 3).max(1)) as i64;
        let disc = rng.random_bool(0.5);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as i64 - cx, y as i64 - cy);
                let inside = if disc { dx * dx + dy * dy <= r * r } else { dx.abs() <= r && dy.abs() <= r / 2 + 1 };
                if inside {
                    m.set(x, y, true);
                }
            }
        }
    }
    let noise = rng.random_range(0..w * h / 8 + 1);
    for _ in 0..noise {
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        m.set(x, y, !m.get(x, y));
    }
    m
}
