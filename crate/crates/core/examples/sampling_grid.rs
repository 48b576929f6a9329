//! Pick candidate frames from a clip and compose them into one grid image.
//!
//! ```text
//! cargo run --example sampling_grid [FRAME_DIR] [OUT_PNG]
//! ```
//! Without a frame directory a 50-frame synthetic clip is used.

use reasonseg::io::load_clip;
use reasonseg::model::{Frame, VideoClip};
use reasonseg::sampling::{compose_grid, compute_xi_offline, sample_clip, DEFAULT_CANDIDATE_TARGET, DEFAULT_SIDE_CAP};

fn synthetic(n: usize) -> VideoClip {
    let frames = (1..=n)
        .map(|t| {
            let shade = (t * 255 / n) as u8;
            Frame::filled(t, 320, 240, [shade, 64, 255 - shade]).unwrap()
        })
        .collect();
    VideoClip::new(frames).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let clip = match args.next() {
        Some(dir) => load_clip(dir.as_ref())?,
        None => synthetic(50),
    };
    let out = args.next().unwrap_or_else(|| "grid.png".into());

    let xi = compute_xi_offline(clip.len(), DEFAULT_CANDIDATE_TARGET);
    let plan = sample_clip(&clip, xi);
    println!(
        "{} frames, stride {xi}, {} candidates at frames {:?}",
        clip.len(),
        plan.candidate_count,
        plan.candidate_frame_indices
    );

    let grid = compose_grid(&plan, &clip, DEFAULT_SIDE_CAP)?;
    println!("grid {:?}, {}x{}", grid.orientation, grid.width(), grid.height());
    for (i, r) in grid.cell_rects.iter().enumerate() {
        println!("  candidate {} at ({}, {}) size {}x{}", i + 1, r.x, r.y, r.w, r.h);
    }
    std::fs::write(&out, grid.to_png()?)?;
    println!("wrote {out}");
    Ok(())
}
