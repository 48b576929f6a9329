//! Plug a hand-written segmenter into the pipeline. Any type implementing the
//! backend traits can stand in for a model; here a colour-threshold segmenter
//! replaces the text-prompted one.

use std::sync::Arc;

use reasonseg::backends::mock::{LinearMotionPropagator, MockSelector};
use reasonseg::backends::{Agents, BackendError, Segmenter};
use reasonseg::model::{BinaryMask, Frame, Query, Rect, VideoClip};
use reasonseg::pipeline::{run_reasoning_vos, RunConfig};

/// Marks pixels whose red channel dominates.
struct RedThreshold;

impl Segmenter for RedThreshold {
    fn segment(&self, frame: &Frame, description: &str) -> Result<BinaryMask, BackendError> {
        if !description.contains("red") {
            return Ok(BinaryMask::empty(frame.width(), frame.height()));
        }
        Ok(BinaryMask::from_fn(frame.width(), frame.height(), |x, y| {
            let [r, g, b] = frame.pixel(x, y);
            r > 128 && g < 96 && b < 96
        }))
    }
}

fn clip() -> VideoClip {
    let frames = (1..=12)
        .map(|t| {
            let mut f = Frame::filled(t, 40, 30, [20, 20, 20]).unwrap();
            let block = Rect::new(t as u32 * 2, 10, 6, 6);
            for (x, y) in BinaryMask::from_rect(40, 30, block).ones() {
                f.set_pixel(x, y, [220, 30, 30]);
            }
            f
        })
        .collect();
    VideoClip::new(frames).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let transcript = r#"Output list: [{object_index: 1, keyframe: 3, object_description: "the red block"}]"#;
    let agents = Agents::new(
        Arc::new(MockSelector::with_transcript(transcript)),
        Arc::new(RedThreshold),
        Arc::new(LinearMotionPropagator::constant(2, 0)),
    );
    let clip = clip();
    let out = run_reasoning_vos(&clip, &Query::new("the red thing")?, &RunConfig::default(), &agents)?;
    println!("keyframe: {}", out.vis.selections[0].source_frame_index);
    for (t, m) in out.sequence.masks().iter().enumerate() {
        let x0 = m.ones().map(|(x, _)| x).min();
        println!("frame {:>2}: {} px, left edge {:?}", t + 1, m.count(), x0);
    }
    Ok(())
}
