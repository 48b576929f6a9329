//! Frame-by-frame tracking: the tracker sees one frame at a time, asks the judge
//! every few frames whether to switch keyframes, and propagates from the current one.
//!
//! ```text
//! cargo run --example online_stream [PERIOD]
//! ```

use reasonseg::backends::mock::MockFixture;
use reasonseg::eval::evaluate_masks;
use reasonseg::model::{union_masks, Query};
use reasonseg::pipeline::{OnlineEvent, OnlineTracker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xi: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let fixture = MockFixture::builtin();
    let scenario = fixture.scenario("online-switch")?;
    let synth = scenario.clip.clone().ok_or("scenario has no clip")?;
    let query = Query::new(scenario.query.clone().unwrap_or_else(|| "the visible object".into()))?;

    let mut tracker = OnlineTracker::new(query, xi, scenario.agents())?;
    let mut masks = Vec::new();
    for t in 1..=synth.frames {
        let mask = tracker.step(synth.frame(t))?;
        for event in tracker.drain_events() {
            match event {
                OnlineEvent::KeyframeSwitch { t, previous, key_mask_pixels } => {
                    println!("t={t:>2}: keyframe {previous} -> {t} ({key_mask_pixels} px)")
                }
                OnlineEvent::Judged { t, selected, .. } => println!("t={t:>2}: judged, selected={selected}"),
                other => println!("{}", serde_json::to_string(&other)?),
            }
        }
        println!("t={t:>2}: {} px, keyframe {}", mask.count(), tracker.state().keyframe_index());
        masks.push(mask);
    }

    let truth = union_masks(&synth.ground_truth())?;
    let rec = evaluate_masks("online", &masks, truth.masks())?;
    println!("J&F {:.3}", rec.jf);
    Ok(())
}
