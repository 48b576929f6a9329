//! Whole-clip segmentation with mock backends, scored against the analytic ground
//! truth of the synthetic scene.
//!
//! ```text
//! cargo run --example offline_mock_pipeline [SCENARIO]
//! ```

use reasonseg::backends::mock::MockFixture;
use reasonseg::eval::evaluate_masks;
use reasonseg::model::{union_masks, Query};
use reasonseg::pipeline::{run_reasoning_vos, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "two-rects".into());
    let fixture = MockFixture::builtin();
    let scenario = fixture.scenario(&name)?;
    let synth = scenario.clip.clone().ok_or("scenario has no synthetic clip")?;
    let clip = synth.render();
    let truth = synth.ground_truth();
    let query = Query::new(scenario.query.clone().unwrap_or_else(|| "the moving objects".into()))?;

    let out = run_reasoning_vos(&clip, &query, &RunConfig::default(), &scenario.agents())?;
    let vis = &out.vis;
    println!("candidates {:?} (stride {})", vis.plan.candidate_frame_indices, vis.plan.xi);
    println!("selector said:\n{}\n", vis.transcript);

    for inst in &vis.instances {
        let sel = &inst.selection;
        let line = format!("instance {} from frame {}: {}", sel.object_index, sel.source_frame_index, sel.description);
        match truth.get(sel.object_index - 1) {
            Some(gt) => {
                let rec = evaluate_masks("vis", inst.resolved_sequence.masks(), gt.masks())?;
                println!("{line}  J&F {:.3}", rec.jf);
            }
            None => println!("{line}"),
        }
    }
    let union = union_masks(&truth)?;
    let rec = evaluate_masks("vos", out.sequence.masks(), union.masks())?;
    println!("union  J {:.3}  F {:.3}  J&F {:.3}", rec.j, rec.f, rec.jf);
    println!("timings {:?}", vis.timings);
    Ok(())
}
