//! Region (J) and boundary (F) scores, per frame and aggregated into a report.
//!
//! ```text
//! cargo run --example evaluate_masks [PRED_DIR GT_DIR]
//! ```
//! With two directories the PNG masks in them are paired by file name; otherwise a
//! small synthetic prediction is scored.

use reasonseg::eval::{
    boundary_f, default_tolerance, evaluate_dir, evaluate_masks, region_similarity, EvalReport, GroundTruthSequence,
};
use reasonseg::model::{BinaryMask, Rect};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [pred, gt] = args.as_slice() {
        let truth = GroundTruthSequence::load(gt.as_ref(), "sequence", None)?;
        let rec = evaluate_dir(pred.as_ref(), gt.as_ref(), &truth)?;
        print!("{}", EvalReport::from_records(vec![rec]).to_csv());
        return Ok(());
    }

    let (w, h) = (64, 48);
    let gt: Vec<BinaryMask> = (0..5).map(|t| BinaryMask::from_rect(w, h, Rect::new(10 + 4 * t, 12, 20, 16))).collect();
    let pred: Vec<BinaryMask> = gt.iter().map(|m| m.translated(2, 1)).collect();

    let tol = default_tolerance(w, h);
    println!("boundary tolerance for {w}x{h}: {tol} px");
    for (t, (p, g)) in pred.iter().zip(&gt).enumerate() {
        println!("frame {}: J {:.3}  F {:.3}", t + 1, region_similarity(p, g)?, boundary_f(p, g, tol)?);
    }

    let shifted = evaluate_masks("shifted", &pred, &gt)?;
    let exact = evaluate_masks("exact", &gt, &gt)?;
    let report = EvalReport::from_records(vec![shifted, exact]);
    print!("\n{}", report.to_csv());
    Ok(())
}
