//! Mock segmenter and propagator against golden RLE files shared with the model
//! server's mock mode.

use reasonseg::backends::mock::{GeometricSegmenter, LinearMotionPropagator};
use reasonseg::backends::{Propagator, Segmenter};
use reasonseg::model::{decode_mask_rle, encode_mask_rle, Frame, RleMask};
use serde::Deserialize;

#[derive(Deserialize)]
struct Velocity {
    dx: i64,
    dy: i64,
}

#[derive(Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Case {
    Segment {
        width: u32,
        height: u32,
        text: String,
        mask: RleMask,
    },
    Propagate {
        width: u32,
        height: u32,
        frames: usize,
        seed_frame: usize,
        seed: RleMask,
        velocity: Velocity,
        masks: Vec<RleMask>,
    },
}

#[derive(Deserialize)]
struct Golden {
    cases: Vec<Case>,
}

fn golden() -> Golden {
    let path = format!("{}/fixtures/golden/mock_conformance.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn golden_cases_match_bit_for_bit() {
    let g = golden();
    assert!(g.cases.len() >= 8);
    for case in g.cases {
        match case {
            Case::Segment { width, height, text, mask } => {
                let frame = Frame::filled(1, width, height, [90, 90, 90]).unwrap();
                let got = GeometricSegmenter::default().segment(&frame, &text).unwrap();
                assert_eq!(encode_mask_rle(&got), mask, "segment {text}");
                assert_eq!(
                    serde_json::to_string(&encode_mask_rle(&got)).unwrap(),
                    serde_json::to_string(&mask).unwrap()
                );
            }
            Case::Propagate {
                width,
                height,
                frames,
                seed_frame,
                seed,
                velocity,
                masks,
            } => {
                let clip: Vec<Frame> = (1..=frames).map(|t| Frame::filled(t, width, height, [0; 3]).unwrap()).collect();
                let prop = LinearMotionPropagator::constant(velocity.dx, velocity.dy);
                let mut session = prop.open(&clip).unwrap();
                session.seed(seed_frame, &decode_mask_rle(&seed).unwrap()).unwrap();
                let got: Vec<RleMask> = session.run(1, frames).unwrap().iter().map(encode_mask_rle).collect();
                assert_eq!(got, masks);
            }
        }
    }
}
