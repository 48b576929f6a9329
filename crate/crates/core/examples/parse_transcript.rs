//! Parse a selector transcript into keyframe choices, or a per-frame answer into a
//! yes/no judgment.
//!
//! ```text
//! cargo run --example parse_transcript [FILE] [CANDIDATES]
//! ```

use reasonseg::cot::{format_output_list, parse_binary_selectivity, parse_output_list};

const SAMPLE: &str = r#"The query asks for every rider. Keyframe 1 shows two of them clearly;
the third is easier to see in keyframe 2.

Output list: [
  {object_index: 1, keyframe: 1, object_description: "the rider in a white shirt, left of center"},
  {object_index: 2, keyframe: k_1, object_description: "the rider with a backpack further down the road",},
  {object_index: 3, keyframe: 2, object_description: "the rider in a light shirt at the left edge"}
]"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let candidates: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let parsed = parse_output_list(&text, candidates)?;
    for c in &parsed.choices {
        println!("object {} -> candidate {}: {}", c.object_index, c.candidate_index, c.description);
    }
    for w in &parsed.warnings {
        println!("warning: {w}");
    }
    println!("\nnormalised: {}", format_output_list(&parsed.choices));

    let judgment = parse_binary_selectivity("...so the justification of using this image as keyframe is Yes.");
    println!("judgment: {:?} (ambiguous: {})", judgment.value, judgment.ambiguous);
    Ok(())
}
