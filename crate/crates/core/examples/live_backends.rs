//! Run the whole-clip pipeline against real services: an OpenAI-compatible chat
//! endpoint picks keyframes and a model server segments and propagates.
//!
//! ```text
//! REASONSEG_API_KEY=... cargo run --example live_backends -- FRAME_DIR "QUERY" [SERVER_URL]
//! ```
//! Without arguments it prints the selector request it would send for a tiny
//! synthetic clip, with the image payload elided.

use std::sync::Arc;

use reasonseg::backends::model_server::ModelServerClient;
use reasonseg::backends::openai::ChatCompletionsSelector;
use reasonseg::backends::{Agents, ModelServerConfig, SelectorConfig};
use reasonseg::cot::build_offline_prompt;
use reasonseg::io::load_clip;
use reasonseg::model::{Frame, Query, VideoClip};
use reasonseg::pipeline::{run_reasoning_vis, RunConfig};
use reasonseg::sampling::{compose_grid, compute_xi_offline, sample_clip};

fn dry_run(selector: &ChatCompletionsSelector) -> Result<(), Box<dyn std::error::Error>> {
    let clip = VideoClip::new((1..=16).map(|t| Frame::filled(t, 64, 48, [t as u8 * 12, 90, 40]).unwrap()).collect())?;
    let plan = sample_clip(&clip, compute_xi_offline(clip.len(), 8));
    let grid = compose_grid(&plan, &clip, 1024)?;
    let prompt = build_offline_prompt(plan.candidate_count, &Query::new("the red block")?);
    let mut body = selector.request_body(&prompt, &grid.to_png()?);
    let url = &mut body["messages"][0]["content"][1]["image_url"]["url"];
    let len = url.as_str().map_or(0, str::len);
    *url = format!("data:image/png;base64,<{len} chars>").into();
    body["messages"][0]["content"][0]["text"] = format!("<{} chars of prompt>", prompt.len()).into();
    println!("POST {}\n{}", selector.config().endpoint, serde_json::to_string_pretty(&body)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let selector_cfg = SelectorConfig {
        api_key: std::env::var("REASONSEG_API_KEY").or_else(|_| std::env::var("OPENAI_API_KEY")).ok(),
        endpoint: std::env::var("REASONSEG_SELECTOR_ENDPOINT").unwrap_or(SelectorConfig::default().endpoint),
        ..Default::default()
    };
    let selector = ChatCompletionsSelector::new(selector_cfg)?;

    let [frames, query, rest @ ..] = args.as_slice() else {
        return dry_run(&selector);
    };
    let server_cfg = ModelServerConfig {
        url: rest.first().cloned().unwrap_or(ModelServerConfig::default().url),
        ..Default::default()
    };
    let server = ModelServerClient::new(&server_cfg)?;
    println!("model server mode: {}", server.health()?.mode);

    let agents = Agents::new(Arc::new(selector), Arc::new(server.clone()), Arc::new(server));
    let clip = load_clip(frames.as_ref())?;
    let out = run_reasoning_vis(&clip, &Query::new(query.as_str())?, &RunConfig::default(), &agents)?;
    println!("{}\n", out.transcript);
    for inst in &out.instances {
        let area: usize = inst.resolved_sequence.masks().iter().map(|m| m.count()).sum();
        println!(
            "instance {} (frame {}): {} px over {} frames",
            inst.selection.object_index,
            inst.selection.source_frame_index,
            area,
            clip.len()
        );
    }
    for w in &out.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
