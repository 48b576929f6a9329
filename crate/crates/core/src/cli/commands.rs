use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use tracing::{info, warn};

use super::config::{CliConfig, Overrides};
use super::{Cli, CliError, Command, DemoArgs, EvalArgs, GlobalArgs, GridArgs, OnlineArgs, ParseArgs, RunArgs};
use crate::backends::mock::{MockFixture, MockScenario};
use crate::backends::model_server::ModelServerClient;
use crate::backends::openai::ChatCompletionsSelector;
use crate::backends::Agents;
use crate::cot::{parse_binary_selectivity, parse_output_list};
use crate::eval::{
    evaluate_dir, evaluate_masks, load_manifest, EvalReport, GroundTruthSequence, SequenceRecord,
};
use crate::io::{list_images, load_clip, read_frame, write_mask_png, FRAME_EXTENSIONS};
use crate::model::{union_masks, BinaryMask, Frame, InstanceSelection, MaskSequence, Query, VideoClip};
use crate::pipeline::{run_reasoning_vos, OnlineEvent, OnlineTracker, RunConfig, Timings, VosOutcome};
use crate::sampling::{compose_grid, compute_xi_offline, sample_clip, SamplingPlan};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
const DEMO_QUERY: &str = "Segment the moving objects.";

fn overrides(global: &GlobalArgs, command: &Command) -> Overrides {
    let mut o = Overrides {
        log_level: global.log_level.clone(),
        selector_endpoint: global.selector_endpoint.clone(),
        selector_model: global.selector_model.clone(),
        seed: global.seed,
        model_server_url: global.model_server.clone(),
        workers: global.workers,
        mock_scenario: global.mock.clone(),
        mock_fixture: global.mock_fixture.clone(),
        ..Default::default()
    };
    match command {
        Command::Run(a) => {
            o.candidate_target = a.candidates;
            o.grid_side_cap = a.side_cap;
        }
        Command::SampleGrid(a) => {
            o.candidate_target = a.candidates;
            o.grid_side_cap = a.side_cap;
        }
        Command::RunOnline(a) => o.xi = a.xi,
        Command::MockDemo(a) => o.xi = a.xi,
        Command::Eval(_) | Command::Parse(_) => {}
    }
    o
}

fn init_logging(filter: &str) {
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(tracing_subscriber::EnvFilter::new(filter))
        .with_writer(std::io::stderr)
        .try_init();
}

/// Runs a parsed command line; `env` supplies environment variables.
pub fn execute(cli: Cli, env: &dyn Fn(&str) -> Option<String>) -> Result<(), CliError> {
    let o = overrides(&cli.global, &cli.command);
    let cfg = CliConfig::resolve(cli.global.config.as_deref(), env, &o)?;
    init_logging(&cfg.log_level);
    match cli.command {
        Command::Run(a) => cmd_run(&cfg, a),
        Command::RunOnline(a) => cmd_run_online(&cfg, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Parse(a) => cmd_parse(a),
        Command::SampleGrid(a) => cmd_sample_grid(&cfg, a),
        Command::MockDemo(a) => cmd_mock_demo(&cfg, a),
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text)
}

fn write_masks(dir: &Path, names: &[String], masks: &[BinaryMask]) -> Result<(), CliError> {
    create_dir(dir)?;
    for (name, mask) in names.iter().zip(masks) {
        write_mask_png(mask, &dir.join(format!("{name}.png")))?;
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string()
}

fn query_arg(text: String) -> Result<Query, CliError> {
    Query::new(text).map_err(|e| CliError::Usage(format!("--query: {e}")))
}

fn load_fixture(path: Option<&Path>) -> Result<MockFixture, CliError> {
    match path {
        Some(p) => MockFixture::load(p).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(MockFixture::builtin()),
    }
}

fn mock_scenario(fixture: &MockFixture, name: &str) -> Result<MockScenario, CliError> {
    fixture
        .scenario(name)
        .cloned()
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Mock agents when configured, otherwise the remote selector and model server.
fn build_agents(cfg: &CliConfig) -> Result<Agents, CliError> {
    if let Some(mock) = &cfg.mock {
        let fixture = load_fixture(mock.fixture.as_deref())?;
        info!(event = "backends", kind = "mock", scenario = %mock.scenario);
        return Ok(mock_scenario(&fixture, &mock.scenario)?.agents());
    }
    info!(
        event = "backends",
        kind = "remote",
        selector = %cfg.selector.endpoint,
        model_server = %cfg.model_server.url
    );
    let selector = ChatCompletionsSelector::new(cfg.selector.clone())?;
    let server = Arc::new(ModelServerClient::new(&cfg.model_server)?);
    Ok(Agents::new(Arc::new(selector), server.clone(), server))
}

#[derive(Serialize)]
struct InstanceEntry {
    object_index: usize,
    source_frame_index: usize,
    candidate_index: usize,
    description: String,
    dir: String,
}

#[derive(Serialize)]
struct RunManifest {
    schema_version: u32,
    mode: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    query: String,
    frames: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampling: Option<SamplingPlan>,
    selections: Vec<InstanceSelection>,
    instances: Vec<InstanceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vos_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<String>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

/// Runs the whole-clip pipeline and writes masks, transcript, grid and manifest
/// under `out`. The manifest is written on failure too.
fn offline_to_dir(
    clip: &VideoClip,
    names: &[String],
    query: &Query,
    run_cfg: &RunConfig,
    agents: &Agents,
    out: &Path,
    with_timings: bool,
) -> Result<VosOutcome, CliError> {
    create_dir(out)?;
    let mut manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        mode: "offline",
        status: "failed",
        error: None,
        query: query.as_str().to_string(),
        frames: clip.len(),
        sampling: None,
        selections: Vec::new(),
        instances: Vec::new(),
        vos_dir: None,
        grid: None,
        transcript: None,
        warnings: Vec::new(),
        timings: None,
    };
    let vos = match run_reasoning_vos(clip, query, run_cfg, agents) {
        Ok(v) => v,
        Err(e) => {
            if let Some(t) = e.transcript() {
                write_file(&out.join("transcript.txt"), t)?;
                manifest.transcript = Some("transcript.txt".into());
            }
            manifest.error = Some(e.to_string());
            write_json(&out.join("manifest.json"), &manifest)?;
            return Err(e.into());
        }
    };
    let vis = &vos.vis;
    write_file(&out.join("transcript.txt"), &vis.transcript)?;
    let grid = compose_grid(&vis.plan, clip, run_cfg.grid_side_cap)?;
    write_file(&out.join("grid.png"), grid.to_png()?)?;
    for inst in &vis.instances {
        let dir = format!("instance_{:03}", inst.selection.object_index);
        write_masks(&out.join(&dir), names, inst.resolved_sequence.masks())?;
        manifest.instances.push(InstanceEntry {
            object_index: inst.selection.object_index,
            source_frame_index: inst.selection.source_frame_index,
            candidate_index: inst.selection.candidate_index,
            description: inst.selection.description.clone(),
            dir,
        });
    }
    write_masks(&out.join("vos"), names, vos.sequence.masks())?;
    manifest.status = if vis.partial { "partial" } else { "ok" };
    manifest.sampling = Some(vis.plan.clone());
    manifest.selections = vis.selections.clone();
    manifest.vos_dir = Some("vos".into());
    manifest.grid = Some("grid.png".into());
    manifest.transcript = Some("transcript.txt".into());
    manifest.warnings = vis.warnings.clone();
    manifest.timings = with_timings.then(|| vis.timings.clone());
    write_json(&out.join("manifest.json"), &manifest)?;
    info!(event = "run_complete", status = manifest.status, instances = vis.instances.len());
    Ok(vos)
}

fn frame_names(dir: &Path) -> Result<Vec<String>, CliError> {
    Ok(list_images(dir, FRAME_EXTENSIONS)?.iter().map(|p| stem(p)).collect())
}

fn cmd_run(cfg: &CliConfig, args: RunArgs) -> Result<(), CliError> {
    let query = query_arg(args.query)?;
    let clip = load_clip(&args.frames)?;
    let names = frame_names(&args.frames)?;
    let mut run_cfg = cfg.offline.clone();
    if args.keep_overlaps {
        run_cfg.non_overlap = false;
    }
    let agents = build_agents(cfg)?;
    let vos = offline_to_dir(&clip, &names, &query, &run_cfg, &agents, &args.out, true)?;
    if vos.vis.partial {
        warn!(event = "partial_run", warnings = vos.vis.warnings.len());
    }
    println!("{}", args.out.join("manifest.json").display());
    Ok(())
}

#[derive(Serialize)]
struct OnlineManifest {
    schema_version: u32,
    mode: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    query: String,
    xi: usize,
    frames: usize,
    judgments: usize,
    keyframe_switches: Vec<usize>,
    final_keyframe: usize,
    masks_dir: String,
    events: String,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_ms: Option<u64>,
}

type NamedFrame = Result<(String, Frame), CliError>;

/// Feeds frames to the streaming tracker, writing each mask and the event log as
/// soon as the frame is processed.
fn online_to_dir(
    frames: impl Iterator<Item = NamedFrame>,
    query: &Query,
    xi: usize,
    agents: Agents,
    out: &Path,
    with_timings: bool,
) -> Result<Vec<BinaryMask>, CliError> {
    let started = Instant::now();
    let masks_dir = out.join("masks");
    create_dir(&masks_dir)?;
    let events_path = out.join("events.jsonl");
    let file = fs::File::create(&events_path).map_err(|source| CliError::Write {
        path: events_path.clone(),
        source,
    })?;
    let mut events = BufWriter::new(file);
    let mut tracker = OnlineTracker::new(query.clone(), xi, agents)?;
    let mut manifest = OnlineManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        mode: "online",
        status: "ok",
        error: None,
        query: query.as_str().to_string(),
        xi,
        frames: 0,
        judgments: 0,
        keyframe_switches: Vec::new(),
        final_keyframe: 0,
        masks_dir: "masks".into(),
        events: "events.jsonl".into(),
        warnings: Vec::new(),
        total_ms: None,
    };
    let mut masks = Vec::new();
    let stream = || -> Result<(), CliError> {
        for item in frames {
            let (name, frame) = item?;
            let mask = tracker.step(frame)?;
            write_mask_png(&mask, &masks_dir.join(format!("{name}.png")))?;
            masks.push(mask);
            for ev in tracker.drain_events() {
                match &ev {
                    OnlineEvent::Judged { error: Some(e), t, .. } => {
                        manifest.warnings.push(format!("frame {t}: judgment failed: {e}"))
                    }
                    OnlineEvent::Judged { .. } => {}
                    OnlineEvent::KeyframeSwitch { t, .. } => manifest.keyframe_switches.push(*t),
                    OnlineEvent::SegmentFailed { t, error } => {
                        manifest.warnings.push(format!("frame {t}: segmentation failed: {error}"))
                    }
                    OnlineEvent::PropagationFailed { t, error } => {
                        manifest.warnings.push(format!("frame {t}: propagation failed: {error}"))
                    }
                }
                if matches!(ev, OnlineEvent::Judged { .. }) {
                    manifest.judgments += 1;
                }
                let line = serde_json::to_string(&ev).expect("event serializes");
                writeln!(events, "{line}").and_then(|_| events.flush()).map_err(|source| CliError::Write {
                    path: events_path.clone(),
                    source,
                })?;
            }
        }
        Ok(())
    };
    let result = stream();
    manifest.frames = masks.len();
    manifest.final_keyframe = tracker.state().keyframe_index();
    manifest.total_ms = with_timings.then(|| started.elapsed().as_millis() as u64);
    if let Err(e) = &result {
        manifest.status = "failed";
        manifest.error = Some(e.to_string());
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    result.map(|_| masks)
}

fn cmd_run_online(cfg: &CliConfig, args: OnlineArgs) -> Result<(), CliError> {
    let query = query_arg(args.query)?;
    let agents = build_agents(cfg)?;
    let xi = cfg.online.xi;
    create_dir(&args.out)?;
    let masks = if let Some(dir) = &args.frames {
        let paths = list_images(dir, FRAME_EXTENSIONS)?;
        if paths.is_empty() {
            return Err(CliError::Usage(format!("no frames in {}", dir.display())));
        }
        let frames = paths
            .into_iter()
            .enumerate()
            .map(|(i, p)| Ok((stem(&p), read_frame(&p, i + 1)?)));
        online_to_dir(frames, &query, xi, agents, &args.out, true)?
    } else {
        let stdin = std::io::stdin();
        let frames = stdin
            .lock()
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
            .enumerate()
            .map(|(i, line)| {
                let line = line.map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdin>"),
                    source,
                })?;
                let path = PathBuf::from(line.trim());
                Ok((stem(&path), read_frame(&path, i + 1)?))
            });
        online_to_dir(frames, &query, xi, agents, &args.out, true)?
    };
    info!(event = "stream_complete", frames = masks.len());
    println!("{}", args.out.join("manifest.json").display());
    Ok(())
}

fn has_pngs(dir: &Path) -> Result<bool, CliError> {
    Ok(!list_images(dir, &["png"])?.is_empty())
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rd = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = rd.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    out.sort();
    Ok(out)
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    if let Some(manifest) = &args.manifest {
        for job in load_manifest(manifest)? {
            let gt = job.load_ground_truth()?;
            let mut rec = evaluate_dir(&args.pred.join(&job.id), &job.gt_dir, &gt)?;
            rec.video = job.video.clone();
            rec.query = Some(job.query.as_str().to_string());
            records.push(rec);
        }
    } else {
        let gt_root = args.gt.as_deref().expect("clap requires --gt without --manifest");
        if has_pngs(gt_root)? {
            let gt = GroundTruthSequence::load(gt_root, stem(gt_root), args.object_id)?;
            records.push(evaluate_dir(&args.pred, gt_root, &gt)?);
        } else {
            for dir in sorted_subdirs(gt_root)? {
                let gt = GroundTruthSequence::load(&dir, stem(&dir), args.object_id)?;
                records.push(evaluate_dir(&args.pred.join(stem(&dir)), &dir, &gt)?);
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::Usage("nothing to evaluate".into()));
    }
    let report = EvalReport::from_records(records);
    write_json(&args.out, &report)?;
    if let Some(csv) = &args.csv {
        write_file(csv, report.to_csv())?;
    }
    info!(event = "eval_complete", sequences = report.records.len(), jf = report.aggregate.jf);
    println!("{}", serde_json::to_string(&report.aggregate).expect("serializable"));
    Ok(())
}

fn cmd_parse(args: ParseArgs) -> Result<(), CliError> {
    let text = if args.input.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdin>"),
            source,
        })?
    } else {
        fs::read_to_string(&args.input).map_err(|e| CliError::Usage(format!("{}: {e}", args.input.display())))?
    };
    let value = if args.online {
        let s = parse_binary_selectivity(&text);
        json!({ "selected": s.is_selected(), "ambiguous": s.ambiguous })
    } else {
        let t_prime = args.t_prime.expect("clap requires --t-prime");
        if t_prime == 0 {
            return Err(CliError::Usage("--t-prime must be at least 1".into()));
        }
        let parsed = parse_output_list(&text, t_prime)?;
        let selections: Vec<_> = parsed
            .choices
            .iter()
            .map(|c| {
                json!({
                    "object_index": c.object_index,
                    "keyframe": c.candidate_index,
                    "object_description": c.description,
                })
            })
            .collect();
        json!({ "selections": selections, "warnings": parsed.warnings })
    };
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    Ok(())
}

fn cmd_sample_grid(cfg: &CliConfig, args: GridArgs) -> Result<(), CliError> {
    let clip = load_clip(&args.frames)?;
    let xi = compute_xi_offline(clip.len(), cfg.offline.candidate_target);
    let plan = sample_clip(&clip, xi);
    let grid = compose_grid(&plan, &clip, cfg.offline.grid_side_cap)?;
    write_file(&args.out, grid.to_png()?)?;
    let summary = json!({
        "frames": clip.len(),
        "xi": plan.xi,
        "candidate_frames": plan.candidate_frame_indices,
        "width": grid.width(),
        "height": grid.height(),
        "orientation": grid.orientation,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(())
}

fn cmd_mock_demo(cfg: &CliConfig, args: DemoArgs) -> Result<(), CliError> {
    let fixture_path = args
        .fixture
        .clone()
        .or_else(|| cfg.mock.as_ref().and_then(|m| m.fixture.clone()));
    let fixture = load_fixture(fixture_path.as_deref())?;
    let scenario = mock_scenario(&fixture, &args.scenario)?;
    let synthetic = scenario
        .clip
        .clone()
        .ok_or_else(|| CliError::Usage(format!("scenario {:?} has no synthetic clip", args.scenario)))?;
    let query = query_arg(scenario.query.clone().unwrap_or_else(|| DEMO_QUERY.into()))?;
    let clip = synthetic.render();
    let names: Vec<String> = (1..=clip.len()).map(|t| format!("{t:05}")).collect();
    let truth = synthetic.ground_truth();
    let union_truth = if truth.is_empty() {
        MaskSequence::empty(1, clip.len(), clip.width(), clip.height())
    } else {
        union_masks(&truth)?
    };
    let agents = scenario.agents();
    create_dir(&args.out)?;

    let mut records = Vec::new();
    if args.online {
        let frames = clip.frames().iter().zip(&names).map(|(f, n)| Ok((n.clone(), f.clone())));
        let masks = online_to_dir(frames, &query, cfg.online.xi, agents, &args.out, false)?;
        records.push(evaluate_masks("online", &masks, union_truth.masks())?);
    } else {
        let vos = offline_to_dir(&clip, &names, &query, &cfg.offline, &agents, &args.out, false)?;
        for gt in &truth {
            let id = gt.instance_id();
            let pred = vos
                .vis
                .instances
                .iter()
                .find(|i| i.selection.object_index == id)
                .map(|i| i.resolved_sequence.clone())
                .unwrap_or_else(|| MaskSequence::empty(id, clip.len(), clip.width(), clip.height()));
            records.push(evaluate_masks(&format!("instance_{id:03}"), pred.masks(), gt.masks())?);
        }
        records.push(evaluate_masks("vos", vos.sequence.masks(), union_truth.masks())?);
    }
    for r in &mut records {
        r.video = args.scenario.clone();
        r.query = Some(query.as_str().to_string());
    }
    let report = EvalReport::from_records(records);
    write_json(&args.out.join("report.json"), &report)?;
    println!("{}", serde_json::to_string(&report.aggregate).expect("serializable"));
    Ok(())
}
