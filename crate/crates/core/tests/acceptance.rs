//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod support;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use reasonseg::backends::mock::{
    linear_motion, GeometricSegmenter, LinearMotionPropagator, MockFixture, MockSelector, SegmenterRule,
    Velocity,
};
use reasonseg::backends::Agents;
use reasonseg::cot::{parse_binary_selectivity, parse_output_list, Judgment, KeyframeChoice};
use reasonseg::eval::{boundary_f, default_tolerance, evaluate_masks, region_similarity};
use reasonseg::model::{
    encode_mask_rle, resolve_non_overlap, union_masks, BinaryMask, Frame, MaskSequence, Query, Rect,
};
use reasonseg::pipeline::{reference_online_simulator, run_reasoning_vos, OnlineTracker, RunConfig};
use reasonseg::sampling::{compose_frames, compute_xi_offline, sample_candidates, Orientation};
use support::oracles;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn transcript(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/transcripts/{name}", env!("CARGO_MANIFEST_DIR")))
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn choice(object_index: usize, candidate_index: usize, description: &str) -> KeyframeChoice {
    KeyframeChoice {
        object_index,
        candidate_index,
        description: description.into(),
    }
}

fn parser_fixtures() -> Check {
    let offline = [
        (
            "offline_bicycles.txt",
            7,
            vec![
                choice(1, 1, "the individual in a white shirt riding a bicycle at the left center of the frame"),
                choice(2, 1, "the individual with a backpack on a bicycle at the center further down the road"),
                choice(3, 2, "the individual in a light-colored shirt on a bicycle at the left side of the frame"),
            ],
        ),
        ("offline_towel.txt", 4, vec![choice(1, 2, "the green towel held prominently by the person")]),
    ];
    for (name, t_prime, expected) in offline {
        let parsed = parse_output_list(&transcript(name), t_prime).map_err(|e| format!("{name}: {e}"))?;
        ensure(parsed.warnings.is_empty(), || format!("{name}: warnings {:?}", parsed.warnings))?;
        ensure(parsed.choices == expected, || format!("{name}: got {:?}", parsed.choices))?;
    }
    for (name, expected) in [("online_four_wheeler.txt", Judgment::No), ("online_parent.txt", Judgment::Yes)] {
        let j = parse_binary_selectivity(&transcript(name));
        ensure(j.value == expected && !j.ambiguous, || format!("{name}: got {j:?}"))?;
    }
    let inline = r#"Output list: [{object_index: 1, keyframe: 4, object_description: "the man at the top left corner of the image"}]"#;
    let parsed = parse_output_list(inline, 8).map_err(|e| e.to_string())?;
    ensure(
        parsed.warnings.is_empty() && parsed.choices == vec![choice(1, 4, "the man at the top left corner of the image")],
        || format!("inline example: got {parsed:?}"),
    )?;
    Ok("4/4 transcripts and the inline example exact, zero warnings".into())
}

fn sampling_law() -> Check {
    let started = Instant::now();
    for t in 1..=10_000usize {
        let xi = compute_xi_offline(t, 8);
        ensure(xi == (t - 1) / 8 + 1, || format!("T={t}: xi {xi}"))?;
        let plan = sample_candidates(t, xi);
        let t_prime = plan.candidate_count;
        ensure(t_prime == t / xi && (1..=8).contains(&t_prime), || format!("T={t}: T'={t_prime}"))?;
        ensure(plan.candidate_frame_indices.len() == t_prime, || format!("T={t}: index count"))?;
        for (i, &f) in plan.candidate_frame_indices.iter().enumerate() {
            ensure(f == i * xi + 1 && f <= t, || format!("T={t}: candidate {} -> frame {f}", i + 1))?;
        }
    }
    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(1), "sampling sweep")?;
    Ok(format!("T in 1..=10000 exhaustive, {elapsed:.2?}"))
}

fn grid_layout() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let cases = 300;
    for case in 0..cases {
        let (w, h) = (rng.random_range(1..=300u32), rng.random_range(1..=300u32));
        let n = rng.random_range(1..=16usize);
        let cap = rng.random_range(16..=1400u32);
        let frames: Vec<Frame> = (1..=n)
            .map(|t| Frame::filled(t, w, h, [(t * 15) as u8, 255 - (t * 15) as u8, 7]).unwrap())
            .collect();
        let refs: Vec<&Frame> = frames.iter().collect();
        let grid = compose_frames(&refs, cap).map_err(|e| format!("case {case}: {e}"))?;
        let ctx = || format!("case {case}: {n} x {w}x{h}, cap {cap}");
        let expected = if w <= h { Orientation::Horizontal } else { Orientation::Vertical };
        ensure(grid.orientation == expected, || format!("{}: orientation", ctx()))?;
        ensure(grid.width().max(grid.height()) <= cap, || format!("{}: {}x{}", ctx(), grid.width(), grid.height()))?;
        let (full_w, full_h) = match expected {
            Orientation::Horizontal => (w * n as u32, h),
            Orientation::Vertical => (w, h * n as u32),
        };
        if full_w.max(full_h) <= cap {
            ensure((grid.width(), grid.height()) == (full_w, full_h), || format!("{}: resized below cap", ctx()))?;
        }
        ensure(grid.cell_rects.len() == n, || format!("{}: cell count", ctx()))?;
        for (i, pair) in grid.cell_rects.windows(2).enumerate() {
            let ordered = match expected {
                Orientation::Horizontal => pair[0].x + pair[0].w == pair[1].x,
                Orientation::Vertical => pair[0].y + pair[0].h == pair[1].y,
            };
            ensure(ordered, || format!("{}: cells {} and {} not adjacent in order", ctx(), i + 1, i + 2))?;
        }
        for (i, r) in grid.cell_rects.iter().enumerate() {
            if r.w >= 5 && r.h >= 5 {
                let px = grid.image.get_pixel(r.x + r.w / 2, r.y + r.h / 2).0;
                let want = frames[i].pixel(0, 0);
                let close = px.iter().zip(want).all(|(&a, b)| a.abs_diff(b) <= 1);
                ensure(close, || format!("{}: cell {} shows {px:?}, frame has {want:?}", ctx(), i + 1))?;
            }
        }
    }
    Ok(format!("{cases} random shapes: orientation, temporal order, side cap"))
}

fn non_overlap() -> Check {
    let mut rng = StdRng::seed_from_u64(23);
    let cases = 1000;
    for case in 0..cases {
        let (w, h) = (rng.random_range(1..=32u32), rng.random_range(1..=32u32));
        let k = rng.random_range(1..=5usize);
        let frames = rng.random_range(1..=3usize);
        let raw: Vec<MaskSequence> = (1..=k)
            .map(|id| {
                let masks = (0..frames).map(|_| oracles::random_mask(&mut rng, w, h)).collect();
                MaskSequence::new(id, masks).unwrap()
            })
            .collect();
        let resolved = resolve_non_overlap(&raw).map_err(|e| format!("case {case}: {e}"))?;
        let expected = oracles::non_overlap(&raw);
        for (seq, want) in resolved.iter().zip(&expected) {
            ensure(seq.masks() == want.as_slice(), || format!("case {case}: instance {} differs", seq.instance_id()))?;
        }
        for t in 0..frames {
            for i in 0..k {
                for j in i + 1..k {
                    let n = resolved[i].masks()[t].intersection_count(&resolved[j].masks()[t]).unwrap();
                    ensure(n == 0, || format!("case {case}: instances {} and {} overlap", i + 1, j + 1))?;
                }
            }
        }
    }
    Ok(format!("{cases} random mask sets bit-exact, pairwise disjoint"))
}

fn metrics() -> Check {
    let mut rng = StdRng::seed_from_u64(31);
    let cases = 1000;
    let pairs: Vec<(BinaryMask, BinaryMask)> = (0..cases)
        .map(|_| {
            let (w, h) = (rng.random_range(1..=64u32), rng.random_range(1..=64u32));
            (oracles::random_mask(&mut rng, w, h), oracles::random_mask(&mut rng, w, h))
        })
        .collect();
    let started = Instant::now();
    let mut ours = Vec::with_capacity(cases);
    for (a, b) in &pairs {
        let j = region_similarity(a, b).map_err(|e| e.to_string())?;
        let f = boundary_f(a, b, default_tolerance(a.width(), a.height())).map_err(|e| e.to_string())?;
        let rec = evaluate_masks("x", std::slice::from_ref(a), std::slice::from_ref(b)).map_err(|e| e.to_string())?;
        ours.push((j, f, rec));
    }
    let elapsed = started.elapsed();
    for (case, ((a, b), (j, f, rec))) in pairs.iter().zip(&ours).enumerate() {
        let tol = oracles::default_tolerance(a.width(), a.height());
        ensure(default_tolerance(a.width(), a.height()) == tol, || format!("case {case}: tolerance"))?;
        let (oj, of) = (oracles::iou(a, b), oracles::boundary_f(a, b, tol));
        ensure(*j == oj, || format!("case {case}: J {j} vs oracle {oj}"))?;
        ensure(*f == of, || format!("case {case}: F {f} vs oracle {of}"))?;
        ensure(rec.j == *j && rec.f == *f && rec.jf == (j + f) / 2.0, || format!("case {case}: J&F {}", rec.jf))?;
    }
    within(elapsed, Duration::from_secs(30), "metrics")?;
    Ok(format!("{cases} random pairs exact vs oracles, {elapsed:.2?}"))
}

const OW: u32 = 20;
const OH: u32 = 16;

fn online_agents(judge: BTreeMap<usize, bool>, rects: BTreeMap<usize, Rect>, v: (i64, i64)) -> Agents {
    Agents::new(
        Arc::new(MockSelector::scripted(judge)),
        Arc::new(GeometricSegmenter::new(SegmenterRule {
            frame_rects: rects,
            ..Default::default()
        })),
        Arc::new(LinearMotionPropagator::constant(v.0, v.1)),
    )
}

fn track(xi: usize, judgments: &[bool], rects: &[Rect], v: (i64, i64)) -> Result<Vec<BinaryMask>, String> {
    let judge = judgments.iter().enumerate().map(|(i, &b)| (i + 1, b)).collect();
    let rect_map = rects.iter().enumerate().map(|(i, &r)| (i + 1, r)).collect();
    let mut tracker = OnlineTracker::new(Query::new("target").unwrap(), xi, online_agents(judge, rect_map, v))
        .map_err(|e| e.to_string())?;
    (1..=judgments.len())
        .map(|t| {
            tracker
                .step(Frame::filled(t, OW, OH, [t as u8, 0, 0]).unwrap())
                .map_err(|e| format!("t={t}: {e}"))
        })
        .collect()
}

fn online_state_machine() -> Check {
    let mut rng = StdRng::seed_from_u64(47);
    let cases = 500;
    for case in 0..cases {
        let frames = rng.random_range(1..=64usize);
        let xi = [1usize, 2, 4, 8][rng.random_range(0..4)];
        let v = (rng.random_range(-2..=2i64), rng.random_range(-2..=2i64));
        let p_yes = rng.random_range(0.0..1.0);
        let judgments: Vec<bool> = (0..frames).map(|_| rng.random_bool(p_yes)).collect();
        let rects: Vec<Rect> = (0..frames)
            .map(|_| {
                Rect::new(rng.random_range(0..OW), rng.random_range(0..OH), rng.random_range(1..6), rng.random_range(1..6))
            })
            .collect();
        let ctx = || format!("case {case}: T={frames}, xi={xi}");

        let got = track(xi, &judgments, &rects, v)?;
        let velocity = Velocity { dx: v.0, dy: v.1 };
        let want = reference_online_simulator(
            |t| judgments[t - 1],
            |t| BinaryMask::from_rect(OW, OH, rects[t - 1]),
            |m, from, to| linear_motion(m, velocity, to as i64 - from as i64),
            frames,
            xi,
            (OW, OH),
        );
        ensure(got == want, || format!("{}: differs from reference", ctx()))?;

        let first_yes = (1..=frames).step_by(xi).find(|&t| judgments[t - 1]).unwrap_or(frames + 1);
        ensure(got[..first_yes - 1].iter().all(BinaryMask::is_empty), || format!("{}: output before first yes", ctx()))?;

        let cut = rng.random_range(0..frames);
        let mut j2 = judgments.clone();
        let mut r2 = rects.clone();
        for t in cut..frames {
            j2[t] = rng.random_bool(0.5);
            r2[t] = Rect::new(rng.random_range(0..OW), rng.random_range(0..OH), 3, 3);
        }
        let mutated = track(xi, &j2, &r2, v)?;
        ensure(got[..cut] == mutated[..cut], || format!("{}: prefix 1..={cut} changed by suffix mutation", ctx()))?;
    }
    Ok(format!("{cases} scripts match the reference simulator; causal; silent before first yes"))
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end() -> Check {
    let started = Instant::now();
    let fixture = MockFixture::builtin();
    let sc = fixture.scenario("two-rects").map_err(|e| e.to_string())?;
    let synth = sc.clip.clone().ok_or("scenario has no clip")?;
    let clip = synth.render();
    let truth = synth.ground_truth();
    let union_truth = union_masks(&truth).map_err(|e| e.to_string())?;
    let query = Query::new(sc.query.clone().unwrap_or_else(|| "moving blocks".into())).unwrap();
    ensure(clip.len() == 24, || format!("clip has {} frames", clip.len()))?;

    let encode = |seq: &MaskSequence| -> Vec<String> {
        seq.masks().iter().map(|m| serde_json::to_string(&encode_mask_rle(m)).unwrap()).collect()
    };
    let mut runs = Vec::new();
    for workers in [1, 4] {
        let cfg = RunConfig { workers, ..Default::default() };
        let out = run_reasoning_vos(&clip, &query, &cfg, &sc.agents()).map_err(|e| e.to_string())?;
        ensure(out.vis.instances.len() == 2, || format!("{} instances", out.vis.instances.len()))?;
        for (inst, gt) in out.vis.instances.iter().zip(&truth) {
            let rec = evaluate_masks("vis", inst.resolved_sequence.masks(), gt.masks()).map_err(|e| e.to_string())?;
            ensure(rec.jf == 1.0, || format!("VIS instance {}: J&F {}", inst.selection.object_index, rec.jf))?;
        }
        let rec = evaluate_masks("vos", out.sequence.masks(), union_truth.masks()).map_err(|e| e.to_string())?;
        ensure(rec.jf == 1.0, || format!("VOS J&F {}", rec.jf))?;
        let mut bytes = encode(&out.sequence);
        for inst in &out.vis.instances {
            bytes.extend(encode(&inst.resolved_sequence));
        }
        runs.push(bytes);
    }
    ensure(runs[0] == runs[1], || "in-memory reruns differ".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let args = ["reasonseg", "--log-level", "error", "mock-demo", "--scenario", "two-rects", "--out"];
        let code = reasonseg::cli::main_from_args(args.iter().map(Into::into).chain([out.clone().into_os_string()]));
        ensure(code == ExitCode::SUCCESS, || format!("mock-demo exited {code:?}"))?;
        trees.push(tree(&out));
    }
    ensure(trees[0] == trees[1], || "mock-demo output trees differ".into())?;
    ensure(!trees[0].is_empty(), || "mock-demo wrote nothing".into())?;

    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(5), "end-to-end")?;
    Ok(format!("VIS 2/2 and VOS J&F = 1.0, reruns byte-identical ({} files), {elapsed:.2?}", trees[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("parser fixtures", parser_fixtures),
        ("sampling law", sampling_law),
        ("non-overlap resolution", non_overlap),
        ("metrics vs oracles", metrics),
        ("online state machine", online_state_machine),
        ("end-to-end mock pipeline", end_to_end),
        ("grid composition", grid_layout),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
