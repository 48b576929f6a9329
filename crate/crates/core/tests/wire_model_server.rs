mod support;

use std::collections::HashMap;
use std::sync::Mutex;

use reasonseg::backends::model_server::ModelServerClient;
use reasonseg::backends::{BackendError, ModelServerConfig, Propagator, Segmenter};
use reasonseg::model::{encode_mask_rle, BinaryMask, Frame, Rect};
use serde_json::{json, Value};
use support::{FakeServer, Recorded, Reply};

fn client(url: &str) -> ModelServerClient {
    ModelServerClient::new(&ModelServerConfig {
        url: format!("{url}/"),
        timeout_secs: 5,
        max_attempts: 2,
        backoff_ms: 5,
    })
    .unwrap()
}

fn frame(t: usize) -> Frame {
    Frame::filled(t, 8, 6, [t as u8, 0, 0]).unwrap()
}

/// Sessions that hold the seed mask still: `run` returns it for every frame.
fn static_server() -> FakeServer {
    let sessions: Mutex<HashMap<String, (usize, Option<Value>)>> = Mutex::new(HashMap::new());
    let next = Mutex::new(0);
    FakeServer::start(move |req: &Recorded, _| {
        let mut sessions = sessions.lock().unwrap();
        let parts: Vec<&str> = req.path.trim_start_matches('/').split('/').collect();
        match (req.method.as_str(), parts.as_slice()) {
            ("GET", ["healthz"]) => Reply::json(200, json!({"mode": "mock"})),
            ("POST", ["sessions"]) => {
                let frames = req.json()["frames"].as_array().unwrap().len();
                let mut n = next.lock().unwrap();
                *n += 1;
                let id = format!("s{n}");
                sessions.insert(id.clone(), (frames, None));
                Reply::json(200, json!({"session_id": id}))
            }
            ("POST", ["sessions", id, "seed"]) => match sessions.get_mut(*id) {
                Some(s) => {
                    let body = req.json();
                    let idx = body["frame_index"].as_u64().unwrap() as usize;
                    if idx == 0 || idx > s.0 {
                        return Reply::json(400, json!({"error": "frame_index out of range"}));
                    }
                    s.1 = Some(body["mask"].clone());
                    Reply::json(200, json!({}))
                }
                None => Reply::json(404, json!({"error": "unknown session"})),
            },
            ("POST", ["sessions", id, "run"]) => match sessions.get(*id) {
                Some((_, None)) => Reply::json(409, json!({"error": "run before seed"})),
                Some((frames, Some(mask))) => {
                    let body = req.json();
                    let (from, to) = (body["from"].as_u64().unwrap() as usize, body["to"].as_u64().unwrap() as usize);
                    if from < 1 || to > *frames || from > to {
                        return Reply::json(400, json!({"error": "bad range"}));
                    }
                    Reply::json(200, json!({"masks": vec![mask.clone(); to - from + 1]}))
                }
                None => Reply::json(404, json!({"error": "unknown session"})),
            },
            ("DELETE", ["sessions", id]) => {
                sessions.remove(*id);
                Reply::json(200, json!({}))
            }
            _ => Reply::json(404, json!({"error": "no route"})),
        }
    })
}

fn calls(server: &FakeServer) -> Vec<String> {
    server.requests().iter().map(|r| format!("{} {}", r.method, r.path)).collect()
}

#[test]
fn health() {
    let server = static_server();
    assert_eq!(client(&server.url).health().unwrap().mode, "mock");
}

#[test]
fn segment_round_trip() {
    let mask = BinaryMask::from_rect(8, 6, Rect::new(2, 1, 3, 2));
    let rle = serde_json::to_value(encode_mask_rle(&mask)).unwrap();
    let server = FakeServer::start(move |_, _| Reply::json(200, json!({"mask": rle})));
    let got = client(&server.url).segment(&frame(3), "the red thing").unwrap();
    assert_eq!(got, mask);
    let req = &server.requests()[0];
    assert_eq!(req.path, "/segment");
    assert_eq!(req.json()["text"], "the red thing");
    assert!(req.json()["image"].as_str().unwrap().len() > 10);
}

#[test]
fn segment_rejects_wrong_size_masks() {
    let rle = serde_json::to_value(encode_mask_rle(&BinaryMask::empty(4, 4))).unwrap();
    let server = FakeServer::start(move |_, _| Reply::json(200, json!({"mask": rle})));
    let err = client(&server.url).segment(&frame(1), "x").unwrap_err();
    assert!(matches!(err, BackendError::Decode(_)), "{err}");
}

#[test]
fn session_uses_local_indices() {
    let server = static_server();
    let c = client(&server.url);
    let frames: Vec<Frame> = (5..=8).map(frame).collect();
    let mask = BinaryMask::from_rect(8, 6, Rect::new(0, 0, 2, 2));
    {
        let mut s = c.open(&frames).unwrap();
        assert_eq!(s.span(), (5, 8));
        s.seed(6, &mask).unwrap();
        let out = s.run(5, 8).unwrap();
        assert_eq!(out, vec![mask.clone(); 4]);
        assert!(s.run(4, 6).is_err());
    }
    let reqs = server.requests();
    assert_eq!(reqs[0].json()["frames"].as_array().unwrap().len(), 4);
    assert_eq!(reqs[1].json()["frame_index"], json!(2));
    assert_eq!(reqs[2].json(), json!({"from": 1, "to": 4}));
    assert_eq!(calls(&server).last().unwrap(), "DELETE /sessions/s1");
}

#[test]
fn append_recreates_the_remote_session() {
    let server = static_server();
    let c = client(&server.url);
    let mask = BinaryMask::from_rect(8, 6, Rect::new(1, 1, 2, 2));
    let mut s = c.open(&[frame(3)]).unwrap();
    s.seed(3, &mask).unwrap();
    assert_eq!(s.run(3, 3).unwrap(), vec![mask.clone()]);
    s.append(&frame(4)).unwrap();
    assert!(s.append(&frame(6)).is_err());
    assert!(s.append(&Frame::filled(5, 2, 2, [0; 3]).unwrap()).is_err());
    assert_eq!(s.run(4, 4).unwrap(), vec![mask]);
    drop(s);
    assert_eq!(
        calls(&server),
        vec![
            "POST /sessions",
            "POST /sessions/s1/seed",
            "POST /sessions/s1/run",
            "DELETE /sessions/s1",
            "POST /sessions",
            "POST /sessions/s2/seed",
            "POST /sessions/s2/run",
            "DELETE /sessions/s2",
        ]
    );
    let reqs = server.requests();
    assert_eq!(reqs[4].json()["frames"].as_array().unwrap().len(), 2);
    assert_eq!(reqs[5].json()["frame_index"], json!(1));
    assert_eq!(reqs[6].json(), json!({"from": 2, "to": 2}));
}

#[test]
fn conflict_is_reported_without_retry() {
    let server = FakeServer::start(|req, _| match req.path.as_str() {
        "/sessions" => Reply::json(200, json!({"session_id": "z"})),
        p if p.ends_with("/run") => Reply::json(409, json!({"error": "run before seed"})),
        _ => Reply::json(200, json!({})),
    });
    let c = client(&server.url);
    let mut s = c.open(&[frame(1)]).unwrap();
    assert!(matches!(s.run(1, 1), Err(BackendError::Usage(_))));
    s.seed(1, &BinaryMask::empty(8, 6)).unwrap();
    let err = s.run(1, 1).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 409, .. }), "{err}");
    let runs = calls(&server).iter().filter(|c| c.ends_with("/run")).count();
    assert_eq!(runs, 1);
}

#[test]
fn wrong_mask_count_is_a_decode_error() {
    let one = serde_json::to_value(encode_mask_rle(&BinaryMask::empty(8, 6))).unwrap();
    let server = FakeServer::start(move |req, _| match req.path.as_str() {
        "/sessions" => Reply::json(200, json!({"session_id": "z"})),
        p if p.ends_with("/run") => Reply::json(200, json!({"masks": [one.clone()]})),
        _ => Reply::json(200, json!({})),
    });
    let c = client(&server.url);
    let mut s = c.open(&[frame(1), frame(2)]).unwrap();
    s.seed(1, &BinaryMask::empty(8, 6)).unwrap();
    assert!(matches!(s.run(1, 2), Err(BackendError::Decode(_))));
}

#[test]
fn server_errors_are_retried() {
    let server = FakeServer::start(|_, n| {
        if n == 1 {
            Reply::json(500, json!({"error": "oom"}))
        } else {
            Reply::json(200, json!({"mode": "real"}))
        }
    });
    assert_eq!(client(&server.url).health().unwrap().mode, "real");
    assert_eq!(server.count(), 2);
}
