use std::path::Path;

use reasonseg::eval::{load_davis_layout, load_manifest, EvalError};
use reasonseg::io::{write_frame_png, write_palette_png};
use reasonseg::model::{BinaryMask, Frame};

fn frames(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for t in 1..=n {
        let f = Frame::filled(t, 4, 3, [t as u8 * 40, 0, 0]).unwrap();
        write_frame_png(&f, &dir.join(format!("{:05}.png", t - 1))).unwrap();
    }
}

/// Labels: top row 1, bottom row 2, middle row background.
fn annotations(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let labels = [1, 1, 1, 1, 0, 0, 0, 0, 2, 2, 2, 2];
    for t in 0..n {
        write_palette_png(&dir.join(format!("{t:05}.png")), 4, 3, &labels).unwrap();
    }
}

#[test]
fn davis_tree_with_palette_split() {
    let root = tempfile::tempdir().unwrap();
    frames(&root.path().join("JPEGImages/480p/bike"), 2);
    annotations(&root.path().join("Annotations/480p/bike"), 2);
    let videos = load_davis_layout(root.path()).unwrap();
    assert_eq!(videos.len(), 1);
    let v = &videos[0];
    assert_eq!(v.name, "bike");
    assert_eq!(v.clip.len(), 2);
    assert_eq!(v.object_ids(), vec![1, 2]);
    let gt = v.ground_truth(Some(2));
    assert_eq!(gt.len(), 2);
    assert_eq!(gt.id, "bike/2");
    let expected = BinaryMask::from_fn(4, 3, |_, y| y == 2);
    assert!(gt.masks.iter().all(|m| *m == expected));
    let any = v.ground_truth(None);
    assert_eq!(any.masks[0].count(), 8);
}

#[test]
fn davis_gaps_are_listed() {
    let root = tempfile::tempdir().unwrap();
    frames(&root.path().join("JPEGImages/cat"), 3);
    annotations(&root.path().join("Annotations/cat"), 2);
    match load_davis_layout(root.path()).unwrap_err() {
        EvalError::Gaps { missing, .. } => assert_eq!(missing, vec!["00002"]),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn manifest_jobs_load() {
    let root = tempfile::tempdir().unwrap();
    frames(&root.path().join("videos/a"), 2);
    frames(&root.path().join("videos/b"), 3);
    annotations(&root.path().join("gt/a"), 2);
    annotations(&root.path().join("gt/b"), 3);
    let manifest = root.path().join("jobs.jsonl");
    std::fs::write(
        &manifest,
        "{\"video_dir\": \"videos/a\", \"query\": \"the top stripe\", \"gt_dir\": \"gt/a\", \"object_id\": 1}\n\
         {\"id\": \"b-bottom\", \"video_dir\": \"videos/b\", \"query\": \"the bottom stripe\", \"gt_dir\": \"gt/b\", \"object_id\": 2}\n",
    )
    .unwrap();
    let jobs = load_manifest(&manifest).unwrap();
    assert_eq!(jobs.len(), 2);
    assert_eq!(jobs[1].id, "b-bottom");
    assert_eq!(jobs[1].load_clip().unwrap().len(), 3);
    let gt = jobs[0].load_ground_truth().unwrap();
    assert_eq!(gt.len(), 2);
    assert_eq!(gt.masks[0], BinaryMask::from_fn(4, 3, |_, y| y == 0));
}
