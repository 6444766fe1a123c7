use csrdcf::eval_harness::{
    discover_sequences, load_sequence, run_ope, run_protocol, run_reset, synth_sequence, FrameStatus, Protocol,
    ResetSettings, ScriptedTracker, SynthSpec,
};
use csrdcf::tracker::TrackerConfig;
use csrdcf::Rect;

fn small_spec(name: &str, frames: usize) -> SynthSpec {
    SynthSpec {
        name: name.into(),
        width: 240,
        height: 180,
        frames,
        target_width: 32.0,
        target_height: 32.0,
        seed: 9,
        ..SynthSpec::default()
    }
}

#[test]
fn saved_sequence_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = synth_sequence(&small_spec("walk", 6)).unwrap();
    let dir = tmp.path().join("walk");
    seq.save(&dir).unwrap();
    let loaded = load_sequence(&dir).unwrap();
    assert_eq!(loaded.name, "walk");
    assert_eq!(loaded.len(), 6);
    for (a, b) in loaded.ground_truth.iter().zip(&seq.ground_truth) {
        assert!((a.x - b.x).abs() < 1e-6 && (a.y - b.y).abs() < 1e-6);
        assert!((a.width - b.width).abs() < 1e-6 && (a.height - b.height).abs() < 1e-6);
    }
    for i in 0..6 {
        assert_eq!(*loaded.frame(i).unwrap(), *seq.frame(i).unwrap());
    }
}

#[test]
fn reads_whitespace_and_polygon_annotations() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = synth_sequence(&small_spec("poly", 3)).unwrap();
    let dir = tmp.path().join("poly");
    seq.save(&dir).unwrap();
    std::fs::remove_file(dir.join("groundtruth.txt")).unwrap();
    std::fs::write(dir.join("groundtruth_rect.txt"), "11\t21\t30\t40\n11 21 30 40\n11,21,30,40\n").unwrap();
    let loaded = load_sequence(&dir).unwrap();
    assert_eq!(loaded.ground_truth[1], Rect::new(10.0, 20.0, 30.0, 40.0));

    std::fs::remove_file(dir.join("groundtruth_rect.txt")).unwrap();
    std::fs::write(dir.join("groundtruth.txt"), "11,21,41,21,41,61,11,61\n".repeat(3)).unwrap();
    let loaded = load_sequence(&dir).unwrap();
    // Polygon corners are taken as zero-based already.
    assert_eq!(loaded.ground_truth[0], Rect::new(11.0, 21.0, 30.0, 40.0));
}

#[test]
fn discovers_nested_sequences() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["b", "a"] {
        synth_sequence(&small_spec(name, 3)).unwrap().save(&tmp.path().join(name)).unwrap();
    }
    let found = discover_sequences(tmp.path()).unwrap();
    let names: Vec<_> = found.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["a", "b"]);
    assert_eq!(discover_sequences(&tmp.path().join("a")).unwrap().len(), 1);
}

#[test]
fn scripted_runs_on_loaded_sequence() {
    let seq = synth_sequence(&small_spec("scripted", 20)).unwrap();
    let mut boxes = seq.ground_truth.clone();
    boxes[7] = Rect::new(0.0, 0.0, 5.0, 5.0);
    let (traj, report) = run_ope(&mut ScriptedTracker { boxes: boxes.clone() }, &seq).unwrap();
    assert_eq!(report.frames, 20);
    assert_eq!(traj.ious[7], 0.0);
    let (traj, report) = run_reset(&mut ScriptedTracker { boxes }, &seq, ResetSettings::default()).unwrap();
    assert_eq!(report.failures, 1);
    assert_eq!(traj.resets, vec![12]);
    assert!((8..12).all(|i| traj.status[i] == FrameStatus::Skipped && traj.boxes[i].is_none()));
    assert!((report.average_overlap - 1.0).abs() < 1e-12);
}

#[test]
fn real_tracker_report_is_consistent() {
    let seq = synth_sequence(&SynthSpec {
        noise_sigma: 2.0,
        ..small_spec("real", 25)
    })
    .unwrap();
    let config = TrackerConfig::default();
    let (traj, ope, telemetry) = run_protocol(&config, &seq, Protocol::Ope, ResetSettings::default()).unwrap();
    assert_eq!(telemetry.len(), 24);
    assert_eq!(ope.success_curve.len(), 101);
    assert_eq!(ope.precision_curve.len(), 51);
    assert!(ope.mean_iou > 0.6, "mean IoU {}", ope.mean_iou);
    assert!(ope.success_curve.windows(2).all(|w| w[1].value <= w[0].value));
    assert!((ope.auc - ope.mean_iou).abs() < 0.02);
    let (reset_traj, reset, _) = run_protocol(&config, &seq, Protocol::Reset, ResetSettings::default()).unwrap();
    assert_eq!(reset.failures, 0);
    assert_eq!(reset_traj.boxes, traj.boxes);
    assert!((reset.average_overlap - ope.average_overlap).abs() < 1e-12);
}
