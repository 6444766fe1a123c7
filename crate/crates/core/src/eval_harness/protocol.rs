//! One-pass and reset-based evaluation.

use std::sync::Arc;
use std::time::Instant;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::metrics::{self, CurvePoint, PRECISION_REPORT_PX};
use super::sequence::Sequence;
use crate::error::{Error, Result};
use crate::features::ColornameTable;
use crate::geometry::Rect;
use crate::tracker::{colorname_table, FrameTelemetry, Tracker, TrackerConfig};

pub const DEFAULT_REINIT_GAP: usize = 5;

/// Anything that can be initialized on a box and then asked for one box per
/// frame. Scripted implementations make protocols testable without images.
pub trait FrameTracker {
    fn initialize(&mut self, index: usize, frame: &RgbImage, bbox: Rect) -> Result<()>;
    fn track(&mut self, index: usize, frame: &RgbImage) -> Result<Rect>;
}

/// Adapter running the correlation filter tracker under a protocol.
pub struct CsrFrameTracker {
    config: TrackerConfig,
    table: Arc<ColornameTable>,
    tracker: Option<Tracker>,
    /// Telemetry of every tracked frame since construction.
    pub telemetry: Vec<FrameTelemetry>,
}

impl CsrFrameTracker {
    pub fn new(config: &TrackerConfig) -> Result<Self> {
        config.validate()?;
        let (table, _) = colorname_table(config);
        Ok(Self {
            config: config.clone(),
            table,
            tracker: None,
            telemetry: Vec::new(),
        })
    }

    pub fn inner(&self) -> Option<&Tracker> {
        self.tracker.as_ref()
    }
}

impl FrameTracker for CsrFrameTracker {
    fn initialize(&mut self, _index: usize, frame: &RgbImage, bbox: Rect) -> Result<()> {
        self.tracker = Some(Tracker::init_with_table(frame, bbox, &self.config, self.table.clone())?);
        Ok(())
    }

    fn track(&mut self, _index: usize, frame: &RgbImage) -> Result<Rect> {
        let tracker = self.tracker.as_mut().ok_or_else(|| Error::Config("track called before initialize".into()))?;
        let (bbox, telemetry) = tracker.track(frame)?;
        self.telemetry.push(telemetry);
        Ok(bbox)
    }
}

/// Replays fixed boxes; the initialization box is ignored.
pub struct ScriptedTracker {
    pub boxes: Vec<Rect>,
}

impl FrameTracker for ScriptedTracker {
    fn initialize(&mut self, _index: usize, _frame: &RgbImage, _bbox: Rect) -> Result<()> {
        Ok(())
    }

    fn track(&mut self, index: usize, _frame: &RgbImage) -> Result<Rect> {
        Ok(self.boxes[index])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ope,
    Reset,
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ope" => Ok(Protocol::Ope),
            "reset" => Ok(Protocol::Reset),
            _ => Err(Error::Config(format!("unknown protocol {s:?}; expected ope or reset"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameStatus {
    /// Tracker (re)initialized from ground truth.
    Init,
    Tracked,
    /// Zero overlap; the tracker is considered lost.
    Failed,
    /// Between a failure and the next initialization.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSettings {
    /// Frames from a failure to the re-initialization.
    pub reinit_gap: usize,
    /// Tracked frames after each re-initialization left out of accuracy.
    pub burn_in: usize,
}

impl Default for ResetSettings {
    fn default() -> Self {
        Self {
            reinit_gap: DEFAULT_REINIT_GAP,
            burn_in: 0,
        }
    }
}

/// Per-frame outcome of a run. Skipped frames carry no box and zero overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sequence: String,
    pub boxes: Vec<Option<Rect>>,
    pub ious: Vec<f64>,
    pub status: Vec<FrameStatus>,
    /// Frames of re-initialization after a failure.
    pub resets: Vec<usize>,
    pub failures: Vec<usize>,
    /// Frames whose overlap counts towards accuracy.
    pub accuracy_frames: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sequence: String,
    pub protocol: Protocol,
    pub frames: usize,
    pub success_curve: Vec<CurvePoint>,
    pub precision_curve: Vec<CurvePoint>,
    pub auc: f64,
    pub precision_at_20: f64,
    /// Mean overlap of the frames the curves are computed over.
    pub mean_iou: f64,
    pub failures: usize,
    /// Mean overlap over successfully tracked frames.
    pub average_overlap: f64,
    pub fps: f64,
}

/// Computes the report of a finished trajectory. Curves cover every frame
/// with a prediction; accuracy covers `trajectory.accuracy_frames`.
pub fn evaluate(trajectory: &Trajectory, ground_truth: &[Rect], protocol: Protocol, fps: f64) -> EvalReport {
    let mut ious = Vec::new();
    let mut errors = Vec::new();
    for (b, gt) in trajectory.boxes.iter().zip(ground_truth) {
        if let Some(b) = b {
            ious.push(metrics::iou(b, gt));
            let e = metrics::center_error(b, gt);
            errors.push(if e.is_finite() { e } else { f64::INFINITY });
        }
    }
    let success_curve = metrics::success_curve(&ious);
    let precision_curve = metrics::precision_curve(&errors);
    let accuracy: Vec<f64> = trajectory.accuracy_frames.iter().map(|&i| trajectory.ious[i]).collect();
    EvalReport {
        sequence: trajectory.sequence.clone(),
        protocol,
        frames: trajectory.len(),
        auc: metrics::auc(&success_curve),
        precision_at_20: metrics::curve_at(&precision_curve, PRECISION_REPORT_PX as f64),
        mean_iou: metrics::mean(&ious),
        failures: trajectory.failures.len(),
        average_overlap: metrics::mean(&accuracy),
        success_curve,
        precision_curve,
        fps,
    }
}

fn empty_trajectory(sequence: &Sequence) -> Trajectory {
    let n = sequence.len();
    Trajectory {
        sequence: sequence.name.clone(),
        boxes: vec![None; n],
        ious: vec![0.0; n],
        status: vec![FrameStatus::Skipped; n],
        resets: Vec::new(),
        failures: Vec::new(),
        accuracy_frames: Vec::new(),
    }
}

fn check_sequence(sequence: &Sequence) -> Result<()> {
    if sequence.is_empty() {
        return Err(Error::InvalidSpec(format!("sequence {} has no frames", sequence.name)));
    }
    if sequence.ground_truth.len() != sequence.len() {
        return Err(Error::FrameCountMismatch {
            frames: sequence.len(),
            ground_truth: sequence.ground_truth.len(),
        });
    }
    Ok(())
}

fn fps(frames: usize, seconds: f64) -> f64 {
    if seconds > 0.0 {
        frames as f64 / seconds
    } else {
        0.0
    }
}

/// Initializes on the first ground-truth box and tracks to the end.
pub fn run_ope(tracker: &mut dyn FrameTracker, sequence: &Sequence) -> Result<(Trajectory, EvalReport)> {
    check_sequence(sequence)?;
    let mut traj = empty_trajectory(sequence);
    let gt = &sequence.ground_truth;
    let mut seconds = 0.0;
    for i in 0..sequence.len() {
        let frame = sequence.frame(i)?;
        let start = Instant::now();
        let bbox = if i == 0 {
            tracker.initialize(0, &frame, gt[0])?;
            traj.status[0] = FrameStatus::Init;
            gt[0]
        } else {
            let b = tracker.track(i, &frame)?;
            traj.status[i] = FrameStatus::Tracked;
            traj.accuracy_frames.push(i);
            b
        };
        seconds += start.elapsed().as_secs_f64();
        traj.boxes[i] = Some(bbox);
        traj.ious[i] = metrics::iou(&bbox, &gt[i]);
    }
    let report = evaluate(&traj, gt, Protocol::Ope, fps(sequence.len(), seconds));
    Ok((traj, report))
}

/// Re-initializes `reinit_gap` frames after every zero-overlap frame.
/// Initialization frames, failure frames, skipped frames and the burn-in
/// after each re-initialization are left out of accuracy.
pub fn run_reset(
    tracker: &mut dyn FrameTracker,
    sequence: &Sequence,
    settings: ResetSettings,
) -> Result<(Trajectory, EvalReport)> {
    check_sequence(sequence)?;
    let mut traj = empty_trajectory(sequence);
    let gt = &sequence.ground_truth;
    let gap = settings.reinit_gap.max(1);
    let mut next_init = Some(0);
    let mut since_init = 0;
    let mut seconds = 0.0;
    let mut timed = 0;
    for i in 0..sequence.len() {
        if next_init.is_some_and(|f| i < f) {
            continue;
        }
        let frame = sequence.frame(i)?;
        let start = Instant::now();
        if next_init == Some(i) {
            tracker.initialize(i, &frame, gt[i])?;
            if i > 0 {
                traj.resets.push(i);
            }
            traj.status[i] = FrameStatus::Init;
            traj.boxes[i] = Some(gt[i]);
            traj.ious[i] = metrics::iou(&gt[i], &gt[i]);
            next_init = None;
            since_init = 0;
        } else {
            let bbox = tracker.track(i, &frame)?;
            since_init += 1;
            let overlap = metrics::iou(&bbox, &gt[i]);
            traj.boxes[i] = Some(bbox);
            traj.ious[i] = overlap;
            if overlap <= 0.0 {
                traj.status[i] = FrameStatus::Failed;
                traj.failures.push(i);
                next_init = Some(i + gap);
            } else {
                traj.status[i] = FrameStatus::Tracked;
                if since_init > settings.burn_in {
                    traj.accuracy_frames.push(i);
                }
            }
        }
        seconds += start.elapsed().as_secs_f64();
        timed += 1;
    }
    let report = evaluate(&traj, gt, Protocol::Reset, fps(timed, seconds));
    Ok((traj, report))
}

/// Runs one protocol with a fresh correlation filter tracker.
pub fn run_protocol(
    config: &TrackerConfig,
    sequence: &Sequence,
    protocol: Protocol,
    settings: ResetSettings,
) -> Result<(Trajectory, EvalReport, Vec<FrameTelemetry>)> {
    let mut tracker = CsrFrameTracker::new(config)?;
    let (traj, report) = match protocol {
        Protocol::Ope => run_ope(&mut tracker, sequence)?,
        Protocol::Reset => run_reset(&mut tracker, sequence, settings)?,
    };
    Ok((traj, report, tracker.telemetry))
}

/// Mean of each per-sequence summary value.
pub fn aggregate(reports: &[EvalReport]) -> Option<EvalReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let avg_curve = |f: fn(&EvalReport) -> &Vec<CurvePoint>| -> Vec<CurvePoint> {
        f(first)
            .iter()
            .enumerate()
            .map(|(i, p)| CurvePoint {
                threshold: p.threshold,
                value: reports.iter().map(|r| f(r)[i].value).sum::<f64>() / n,
            })
            .collect()
    };
    Some(EvalReport {
        sequence: "ALL".into(),
        protocol: first.protocol,
        frames: reports.iter().map(|r| r.frames).sum(),
        success_curve: avg_curve(|r| &r.success_curve),
        precision_curve: avg_curve(|r| &r.precision_curve),
        auc: avg(|r| r.auc),
        precision_at_20: avg(|r| r.precision_at_20),
        mean_iou: avg(|r| r.mean_iou),
        failures: reports.iter().map(|r| r.failures).sum(),
        average_overlap: avg(|r| r.average_overlap),
        fps: avg(|r| r.fps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval_harness::sequence::Frames;

    fn blank_sequence(gt: Vec<Rect>) -> Sequence {
        let frames = vec![RgbImage::new(4, 4); gt.len()];
        Sequence::new("scripted", Frames::Memory(frames), gt).unwrap()
    }

    fn moving_gt(n: usize) -> Vec<Rect> {
        (0..n).map(|i| Rect::new(i as f64 * 2.0, 10.0, 20.0, 20.0)).collect()
    }

    #[test]
    fn oracle_trajectory_is_perfect() {
        let gt = moving_gt(30);
        let seq = blank_sequence(gt.clone());
        let (_, report) = run_ope(&mut ScriptedTracker { boxes: gt.clone() }, &seq).unwrap();
        assert_eq!(report.auc, 1.0);
        assert_eq!(report.precision_at_20, 1.0);
        let (traj, reset) = run_reset(&mut ScriptedTracker { boxes: gt }, &seq, ResetSettings::default()).unwrap();
        assert_eq!(reset.failures, 0);
        assert!(traj.resets.is_empty());
        assert_eq!(reset.average_overlap, report.average_overlap);
    }

    #[test]
    fn frozen_box_falls_to_zero() {
        let gt = moving_gt(40);
        let seq = blank_sequence(gt.clone());
        let (_, report) = run_ope(&mut ScriptedTracker { boxes: vec![gt[0]; 40] }, &seq).unwrap();
        assert_eq!(report.success_curve.last().unwrap().value, 1.0 / 40.0);
        assert!(report.success_curve[90].value < 0.1);
        for w in report.success_curve.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
        for w in report.precision_curve.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
    }

    #[test]
    fn single_scripted_failure() {
        let gt = moving_gt(100);
        let mut boxes = gt.clone();
        // Frame 30 in one-based numbering.
        boxes[29] = Rect::new(500.0, 500.0, 20.0, 20.0);
        let seq = blank_sequence(gt);
        let (traj, report) = run_reset(&mut ScriptedTracker { boxes }, &seq, ResetSettings::default()).unwrap();
        assert_eq!(report.failures, 1);
        assert_eq!(traj.failures, vec![29]);
        assert_eq!(traj.resets, vec![34]);
        let expected: Vec<usize> = (1..29).chain(35..100).collect();
        assert_eq!(traj.accuracy_frames, expected);
        assert!(traj.boxes[30..34].iter().all(Option::is_none));
    }

    #[test]
    fn far_box_fails_every_segment() {
        let gt = moving_gt(23);
        let seq = blank_sequence(gt);
        let far = vec![Rect::new(900.0, 900.0, 5.0, 5.0); 23];
        let (traj, _) = run_reset(&mut ScriptedTracker { boxes: far }, &seq, ResetSettings::default()).unwrap();
        assert_eq!(traj.failures, vec![1, 7, 13, 19]);
        assert_eq!(traj.resets, vec![6, 12, 18]);
        assert!(traj.accuracy_frames.is_empty());
    }

    #[test]
    fn burn_in_drops_frames_after_init() {
        let gt = moving_gt(20);
        let seq = blank_sequence(gt.clone());
        let settings = ResetSettings {
            reinit_gap: 5,
            burn_in: 3,
        };
        let (traj, _) = run_reset(&mut ScriptedTracker { boxes: gt }, &seq, settings).unwrap();
        assert_eq!(traj.accuracy_frames, (4..20).collect::<Vec<_>>());
    }

    #[test]
    fn aggregate_auc_is_mean() {
        let gt = moving_gt(10);
        let seq = blank_sequence(gt.clone());
        let (_, a) = run_ope(&mut ScriptedTracker { boxes: gt.clone() }, &seq).unwrap();
        let shifted = gt.iter().map(|r| Rect::new(r.x + 10.0, r.y, r.width, r.height)).collect();
        let (_, b) = run_ope(&mut ScriptedTracker { boxes: shifted }, &seq).unwrap();
        let all = aggregate(&[a.clone(), b.clone()]).unwrap();
        assert!((all.auc - (a.auc + b.auc) / 2.0).abs() < 1e-15);
    }
}
