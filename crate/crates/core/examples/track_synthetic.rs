//! Tracks a synthetic sequence frame by frame and prints telemetry.

use csrdcf::eval_harness::{iou, synth_sequence, Motion, SynthSpec, TargetShape};
use csrdcf::tracker::{Tracker, TrackerConfig};

fn main() -> csrdcf::Result<()> {
    let spec = SynthSpec {
        frames: 40,
        motion: Motion::Sinusoid {
            speed: 3.0,
            amplitude: 40.0,
            period: 30.0,
        },
        target: TargetShape::Ellipse,
        noise_sigma: 3.0,
        seed: 42,
        ..SynthSpec::default()
    };
    let seq = synth_sequence(&spec)?;
    let mut tracker = Tracker::init(&*seq.frame(0)?, seq.ground_truth[0], &TrackerConfig::default())?;
    for i in 1..seq.len() {
        let (bbox, t) = tracker.track(&*seq.frame(i)?)?;
        if i % 5 == 0 {
            println!(
                "frame {i:>3}  iou {:.3}  scale {:.3}  peak {:.3}  ratio {:.2}  mask {:.2}  {:.1} ms",
                iou(&bbox, &seq.ground_truth[i]),
                t.scale,
                t.response_peak,
                t.peak_ratio,
                t.mask_fg_fraction,
                t.timings.total_ms()
            );
        }
    }
    Ok(())
}
