//! Spatial reliability map of an L-shaped target: prior, color likelihood,
//! regularized posterior and the final binary mask.
//!
//! cargo run --example reliability_mask -- maps.png

use std::path::PathBuf;

use csrdcf::eval_harness::{synth_sequence, Motion, SynthSpec, TargetShape};
use csrdcf::tracker::{Tracker, TrackerConfig};

fn main() -> csrdcf::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "reliability_maps.png".into());
    let spec = SynthSpec {
        frames: 2,
        motion: Motion::Linear { vx: 0.0, vy: 0.0 },
        target: TargetShape::LShape,
        target_width: 64.0,
        target_height: 64.0,
        ..SynthSpec::default()
    };
    let seq = synth_sequence(&spec)?;
    let tracker = Tracker::init(&*seq.frame(0)?, seq.ground_truth[0], &TrackerConfig::default())?;
    let mask = &tracker.state().mask;
    println!(
        "mask support {} cells, foreground fraction of bbox {:.2}, fallback {}",
        mask.support(),
        mask.fg_fraction,
        mask.fallback
    );
    if let Some(panels) = tracker.last_panels() {
        panels.save_png(&out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
