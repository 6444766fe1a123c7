//! Renders a synthetic sequence to disk in the `img/` + `groundtruth.txt`
//! layout and reads it back.

use csrdcf::eval_harness::{load_sequence, synth_sequence, Motion, Occlusion, SynthSpec};

fn main() -> csrdcf::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synthetic_zoom".into());
    let spec = SynthSpec {
        name: "zoom".into(),
        frames: 30,
        motion: Motion::Zoom {
            factor: 1.1,
            period: 10.0,
        },
        occlusion: Some(Occlusion {
            start: 12,
            end: 16,
            coverage: 0.4,
        }),
        noise_sigma: 2.0,
        seed: 7,
        ..SynthSpec::default()
    };
    synth_sequence(&spec)?.save(dir.as_ref())?;
    let seq = load_sequence(dir.as_ref())?;
    let (first, last) = (seq.ground_truth[0], seq.ground_truth[seq.len() - 1]);
    println!("{} frames in {dir}; box {first} -> {last}", seq.len());
    Ok(())
}
