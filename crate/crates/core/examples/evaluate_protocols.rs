//! Runs the synthetic suite under both protocols and prints a summary.
//!
//! cargo run --release --example evaluate_protocols [seed]

use csrdcf::eval_harness::{run_protocol, standard_suite, synth_sequence, Protocol, ResetSettings};
use csrdcf::tracker::TrackerConfig;

fn main() -> csrdcf::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = TrackerConfig::default();
    println!("{:<12} {:>8} {:>8} {:>9} {:>8}", "sequence", "ope_iou", "auc", "failures", "fps");
    for spec in standard_suite(seed) {
        let seq = synth_sequence(&spec)?;
        let (_, ope, _) = run_protocol(&config, &seq, Protocol::Ope, ResetSettings::default())?;
        let (_, reset, _) = run_protocol(&config, &seq, Protocol::Reset, ResetSettings::default())?;
        println!(
            "{:<12} {:>8.3} {:>8.3} {:>9} {:>8.1}",
            spec.name, ope.mean_iou, ope.auc, reset.failures, ope.fps
        );
    }
    Ok(())
}
