//! Ablation over the five reliability variants on the synthetic stress set.
//!
//! cargo run --release --example ablation_table [seed]

use csrdcf::eval_harness::{ablation_csv, ablation_run, ablation_suite, synth_sequence, ResetSettings};
use csrdcf::tracker::{TrackerConfig, Variant};

fn main() -> csrdcf::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let sequences = ablation_suite(seed)
        .iter()
        .map(synth_sequence)
        .collect::<csrdcf::Result<Vec<_>>>()?;
    let rows = ablation_run(&TrackerConfig::default(), &sequences, &Variant::ALL, ResetSettings::default())?;
    print!("{}", ablation_csv(&rows));
    Ok(())
}
