use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::mean;
use super::protocol::{run_protocol, EvalReport, Protocol, ResetSettings};
use super::sequence::Sequence;
use crate::error::Result;
use crate::tracker::{TrackerConfig, Variant};

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    /// Mean over sequences of the one-pass mean overlap.
    pub mean_iou: f64,
    /// Total reset-protocol failures over the sequences.
    pub failures: usize,
    pub fps: f64,
    pub per_sequence: Vec<AblationCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub sequence: String,
    pub mean_iou: f64,
    pub failures: usize,
}

struct Outcome {
    ope: EvalReport,
    reset: EvalReport,
}

/// Runs every variant on every sequence under both protocols. Runs are
/// independent and execute on the current rayon pool.
pub fn ablation_run(
    base: &TrackerConfig,
    sequences: &[Sequence],
    variants: &[Variant],
    settings: ResetSettings,
) -> Result<Vec<AblationRow>> {
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..sequences.len()).map(move |s| (v, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(v, s)| {
            let config = base.with_variant(variants[v]);
            let (_, ope, _) = run_protocol(&config, &sequences[s], Protocol::Ope, settings)?;
            let (_, reset, _) = run_protocol(&config, &sequences[s], Protocol::Reset, settings)?;
            Ok(Outcome { ope, reset })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = variants
        .iter()
        .enumerate()
        .map(|(v, &variant)| {
            let mine = &outcomes[v * sequences.len()..(v + 1) * sequences.len()];
            let ious: Vec<f64> = mine.iter().map(|o| o.ope.mean_iou).collect();
            let fps: Vec<f64> = mine.iter().map(|o| o.ope.fps).collect();
            AblationRow {
                variant,
                mean_iou: mean(&ious),
                failures: mine.iter().map(|o| o.reset.failures).sum(),
                fps: mean(&fps),
                per_sequence: mine
                    .iter()
                    .map(|o| AblationCell {
                        sequence: o.ope.sequence.clone(),
                        mean_iou: o.ope.mean_iou,
                        failures: o.reset.failures,
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("variant,mean_iou,failures,fps\n");
    for r in rows {
        out.push_str(&format!("{},{:.6},{},{:.2}\n", r.variant, r.mean_iou, r.failures, r.fps));
    }
    out
}
