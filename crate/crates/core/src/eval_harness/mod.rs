//! Sequences, synthetic data, evaluation protocols and reports.

pub mod ablation;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod sequence;
pub mod synth;

pub use ablation::{ablation_csv, ablation_run, AblationRow};
pub use metrics::{auc, iou, precision_curve, success_curve, CurvePoint};
pub use protocol::{
    aggregate, evaluate, run_ope, run_protocol, run_reset, CsrFrameTracker, EvalReport, FrameStatus,
    FrameTracker, Protocol, ResetSettings, ScriptedTracker, Trajectory,
};
pub use sequence::{discover_sequences, load_sequence, Frames, Sequence};
pub use synth::{ablation_suite, standard_suite, synth_sequence, Motion, Occlusion, SynthSpec, TargetShape};

use crate::error::{Error, Result};

/// Runs `f` on a rayon pool with `jobs` threads; zero means the default pool.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}
