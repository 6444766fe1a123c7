use serde::{Deserialize, Serialize};

use crate::geometry::Rect;

/// Wall-clock cost of the three tracking stages, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub localize_ms: f64,
    pub scale_ms: f64,
    pub update_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.localize_ms + self.scale_ms + self.update_ms
    }
}

/// Per-frame diagnostics of one tracking step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTelemetry {
    pub frame: usize,
    pub bbox: Rect,
    /// Combined channel weights used for localization.
    pub channel_weights: Vec<f64>,
    pub response_peak: f64,
    /// Second-to-first peak ratio of the combined response.
    pub peak_ratio: f64,
    pub scale: f64,
    pub mask_fg_fraction: f64,
    pub mask_fallback: bool,
    pub timings: StageTimings,
}
