//! Overlap and center-error curves.

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;

/// Overlap thresholds `0, 0.01, ..., 1`.
pub const SUCCESS_BINS: usize = 100;
/// Center-error thresholds `0, 1, ..., 50` px.
pub const PRECISION_MAX_PX: usize = 50;
pub const PRECISION_REPORT_PX: usize = 20;

const THRESHOLD_EPS: f64 = 1e-12;

/// Intersection over union; zero for disjoint, degenerate or non-finite boxes.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    if !a.is_finite() || !b.is_finite() || a.area() <= 0.0 || b.area() <= 0.0 {
        return 0.0;
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn center_error(a: &Rect, b: &Rect) -> f64 {
    a.center().distance(&b.center())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub value: f64,
}

/// Fraction of frames whose overlap reaches each threshold.
pub fn success_curve(ious: &[f64]) -> Vec<CurvePoint> {
    (0..=SUCCESS_BINS)
        .map(|i| {
            let t = i as f64 / SUCCESS_BINS as f64;
            CurvePoint {
                threshold: t,
                value: fraction(ious, |v| v >= t - THRESHOLD_EPS),
            }
        })
        .collect()
}

/// Fraction of frames whose center error is within each pixel threshold.
pub fn precision_curve(errors: &[f64]) -> Vec<CurvePoint> {
    (0..=PRECISION_MAX_PX)
        .map(|t| CurvePoint {
            threshold: t as f64,
            value: fraction(errors, |e| e <= t as f64),
        })
        .collect()
}

/// Value of a curve at `threshold`, assuming it was sampled there.
pub fn curve_at(curve: &[CurvePoint], threshold: f64) -> f64 {
    curve
        .iter()
        .find(|p| (p.threshold - threshold).abs() < 1e-9)
        .map(|p| p.value)
        .unwrap_or(0.0)
}

/// Trapezoidal area under a curve over its threshold span.
pub fn auc(curve: &[CurvePoint]) -> f64 {
    let (Some(first), Some(last)) = (curve.first(), curve.last()) else {
        return 0.0;
    };
    let span = last.threshold - first.threshold;
    if span <= 0.0 {
        return first.value;
    }
    let area: f64 = curve
        .windows(2)
        .map(|w| 0.5 * (w[0].value + w[1].value) * (w[1].threshold - w[0].threshold))
        .sum();
    area / span
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn fraction(values: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| keep(v)).count() as f64 / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_geometry() {
        let a = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &Rect::new(3.0, 3.0, 1.0, 1.0)), 0.0);
        assert!((iou(&a, &Rect::new(0.5, 0.0, 1.0, 1.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &Rect::new(0.0, 0.0, 0.0, 1.0)), 0.0);
        assert_eq!(iou(&a, &Rect::new(f64::NAN, 0.0, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn three_frame_trace() {
        let ious = [1.0, 0.4, 0.0];
        let curve = success_curve(&ious);
        assert_eq!(curve.len(), 101);
        assert!((curve_at(&curve, 0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((auc(&curve) - mean(&ious)).abs() <= 0.5 / SUCCESS_BINS as f64);
    }

    #[test]
    fn precision_counts_within_threshold() {
        let curve = precision_curve(&[0.0, 10.0, 30.0, 100.0]);
        assert_eq!(curve.len(), 51);
        assert_eq!(curve_at(&curve, 0.0), 0.25);
        assert_eq!(curve_at(&curve, 20.0), 0.5);
        assert_eq!(curve_at(&curve, 50.0), 0.75);
    }
}
