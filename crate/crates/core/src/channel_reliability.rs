//! Per-channel reliability: how well a channel's filter fits its training
//! data (learning) and how unambiguous its response peak is (detection).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter_learn::ConstrainedFilter;
use crate::spectral::{correlate_spectra, dft2, RealGrid, SpectralGrid};

/// Upper bound on the second-to-first peak ratio.
pub const RATIO_CLAMP: f64 = 0.5;
const MIN_SUPPRESSION_RADIUS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub learning: Vec<f64>,
    pub detection: Vec<f64>,
    pub combined: Vec<f64>,
}

impl ChannelWeights {
    pub fn uniform(n: usize) -> Self {
        let u = vec![1.0 / n as f64; n];
        Self {
            learning: u.clone(),
            detection: vec![1.0; n],
            combined: u,
        }
    }
}

fn normalize(values: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = values.iter().sum();
    (sum > 0.0 && sum.is_finite()).then(|| values.iter().map(|v| v / sum).collect())
}

/// Normalized, zero-clamped channel maxima. Errors when no maximum is positive.
pub fn normalize_maxima(maxima: &[f64]) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = maxima
        .iter()
        .map(|&m| if m > 0.0 { m } else { 0.0 })
        .collect();
    normalize(&clamped).ok_or(Error::AllZeroResponses)
}

/// Learning reliability from features and filter spectra, falling back to
/// uniform weights when every response is non-positive.
pub fn learning_reliability_spectra(
    f_hats: &[SpectralGrid],
    h: &ConstrainedFilter,
) -> Result<Vec<f64>> {
    if f_hats.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: f_hats.len(),
            right: h.len(),
        });
    }
    let maxima = f_hats
        .iter()
        .zip(&h.channels)
        .map(|(f, c)| correlate_spectra(f, &c.h_hat).map(|r| r.max()))
        .collect::<Result<Vec<_>>>()?;
    match normalize_maxima(&maxima) {
        Err(Error::AllZeroResponses) => Ok(vec![1.0 / maxima.len() as f64; maxima.len()]),
        other => other,
    }
}

/// Maximum filter response per channel, normalized to sum to one.
pub fn learning_reliability(f: &[RealGrid], h: &ConstrainedFilter) -> Result<Vec<f64>> {
    let spectra: Vec<SpectralGrid> = f.iter().map(dft2).collect();
    learning_reliability_spectra(&spectra, h)
}

/// Ratio of the strongest response outside a window around the peak to the
/// peak itself, or `None` when the peak is non-positive. The window wraps
/// around the grid border.
pub fn second_peak_ratio(response: &RealGrid) -> Option<f64> {
    let (w, h) = response.dims();
    let (px, py, peak) = response.argmax();
    if !(peak > 0.0) {
        return None;
    }
    let k = (w.min(h) / 20).max(MIN_SUPPRESSION_RADIUS);
    let near = |a: usize, b: usize, n: usize| {
        let d = a.abs_diff(b);
        d.min(n - d) <= k
    };
    let mut second = f64::NEG_INFINITY;
    for y in 0..h {
        for x in 0..w {
            if near(x, px, w) && near(y, py, h) {
                continue;
            }
            second = second.max(response.get(x, y));
        }
    }
    Some(if second.is_finite() {
        (second / peak).max(0.0)
    } else {
        0.0
    })
}

/// `1 - min(ratio, 0.5)` per channel; `0.5` for a non-positive peak.
pub fn detection_reliability(responses: &[RealGrid]) -> Vec<f64> {
    responses
        .iter()
        .map(|r| match second_peak_ratio(r) {
            Some(ratio) => 1.0 - ratio.min(RATIO_CLAMP),
            None => 1.0 - RATIO_CLAMP,
        })
        .collect()
}

/// Elementwise product renormalized to sum to one.
pub fn combine_weights(learning_prev: &[f64], detection: &[f64]) -> Result<Vec<f64>> {
    if learning_prev.len() != detection.len() {
        return Err(Error::LengthMismatch {
            left: learning_prev.len(),
            right: detection.len(),
        });
    }
    let product: Vec<f64> = learning_prev
        .iter()
        .zip(detection)
        .map(|(a, b)| a * b)
        .collect();
    Ok(normalize(&product).unwrap_or_else(|| vec![1.0 / product.len() as f64; product.len()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ChannelKind, FeatureStack};
    use crate::filter_learn::{learn_closed_form, make_desired_response};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn learning_normalization() {
        assert!(close(&normalize_maxima(&[0.7]).unwrap(), &[1.0]));
        assert!(close(
            &normalize_maxima(&[0.3, 0.1]).unwrap(),
            &[0.75, 0.25]
        ));
        assert!(close(&normalize_maxima(&[0.3, -0.2]).unwrap(), &[1.0, 0.0]));
        assert!(matches!(
            normalize_maxima(&[0.0, -1.0]),
            Err(Error::AllZeroResponses)
        ));
    }

    #[test]
    fn discriminative_channel_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (w, h) = (24, 24);
        let g = make_desired_response((w, h), 1.2).unwrap();
        let texture = RealGrid::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - 12.0, y as f64 - 12.0);
            (-(dx * dx + dy * dy) / 18.0).exp() * ((x * 3 + y) % 5) as f64
        });
        let noise = RealGrid::from_fn(w, h, |_, _| rng.random_range(-0.5..0.5));
        let stack = FeatureStack {
            channels: vec![texture.clone(), noise.clone()],
            kinds: vec![ChannelKind::Gray; 2],
            cell_size: 1,
        };
        let filter = learn_closed_form(&stack, &g, 5.0).unwrap();
        // Evaluate on a fresh noise draw: the noise filter does not generalize.
        let fresh = RealGrid::from_fn(w, h, |_, _| rng.random_range(-0.5..0.5));
        let weights = learning_reliability(&[texture, fresh], &filter).unwrap();
        assert!(weights[0] > 0.5, "{weights:?}");
    }

    #[test]
    fn lone_delta_is_fully_reliable() {
        let mut r = RealGrid::zeros(32, 32);
        r.set(7, 9, 3.0);
        assert_eq!(detection_reliability(&[r]), vec![1.0]);
    }

    #[test]
    fn duplicate_peaks_hit_the_clamp() {
        let mut r = RealGrid::zeros(32, 32);
        r.set(4, 4, 1.0);
        r.set(20, 20, 1.0);
        assert_eq!(detection_reliability(&[r]), vec![0.5]);
    }

    #[test]
    fn quarter_ratio_gives_three_quarters() {
        let mut r = RealGrid::zeros(32, 32);
        r.set(4, 4, 2.0);
        r.set(20, 10, 0.5);
        let w = detection_reliability(&[r.clone()]);
        assert!((w[0] - 0.75).abs() < 1e-12);
        assert!((detection_reliability(&[r.map(|v| v * 7.0)])[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn non_positive_peak_floors() {
        assert_eq!(
            detection_reliability(&[RealGrid::filled(8, 8, -1.0)]),
            vec![0.5]
        );
    }

    #[test]
    fn combination_cases() {
        let l = [0.2, 0.3, 0.5];
        assert!(close(&combine_weights(&l, &[0.8, 0.8, 0.8]).unwrap(), &l));
        let u = [1.0 / 3.0; 3];
        let d = [1.0, 0.5, 0.5];
        assert!(close(&combine_weights(&u, &d).unwrap(), &[0.5, 0.25, 0.25]));
        assert!(close(
            &combine_weights(&[0.6, 0.4], &[1.0, 0.5]).unwrap(),
            &[0.75, 0.25]
        ));
        assert!(matches!(
            combine_weights(&[1.0], &[1.0, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
