//! One-dimensional correlation filter over a pyramid of scaled samples.

use std::sync::Arc;

use image::RgbImage;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::features::{extract_hog, sample_patch};
use crate::geometry::Point;
use crate::spectral::Complex64;

const SCALE_CELL: usize = 4;

#[derive(Clone)]
pub struct ScaleFilter {
    count: usize,
    step: f64,
    lambda: f64,
    /// Target size in frame pixels at scale 1.
    base_size: (f64, f64),
    model_size: (usize, usize),
    window: Vec<f64>,
    g_hat: Vec<Complex64>,
    /// Per-feature numerator spectra, `features x count`.
    numerator: Vec<Vec<Complex64>>,
    denominator: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ScaleFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScaleFilter")
            .field("count", &self.count)
            .field("step", &self.step)
            .field("model_size", &self.model_size)
            .finish_non_exhaustive()
    }
}

fn model_size(base: (f64, f64), max_area: f64) -> (usize, usize) {
    let factor = (max_area / (base.0 * base.1)).sqrt().min(1.0);
    let side = |v: f64| (((v * factor) / SCALE_CELL as f64).floor() as usize * SCALE_CELL).max(2 * SCALE_CELL);
    (side(base.0), side(base.1))
}

impl ScaleFilter {
    /// `count` must be odd; the middle sample is the identity scale.
    pub fn new(count: usize, step: f64, lambda: f64, base_size: (f64, f64), max_area: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(count);
        let inverse = planner.plan_fft_inverse(count);
        let center = (count / 2) as f64;
        let sigma = (count as f64).sqrt() / 4.0;
        let mut g: Vec<Complex64> = (0..count)
            .map(|i| {
                let d = i as f64 - center;
                Complex64::new((-0.5 * d * d / (sigma * sigma)).exp(), 0.0)
            })
            .collect();
        forward.process(&mut g);
        let window = if count <= 2 {
            vec![1.0; count]
        } else {
            (0..count)
                .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (count - 1) as f64).cos()))
                .collect()
        };
        Self {
            count,
            step,
            lambda,
            base_size,
            model_size: model_size(base_size, max_area),
            window,
            g_hat: g,
            numerator: Vec::new(),
            denominator: Vec::new(),
            forward,
            inverse,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Scale factor represented by sample `i`.
    pub fn factor(&self, i: usize) -> f64 {
        self.step.powf(i as f64 - (self.count / 2) as f64)
    }

    /// Spectra along the scale axis of the windowed HOG samples, one row per
    /// feature element.
    fn sample_spectra(&self, frame: &RgbImage, center: Point, scale: f64) -> Result<Vec<Vec<Complex64>>> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for i in 0..self.count {
            let s = scale * self.factor(i);
            let size = (self.base_size.0 * s, self.base_size.1 * s);
            let patch = sample_patch(frame, center, size, self.model_size)?;
            let hog = extract_hog(&patch, SCALE_CELL)?;
            let values = hog.channels.iter().flat_map(|c| c.as_slice().iter().copied());
            if rows.is_empty() {
                let n = hog.channels.len() * hog.channels[0].len();
                rows = vec![vec![Complex64::new(0.0, 0.0); self.count]; n];
            }
            for (row, v) in rows.iter_mut().zip(values) {
                row[i] = Complex64::new(v * self.window[i], 0.0);
            }
        }
        for row in &mut rows {
            self.forward.process(row);
        }
        Ok(rows)
    }

    /// Learns from samples at `center` and `scale`, blending with `rate`.
    /// The first call replaces the model outright.
    pub fn update(&mut self, frame: &RgbImage, center: Point, scale: f64, rate: f64) -> Result<()> {
        let spectra = self.sample_spectra(frame, center, scale)?;
        let mut den = vec![0.0; self.count];
        let num: Vec<Vec<Complex64>> = spectra
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.g_hat)
                    .enumerate()
                    .map(|(i, (f, g))| {
                        den[i] += f.norm_sqr();
                        f * g.conj()
                    })
                    .collect()
            })
            .collect();
        if self.numerator.is_empty() || rate >= 1.0 {
            self.numerator = num;
            self.denominator = den;
            return Ok(());
        }
        if rate == 0.0 {
            return Ok(());
        }
        for (old, new) in self.numerator.iter_mut().zip(&num) {
            for (a, b) in old.iter_mut().zip(new) {
                *a = *a * (1.0 - rate) + b * rate;
            }
        }
        for (a, b) in self.denominator.iter_mut().zip(&den) {
            *a = *a * (1.0 - rate) + b * rate;
        }
        Ok(())
    }

    /// Best scale-change factor for a target at `center` and `scale`.
    pub fn estimate(&self, frame: &RgbImage, center: Point, scale: f64) -> Result<f64> {
        if self.numerator.is_empty() {
            return Ok(1.0);
        }
        let spectra = self.sample_spectra(frame, center, scale)?;
        let mut response = vec![Complex64::new(0.0, 0.0); self.count];
        for (a, z) in self.numerator.iter().zip(&spectra) {
            for i in 0..self.count {
                response[i] += a[i].conj() * z[i];
            }
        }
        for (r, d) in response.iter_mut().zip(&self.denominator) {
            *r /= d + self.lambda;
        }
        self.inverse.process(&mut response);
        let best = response
            .iter()
            .enumerate()
            .fold((self.count / 2, f64::NEG_INFINITY), |acc, (i, r)| if r.re > acc.1 { (i, r.re) } else { acc });
        Ok(self.factor(best.0))
    }

    pub fn model_norm(&self) -> f64 {
        self.numerator.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>() + self.denominator.iter().map(|d| d * d).sum::<f64>()
    }
}
