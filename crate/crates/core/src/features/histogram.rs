use serde::{Deserialize, Serialize};

use super::ImagePatch;
use crate::error::{Error, Result};
use crate::geometry::Rect;

pub const DEFAULT_BINS: usize = 16;

/// HSV conversion: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let saturation = if max == 0.0 { 0.0 } else { delta / max };
    (hue.rem_euclid(360.0), saturation, max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    None,
    Epanechnikov,
}

/// `bins^3` HSV histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogram {
    bins_per_channel: usize,
    bins: Vec<f64>,
    total_weight: f64,
}

impl ColorHistogram {
    pub fn empty(bins_per_channel: usize) -> Self {
        Self {
            bins_per_channel,
            bins: vec![0.0; bins_per_channel.pow(3)],
            total_weight: 0.0,
        }
    }

    /// Uniform distribution with unit total weight.
    pub fn uniform(bins_per_channel: usize) -> Self {
        let n = bins_per_channel.pow(3);
        Self {
            bins_per_channel,
            bins: vec![1.0 / n as f64; n],
            total_weight: 1.0,
        }
    }

    pub fn bins_per_channel(&self) -> usize {
        self.bins_per_channel
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn bin_index(&self, rgb: [u8; 3]) -> usize {
        let n = self.bins_per_channel;
        let (h, s, v) = rgb_to_hsv(rgb);
        let hb = ((h / 360.0 * n as f64).floor() as usize) % n;
        let sb = ((s * n as f64).floor() as usize).min(n - 1);
        let vb = ((v * n as f64).floor() as usize).min(n - 1);
        (hb * n + sb) * n + vb
    }

    pub fn add(&mut self, rgb: [u8; 3], weight: f64) {
        let i = self.bin_index(rgb);
        self.bins[i] += weight;
        self.total_weight += weight;
    }

    pub fn nonzero_bins(&self) -> usize {
        self.bins.iter().filter(|&&b| b > 0.0).count()
    }

    /// Bins scaled to sum to one; an empty histogram normalizes to uniform.
    pub fn normalized(&self) -> Self {
        if self.total_weight <= 0.0 {
            return Self::uniform(self.bins_per_channel);
        }
        let sum: f64 = self.bins.iter().sum();
        Self {
            bins_per_channel: self.bins_per_channel,
            bins: self.bins.iter().map(|b| b / sum).collect(),
            total_weight: 1.0,
        }
    }

    /// Normalized histogram mixed with `mass` of uniform probability.
    pub fn smoothed(&self, mass: f64) -> Self {
        let n = self.bins.len() as f64;
        let norm = self.normalized();
        Self {
            bins_per_channel: self.bins_per_channel,
            bins: norm
                .bins
                .iter()
                .map(|b| (1.0 - mass) * b + mass / n)
                .collect(),
            total_weight: 1.0,
        }
    }

    /// `(1 - rate) * self + rate * other` on normalized bins.
    pub fn blend(&self, other: &ColorHistogram, rate: f64) -> Result<Self> {
        if self.bins.len() != other.bins.len() {
            return Err(Error::LengthMismatch {
                left: self.bins.len(),
                right: other.bins.len(),
            });
        }
        let a = self.normalized();
        let b = other.normalized();
        Ok(Self {
            bins_per_channel: self.bins_per_channel,
            bins: a
                .bins
                .iter()
                .zip(&b.bins)
                .map(|(x, y)| (1.0 - rate) * x + rate * y)
                .collect(),
            total_weight: 1.0,
        })
    }

    /// Probability of the bin containing `rgb`; assumes normalized bins.
    pub fn probability(&self, rgb: [u8; 3]) -> f64 {
        self.bins[self.bin_index(rgb)]
    }
}

fn clipped_pixel_range(patch: &ImagePatch, region: &Rect) -> Option<(usize, usize, usize, usize)> {
    let x0 = region.x.max(0.0).floor() as usize;
    let y0 = region.y.max(0.0).floor() as usize;
    let x1 = (region.right().min(patch.width() as f64)).ceil().max(0.0) as usize;
    let y1 = (region.bottom().min(patch.height() as f64)).ceil().max(0.0) as usize;
    (x1 > x0 && y1 > y0).then_some((x0, y0, x1, y1))
}

fn pixel_inside(region: &Rect, x: usize, y: usize) -> bool {
    let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
    cx >= region.x && cx < region.right() && cy >= region.y && cy < region.bottom()
}

/// Histogram of the patch pixels whose centers fall in `region`, weighted by
/// `kernel` (an Epanechnikov profile fitted to the region).
pub fn extract_histogram(
    patch: &ImagePatch,
    region: &Rect,
    kernel: Kernel,
    bins: usize,
) -> Result<ColorHistogram> {
    let (x0, y0, x1, y1) = clipped_pixel_range(patch, region).ok_or(Error::EmptyRegion)?;
    let center = region.center();
    let (ax, ay) = (region.width / 2.0, region.height / 2.0);
    let mut hist = ColorHistogram::empty(bins);
    let mut count = 0usize;
    for y in y0..y1 {
        for x in x0..x1 {
            if !pixel_inside(region, x, y) {
                continue;
            }
            let weight = match kernel {
                Kernel::None => 1.0,
                Kernel::Epanechnikov => {
                    let dx = (x as f64 + 0.5 - center.x) / ax;
                    let dy = (y as f64 + 0.5 - center.y) / ay;
                    (1.0 - dx * dx - dy * dy).max(0.0)
                }
            };
            count += 1;
            if weight > 0.0 {
                hist.add(patch.pixel(x, y), weight);
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(hist)
}

/// Unweighted histogram of pixels inside `outer` but outside `inner`.
pub fn extract_background_histogram(
    patch: &ImagePatch,
    inner: &Rect,
    outer: &Rect,
    bins: usize,
) -> Result<ColorHistogram> {
    let (x0, y0, x1, y1) = clipped_pixel_range(patch, outer).ok_or(Error::EmptyRegion)?;
    let mut hist = ColorHistogram::empty(bins);
    for y in y0..y1 {
        for x in x0..x1 {
            if pixel_inside(outer, x, y) && !pixel_inside(inner, x, y) {
                hist.add(patch.pixel(x, y), 1.0);
            }
        }
    }
    if hist.total_weight() == 0.0 {
        return Err(Error::EmptyRegion);
    }
    Ok(hist)
}
