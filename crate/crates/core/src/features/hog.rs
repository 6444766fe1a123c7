//! Felzenszwalb-style HOG: 18 contrast-sensitive orientations, 9
//! contrast-insensitive orientations and 4 gradient-energy channels per cell.
//!
//! Pixels are assigned to the nearest orientation bin and to exactly one
//! cell, so shifting the image content by a whole cell shifts the interior
//! feature cells exactly.

use std::f64::consts::PI;

use super::{ChannelKind, FeatureStack, ImagePatch};
use crate::error::{Error, Result};
use crate::spectral::RealGrid;

pub const SIGNED_BINS: usize = 18;
pub const UNSIGNED_BINS: usize = 9;
pub const TEXTURE_CHANNELS: usize = 4;
pub const HOG_CHANNELS: usize = SIGNED_BINS + UNSIGNED_BINS + TEXTURE_CHANNELS;

const TRUNCATION: f64 = 0.2;
const NORM_EPS: f64 = 1e-4;
// 1 / sqrt(18), the texture-channel weight from the reference formulation.
const TEXTURE_WEIGHT: f64 = 0.235_702_260_395_515_8;

/// Per-pixel gradient of the color channel with the largest magnitude;
/// central differences with replicated borders.
fn gradients(patch: &ImagePatch) -> (Vec<f64>, Vec<usize>) {
    let (w, h) = (patch.width(), patch.height());
    let raw = patch.pixels.as_raw();
    let at = |x: usize, y: usize, c: usize| raw[(y * w + x) * 3 + c] as f64;
    let mut magnitude = vec![0.0; w * h];
    let mut bin = vec![0usize; w * h];
    let bin_width = 2.0 * PI / SIGNED_BINS as f64;
    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let mut best = (0.0, 0.0, 0.0);
            for c in 0..3 {
                let dx = at(xp, y, c) - at(xm, y, c);
                let dy = at(x, yp, c) - at(x, ym, c);
                let m2 = dx * dx + dy * dy;
                if m2 > best.0 {
                    best = (m2, dx, dy);
                }
            }
            let i = y * w + x;
            if best.0 > 0.0 {
                magnitude[i] = best.0.sqrt();
                let angle = best.2.atan2(best.1).rem_euclid(2.0 * PI);
                bin[i] = ((angle / bin_width).round() as usize) % SIGNED_BINS;
            }
        }
    }
    (magnitude, bin)
}

/// 31-channel HOG on a `patch.width / cell_size x patch.height / cell_size` grid.
pub fn extract_hog(patch: &ImagePatch, cell_size: usize) -> Result<FeatureStack> {
    let (w, h) = (patch.width(), patch.height());
    if cell_size == 0 || w % cell_size != 0 || h % cell_size != 0 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            reason: "patch dimensions must be multiples of the cell size",
        });
    }
    let (cw, ch) = (w / cell_size, h / cell_size);
    if cw < 2 || ch < 2 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            reason: "HOG needs at least 2x2 cells",
        });
    }

    let (magnitude, bin) = gradients(patch);
    let cells = cw * ch;
    let mut hist = vec![0.0; cells * SIGNED_BINS];
    for y in 0..h {
        let cy = y / cell_size;
        for x in 0..w {
            let i = y * w + x;
            let cell = cy * cw + x / cell_size;
            hist[cell * SIGNED_BINS + bin[i]] += magnitude[i];
        }
    }

    let energy: Vec<f64> = (0..cells)
        .map(|c| {
            (0..UNSIGNED_BINS)
                .map(|o| {
                    let v = hist[c * SIGNED_BINS + o] + hist[c * SIGNED_BINS + o + UNSIGNED_BINS];
                    v * v
                })
                .sum()
        })
        .collect();
    let energy_at = |x: isize, y: isize| {
        let xc = x.clamp(0, cw as isize - 1) as usize;
        let yc = y.clamp(0, ch as isize - 1) as usize;
        energy[yc * cw + xc]
    };

    let mut channels: Vec<RealGrid> = (0..HOG_CHANNELS).map(|_| RealGrid::zeros(cw, ch)).collect();
    for cy in 0..ch {
        for cx in 0..cw {
            let (x, y) = (cx as isize, cy as isize);
            let center = energy_at(x, y);
            let norms: [f64; 4] = [(-1, -1), (1, -1), (-1, 1), (1, 1)].map(|(dx, dy)| {
                let block = center
                    + energy_at(x + dx, y)
                    + energy_at(x, y + dy)
                    + energy_at(x + dx, y + dy);
                1.0 / (block + NORM_EPS).sqrt()
            });
            let cell = cy * cw + cx;
            let cell_hist = &hist[cell * SIGNED_BINS..(cell + 1) * SIGNED_BINS];
            let mut texture = [0.0; TEXTURE_CHANNELS];
            for (o, &value) in cell_hist.iter().enumerate() {
                let mut acc = 0.0;
                for (t, n) in norms.iter().enumerate() {
                    let clipped = (value * n).min(TRUNCATION);
                    acc += clipped;
                    texture[t] += clipped;
                }
                channels[o].set(cx, cy, 0.5 * acc);
            }
            for o in 0..UNSIGNED_BINS {
                let value = cell_hist[o] + cell_hist[o + UNSIGNED_BINS];
                let acc: f64 = norms.iter().map(|n| (value * n).min(TRUNCATION)).sum();
                channels[SIGNED_BINS + o].set(cx, cy, 0.5 * acc);
            }
            for (t, &v) in texture.iter().enumerate() {
                channels[SIGNED_BINS + UNSIGNED_BINS + t].set(cx, cy, TEXTURE_WEIGHT * v);
            }
        }
    }

    Ok(FeatureStack {
        kinds: vec![ChannelKind::Hog; HOG_CHANNELS],
        channels,
        cell_size,
    })
}
