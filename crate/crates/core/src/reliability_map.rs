//! Spatial reliability map: which filter-support cells belong to the target.
//!
//! A per-pixel foreground posterior is formed from color histograms and an
//! elliptical spatial prior, pooled to the feature grid, smoothed by a few
//! Markov-random-field style sweeps, thresholded and dilated.

use std::path::Path;

use image::{GrayImage, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    extract_background_histogram, extract_histogram, ColorHistogram, ImagePatch, Kernel,
};
use crate::geometry::Rect;
use crate::spectral::{check_dims, RealGrid};

/// Uniform probability mass mixed into both histograms before Bayes.
pub const HISTOGRAM_SMOOTHING: f64 = 1e-3;
pub const PRIOR_CENTER: f64 = 0.9;
pub const PRIOR_FLOOR: f64 = 0.5;
pub const MASK_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SWEEPS: usize = 4;

const UNARY_CLAMP: f64 = 1e-6;

/// Foreground and background color models with the foreground label prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorModel {
    pub foreground: ColorHistogram,
    pub background: ColorHistogram,
    pub prior_fg: f64,
}

impl ColorModel {
    /// Normalizes both histograms.
    pub fn new(
        foreground: &ColorHistogram,
        background: &ColorHistogram,
        prior_fg: f64,
    ) -> Result<Self> {
        if foreground.bins().len() != background.bins().len() {
            return Err(Error::LengthMismatch {
                left: foreground.bins().len(),
                right: background.bins().len(),
            });
        }
        if !(prior_fg > 0.0 && prior_fg < 1.0) {
            return Err(Error::Config(format!(
                "foreground prior {prior_fg} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            foreground: foreground.normalized(),
            background: background.normalized(),
            prior_fg,
        })
    }

    /// Foreground from the Epanechnikov-weighted `bbox`, background from the
    /// rest of the patch. `bbox` is in patch pixel coordinates.
    pub fn from_patch(patch: &ImagePatch, bbox: &Rect, bins: usize) -> Result<Self> {
        let whole = Rect::new(0.0, 0.0, patch.width() as f64, patch.height() as f64);
        let fg = extract_histogram(patch, bbox, Kernel::Epanechnikov, bins)?;
        let bg = extract_background_histogram(patch, bbox, &whole, bins)?;
        let prior = (bbox.intersection_area(&whole) / whole.area()).clamp(1e-3, 1.0 - 1e-3);
        Self::new(&fg, &bg, prior)
    }

    /// Autoregressive update of both histograms; the prior is kept.
    pub fn blend(&self, other: &ColorModel, rate: f64) -> Result<Self> {
        Ok(Self {
            foreground: self.foreground.blend(&other.foreground, rate)?,
            background: self.background.blend(&other.background, rate)?,
            prior_fg: self.prior_fg,
        })
    }
}

/// Clipped Epanechnikov prior on a `grid_size` raster, evaluated at cell
/// centers. Distances are scaled so the ellipse inscribed in `bbox` maps to
/// a circle of radius half the minor axis.
pub fn spatial_prior(grid_size: (usize, usize), bbox: &Rect) -> Result<RealGrid> {
    if !(bbox.width > 0.0 && bbox.height > 0.0) || !bbox.is_finite() {
        return Err(Error::DegenerateBBox(bbox.to_string()));
    }
    let sigma = bbox.width.min(bbox.height);
    let c = bbox.center();
    let (sx, sy) = (sigma / bbox.width, sigma / bbox.height);
    Ok(RealGrid::from_fn(grid_size.0, grid_size.1, |x, y| {
        let dx = (x as f64 + 0.5 - c.x) * sx;
        let dy = (y as f64 + 0.5 - c.y) * sy;
        let r2 = (dx * dx + dy * dy) / (sigma * sigma);
        (1.0 - r2).clamp(PRIOR_FLOOR, PRIOR_CENTER)
    }))
}

/// Per-location foreground evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryMap {
    /// Foreground posterior combining appearance, spatial and label priors.
    pub posterior: RealGrid,
    /// Appearance-only posterior `p_f / (p_f + p_b)`.
    pub likelihood: RealGrid,
    pub prior_map: RealGrid,
}

impl UnaryMap {
    /// Block-averages every field onto a grid `cell` times coarser.
    pub fn pool(&self, cell: usize) -> Result<UnaryMap> {
        Ok(UnaryMap {
            posterior: pool_grid(&self.posterior, cell)?,
            likelihood: pool_grid(&self.likelihood, cell)?,
            prior_map: pool_grid(&self.prior_map, cell)?,
        })
    }
}

fn pool_grid(grid: &RealGrid, cell: usize) -> Result<RealGrid> {
    let (w, h) = grid.dims();
    if cell == 0 || w % cell != 0 || h % cell != 0 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            reason: "map dimensions must be multiples of the cell size",
        });
    }
    let norm = 1.0 / (cell * cell) as f64;
    Ok(RealGrid::from_fn(w / cell, h / cell, |cx, cy| {
        let mut acc = 0.0;
        for y in cy * cell..(cy + 1) * cell {
            for x in cx * cell..(cx + 1) * cell {
                acc += grid.get(x, y);
            }
        }
        acc * norm
    }))
}

/// Bayes posterior for a single observation.
pub fn posterior_value(p_fg: f64, p_bg: f64, prior_map: f64, prior_fg: f64) -> f64 {
    let fg = p_fg * prior_map * prior_fg;
    let bg = p_bg * (1.0 - prior_map * prior_fg);
    let total = fg + bg;
    if total > 0.0 {
        fg / total
    } else {
        0.5
    }
}

/// Per-pixel foreground posterior. `prior_map` must match the patch size.
pub fn appearance_posterior(
    patch: &ImagePatch,
    model: &ColorModel,
    prior_map: &RealGrid,
) -> Result<UnaryMap> {
    let (w, h) = (patch.width(), patch.height());
    check_dims((w, h), prior_map.dims())?;
    let fg = model.foreground.smoothed(HISTOGRAM_SMOOTHING);
    let bg = model.background.smoothed(HISTOGRAM_SMOOTHING);
    let mut posterior = RealGrid::zeros(w, h);
    let mut likelihood = RealGrid::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let rgb = patch.pixel(x, y);
            let i = fg.bin_index(rgb);
            let (pf, pb) = (fg.bins()[i], bg.bins()[i]);
            posterior.set(
                x,
                y,
                posterior_value(pf, pb, prior_map.get(x, y), model.prior_fg),
            );
            likelihood.set(x, y, pf / (pf + pb));
        }
    }
    Ok(UnaryMap {
        posterior,
        likelihood,
        prior_map: prior_map.clone(),
    })
}

fn mix(unary: f64, neighborhood: f64) -> f64 {
    let u = unary.clamp(UNARY_CLAMP, 1.0 - UNARY_CLAMP);
    let fg = (u * neighborhood).sqrt();
    let bg = ((1.0 - u) * (1.0 - neighborhood)).sqrt();
    fg / (fg + bg)
}

fn neighborhood_mean(grid: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let mut acc = 0.0;
    let mut n = 0.0;
    if y > 0 {
        acc += grid[(y - 1) * w + x];
        n += 1.0;
    }
    if y + 1 < h {
        acc += grid[(y + 1) * w + x];
        n += 1.0;
    }
    if x > 0 {
        acc += grid[y * w + x - 1];
        n += 1.0;
    }
    if x + 1 < w {
        acc += grid[y * w + x + 1];
        n += 1.0;
    }
    if n == 0.0 {
        grid[y * w + x]
    } else {
        acc / n
    }
}

/// Jacobi sweeps: every cell re-mixes its unary posterior with the mean of
/// its 4-neighborhood from the previous sweep (geometric pooling of the two
/// fg/bg odds), then renormalizes.
pub fn regularize(unary: &UnaryMap, iterations: usize) -> RealGrid {
    let (w, h) = unary.posterior.dims();
    let u = unary.posterior.as_slice();
    let mut current = u.to_vec();
    let mut next = vec![0.0; current.len()];
    for _ in 0..iterations {
        next.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                *out = mix(u[y * w + x], neighborhood_mean(&current, w, h, x, y));
            }
        });
        std::mem::swap(&mut current, &mut next);
    }
    RealGrid::from_vec(w, h, current)
}

/// Straightforward per-cell version of [`regularize`], kept as an oracle.
pub fn regularize_reference(unary: &UnaryMap, iterations: usize) -> RealGrid {
    let (w, h) = unary.posterior.dims();
    let mut current = unary.posterior.clone();
    for _ in 0..iterations {
        let previous = current.clone();
        for y in 0..h {
            for x in 0..w {
                let q = neighborhood_mean(previous.as_slice(), w, h, x, y);
                current.set(x, y, mix(unary.posterior.get(x, y), q));
            }
        }
    }
    current
}

/// Binary reliability mask on the filter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMask {
    /// Final (dilated) mask.
    pub m: RealGrid,
    /// Mask after thresholding or fallback, before dilation.
    pub pre_dilation: RealGrid,
    /// Foreground fraction of the bbox cells after thresholding.
    pub fg_fraction: f64,
    pub fallback: bool,
}

impl SpatialMask {
    /// Mask of ones over the cells whose centers fall in `bbox`.
    pub fn bbox_ones(grid_size: (usize, usize), bbox: &Rect) -> Self {
        let m = bbox_indicator(grid_size, bbox);
        Self {
            pre_dilation: m.clone(),
            m,
            fg_fraction: 1.0,
            fallback: false,
        }
    }

    /// Unconstrained mask covering the whole grid.
    pub fn full(grid_size: (usize, usize)) -> Self {
        let m = RealGrid::filled(grid_size.0, grid_size.1, 1.0);
        Self {
            pre_dilation: m.clone(),
            m,
            fg_fraction: 1.0,
            fallback: false,
        }
    }

    pub fn support(&self) -> usize {
        self.m.as_slice().iter().filter(|&&v| v != 0.0).count()
    }
}

fn cell_in_bbox(bbox: &Rect, x: usize, y: usize) -> bool {
    let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
    cx >= bbox.x && cx < bbox.right() && cy >= bbox.y && cy < bbox.bottom()
}

fn bbox_indicator(grid_size: (usize, usize), bbox: &Rect) -> RealGrid {
    let m = RealGrid::from_fn(grid_size.0, grid_size.1, |x, y| {
        cell_in_bbox(bbox, x, y) as u8 as f64
    });
    if m.sum() > 0.0 {
        return m;
    }
    // Boxes thinner than a cell still claim the cell holding their center.
    let c = bbox.center();
    let x = (c.x.floor().max(0.0) as usize).min(grid_size.0 - 1);
    let y = (c.y.floor().max(0.0) as usize).min(grid_size.1 - 1);
    let mut m = m;
    m.set(x, y, 1.0);
    m
}

/// One pass of 3x3 binary dilation.
pub fn dilate(mask: &RealGrid) -> RealGrid {
    let (w, h) = mask.dims();
    RealGrid::from_fn(w, h, |x, y| {
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let hit = (y0..=y1).any(|yy| (x0..=x1).any(|xx| mask.get(xx, yy) != 0.0));
        hit as u8 as f64
    })
}

/// Thresholds the regularized posterior, falls back to the bbox interior if
/// too little of the bbox is foreground, then dilates once.
pub fn finalize_mask(regularized: &RealGrid, bbox: &Rect, alpha_min: f64) -> SpatialMask {
    let thresholded = regularized.map(|p| (p > MASK_THRESHOLD) as u8 as f64);
    let (w, h) = regularized.dims();
    let mut inside = 0usize;
    let mut fg = 0usize;
    for y in 0..h {
        for x in 0..w {
            if cell_in_bbox(bbox, x, y) {
                inside += 1;
                fg += (thresholded.get(x, y) != 0.0) as usize;
            }
        }
    }
    let fg_fraction = if inside == 0 {
        0.0
    } else {
        fg as f64 / inside as f64
    };
    let fallback = fg_fraction < alpha_min;
    let pre_dilation = if fallback {
        bbox_indicator((w, h), bbox)
    } else {
        thresholded
    };
    SpatialMask {
        m: dilate(&pre_dilation),
        pre_dilation,
        fg_fraction,
        fallback,
    }
}

/// Intermediate maps of one mask estimate, for debugging output.
#[derive(Debug, Clone)]
pub struct MapPanels {
    pub prior: RealGrid,
    pub likelihood: RealGrid,
    pub posterior: RealGrid,
    pub mask: RealGrid,
}

fn to_gray(grid: &RealGrid, width: u32) -> GrayImage {
    let (w, h) = grid.dims();
    let scale = (width as usize / w).max(1) as u32;
    GrayImage::from_fn(w as u32 * scale, h as u32 * scale, |x, y| {
        let v = grid.get((x / scale) as usize, (y / scale) as usize);
        Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

impl MapPanels {
    /// Writes the four maps side by side as one grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let panels = [&self.prior, &self.likelihood, &self.posterior, &self.mask];
        let target = 200;
        let images: Vec<GrayImage> = panels.iter().map(|g| to_gray(g, target)).collect();
        let gap = 4;
        let width: u32 = images.iter().map(|i| i.width() + gap).sum::<u32>() - gap;
        let height = images.iter().map(|i| i.height()).max().unwrap_or(1);
        let mut out = GrayImage::from_pixel(width, height, Luma([128]));
        let mut x0 = 0;
        for img in &images {
            image::imageops::overlay(&mut out, img, x0 as i64, 0);
            x0 += img.width() + gap;
        }
        out.save(path).map_err(|e| Error::image(path, e))
    }
}
