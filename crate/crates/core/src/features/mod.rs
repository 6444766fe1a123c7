//! Multi-channel features and color histograms extracted from image patches.

pub mod colornames;
pub mod histogram;
pub mod hog;
pub mod patch;

use serde::{Deserialize, Serialize};

pub use colornames::{extract_colornames, ColornameTable, TableSource, COLORNAME_CHANNELS};
pub use histogram::{
    extract_background_histogram, extract_histogram, rgb_to_hsv, ColorHistogram, Kernel,
};
pub use hog::{extract_hog, HOG_CHANNELS};
pub use patch::{extract_patch, sample_patch, ImagePatch};

use crate::error::{Error, Result};
use crate::spectral::{check_dims, RealGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Hog,
    Colornames,
    Gray,
}

/// Equal-sized real channels sampled on a cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub channels: Vec<RealGrid>,
    pub kinds: Vec<ChannelKind>,
    pub cell_size: usize,
}

impl FeatureStack {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// `(width, height)` of the cell grid.
    pub fn dims(&self) -> (usize, usize) {
        self.channels.first().map(RealGrid::dims).unwrap_or((0, 0))
    }

    /// Appends the channels of `other`; grids must agree.
    pub fn extend(&mut self, other: FeatureStack) -> Result<()> {
        if let Some(first) = other.channels.first() {
            if !self.is_empty() {
                check_dims(self.dims(), first.dims())?;
            }
        }
        self.channels.extend(other.channels);
        self.kinds.extend(other.kinds);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(RealGrid::is_finite)
    }
}

/// Separable Hann window, zero on the border rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineWindow {
    pub weights: RealGrid,
}

impl CosineWindow {
    pub fn hann(width: usize, height: usize) -> Self {
        let profile = |n: usize| -> Vec<f64> {
            if n <= 2 {
                return vec![0.0; n];
            }
            (0..n)
                .map(|i| {
                    0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
                })
                .collect()
        };
        let (wx, wy) = (profile(width), profile(height));
        Self {
            weights: RealGrid::from_fn(width, height, |x, y| wx[x] * wy[y]),
        }
    }
}

/// Multiplies every channel by the window.
pub fn apply_window(features: &FeatureStack, window: &CosineWindow) -> Result<FeatureStack> {
    let channels = features
        .channels
        .iter()
        .map(|c| c.hadamard(&window.weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureStack {
        channels,
        kinds: features.kinds.clone(),
        cell_size: features.cell_size,
    })
}

/// Which feature families make up the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub hog: bool,
    pub colornames: bool,
    pub gray: bool,
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self {
            hog: true,
            colornames: true,
            gray: true,
        }
    }
}

impl FeatureSet {
    pub fn channel_count(&self) -> usize {
        self.hog as usize * HOG_CHANNELS
            + self.colornames as usize * COLORNAME_CHANNELS
            + self.gray as usize
    }
}

/// Cell-averaged intensity, shifted to `[-0.5, 0.5]`.
pub fn extract_gray(patch: &ImagePatch, cell_size: usize) -> Result<FeatureStack> {
    let (w, h) = (patch.width(), patch.height());
    if cell_size == 0 || w % cell_size != 0 || h % cell_size != 0 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            reason: "patch dimensions must be multiples of the cell size",
        });
    }
    let (cw, ch) = (w / cell_size, h / cell_size);
    let mut grid = RealGrid::zeros(cw, ch);
    for (x, y, px) in patch.pixels.enumerate_pixels() {
        let [r, g, b] = px.0;
        let luma = (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0;
        grid[(x as usize / cell_size, y as usize / cell_size)] += luma;
    }
    let norm = 1.0 / (cell_size * cell_size) as f64;
    let grid = grid.map(|v| v * norm - 0.5);
    Ok(FeatureStack {
        channels: vec![grid],
        kinds: vec![ChannelKind::Gray],
        cell_size,
    })
}

/// HOG, colornames and gray channels, in that order, for the enabled families.
pub fn extract_features(
    patch: &ImagePatch,
    cell_size: usize,
    set: FeatureSet,
    table: &ColornameTable,
) -> Result<FeatureStack> {
    let mut stack = FeatureStack {
        channels: Vec::with_capacity(set.channel_count()),
        kinds: Vec::with_capacity(set.channel_count()),
        cell_size,
    };
    if set.hog {
        stack.extend(extract_hog(patch, cell_size)?)?;
    }
    if set.colornames {
        stack.extend(extract_colornames(patch, table, cell_size)?)?;
    }
    if set.gray {
        stack.extend(extract_gray(patch, cell_size)?)?;
    }
    if stack.is_empty() {
        return Err(Error::Config(
            "at least one feature family must be enabled".into(),
        ));
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use image::{Rgb, RgbImage};

    fn patch_from(img: RgbImage) -> ImagePatch {
        let (w, h) = (img.width() as f64, img.height() as f64);
        ImagePatch {
            pixels: img,
            source_rect: Rect::new(0.0, 0.0, w, h),
        }
    }

    #[test]
    fn hann_window_shape() {
        let w = CosineWindow::hann(9, 7);
        assert_eq!(w.weights.get(4, 3), 1.0);
        for x in 0..9 {
            assert_eq!(w.weights.get(x, 0), 0.0);
            assert_eq!(w.weights.get(x, 6), 0.0);
        }
        assert!(w.weights.max() <= 1.0 && w.weights.min() >= 0.0);
    }

    #[test]
    fn window_application() {
        let img = RgbImage::from_fn(36, 28, |x, y| {
            Rgb([(x * 7) as u8, (y * 9) as u8, ((x * y) % 255) as u8])
        });
        let table = ColornameTable::fallback();
        let f = extract_features(&patch_from(img), 4, FeatureSet::default(), &table).unwrap();
        assert_eq!(f.len(), 42);
        assert!(f.is_finite());

        let ones = CosineWindow {
            weights: RealGrid::filled(9, 7, 1.0),
        };
        assert_eq!(apply_window(&f, &ones).unwrap(), f);

        let hann = CosineWindow::hann(9, 7);
        let wf = apply_window(&f, &hann).unwrap();
        for (before, after) in f.channels.iter().zip(&wf.channels) {
            for x in 0..9 {
                assert_eq!(after.get(x, 0), 0.0);
                assert_eq!(after.get(x, 6), 0.0);
            }
            assert!(after.norm_sq() <= before.norm_sq());
        }

        let wrong = CosineWindow::hann(8, 7);
        assert!(matches!(
            apply_window(&f, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gray_channel_range() {
        let black = extract_gray(&patch_from(RgbImage::new(8, 8)), 4).unwrap();
        assert!(black.channels[0].as_slice().iter().all(|&v| v == -0.5));
    }
}
