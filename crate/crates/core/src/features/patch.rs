use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

/// Minimum patch side in pixels.
pub const MIN_PATCH_SIDE: usize = 4;

/// RGB raster cut (and possibly resampled) from a frame.
///
/// `source_rect` is the frame region the patch covers; it may extend past the
/// frame border, in which case edge pixels are replicated.
#[derive(Debug, Clone)]
pub struct ImagePatch {
    pub pixels: RgbImage,
    pub source_rect: Rect,
}

impl ImagePatch {
    pub fn width(&self) -> usize {
        self.pixels.width() as usize
    }

    pub fn height(&self) -> usize {
        self.pixels.height() as usize
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels.get_pixel(x as u32, y as u32).0
    }

    /// Patch pixels per frame pixel, horizontally and vertically.
    pub fn zoom(&self) -> (f64, f64) {
        (
            self.width() as f64 / self.source_rect.width,
            self.height() as f64 / self.source_rect.height,
        )
    }

    /// Maps a frame-coordinate rectangle into patch pixel coordinates.
    pub fn frame_to_patch(&self, rect: &Rect) -> Rect {
        let (zx, zy) = self.zoom();
        Rect::new(
            (rect.x - self.source_rect.x) * zx,
            (rect.y - self.source_rect.y) * zy,
            rect.width * zx,
            rect.height * zy,
        )
    }
}

/// Exact `size.0 x size.1` crop centered at `center`; the top-left corner is
/// snapped to the nearest integer pixel.
pub fn extract_patch(frame: &RgbImage, center: Point, size: (usize, usize)) -> Result<ImagePatch> {
    let left = (center.x - size.0 as f64 / 2.0).round();
    let top = (center.y - size.1 as f64 / 2.0).round();
    let snapped = Point::new(left + size.0 as f64 / 2.0, top + size.1 as f64 / 2.0);
    sample_patch(frame, snapped, (size.0 as f64, size.1 as f64), size)
}

/// Bilinearly resamples the frame region of `source_size` around `center`
/// onto an `output_size` raster.
pub fn sample_patch(
    frame: &RgbImage,
    center: Point,
    source_size: (f64, f64),
    output_size: (usize, usize),
) -> Result<ImagePatch> {
    let (fw, fh) = (frame.width() as usize, frame.height() as usize);
    if fw == 0 || fh == 0 {
        return Err(Error::EmptyFrame);
    }
    let (ow, oh) = output_size;
    if ow < MIN_PATCH_SIDE || oh < MIN_PATCH_SIDE {
        return Err(Error::PatchTooSmall {
            width: ow,
            height: oh,
            reason: "patch sides must be at least 4 px",
        });
    }
    let source_rect = Rect::from_center(center, source_size.0, source_size.1);
    let step_x = source_size.0 / ow as f64;
    let step_y = source_size.1 / oh as f64;
    let raw = frame.as_raw();
    let max_x = (fw - 1) as f64;
    let max_y = (fh - 1) as f64;

    // Precompute horizontal taps; they are shared by every row.
    let taps_x: Vec<(usize, usize, f64)> = (0..ow)
        .map(|i| {
            let sx = (source_rect.x + (i as f64 + 0.5) * step_x - 0.5).clamp(0.0, max_x);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(fw - 1);
            (x0, x1, sx - x0 as f64)
        })
        .collect();

    let mut out = RgbImage::new(ow as u32, oh as u32);
    for (j, row) in out.rows_mut().enumerate() {
        let sy = (source_rect.y + (j as f64 + 0.5) * step_y - 0.5).clamp(0.0, max_y);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(fh - 1);
        let ty = sy - y0 as f64;
        for (px, &(x0, x1, tx)) in row.zip(&taps_x) {
            let mut rgb = [0u8; 3];
            for (c, value) in rgb.iter_mut().enumerate() {
                let at = |x: usize, y: usize| raw[(y * fw + x) * 3 + c] as f64;
                let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
                let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
                *value = (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8;
            }
            *px = Rgb(rgb);
        }
    }
    Ok(ImagePatch {
        pixels: out,
        source_rect,
    })
}
