//! Colorname features: per-pixel probabilities over 10 color attributes,
//! looked up from a 32x32x32 quantized-RGB table and averaged per cell.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use super::histogram::rgb_to_hsv;
use super::{ChannelKind, FeatureStack, ImagePatch};
use crate::error::{Error, Result};
use crate::spectral::RealGrid;

pub const COLORNAME_CHANNELS: usize = 10;
pub const TABLE_ROWS: usize = 32 * 32 * 32;
pub const TABLE_VALUES: usize = TABLE_ROWS * COLORNAME_CHANNELS;

/// Attribute order of the built-in fallback table.
pub const FALLBACK_NAMES: [&str; COLORNAME_CHANNELS] = [
    "black", "blue", "gray", "green", "orange", "pink", "purple", "red", "white", "yellow",
];

// Fallback hue centers (degrees) for the chromatic attributes, ascending.
const HUE_CENTERS: [(f64, usize); 7] = [
    (0.0, 7),   // red
    (30.0, 4),  // orange
    (60.0, 9),  // yellow
    (120.0, 3), // green
    (220.0, 1), // blue
    (280.0, 6), // purple
    (330.0, 5), // pink
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableSource {
    File(PathBuf),
    Fallback,
}

/// RGB -> 10 attribute probabilities, indexed by
/// `r/8 + 32 * (g/8) + 1024 * (b/8)`.
#[derive(Debug, Clone)]
pub struct ColornameTable {
    values: Vec<f32>,
    source: TableSource,
}

impl ColornameTable {
    /// Loads a CSV (32768 rows x 10 columns) or a raw little-endian
    /// float32 file holding exactly 1,310,720 values.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes =
            fs::read(path).map_err(|e| Error::TableMissing(format!("{}: {e}", path.display())))?;
        let values = if bytes.len() == TABLE_VALUES * 4 {
            bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect()
        } else {
            parse_csv(path, &bytes)?
        };
        Ok(Self {
            values,
            source: TableSource::File(path.to_path_buf()),
        })
    }

    /// Loads `path` when given and readable, otherwise the built-in table.
    pub fn load_or_fallback(path: Option<&Path>) -> (Self, Option<Error>) {
        match path.map(Self::load) {
            Some(Ok(table)) => (table, None),
            Some(Err(e)) => (Self::fallback(), Some(e)),
            None => (Self::fallback(), None),
        }
    }

    /// Deterministic soft assignment of each quantized RGB bin to 3
    /// achromatic and 7 hue attributes.
    pub fn fallback() -> Self {
        let mut values = Vec::with_capacity(TABLE_VALUES);
        for index in 0..TABLE_ROWS {
            let r = (index % 32) * 8 + 4;
            let g = ((index / 32) % 32) * 8 + 4;
            let b = (index / 1024) * 8 + 4;
            values.extend(fallback_row([r as u8, g as u8, b as u8]).map(|v| v as f32));
        }
        Self {
            values,
            source: TableSource::Fallback,
        }
    }

    /// Process-wide instance of [`ColornameTable::fallback`].
    pub fn shared_fallback() -> Arc<Self> {
        static TABLE: OnceLock<Arc<ColornameTable>> = OnceLock::new();
        Arc::clone(TABLE.get_or_init(|| Arc::new(Self::fallback())))
    }

    pub fn source(&self) -> &TableSource {
        &self.source
    }

    pub fn is_fallback(&self) -> bool {
        self.source == TableSource::Fallback
    }

    pub fn index(rgb: [u8; 3]) -> usize {
        (rgb[0] as usize / 8) + 32 * (rgb[1] as usize / 8) + 1024 * (rgb[2] as usize / 8)
    }

    pub fn lookup(&self, rgb: [u8; 3]) -> &[f32] {
        let row = Self::index(rgb);
        &self.values[row * COLORNAME_CHANNELS..(row + 1) * COLORNAME_CHANNELS]
    }
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<Vec<f32>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::TableMissing(format!("{} is not text", path.display())))?;
    let mut values = Vec::with_capacity(TABLE_VALUES);
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let row: std::result::Result<Vec<f32>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        match row {
            Ok(row) if row.len() == COLORNAME_CHANNELS => values.extend(row),
            _ => {
                return Err(Error::UnparseableLine {
                    path: path.to_path_buf(),
                    line: n + 1,
                    content: line.to_string(),
                })
            }
        }
    }
    if values.len() != TABLE_VALUES {
        return Err(Error::TableMissing(format!(
            "{} has {} rows, expected {TABLE_ROWS}",
            path.display(),
            values.len() / COLORNAME_CHANNELS
        )));
    }
    Ok(values)
}

fn fallback_row(rgb: [u8; 3]) -> [f64; COLORNAME_CHANNELS] {
    let (hue, saturation, value) = rgb_to_hsv(rgb);
    let chroma = (2.0 * saturation * value).min(1.0);
    let mut row = [0.0; COLORNAME_CHANNELS];

    // Achromatic mass spread over black (v=0), gray (v=0.5), white (v=1).
    let achromatic = 1.0 - chroma;
    if value <= 0.5 {
        let t = value / 0.5;
        row[0] += achromatic * (1.0 - t);
        row[2] += achromatic * t;
    } else {
        let t = (value - 0.5) / 0.5;
        row[2] += achromatic * (1.0 - t);
        row[8] += achromatic * t;
    }

    // Chromatic mass split between the two neighboring hue centers.
    let n = HUE_CENTERS.len();
    for i in 0..n {
        let (lo, lo_idx) = HUE_CENTERS[i];
        let (hi, hi_idx) = HUE_CENTERS[(i + 1) % n];
        let hi = if hi <= lo { hi + 360.0 } else { hi };
        let h = if hue < lo { hue + 360.0 } else { hue };
        if h >= lo && h < hi {
            let t = (h - lo) / (hi - lo);
            row[lo_idx] += chroma * (1.0 - t);
            row[hi_idx] += chroma * t;
            break;
        }
    }
    row
}

/// Colorname probabilities averaged over `cell_size x cell_size` cells.
pub fn extract_colornames(
    patch: &ImagePatch,
    table: &ColornameTable,
    cell_size: usize,
) -> Result<FeatureStack> {
    let (w, h) = (patch.width(), patch.height());
    if cell_size == 0 || w % cell_size != 0 || h % cell_size != 0 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            reason: "patch dimensions must be multiples of the cell size",
        });
    }
    let (cw, ch) = (w / cell_size, h / cell_size);
    let mut sums = vec![0.0f64; cw * ch * COLORNAME_CHANNELS];
    for (x, y, px) in patch.pixels.enumerate_pixels() {
        let cell = (y as usize / cell_size) * cw + x as usize / cell_size;
        let row = table.lookup(px.0);
        for (acc, &v) in sums[cell * COLORNAME_CHANNELS..].iter_mut().zip(row) {
            *acc += v as f64;
        }
    }
    let norm = 1.0 / (cell_size * cell_size) as f64;
    let channels = (0..COLORNAME_CHANNELS)
        .map(|k| {
            RealGrid::from_fn(cw, ch, |x, y| {
                sums[(y * cw + x) * COLORNAME_CHANNELS + k] * norm
            })
        })
        .collect();
    Ok(FeatureStack {
        channels,
        kinds: vec![ChannelKind::Colornames; COLORNAME_CHANNELS],
        cell_size,
    })
}
