//! Extracts the 42-channel HOG + colorname + gray stack from a patch and
//! applies the cosine window.

use csrdcf::features::{apply_window, extract_features, sample_patch, ChannelKind, ColornameTable, CosineWindow, FeatureSet};
use csrdcf::Point;
use image::{Rgb, RgbImage};

fn main() -> csrdcf::Result<()> {
    let frame = RgbImage::from_fn(160, 120, |x, y| {
        if (50..110).contains(&x) && (30..90).contains(&y) {
            Rgb([200, (x * 3) as u8, 40])
        } else {
            Rgb([30, 90, (y * 2) as u8])
        }
    });
    let patch = sample_patch(&frame, Point::new(80.0, 60.0), (120.0, 96.0), (120, 96))?;
    let table = ColornameTable::shared_fallback();
    let features = extract_features(&patch, 4, FeatureSet::default(), &table)?;
    let (w, h) = features.dims();
    let windowed = apply_window(&features, &CosineWindow::hann(w, h))?;

    let count = |kind| features.kinds.iter().filter(|k| **k == kind).count();
    println!(
        "{} channels on a {w}x{h} grid: hog {}, colornames {}, gray {}",
        features.len(),
        count(ChannelKind::Hog),
        count(ChannelKind::Colornames),
        count(ChannelKind::Gray)
    );
    let corner: f64 = windowed.channels.iter().map(|c| c.get(0, 0).abs()).sum();
    println!("windowed energy at the corner cell: {corner:.3e}");
    Ok(())
}
