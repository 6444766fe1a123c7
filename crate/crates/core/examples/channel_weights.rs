//! Detection reliability from the peak ratio, and how it combines with the
//! learning reliability.

use csrdcf::channel_reliability::{combine_weights, detection_reliability, second_peak_ratio};
use csrdcf::spectral::RealGrid;

fn main() -> csrdcf::Result<()> {
    let lone = RealGrid::from_fn(21, 21, |x, y| if (x, y) == (10, 10) { 1.0 } else { 0.0 });
    let twin = RealGrid::from_fn(21, 21, |x, y| if (x, y) == (4, 4) || (x, y) == (15, 15) { 1.0 } else { 0.0 });
    let broad = RealGrid::from_fn(21, 21, |x, y| {
        let d2 = (x as f64 - 10.0).powi(2) + (y as f64 - 10.0).powi(2);
        (-d2 / 8.0).exp() + 0.6 * (-((x as f64 - 2.0).powi(2) + (y as f64 - 3.0).powi(2)) / 4.0).exp()
    });
    let responses = [lone, twin, broad];
    for (name, r) in ["lone peak", "two equal peaks", "peak plus side lobe"].iter().zip(&responses) {
        println!("{name:>20}: second/first peak ratio {:?}", second_peak_ratio(r));
    }
    let detection = detection_reliability(&responses);
    let learning = [0.5, 0.3, 0.2];
    println!("detection {detection:.3?}");
    println!("combined  {:.3?}", combine_weights(&learning, &detection)?);
    Ok(())
}
