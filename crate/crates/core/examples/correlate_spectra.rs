//! Circular correlation through the spectral domain: a shifted copy of a
//! template peaks at the shift.

use csrdcf::spectral::{circular_correlate, dft2, idft2, RealGrid};

fn main() -> csrdcf::Result<()> {
    let template = RealGrid::from_fn(16, 12, |x, y| ((x * 7 + y * 3) % 5) as f64 - 2.0);
    let shifted = template.circshift(3, -2);

    let response = circular_correlate(&shifted, &template)?;
    let (px, py, peak) = response.argmax();
    let dx = if px > 8 { px as isize - 16 } else { px as isize };
    let dy = if py > 6 { py as isize - 12 } else { py as isize };
    println!("peak {peak:.3} at displacement ({dx}, {dy})");

    let back = idft2(&dft2(&template))?;
    let err = back
        .as_slice()
        .iter()
        .zip(template.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("round-trip max error {err:.2e}");
    Ok(())
}
