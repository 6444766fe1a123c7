//! 2-D discrete Fourier transforms and elementwise spectral algebra.
//!
//! Convention: the forward transform is unnormalized, the inverse carries the
//! `1/D` factor (`D = width * height`). Correlation is the canonical product,
//! `corr(f, h) = idft2(dft2(f) * conj(dft2(h)))`, so a response peak sits at
//! the displacement of `f` relative to `h`.

use std::cell::{Cell, RefCell};
use std::ops::{Index, IndexMut};

pub use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Inverse transforms whose imaginary residue exceeds this (relative to the
/// largest real magnitude, floored at 1) indicate a broken spectral product.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Denominator magnitudes below this are rejected by
/// [`spectral_solve_elementwise`].
pub const UNDERFLOW_THRESHOLD: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static FORWARD_CALLS: Cell<u64> = const { Cell::new(0) };
    static INVERSE_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Per-thread counts of 2-D transform invocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformCounts {
    pub forward: u64,
    pub inverse: u64,
}

impl TransformCounts {
    pub fn total(&self) -> u64 {
        self.forward + self.inverse
    }

    pub fn since(&self, earlier: &TransformCounts) -> TransformCounts {
        TransformCounts {
            forward: self.forward - earlier.forward,
            inverse: self.inverse - earlier.inverse,
        }
    }
}

/// Snapshot of the calling thread's transform counters.
pub fn transform_counts() -> TransformCounts {
    TransformCounts {
        forward: FORWARD_CALLS.with(Cell::get),
        inverse: INVERSE_CALLS.with(Cell::get),
    }
}

/// Real-valued `width x height` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be positive"
        );
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        let mut grid = Self::zeros(width, height);
        grid.data.fill(value);
        grid
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be positive"
        );
        assert_eq!(
            data.len(),
            width * height,
            "data length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise product; dimensions must agree.
    pub fn hadamard(&self, other: &RealGrid) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(x, y, value)` of the first maximal entry in row-major order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 % self.width, best.0 / self.width, best.1)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &RealGrid, scale: f64) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        })
    }

    /// Circular shift so that entry `(x, y)` moves to `(x + dx, y + dy)`.
    pub fn circshift(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }
}

impl Index<(usize, usize)> for RealGrid {
    type Output = f64;

    fn index(&self, (x, y): (usize, usize)) -> &f64 {
        &self.data[y * self.width + x]
    }
}

impl IndexMut<(usize, usize)> for RealGrid {
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }
}

/// Complex spectrum with the same row-major layout as [`RealGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl SpectralGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be positive"
        );
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: Complex64) -> Self {
        let mut grid = Self::zeros(width, height);
        grid.data.fill(value);
        grid
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be positive"
        );
        assert_eq!(
            data.len(),
            width * height,
            "data length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Applies `f` pairwise to `self` and `other`.
    pub fn zip_map(
        &self,
        other: &SpectralGrid,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c * factor)
    }

    pub fn add(&self, other: &SpectralGrid) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralGrid) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SpectralGrid) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self * conj(other)`, elementwise.
    pub fn mul_conj(&self, other: &SpectralGrid) -> Result<Self> {
        self.zip_map(other, |a, b| a * b.conj())
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SpectralGrid, scale: f64) -> Result<Self> {
        self.zip_map(other, |a, b| a + b * scale)
    }

    /// Euclidean distance between two spectra.
    pub fn distance(&self, other: &SpectralGrid) -> Result<f64> {
        check_dims(self.dims(), other.dims())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

pub(crate) fn check_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

fn plan(len: usize, inverse: bool) -> std::sync::Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    })
}

/// In-place unnormalized 2-D FFT over a row-major buffer.
fn fft2_in_place(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let row_fft = plan(width, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    if height > 1 {
        let col_fft = plan(height, inverse);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        let mut scratch = vec![Complex64::new(0.0, 0.0); col_fft.get_inplace_scratch_len()];
        for x in 0..width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = data[y * width + x];
            }
            col_fft.process_with_scratch(&mut column, &mut scratch);
            for (y, c) in column.iter().enumerate() {
                data[y * width + x] = *c;
            }
        }
    }
}

/// Forward 2-D DFT (unnormalized). The DC bin equals the sum of all entries.
pub fn dft2(x: &RealGrid) -> SpectralGrid {
    FORWARD_CALLS.with(|c| c.set(c.get() + 1));
    let mut data: Vec<Complex64> = x.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut data, x.width, x.height, false);
    SpectralGrid {
        width: x.width,
        height: x.height,
        data,
    }
}

/// Inverse 2-D DFT (`1/D` normalized) of a spectrum that must correspond to
/// a real grid.
pub fn idft2(spectrum: &SpectralGrid) -> Result<RealGrid> {
    INVERSE_CALLS.with(|c| c.set(c.get() + 1));
    let mut data = spectrum.data.clone();
    fft2_in_place(&mut data, spectrum.width, spectrum.height, true);
    let norm = 1.0 / data.len() as f64;
    let mut residue = 0.0_f64;
    let mut magnitude = 0.0_f64;
    let real = data
        .iter()
        .map(|c| {
            residue = residue.max((c.im * norm).abs());
            magnitude = magnitude.max((c.re * norm).abs());
            c.re * norm
        })
        .collect();
    if residue > IMAGINARY_TOLERANCE * magnitude.max(1.0) {
        return Err(Error::NonNegligibleImaginaryPart { residue });
    }
    Ok(RealGrid {
        width: spectrum.width,
        height: spectrum.height,
        data: real,
    })
}

/// Response of `h` slid circularly over `f`:
/// `out[x] = sum_u f(u) h(u - x)` with wrap-around indexing.
pub fn circular_correlate(f: &RealGrid, h: &RealGrid) -> Result<RealGrid> {
    check_dims(f.dims(), h.dims())?;
    correlate_spectra(&dft2(f), &dft2(h))
}

/// Correlation of two grids given their spectra.
pub fn correlate_spectra(f_hat: &SpectralGrid, h_hat: &SpectralGrid) -> Result<RealGrid> {
    idft2(&f_hat.mul_conj(h_hat)?)
}

/// Elementwise `numerator / denominator`.
pub fn spectral_solve_elementwise(
    numerator: &SpectralGrid,
    denominator: &SpectralGrid,
) -> Result<SpectralGrid> {
    check_dims(numerator.dims(), denominator.dims())?;
    if let Some(small) = denominator
        .data
        .iter()
        .map(|d| d.norm())
        .find(|&m| m < UNDERFLOW_THRESHOLD)
    {
        return Err(Error::DivisionUnderflow { magnitude: small });
    }
    numerator.zip_map(denominator, |n, d| n / d)
}
