//! Correlation filter learning: the closed-form ridge solution and the
//! mask-constrained filter obtained by ADMM.
//!
//! Per channel the constrained learner alternates three closed-form steps,
//!
//! ```text
//! hc  = (f * conj(g) + mu * hm - l) / (|f|^2 + mu)          (spectral)
//! h   = m . F^-1[l + mu * hc] / (lambda / (2D) + mu)         (spatial)
//! l  += mu * (hc - F[h])
//! ```
//!
//! with `mu` growing geometrically. Only the inverse transform in the second
//! step and the forward transform of the masked filter happen per iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::spectral::{
    check_dims, dft2, idft2, spectral_solve_elementwise, transform_counts, Complex64, RealGrid,
    SpectralGrid, TransformCounts,
};

/// Gaussian target response, peaked at the zero-displacement bin.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredResponse {
    pub g: RealGrid,
    pub g_hat: SpectralGrid,
    pub sigma: f64,
}

impl DesiredResponse {
    pub fn dims(&self) -> (usize, usize) {
        self.g.dims()
    }
}

/// Gaussian width (in cells) for a target spanning `target_cells`.
pub fn response_sigma(target_cells: (f64, f64)) -> f64 {
    (target_cells.0 * target_cells.1).sqrt() / 10.0
}

/// Circular Gaussian with peak 1 at bin `(0, 0)`.
pub fn make_desired_response(grid_size: (usize, usize), sigma: f64) -> Result<DesiredResponse> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!(
            "response sigma must be positive, got {sigma}"
        )));
    }
    let (w, h) = grid_size;
    let wrap = |i: usize, n: usize| i.min(n - i) as f64;
    let g = RealGrid::from_fn(w, h, |x, y| {
        let (dx, dy) = (wrap(x, w), wrap(y, h));
        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    });
    let g_hat = dft2(&g);
    Ok(DesiredResponse { g, g_hat, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    pub mu0: f64,
    pub beta: f64,
    pub lambda: f64,
    pub iterations: usize,
    /// Ridge of the closed-form start used without a warm start. `None`
    /// picks `lambda / (2D)`, the minimizer of the unmasked objective.
    #[serde(default)]
    pub init_ridge: Option<f64>,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            mu0: 5.0,
            beta: 3.0,
            lambda: 0.01,
            iterations: 4,
            init_ridge: None,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0) {
            return Err(Error::Config(format!(
                "mu0 must be positive, got {}",
                self.mu0
            )));
        }
        if !(self.beta > 1.0) {
            return Err(Error::Config(format!(
                "beta must exceed 1, got {}",
                self.beta
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("ADMM needs at least one iteration".into()));
        }
        if let Some(r) = self.init_ridge {
            if !(r >= 0.0) {
                return Err(Error::Config(format!("init_ridge must be non-negative, got {r}")));
            }
        }
        Ok(())
    }
}

/// ADMM state left behind by the last iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmWorkspace {
    pub h_c: SpectralGrid,
    pub l_hat: SpectralGrid,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFilter {
    pub h: RealGrid,
    pub h_hat: SpectralGrid,
    pub workspace: Option<AdmmWorkspace>,
}

impl ChannelFilter {
    pub fn from_spatial(h: RealGrid) -> Self {
        let h_hat = dft2(&h);
        Self {
            h,
            h_hat,
            workspace: None,
        }
    }
}

/// One learned filter per feature channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedFilter {
    pub channels: Vec<ChannelFilter>,
}

impl ConstrainedFilter {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels.first().map(|c| c.h.dims()).unwrap_or((0, 0))
    }

    /// `(1 - rate) * self + rate * other`, channel by channel.
    pub fn blend(&self, other: &ConstrainedFilter, rate: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| {
                check_dims(a.h.dims(), b.h.dims())?;
                let h = RealGrid::from_fn(a.h.width(), a.h.height(), |x, y| {
                    (1.0 - rate) * a.h.get(x, y) + rate * b.h.get(x, y)
                });
                let h_hat = a.h_hat.scale(1.0 - rate).add_scaled(&b.h_hat, rate)?;
                Ok(ChannelFilter {
                    h,
                    h_hat,
                    workspace: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { channels })
    }

    /// Sum of squared spatial coefficients over all channels.
    pub fn norm_sq(&self) -> f64 {
        self.channels.iter().map(|c| c.h.norm_sq()).sum()
    }
}

/// Spectra of every channel of `f`.
pub fn feature_spectra(f: &FeatureStack) -> Vec<SpectralGrid> {
    f.channels.iter().map(dft2).collect()
}

/// Per-bin ridge solution `f * conj(g) / (|f|^2 + lambda)` for one channel.
pub fn closed_form_channel(
    f_hat: &SpectralGrid,
    g_hat: &SpectralGrid,
    lambda: f64,
) -> Result<SpectralGrid> {
    check_dims(f_hat.dims(), g_hat.dims())?;
    let num = f_hat.mul_conj(g_hat)?;
    let den = f_hat.map(|c| Complex64::new(c.norm_sqr() + lambda, 0.0));
    if lambda > 0.0 {
        return spectral_solve_elementwise(&num, &den);
    }
    // Unregularized: bins with no feature energy get a zero filter.
    num.zip_map(&den, |n, d| {
        if d.re > 0.0 {
            n / d
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Independent per-channel closed-form filters.
pub fn learn_closed_form(
    f: &FeatureStack,
    g: &DesiredResponse,
    lambda: f64,
) -> Result<ConstrainedFilter> {
    if f.is_empty() {
        return Err(Error::Config("feature stack has no channels".into()));
    }
    let channels = feature_spectra(f)
        .iter()
        .map(|f_hat| {
            let h_hat = closed_form_channel(f_hat, &g.g_hat, lambda)?;
            let h = idft2(&h_hat)?;
            Ok(ChannelFilter {
                h,
                h_hat,
                workspace: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstrainedFilter { channels })
}

/// Minimizer of the augmented Lagrangian over the unconstrained copy.
pub fn solve_hc(
    f_hat: &SpectralGrid,
    g_hat: &SpectralGrid,
    h_m_hat: &SpectralGrid,
    l_hat: &SpectralGrid,
    mu: f64,
) -> Result<SpectralGrid> {
    check_dims(f_hat.dims(), g_hat.dims())?;
    check_dims(f_hat.dims(), h_m_hat.dims())?;
    check_dims(f_hat.dims(), l_hat.dims())?;
    let n = f_hat.len();
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for i in 0..n {
        let f = f_hat.as_slice()[i];
        num.push(f * g_hat.as_slice()[i].conj() + h_m_hat.as_slice()[i] * mu - l_hat.as_slice()[i]);
        den.push(Complex64::new(f.norm_sqr() + mu, 0.0));
    }
    let (w, h) = f_hat.dims();
    spectral_solve_elementwise(
        &SpectralGrid::from_vec(w, h, num),
        &SpectralGrid::from_vec(w, h, den),
    )
}

/// Minimizer over the masked spatial filter. Exactly zero where `m` is zero.
pub fn solve_h(
    h_c: &SpectralGrid,
    l_hat: &SpectralGrid,
    m: &RealGrid,
    mu: f64,
    lambda: f64,
) -> Result<RealGrid> {
    check_dims(h_c.dims(), l_hat.dims())?;
    check_dims(h_c.dims(), m.dims())?;
    let d = m.len() as f64;
    let scale = 1.0 / (lambda / (2.0 * d) + mu);
    let combined = l_hat.add_scaled(h_c, mu)?.scale(scale);
    let unmasked = idft2(&combined)?;
    let mut out = unmasked;
    for (v, &mv) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *v = if mv == 0.0 { 0.0 } else { *v * mv };
    }
    Ok(out)
}

/// Multiplier ascent step `l + mu * (hc - hm)`.
pub fn update_lagrangian(
    l_hat: &SpectralGrid,
    h_c: &SpectralGrid,
    h_m_hat: &SpectralGrid,
    mu: f64,
) -> Result<SpectralGrid> {
    check_dims(l_hat.dims(), h_c.dims())?;
    check_dims(l_hat.dims(), h_m_hat.dims())?;
    let diff = h_c.sub(h_m_hat)?;
    l_hat.add_scaled(&diff, mu)
}

/// Per-channel record of an ADMM run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    /// `||hc - hm||` after each iteration.
    pub residuals: Vec<f64>,
    /// Transforms issued inside the iteration loop.
    pub transforms: TransformCounts,
}

fn initial_filter(
    f_hat: &SpectralGrid,
    g: &DesiredResponse,
    m: &RealGrid,
    params: &AdmmParams,
    init: Option<&ChannelFilter>,
) -> Result<SpectralGrid> {
    match init {
        Some(prev) => {
            check_dims(prev.h_hat.dims(), f_hat.dims())?;
            Ok(prev.h_hat.clone())
        }
        None => {
            let ridge = params
                .init_ridge
                .unwrap_or(params.lambda / (2.0 * m.len() as f64));
            let h_hat = closed_form_channel(f_hat, &g.g_hat, ridge)?;
            let h = idft2(&h_hat)?.hadamard(m)?;
            Ok(dft2(&h))
        }
    }
}

fn learn_channel(
    f_hat: &SpectralGrid,
    g: &DesiredResponse,
    m: &RealGrid,
    params: &AdmmParams,
    init: Option<&ChannelFilter>,
) -> Result<(ChannelFilter, ChannelTrace)> {
    let mut h_m_hat = initial_filter(f_hat, g, m, params, init)?;
    let (w, h_dim) = m.dims();
    let mut l_hat = SpectralGrid::zeros(w, h_dim);
    let mut mu = params.mu0;
    let mut residuals = Vec::with_capacity(params.iterations);
    let mut h = RealGrid::zeros(w, h_dim);
    let mut h_c = h_m_hat.clone();
    let start = transform_counts();
    for _ in 0..params.iterations {
        h_c = solve_hc(f_hat, &g.g_hat, &h_m_hat, &l_hat, mu)?;
        h = solve_h(&h_c, &l_hat, m, mu, params.lambda)?;
        h_m_hat = dft2(&h);
        l_hat = update_lagrangian(&l_hat, &h_c, &h_m_hat, mu)?;
        residuals.push(h_c.distance(&h_m_hat)?);
        mu *= params.beta;
    }
    let transforms = transform_counts().since(&start);
    Ok((
        ChannelFilter {
            h,
            h_hat: h_m_hat,
            workspace: Some(AdmmWorkspace { h_c, l_hat, mu }),
        },
        ChannelTrace {
            residuals,
            transforms,
        },
    ))
}

/// Mask-constrained filter learning with diagnostics per channel.
pub fn learn_constrained_traced(
    f: &FeatureStack,
    g: &DesiredResponse,
    m: &RealGrid,
    params: &AdmmParams,
    h_init: Option<&ConstrainedFilter>,
) -> Result<(ConstrainedFilter, Vec<ChannelTrace>)> {
    let spectra = feature_spectra(f);
    learn_constrained_spectra(&spectra, g, m, params, h_init)
}

/// As [`learn_constrained_traced`], for precomputed feature spectra.
pub fn learn_constrained_spectra(
    spectra: &[SpectralGrid],
    g: &DesiredResponse,
    m: &RealGrid,
    params: &AdmmParams,
    h_init: Option<&ConstrainedFilter>,
) -> Result<(ConstrainedFilter, Vec<ChannelTrace>)> {
    params.validate()?;
    if spectra.is_empty() {
        return Err(Error::Config("feature stack has no channels".into()));
    }
    check_dims(spectra[0].dims(), g.dims())?;
    check_dims(spectra[0].dims(), m.dims())?;
    if let Some(init) = h_init {
        if init.len() != spectra.len() {
            return Err(Error::LengthMismatch {
                left: init.len(),
                right: spectra.len(),
            });
        }
    }
    // Channels run sequentially so the per-thread transform counters stay
    // attributable to one channel.
    let mut channels = Vec::with_capacity(spectra.len());
    let mut traces = Vec::with_capacity(spectra.len());
    for (d, f_hat) in spectra.iter().enumerate() {
        check_dims(f_hat.dims(), m.dims())?;
        let init = h_init.map(|f| &f.channels[d]);
        let (filter, trace) = learn_channel(f_hat, g, m, params, init)?;
        channels.push(filter);
        traces.push(trace);
    }
    Ok((ConstrainedFilter { channels }, traces))
}

/// Mask-constrained filter learning. Without `h_init` each channel starts
/// from the masked closed-form solution.
pub fn learn_constrained(
    f: &FeatureStack,
    g: &DesiredResponse,
    m: &RealGrid,
    params: &AdmmParams,
    h_init: Option<&ConstrainedFilter>,
) -> Result<ConstrainedFilter> {
    learn_constrained_traced(f, g, m, params, h_init).map(|(filter, _)| filter)
}

/// Spatial training loss `||f * h - g||^2` of one channel.
pub fn training_loss(f: &RealGrid, h: &RealGrid, g: &RealGrid) -> Result<f64> {
    let response = crate::spectral::circular_correlate(f, h)?;
    check_dims(response.dims(), g.dims())?;
    Ok(response
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(r, t)| (r - t) * (r - t))
        .sum())
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Augmented Lagrangian in the solver's own scaling:
    /// `sum |f conj(hc) - g|^2 + lambda/2 ||m h||^2
    ///  + 2 Re sum conj(l) (hc - F[m h]) + mu sum |hc - F[m h]|^2`.
    pub fn lagrangian(
        f_hat: &SpectralGrid,
        g_hat: &SpectralGrid,
        h_c: &SpectralGrid,
        h: &RealGrid,
        m: &RealGrid,
        l_hat: &SpectralGrid,
        mu: f64,
        lambda: f64,
    ) -> f64 {
        let hm = h.hadamard(m).unwrap();
        let hm_hat = dft2(&hm);
        let mut total = 0.5 * lambda * hm.norm_sq();
        for i in 0..f_hat.len() {
            let f = f_hat.as_slice()[i];
            let c = h_c.as_slice()[i];
            let r = c - hm_hat.as_slice()[i];
            total += (f * c.conj() - g_hat.as_slice()[i]).norm_sqr();
            total += 2.0 * (l_hat.as_slice()[i].conj() * r).re;
            total += mu * r.norm_sqr();
        }
        total
    }
}
