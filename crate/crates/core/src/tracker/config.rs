use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::filter_learn::AdmmParams;

/// Tracker parameters. Every field has a default, so a partial config file
/// overrides only what it names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Filter learning rate.
    pub eta: f64,
    /// Color histogram learning rate.
    pub eta_c: f64,
    pub lambda: f64,
    pub mu0: f64,
    pub beta: f64,
    /// Smallest foreground fraction of the bbox accepted from segmentation.
    pub alpha_min: f64,
    pub hist_bins: usize,
    pub admm_iterations: usize,
    /// ADMM iterations on the first frame, where no warm start exists.
    pub admm_iterations_init: usize,
    pub mrf_sweeps: usize,
    /// Search region side relative to the target.
    pub padding: f64,
    pub cell_size: usize,
    /// Nominal side in pixels of the resampled search patch.
    pub template_size: f64,
    pub use_hog: bool,
    pub use_colornames: bool,
    pub use_gray: bool,
    pub use_spatial_mask: bool,
    pub use_channel_reliability: bool,
    /// Restrict the filter support to the bbox when the spatial mask is off.
    /// Disabling it gives an unconstrained filter over the whole search region.
    pub constrain_to_bbox: bool,
    pub scale_count: usize,
    pub scale_step: f64,
    pub scale_lambda: f64,
    /// Pixel-area cap of the patches sampled by the scale filter.
    pub scale_model_max_area: f64,
    pub min_scale_factor: f64,
    pub max_scale_factor: f64,
    /// Colorname table; the built-in fallback is used when unset or unreadable.
    pub colornames_table: Option<PathBuf>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            eta: 0.02,
            eta_c: 0.04,
            lambda: 0.01,
            mu0: 5.0,
            beta: 3.0,
            alpha_min: 0.05,
            hist_bins: 16,
            admm_iterations: 4,
            admm_iterations_init: 20,
            mrf_sweeps: 4,
            padding: 2.0,
            cell_size: 4,
            template_size: 200.0,
            use_hog: true,
            use_colornames: true,
            use_gray: true,
            use_spatial_mask: true,
            use_channel_reliability: true,
            constrain_to_bbox: true,
            scale_count: 33,
            scale_step: 1.02,
            scale_lambda: 0.01,
            scale_model_max_area: 512.0,
            min_scale_factor: 0.2,
            max_scale_factor: 5.0,
            colornames_table: None,
        }
    }
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(message()))
    }
}

impl TrackerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check((0.0..=1.0).contains(&self.eta), || {
            format!("eta must lie in [0, 1], got {}", self.eta)
        })?;
        check((0.0..=1.0).contains(&self.eta_c), || {
            format!("eta_c must lie in [0, 1], got {}", self.eta_c)
        })?;
        check((0.0..1.0).contains(&self.alpha_min), || {
            format!("alpha_min must lie in [0, 1), got {}", self.alpha_min)
        })?;
        check(self.hist_bins >= 1, || "hist_bins must be positive".into())?;
        check(self.admm_iterations_init >= 1, || {
            "admm_iterations_init must be positive".into()
        })?;
        check(self.padding >= 1.0, || {
            format!("padding must be at least 1, got {}", self.padding)
        })?;
        check(self.cell_size >= 1, || "cell_size must be positive".into())?;
        check(self.template_size >= 16.0, || {
            format!("template_size must be at least 16, got {}", self.template_size)
        })?;
        check(self.use_hog || self.use_colornames || self.use_gray, || {
            "at least one feature family must be enabled".into()
        })?;
        check(self.scale_count % 2 == 1, || {
            format!("scale_count must be odd, got {}", self.scale_count)
        })?;
        check(self.scale_step > 1.0, || {
            format!("scale_step must exceed 1, got {}", self.scale_step)
        })?;
        check(self.scale_lambda > 0.0, || "scale_lambda must be positive".into())?;
        check(self.scale_model_max_area >= 64.0, || {
            "scale_model_max_area must be at least 64".into()
        })?;
        check(
            self.min_scale_factor > 0.0 && self.min_scale_factor <= 1.0 && self.max_scale_factor >= 1.0,
            || "scale bounds must bracket 1".into(),
        )?;
        self.admm_params().validate()
    }

    pub fn admm_params(&self) -> AdmmParams {
        AdmmParams {
            mu0: self.mu0,
            beta: self.beta,
            lambda: self.lambda,
            iterations: self.admm_iterations,
            init_ridge: None,
        }
    }

    pub fn feature_set(&self) -> FeatureSet {
        FeatureSet {
            hog: self.use_hog,
            colornames: self.use_colornames,
            gray: self.use_gray,
        }
    }

    /// Copy of this config with the reliability switches of `variant`.
    pub fn with_variant(&self, variant: Variant) -> Self {
        let (spatial, channel, constrained) = variant.switches();
        Self {
            use_spatial_mask: spatial,
            use_channel_reliability: channel,
            constrain_to_bbox: constrained,
            ..self.clone()
        }
    }
}

/// Ablation variants: which reliability mechanisms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Spatial mask and channel weights.
    #[serde(rename = "CSR")]
    Csr,
    /// Spatial mask, uniform channel weights.
    #[serde(rename = "CuSR")]
    CuSr,
    /// Bbox-constant mask, channel weights.
    #[serde(rename = "CSuR")]
    CsUr,
    /// Bbox-constant mask, uniform channel weights.
    #[serde(rename = "CuSuR")]
    CuSuR,
    /// Unconstrained filter over the whole search region, uniform weights.
    #[serde(rename = "DCF")]
    Dcf,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Csr, Variant::CuSr, Variant::CsUr, Variant::CuSuR, Variant::Dcf];

    /// `(use_spatial_mask, use_channel_reliability, constrain_to_bbox)`.
    pub fn switches(self) -> (bool, bool, bool) {
        match self {
            Variant::Csr => (true, true, true),
            Variant::CuSr => (true, false, true),
            Variant::CsUr => (false, true, true),
            Variant::CuSuR => (false, false, true),
            Variant::Dcf => (false, false, false),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Csr => "CSR",
            Variant::CuSr => "CuSR",
            Variant::CsUr => "CSuR",
            Variant::CuSuR => "CuSuR",
            Variant::Dcf => "DCF",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}; expected one of CSR, CuSR, CSuR, CuSuR, DCF")))
    }
}
