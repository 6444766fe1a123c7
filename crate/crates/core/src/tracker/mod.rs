//! The tracking loop: localize with channel-weighted correlation, estimate
//! scale, then update color models, reliability mask, filter and weights.

pub mod config;
pub mod scale;
pub mod telemetry;

use std::sync::Arc;
use std::time::Instant;

use image::RgbImage;

pub use config::{TrackerConfig, Variant};
pub use scale::ScaleFilter;
pub use telemetry::{FrameTelemetry, StageTimings};

use crate::channel_reliability::{
    combine_weights, detection_reliability, learning_reliability_spectra, second_peak_ratio, ChannelWeights,
};
use crate::error::{Error, Result};
use crate::features::{apply_window, extract_features, sample_patch, ColornameTable, CosineWindow, ImagePatch};
use crate::filter_learn::{
    feature_spectra, learn_constrained_spectra, make_desired_response, response_sigma, AdmmParams,
    ConstrainedFilter, DesiredResponse,
};
use crate::geometry::{Point, Rect};
use crate::reliability_map::{
    appearance_posterior, finalize_mask, regularize, spatial_prior, ColorModel, MapPanels, SpatialMask,
};
use crate::spectral::{correlate_spectra, RealGrid, SpectralGrid};

/// Smallest feature-grid side, in cells.
pub const MIN_GRID_CELLS: usize = 9;
/// Smallest accepted target area in frame pixels.
pub const MIN_TARGET_AREA: f64 = 16.0;

/// Fixed relation between frame pixels, the resampled search patch and the
/// feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGeometry {
    /// Target size in frame pixels at scale 1.
    pub target_size: (f64, f64),
    /// Patch pixels per frame pixel at scale 1.
    pub zoom: f64,
    pub grid: (usize, usize),
    pub patch_px: (usize, usize),
    /// Frame-pixel size of the search region at scale 1.
    pub search_size: (f64, f64),
    /// Target box in patch pixels; the same at every scale.
    pub bbox_in_patch: Rect,
    pub cell_size: usize,
}

fn odd_cells(v: f64) -> usize {
    let n = (v.round() as usize).max(MIN_GRID_CELLS);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

impl SearchGeometry {
    pub fn new(target_size: (f64, f64), config: &TrackerConfig) -> Self {
        let padded = (target_size.0 * config.padding, target_size.1 * config.padding);
        let zoom = config.template_size / (padded.0 * padded.1).sqrt();
        let cell = config.cell_size;
        let grid = (
            odd_cells(padded.0 * zoom / cell as f64),
            odd_cells(padded.1 * zoom / cell as f64),
        );
        let patch_px = (grid.0 * cell, grid.1 * cell);
        let search_size = (patch_px.0 as f64 / zoom, patch_px.1 as f64 / zoom);
        let center = Point::new(patch_px.0 as f64 / 2.0, patch_px.1 as f64 / 2.0);
        let bbox_in_patch = Rect::from_center(center, target_size.0 * zoom, target_size.1 * zoom);
        Self {
            target_size,
            zoom,
            grid,
            patch_px,
            search_size,
            bbox_in_patch,
            cell_size: cell,
        }
    }

    /// Target box in feature-grid coordinates.
    pub fn bbox_in_grid(&self) -> Rect {
        let c = self.cell_size as f64;
        let b = &self.bbox_in_patch;
        Rect::new(b.x / c, b.y / c, b.width / c, b.height / c)
    }

    /// Target size in cells.
    pub fn target_cells(&self) -> (f64, f64) {
        let c = self.cell_size as f64;
        (self.bbox_in_patch.width / c, self.bbox_in_patch.height / c)
    }
}

/// Everything the tracker carries between frames.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub position: Point,
    pub scale: f64,
    pub filter: ConstrainedFilter,
    pub color_model: ColorModel,
    /// Learning reliability of each channel.
    pub learning_weights: Vec<f64>,
    pub scale_filter: ScaleFilter,
    pub frame_index: usize,
    pub mask: SpatialMask,
}

/// Result of searching one frame.
#[derive(Debug, Clone)]
pub struct Localization {
    pub position: Point,
    pub responses: Vec<RealGrid>,
    pub weights: ChannelWeights,
    pub combined_response: RealGrid,
    pub response_peak: f64,
    pub peak_ratio: f64,
}

/// Mask estimate with the maps that produced it.
struct MaskEstimate {
    mask: SpatialMask,
    panels: Option<MapPanels>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    geometry: SearchGeometry,
    window: CosineWindow,
    response: DesiredResponse,
    table: Arc<ColornameTable>,
    state: TrackerState,
    panels: Option<MapPanels>,
}

/// Peak offset in `(-1, 1)` from a quadratic least-squares fit over the 3x3
/// neighborhood (wrapping around the grid), or zero when the fit is not a
/// proper maximum.
pub fn subcell_peak(response: &RealGrid, px: usize, py: usize) -> (f64, f64) {
    let (w, h) = response.dims();
    let at = |dx: isize, dy: isize| {
        let x = (px as isize + dx).rem_euclid(w as isize) as usize;
        let y = (py as isize + dy).rem_euclid(h as isize) as usize;
        response.get(x, y)
    };
    let (mut b, mut c, mut d, mut e, mut g) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            let f = at(dx, dy);
            let (x, y) = (dx as f64, dy as f64);
            b += x * f;
            c += y * f;
            d += (x * x - 2.0 / 3.0) * f;
            e += (y * y - 2.0 / 3.0) * f;
            g += x * y * f;
        }
    }
    let (b, c, d, e, g) = (b / 6.0, c / 6.0, d / 2.0, e / 2.0, g / 4.0);
    // Stationary point of b x + c y + d x^2 + e y^2 + g x y.
    let (hxx, hyy, hxy) = (2.0 * d, 2.0 * e, g);
    let det = hxx * hyy - hxy * hxy;
    if !(hxx < 0.0 && det > 0.0) {
        return (0.0, 0.0);
    }
    let ox = (-b * hyy + c * hxy) / det;
    let oy = (-c * hxx + b * hxy) / det;
    if ox.abs() >= 1.0 || oy.abs() >= 1.0 || !ox.is_finite() || !oy.is_finite() {
        return (0.0, 0.0);
    }
    (ox, oy)
}

fn wrapped(i: usize, n: usize) -> f64 {
    if i > n / 2 {
        i as f64 - n as f64
    } else {
        i as f64
    }
}

fn blend_vec(old: &[f64], new: &[f64], rate: f64) -> Vec<f64> {
    if rate == 0.0 {
        return old.to_vec();
    }
    old.iter().zip(new).map(|(a, b)| (1.0 - rate) * a + rate * b).collect()
}

fn check_init_bbox(frame: &RgbImage, bbox: &Rect) -> Result<()> {
    if frame.width() == 0 || frame.height() == 0 {
        return Err(Error::EmptyFrame);
    }
    if !bbox.is_finite() || !(bbox.width > 0.0 && bbox.height > 0.0) || bbox.area() < MIN_TARGET_AREA {
        return Err(Error::DegenerateBBox(format!("{bbox} (area must be at least {MIN_TARGET_AREA} px^2)")));
    }
    let c = bbox.center();
    if c.x < 0.0 || c.y < 0.0 || c.x > frame.width() as f64 || c.y > frame.height() as f64 {
        return Err(Error::BBoxOutOfFrame(bbox.to_string()));
    }
    Ok(())
}

/// Colorname table named by the config, or the built-in table. The error
/// explains why a configured table could not be used.
pub fn colorname_table(config: &TrackerConfig) -> (Arc<ColornameTable>, Option<Error>) {
    match &config.colornames_table {
        Some(path) => {
            let (table, err) = ColornameTable::load_or_fallback(Some(path));
            (Arc::new(table), err)
        }
        None => (ColornameTable::shared_fallback(), None),
    }
}

impl Tracker {
    /// Initializes on `bbox` with the table from [`colorname_table`].
    pub fn init(frame: &RgbImage, bbox: Rect, config: &TrackerConfig) -> Result<Self> {
        Self::init_with_table(frame, bbox, config, colorname_table(config).0)
    }

    pub fn init_with_table(
        frame: &RgbImage,
        bbox: Rect,
        config: &TrackerConfig,
        table: Arc<ColornameTable>,
    ) -> Result<Self> {
        config.validate()?;
        check_init_bbox(frame, &bbox)?;
        let geometry = SearchGeometry::new((bbox.width, bbox.height), config);
        let window = CosineWindow::hann(geometry.grid.0, geometry.grid.1);
        let response = make_desired_response(geometry.grid, response_sigma(geometry.target_cells()))?;
        let position = bbox.center();

        let patch = sample_patch(frame, position, geometry.search_size, geometry.patch_px)?;
        let color_model = ColorModel::from_patch(&patch, &geometry.bbox_in_patch, config.hist_bins)?;

        let mut tracker = Self {
            config: config.clone(),
            geometry,
            window,
            response,
            table,
            panels: None,
            state: TrackerState {
                position,
                scale: 1.0,
                filter: ConstrainedFilter { channels: Vec::new() },
                color_model,
                learning_weights: Vec::new(),
                scale_filter: ScaleFilter::new(
                    config.scale_count,
                    config.scale_step,
                    config.scale_lambda,
                    (bbox.width, bbox.height),
                    config.scale_model_max_area,
                ),
                frame_index: 0,
                mask: SpatialMask::full((1, 1)),
            },
        };

        let estimate = tracker.estimate_mask(&patch, &tracker.state.color_model)?;
        let spectra = tracker.training_spectra(&patch)?;
        let params = AdmmParams {
            iterations: config.admm_iterations_init,
            // A full-strength ridge keeps weak channels from blowing up.
            init_ridge: Some(config.lambda),
            ..config.admm_params()
        };
        let (filter, _) = learn_constrained_spectra(&spectra, &tracker.response, &estimate.mask.m, &params, None)?;
        tracker.state.learning_weights = if config.use_channel_reliability {
            learning_reliability_spectra(&spectra, &filter)?
        } else {
            vec![1.0 / spectra.len() as f64; spectra.len()]
        };
        tracker.state.filter = filter;
        tracker.state.mask = estimate.mask;
        tracker.panels = estimate.panels;
        tracker.state.scale_filter.update(frame, position, 1.0, 1.0)?;
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn geometry(&self) -> &SearchGeometry {
        &self.geometry
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn desired_response(&self) -> &DesiredResponse {
        &self.response
    }

    /// Maps from the most recent mask estimate; `None` when the spatial mask
    /// is disabled.
    pub fn last_panels(&self) -> Option<&MapPanels> {
        self.panels.as_ref()
    }

    /// Current target box in frame coordinates.
    pub fn bbox(&self) -> Rect {
        let (w, h) = self.geometry.target_size;
        Rect::from_center(self.state.position, w * self.state.scale, h * self.state.scale)
    }

    fn search_patch(&self, frame: &RgbImage, position: Point, scale: f64) -> Result<ImagePatch> {
        let (sw, sh) = self.geometry.search_size;
        sample_patch(frame, position, (sw * scale, sh * scale), self.geometry.patch_px)
    }

    fn training_spectra(&self, patch: &ImagePatch) -> Result<Vec<SpectralGrid>> {
        let features = extract_features(patch, self.config.cell_size, self.config.feature_set(), &self.table)?;
        let windowed = apply_window(&features, &self.window)?;
        Ok(feature_spectra(&windowed))
    }

    fn estimate_mask(&self, patch: &ImagePatch, model: &ColorModel) -> Result<MaskEstimate> {
        let grid = self.geometry.grid;
        let bbox_grid = self.geometry.bbox_in_grid();
        if !self.config.use_spatial_mask {
            let mask = if self.config.constrain_to_bbox {
                SpatialMask::bbox_ones(grid, &bbox_grid)
            } else {
                SpatialMask::full(grid)
            };
            return Ok(MaskEstimate { mask, panels: None });
        }
        let bbox = &self.geometry.bbox_in_patch;
        let prior = spatial_prior((patch.width(), patch.height()), bbox)?;
        let unary = appearance_posterior(patch, model, &prior)?.pool(self.config.cell_size)?;
        let regularized = regularize(&unary, self.config.mrf_sweeps);
        let mask = finalize_mask(&regularized, &bbox_grid, self.config.alpha_min);
        let panels = MapPanels {
            prior: unary.prior_map,
            likelihood: unary.likelihood,
            posterior: regularized,
            mask: mask.m.clone(),
        };
        Ok(MaskEstimate {
            mask,
            panels: Some(panels),
        })
    }

    /// Searches `frame` around the previous position.
    pub fn localize(&self, frame: &RgbImage) -> Result<Localization> {
        let scale = self.state.scale;
        let patch = self.search_patch(frame, self.state.position, scale)?;
        let spectra = self.training_spectra(&patch)?;
        let responses = spectra
            .iter()
            .zip(&self.state.filter.channels)
            .map(|(z, c)| correlate_spectra(z, &c.h_hat))
            .collect::<Result<Vec<_>>>()?;
        let detection = detection_reliability(&responses);
        let n = responses.len();
        let combined = if self.config.use_channel_reliability {
            combine_weights(&self.state.learning_weights, &detection)?
        } else {
            vec![1.0 / n as f64; n]
        };
        let (gw, gh) = self.geometry.grid;
        let mut total = RealGrid::zeros(gw, gh);
        for (r, &w) in responses.iter().zip(&combined) {
            total = total.add_scaled(r, w)?;
        }
        let (px, py, peak) = total.argmax();
        let (ox, oy) = subcell_peak(&total, px, py);
        let dx = wrapped(px, gw) + ox;
        let dy = wrapped(py, gh) + oy;
        let to_frame = self.geometry.cell_size as f64 * scale / self.geometry.zoom;
        let position = self.clamp_position(
            frame,
            Point::new(self.state.position.x + dx * to_frame, self.state.position.y + dy * to_frame),
        );
        Ok(Localization {
            position,
            peak_ratio: second_peak_ratio(&total).unwrap_or(1.0),
            response_peak: peak,
            combined_response: total,
            responses,
            weights: ChannelWeights {
                learning: self.state.learning_weights.clone(),
                detection,
                combined,
            },
        })
    }

    fn clamp_position(&self, frame: &RgbImage, p: Point) -> Point {
        let (w, h) = (frame.width() as f64, frame.height() as f64);
        let fix = |v: f64, prev: f64, hi: f64| if v.is_finite() { v.clamp(0.0, hi) } else { prev };
        Point::new(fix(p.x, self.state.position.x, w), fix(p.y, self.state.position.y, h))
    }

    /// New absolute scale for a target at `position`, within the configured
    /// bounds relative to the initial size.
    pub fn estimate_scale(&self, frame: &RgbImage, position: Point) -> Result<f64> {
        let factor = self.state.scale_filter.estimate(frame, position, self.state.scale)?;
        Ok(self.clamp_scale(self.state.scale * factor))
    }

    pub fn clamp_scale(&self, scale: f64) -> f64 {
        if !scale.is_finite() {
            return self.state.scale;
        }
        scale.clamp(self.config.min_scale_factor, self.config.max_scale_factor)
    }

    /// Moves the state to `position` and `scale`, then updates every model
    /// with its autoregressive rate.
    pub fn update(&mut self, frame: &RgbImage, position: Point, scale: f64) -> Result<()> {
        let position = self.clamp_position(frame, position);
        let scale = self.clamp_scale(scale);
        self.state.position = position;
        self.state.scale = scale;
        self.state.frame_index += 1;

        let patch = self.search_patch(frame, position, scale)?;
        let observed = ColorModel::from_patch(&patch, &self.geometry.bbox_in_patch, self.config.hist_bins)?;
        let color_model = if self.config.eta_c == 0.0 {
            self.state.color_model.clone()
        } else {
            self.state.color_model.blend(&observed, self.config.eta_c)?
        };
        let estimate = self.estimate_mask(&patch, &color_model)?;
        let spectra = self.training_spectra(&patch)?;
        let (learned, _) = learn_constrained_spectra(
            &spectra,
            &self.response,
            &estimate.mask.m,
            &self.config.admm_params(),
            Some(&self.state.filter),
        )?;
        let eta = self.config.eta;
        if self.config.use_channel_reliability {
            let observed_weights = learning_reliability_spectra(&spectra, &learned)?;
            self.state.learning_weights = blend_vec(&self.state.learning_weights, &observed_weights, eta);
        }
        if eta != 0.0 {
            self.state.filter = self.state.filter.blend(&learned, eta)?;
        }
        self.state.color_model = color_model;
        self.state.mask = estimate.mask;
        self.panels = estimate.panels;
        self.state.scale_filter.update(frame, position, scale, eta)?;
        Ok(())
    }

    /// One full step: localize, estimate scale, update.
    pub fn track(&mut self, frame: &RgbImage) -> Result<(Rect, FrameTelemetry)> {
        let t0 = Instant::now();
        let loc = self.localize(frame)?;
        let t1 = Instant::now();
        let scale = self.estimate_scale(frame, loc.position)?;
        let t2 = Instant::now();
        self.update(frame, loc.position, scale)?;
        let t3 = Instant::now();
        let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
        let bbox = self.bbox();
        let telemetry = FrameTelemetry {
            frame: self.state.frame_index,
            bbox,
            channel_weights: loc.weights.combined,
            response_peak: loc.response_peak,
            peak_ratio: loc.peak_ratio,
            scale: self.state.scale,
            mask_fg_fraction: self.state.mask.fg_fraction,
            mask_fallback: self.state.mask.fallback,
            timings: StageTimings {
                localize_ms: ms(t0, t1),
                scale_ms: ms(t1, t2),
                update_ms: ms(t2, t3),
            },
        };
        Ok((bbox, telemetry))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn square_frame(cx: f64, cy: f64) -> RgbImage {
        RgbImage::from_fn(240, 200, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx.abs() < 20.0 && dy.abs() < 20.0 {
                let checker = (((dx + 20.0) / 5.0).floor() as i64 + ((dy + 20.0) / 5.0).floor() as i64) % 2;
                if checker == 0 {
                    Rgb([220, 50, 30])
                } else {
                    Rgb([250, 200, 40])
                }
            } else {
                let v = ((x / 7 + y / 5) % 3) as u8;
                Rgb([40 + 10 * v, 90 + 15 * v, 70])
            }
        })
    }

    #[test]
    fn geometry_is_odd_and_consistent() {
        let g = SearchGeometry::new((40.0, 30.0), &TrackerConfig::default());
        assert_eq!(g.grid.0 % 2, 1);
        assert_eq!(g.grid.1 % 2, 1);
        assert_eq!(g.patch_px, (g.grid.0 * 4, g.grid.1 * 4));
        let c = g.bbox_in_patch.center();
        assert!((c.x - g.patch_px.0 as f64 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn subcell_fit_recovers_offset() {
        let r = RealGrid::from_fn(9, 9, |x, y| {
            let (dx, dy) = (x as f64 - 4.3, y as f64 - 3.8);
            -(dx * dx) - 2.0 * dy * dy
        });
        let (ox, oy) = subcell_peak(&r, 4, 4);
        assert!((ox - 0.3).abs() < 1e-9 && (oy + 0.2).abs() < 1e-9, "{ox} {oy}");
        assert_eq!(subcell_peak(&RealGrid::filled(5, 5, 1.0), 2, 2), (0.0, 0.0));
    }

    #[test]
    fn init_rejects_bad_boxes() {
        let frame = square_frame(120.0, 100.0);
        let c = TrackerConfig::default();
        assert!(matches!(
            Tracker::init(&frame, Rect::new(10.0, 10.0, 3.0, 3.0), &c),
            Err(Error::DegenerateBBox(_))
        ));
        assert!(matches!(
            Tracker::init(&frame, Rect::new(400.0, 10.0, 30.0, 30.0), &c),
            Err(Error::BBoxOutOfFrame(_))
        ));
    }

    #[test]
    fn mask_covers_square() {
        let frame = square_frame(120.0, 100.0);
        let t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &TrackerConfig::default()).unwrap();
        let mask = &t.state().mask;
        assert!(!mask.fallback);
        let b = t.geometry().bbox_in_grid();
        let (mut inside, mut covered) = (0, 0);
        for y in 0..t.geometry().grid.1 {
            for x in 0..t.geometry().grid.0 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                if cx > b.x && cx < b.right() && cy > b.y && cy < b.bottom() {
                    inside += 1;
                    covered += (mask.m.get(x, y) != 0.0) as usize;
                }
            }
        }
        assert!(covered as f64 >= 0.8 * inside as f64, "{covered}/{inside}");
    }

    #[test]
    fn uniform_frame_falls_back_to_bbox() {
        let frame = RgbImage::from_pixel(160, 160, Rgb([120, 120, 120]));
        let t = Tracker::init(&frame, Rect::new(60.0, 60.0, 40.0, 40.0), &TrackerConfig::default()).unwrap();
        let mask = &t.state().mask;
        assert!(mask.fallback);
        let expected = SpatialMask::bbox_ones(t.geometry().grid, &t.geometry().bbox_in_grid());
        assert_eq!(mask.pre_dilation, expected.m);
    }

    #[test]
    fn same_frame_localizes_in_place() {
        let frame = square_frame(120.0, 100.0);
        let t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &TrackerConfig::default()).unwrap();
        let cell_px = 4.0 / t.geometry().zoom;
        let loc = t.localize(&frame).unwrap();
        assert!(loc.position.distance(&Point::new(120.0, 100.0)) <= 0.5 * cell_px);
    }

    #[test]
    fn recovers_two_cell_shift() {
        let config = TrackerConfig {
            // Equal zoom makes one cell exactly 4 frame pixels.
            template_size: 160.0,
            ..TrackerConfig::default()
        };
        let frame = square_frame(120.0, 100.0);
        let t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &config).unwrap();
        assert!((t.geometry().zoom - 2.0).abs() < 1e-12);
        let loc = t.localize(&square_frame(128.0, 100.0)).unwrap();
        assert!((loc.position.x - 128.0).abs() <= 1.0 && (loc.position.y - 100.0).abs() <= 1.0, "{:?}", loc.position);
    }

    #[test]
    fn frozen_rates_keep_models() {
        let config = TrackerConfig {
            eta: 0.0,
            eta_c: 0.0,
            ..TrackerConfig::default()
        };
        let frame = square_frame(120.0, 100.0);
        let mut t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &config).unwrap();
        let before = t.state().clone();
        t.track(&square_frame(123.0, 101.0)).unwrap();
        let after = t.state();
        assert_eq!(before.filter.channels.len(), after.filter.channels.len());
        for (a, b) in before.filter.channels.iter().zip(&after.filter.channels) {
            assert_eq!(a.h, b.h);
            assert_eq!(a.h_hat, b.h_hat);
        }
        assert_eq!(before.color_model, after.color_model);
        assert_eq!(before.learning_weights, after.learning_weights);
        assert!(after.position.distance(&before.position) > 1.0);
    }

    #[test]
    fn full_rate_replaces_filter() {
        let config = TrackerConfig {
            eta: 1.0,
            ..TrackerConfig::default()
        };
        let frame = square_frame(120.0, 100.0);
        let t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &config).unwrap();
        let prev = t.state().filter.clone();
        let next = square_frame(122.0, 100.0);
        let loc = t.localize(&next).unwrap();
        let scale = t.estimate_scale(&next, loc.position).unwrap();
        // Reproduce the observation the update learns from.
        let mut probe = t.clone();
        probe.update(&next, loc.position, scale).unwrap();
        let patch = t.search_patch(&next, probe.state().position, probe.state().scale).unwrap();
        let model = t.state().color_model.blend(
            &ColorModel::from_patch(&patch, &t.geometry().bbox_in_patch, 16).unwrap(),
            config.eta_c,
        );
        let mask = t.estimate_mask(&patch, &model.unwrap()).unwrap().mask;
        let spectra = t.training_spectra(&patch).unwrap();
        let (learned, _) =
            learn_constrained_spectra(&spectra, t.desired_response(), &mask.m, &config.admm_params(), Some(&prev))
                .unwrap();
        for (a, b) in probe.state().filter.channels.iter().zip(&learned.channels) {
            assert_eq!(a.h, b.h);
        }
    }

    #[test]
    fn default_rate_bounds_filter_change() {
        let frame = square_frame(120.0, 100.0);
        let mut t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &TrackerConfig::default()).unwrap();
        let prev = t.state().filter.clone();
        let mut eta1 = t.clone();
        eta1.config.eta = 1.0;
        let next = square_frame(121.0, 101.0);
        t.track(&next).unwrap();
        eta1.track(&next).unwrap();
        let (mut diff, mut learned, mut old) = (0.0, 0.0, 0.0);
        for ((a, b), c) in t.state().filter.channels.iter().zip(&prev.channels).zip(&eta1.state().filter.channels) {
            for i in 0..a.h.len() {
                diff += (a.h.as_slice()[i] - b.h.as_slice()[i]).powi(2);
            }
            learned += c.h.norm_sq();
            old += b.h.norm_sq();
        }
        assert!(diff.sqrt() <= 0.02 * (learned.sqrt() + old.sqrt()) + 1e-12);
    }

    #[test]
    fn bbox_stays_finite_when_target_leaves() {
        let frame = square_frame(120.0, 100.0);
        let mut t = Tracker::init(&frame, Rect::new(100.0, 80.0, 40.0, 40.0), &TrackerConfig::default()).unwrap();
        let empty = RgbImage::from_pixel(240, 200, Rgb([0, 0, 0]));
        for _ in 0..5 {
            let (b, _) = t.track(&empty).unwrap();
            assert!(b.is_finite() && b.area() > 0.0);
        }
    }
}
