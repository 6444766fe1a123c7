//! Seeded synthetic sequences with exact ground truth.

use std::f64::consts::PI;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sequence::{Frames, Sequence};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Motion {
    /// Constant velocity in px/frame.
    Linear { vx: f64, vy: f64 },
    /// Horizontal drift with a vertical sine.
    Sinusoid { speed: f64, amplitude: f64, period: f64 },
    /// Static center; size multiplied by `factor` every `period` frames.
    Zoom { factor: f64, period: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetShape {
    TexturedSquare,
    Ellipse,
    /// The box minus its top-right quadrant.
    LShape,
}

/// Frames `[start, end)` during which a background-textured block hides the
/// left `coverage` fraction of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    pub start: usize,
    pub end: usize,
    #[serde(default = "default_coverage")]
    pub coverage: f64,
}

fn default_coverage() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub motion: Motion,
    pub target: TargetShape,
    pub target_width: f64,
    pub target_height: f64,
    /// A second object with the target's layout in other colors, orbiting it.
    pub distractor: bool,
    pub occlusion: Option<Occlusion>,
    /// Standard deviation of per-pixel Gaussian noise, in intensity levels.
    pub noise_sigma: f64,
    /// Number of random solid rectangles painted over the background.
    pub clutter: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            width: 640,
            height: 480,
            frames: 100,
            motion: Motion::Linear { vx: 5.0, vy: 0.0 },
            target: TargetShape::TexturedSquare,
            target_width: 48.0,
            target_height: 48.0,
            distractor: false,
            occlusion: None,
            noise_sigma: 0.0,
            clutter: 0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.frames < 2 {
            return bad(format!("frames must be at least 2, got {}", self.frames));
        }
        if self.width < 32 || self.height < 32 {
            return bad(format!("frame size {}x{} is below 32x32", self.width, self.height));
        }
        if !(self.target_width >= 4.0 && self.target_height >= 4.0) {
            return bad("target sides must be at least 4 px".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        match self.motion {
            Motion::Linear { vx, vy } if !(vx.is_finite() && vy.is_finite()) => {
                return bad("linear velocity must be finite".into());
            }
            Motion::Sinusoid { period, .. } if !(period > 0.0) => {
                return bad("sinusoid period must be positive".into());
            }
            Motion::Zoom { factor, period } if !(factor > 0.0 && period > 0.0) => {
                return bad("zoom factor and period must be positive".into());
            }
            _ => {}
        }
        if let Some(o) = self.occlusion {
            if o.start >= o.end || !(0.0..=1.0).contains(&o.coverage) {
                return bad(format!("occlusion [{}, {}) with coverage {} is invalid", o.start, o.end, o.coverage));
            }
        }
        for t in 0..self.frames {
            let r = self.ground_truth(t);
            if r.x < 0.0 || r.y < 0.0 || r.right() > self.width as f64 || r.bottom() > self.height as f64 {
                return bad(format!("target leaves the frame at frame {t}: {r}"));
            }
        }
        Ok(())
    }

    fn size_at(&self, t: usize) -> (f64, f64) {
        let s = match self.motion {
            Motion::Zoom { factor, period } => factor.powf(t as f64 / period),
            _ => 1.0,
        };
        (self.target_width * s, self.target_height * s)
    }

    fn center_at(&self, t: usize) -> Point {
        let (cx, cy) = (self.width as f64 / 2.0, self.height as f64 / 2.0);
        let mid = (self.frames - 1) as f64 / 2.0;
        let t = t as f64;
        match self.motion {
            Motion::Linear { vx, vy } => Point::new(cx + vx * (t - mid), cy + vy * (t - mid)),
            Motion::Sinusoid {
                speed,
                amplitude,
                period,
            } => Point::new(cx + speed * (t - mid), cy + amplitude * (2.0 * PI * t / period).sin()),
            Motion::Zoom { .. } => Point::new(cx, cy),
        }
    }

    /// Exact target box at frame `t`.
    pub fn ground_truth(&self, t: usize) -> Rect {
        let (w, h) = self.size_at(t);
        let c = self.center_at(t);
        Rect::new(c.x - w / 2.0, c.y - h / 2.0, w, h)
    }

    fn distractor_box(&self, t: usize) -> Rect {
        let target = self.ground_truth(t);
        let c = target.center();
        let phase = 2.0 * PI * t as f64 / 60.0;
        let center = Point::new(
            c.x + 1.5 * target.width * phase.cos(),
            c.y + 1.2 * target.height * phase.sin(),
        );
        let center = Point::new(
            center.x.clamp(target.width / 2.0, self.width as f64 - target.width / 2.0),
            center.y.clamp(target.height / 2.0, self.height as f64 - target.height / 2.0),
        );
        Rect::from_center(center, target.width, target.height)
    }
}

type Color = [f64; 3];

struct Scene {
    width: usize,
    height: usize,
    background: Vec<Color>,
    target_cells: Vec<Color>,
    distractor_cells: Vec<Color>,
}

const TEXTURE_CELLS: usize = 4;

fn lattice(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
    (0..w * h).map(|_| rng.random::<f64>()).collect()
}

fn sample_lattice(values: &[f64], lw: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let at = |i: usize, j: usize| values[j * lw + i];
    let top = at(x0, y0) * (1.0 - sx) + at(x0 + 1, y0) * sx;
    let bottom = at(x0, y0 + 1) * (1.0 - sx) + at(x0 + 1, y0 + 1) * sx;
    top * (1.0 - sy) + bottom * sy
}

fn hsv(h: f64, s: f64, v: f64) -> Color {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h6 % 2.0 - 1.0).abs());
    let (r, g, b) = match h6 as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

impl Scene {
    fn new(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Self {
        let (width, height) = (spec.width as usize, spec.height as usize);
        let coarse = 40.0;
        let fine = 9.0;
        let (cw, ch) = ((width as f64 / coarse) as usize + 2, (height as f64 / coarse) as usize + 2);
        let (fw, fh) = ((width as f64 / fine) as usize + 2, (height as f64 / fine) as usize + 2);
        let hue = lattice(rng, cw, ch);
        let light = lattice(rng, cw, ch);
        let grain = lattice(rng, fw, fh);
        let mut background = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
                let hv = sample_lattice(&hue, cw, xf / coarse, yf / coarse);
                let lv = sample_lattice(&light, cw, xf / coarse, yf / coarse);
                let gv = sample_lattice(&grain, fw, xf / fine, yf / fine);
                background.push(hsv(0.25 + 0.3 * hv, 0.35, 0.3 + 0.25 * lv + 0.15 * gv));
            }
        }
        let n = TEXTURE_CELLS * TEXTURE_CELLS;
        let levels: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let palette = |base: f64, spread: f64| -> Vec<Color> {
            levels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let bright = if (i / TEXTURE_CELLS + i % TEXTURE_CELLS) % 2 == 0 { 0.95 } else { 0.55 };
                    hsv(base + spread * l, 0.85, bright)
                })
                .collect()
        };
        for _ in 0..spec.clutter {
            let w = rng.random_range(6.0..36.0);
            let h = rng.random_range(6.0..36.0);
            let x0 = rng.random_range(0.0..width as f64);
            let y0 = rng.random_range(0.0..height as f64);
            let color = hsv(rng.random::<f64>(), rng.random_range(0.2..0.9), rng.random_range(0.15..0.9));
            let (x1, y1) = (((x0 + w) as usize).min(width), ((y0 + h) as usize).min(height));
            for y in y0 as usize..y1 {
                background[y * width + x0 as usize..y * width + x1].fill(color);
            }
        }
        Self {
            width,
            height,
            background,
            target_cells: palette(0.98, 0.12),
            distractor_cells: palette(0.55, 0.12),
        }
    }

    /// Draws a shape into `canvas` with 4x supersampled edges.
    fn draw(&self, canvas: &mut [Color], rect: &Rect, shape: TargetShape, cells: &[Color]) {
        const SUB: [f64; 2] = [0.25, 0.75];
        let x0 = rect.x.floor().max(0.0) as usize;
        let y0 = rect.y.floor().max(0.0) as usize;
        let x1 = (rect.right().ceil() as usize).min(self.width);
        let y1 = (rect.bottom().ceil() as usize).min(self.height);
        for y in y0..y1 {
            for x in x0..x1 {
                let mut acc = [0.0; 3];
                let mut hits = 0;
                for sy in SUB {
                    for sx in SUB {
                        let u = (x as f64 + sx - rect.x) / rect.width;
                        let v = (y as f64 + sy - rect.y) / rect.height;
                        if let Some(c) = shade(shape, cells, u, v) {
                            hits += 1;
                            for k in 0..3 {
                                acc[k] += c[k];
                            }
                        }
                    }
                }
                if hits == 0 {
                    continue;
                }
                let px = &mut canvas[y * self.width + x];
                let cover = hits as f64 / 4.0;
                for k in 0..3 {
                    px[k] = px[k] * (1.0 - cover) + acc[k] / 4.0;
                }
            }
        }
    }
}

fn shade(shape: TargetShape, cells: &[Color], u: f64, v: f64) -> Option<Color> {
    if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
        return None;
    }
    let inside = match shape {
        TargetShape::TexturedSquare => true,
        TargetShape::Ellipse => (2.0 * u - 1.0).powi(2) + (2.0 * v - 1.0).powi(2) <= 1.0,
        TargetShape::LShape => !(u >= 0.5 && v < 0.5),
    };
    if !inside {
        return None;
    }
    let i = (u * TEXTURE_CELLS as f64) as usize;
    let j = (v * TEXTURE_CELLS as f64) as usize;
    Some(cells[j * TEXTURE_CELLS + i])
}

/// Renders the sequence described by `spec`.
pub fn synth_sequence(spec: &SynthSpec) -> Result<Sequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scene = Scene::new(spec, &mut rng);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let gt = spec.ground_truth(t);
        let mut canvas = scene.background.clone();
        if spec.distractor {
            scene.draw(&mut canvas, &spec.distractor_box(t), spec.target, &scene.distractor_cells);
        }
        scene.draw(&mut canvas, &gt, spec.target, &scene.target_cells);
        if let Some(o) = spec.occlusion.filter(|o| (o.start..o.end).contains(&t)) {
            let block = Rect::new(gt.x - 2.0, gt.y - 2.0, gt.width * o.coverage + 2.0, gt.height + 4.0);
            let x0 = block.x.floor().max(0.0) as usize;
            let y0 = block.y.floor().max(0.0) as usize;
            let x1 = (block.right().ceil() as usize).min(scene.width);
            let y1 = (block.bottom().ceil() as usize).min(scene.height);
            for y in y0..y1 {
                let row = y * scene.width;
                canvas[row + x0..row + x1].copy_from_slice(&scene.background[row + x0..row + x1]);
            }
        }
        let sigma = spec.noise_sigma;
        let mut img = RgbImage::new(spec.width, spec.height);
        for (px, c) in img.pixels_mut().zip(&canvas) {
            let mut out = [0u8; 3];
            for k in 0..3 {
                let n = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                out[k] = (c[k] + n).round().clamp(0.0, 255.0) as u8;
            }
            *px = Rgb(out);
        }
        frames.push(img);
        ground_truth.push(gt);
    }
    Sequence::new(spec.name.clone(), Frames::Memory(frames), ground_truth)
}

impl SynthSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// The five-sequence end-to-end suite: linear, sinusoid, zoom, L-shape and
/// distractor scenes, 100 frames of 640x480 each.
pub fn standard_suite(seed: u64) -> Vec<SynthSpec> {
    let base = SynthSpec {
        noise_sigma: 3.0,
        ..SynthSpec::default()
    };
    vec![
        SynthSpec {
            name: "linear".into(),
            motion: Motion::Linear { vx: 5.0, vy: 0.0 },
            seed,
            ..base.clone()
        },
        SynthSpec {
            name: "sinusoid".into(),
            motion: Motion::Sinusoid {
                speed: 3.0,
                amplitude: 60.0,
                period: 40.0,
            },
            seed: seed.wrapping_add(1),
            ..base.clone()
        },
        SynthSpec {
            name: "zoom".into(),
            motion: Motion::Zoom {
                factor: 1.1,
                period: 10.0,
            },
            target: TargetShape::Ellipse,
            seed: seed.wrapping_add(2),
            ..base.clone()
        },
        SynthSpec {
            name: "lshape".into(),
            motion: Motion::Sinusoid {
                speed: 3.0,
                amplitude: 40.0,
                period: 50.0,
            },
            target: TargetShape::LShape,
            target_width: 56.0,
            target_height: 56.0,
            seed: seed.wrapping_add(3),
            ..base.clone()
        },
        SynthSpec {
            name: "distractor".into(),
            motion: Motion::Linear { vx: 3.0, vy: 1.0 },
            distractor: true,
            seed: seed.wrapping_add(4),
            ..base
        },
    ]
}

/// Background clutter of the ablation scenes.
pub const ABLATION_CLUTTER: usize = 300;

/// Sequences that stress non-rectangular targets and look-alike distractors:
/// the L-shape, distractor and combined scenes over a cluttered background,
/// each rendered from two seeds.
pub fn ablation_suite(seed: u64) -> Vec<SynthSpec> {
    let standard = standard_suite(seed);
    let pick = |name: &str| standard.iter().find(|s| s.name == name).cloned().expect("standard scene");
    let combined = SynthSpec {
        name: "lshape-distractor".into(),
        motion: Motion::Linear { vx: 4.0, vy: -1.0 },
        target: TargetShape::LShape,
        target_width: 56.0,
        target_height: 56.0,
        distractor: true,
        noise_sigma: 3.0,
        seed: seed.wrapping_add(5),
        ..SynthSpec::default()
    };
    let scenes = [pick("lshape"), pick("distractor"), combined];
    let mut suite = Vec::with_capacity(2 * scenes.len());
    for round in 0..2u64 {
        for scene in &scenes {
            suite.push(SynthSpec {
                name: format!("{}-{}", scene.name, round + 1),
                clutter: ABLATION_CLUTTER,
                seed: scene.seed.wrapping_add(100 * round),
                ..scene.clone()
            });
        }
    }
    suite
}
