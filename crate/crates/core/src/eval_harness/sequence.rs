//! Image sequences with ground truth, on disk or in memory.

use std::borrow::Cow;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::RgbImage;

use crate::error::{Error, Result};
use crate::geometry::Rect;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];
const GROUND_TRUTH_FILES: [&str; 2] = ["groundtruth.txt", "groundtruth_rect.txt"];

#[derive(Debug, Clone)]
pub enum Frames {
    Paths(Vec<PathBuf>),
    Memory(Vec<RgbImage>),
}

#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: Frames,
    pub ground_truth: Vec<Rect>,
}

impl Sequence {
    pub fn new(name: impl Into<String>, frames: Frames, ground_truth: Vec<Rect>) -> Result<Self> {
        let seq = Self {
            name: name.into(),
            frames,
            ground_truth,
        };
        if seq.len() != seq.ground_truth.len() {
            return Err(Error::FrameCountMismatch {
                frames: seq.len(),
                ground_truth: seq.ground_truth.len(),
            });
        }
        if let Some(first) = seq.ground_truth.first() {
            if !first.is_finite() || first.area() <= 0.0 {
                return Err(Error::DegenerateBBox(format!("first ground-truth box {first}")));
            }
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Paths(p) => p.len(),
            Frames::Memory(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frame `index`, decoding it from disk when needed.
    pub fn frame(&self, index: usize) -> Result<Cow<'_, RgbImage>> {
        match &self.frames {
            Frames::Memory(m) => Ok(Cow::Borrowed(&m[index])),
            Frames::Paths(p) => {
                let path = &p[index];
                let img = image::open(path).map_err(|e| Error::image(path, e))?;
                Ok(Cow::Owned(img.to_rgb8()))
            }
        }
    }

    /// Writes `img/NNNN.png` and a one-based `groundtruth.txt` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let img_dir = dir.join("img");
        fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
        for i in 0..self.len() {
            let path = img_dir.join(format!("{:04}.png", i + 1));
            self.frame(i)?.save(&path).map_err(|e| Error::image(&path, e))?;
        }
        let gt_path = dir.join(GROUND_TRUTH_FILES[0]);
        let mut out = fs::File::create(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
        let mut text = String::new();
        for r in &self.ground_truth {
            text.push_str(&format!("{},{},{},{}\n", r.x + 1.0, r.y + 1.0, r.width, r.height));
        }
        out.write_all(text.as_bytes()).map_err(|e| Error::io(&gt_path, e))
    }
}

/// Parses one ground-truth line: four values `x,y,w,h` with a one-based
/// origin, or eight polygon coordinates reduced to their bounds.
pub fn parse_ground_truth_line(line: &str) -> Option<Rect> {
    let values: Vec<f64> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    match values.len() {
        4 => Some(Rect::new(values[0] - 1.0, values[1] - 1.0, values[2], values[3])),
        8 => {
            let xs = values.iter().step_by(2);
            let ys = values.iter().skip(1).step_by(2);
            let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
        }
        _ => None,
    }
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<Rect>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rect = parse_ground_truth_line(line).ok_or_else(|| Error::UnparseableLine {
            path: path.to_path_buf(),
            line: i + 1,
            content: line.to_string(),
        })?;
        boxes.push(rect);
    }
    Ok(boxes)
}

pub fn find_ground_truth(dir: &Path) -> Option<PathBuf> {
    GROUND_TRUTH_FILES.iter().map(|f| dir.join(f)).find(|p| p.is_file())
}

/// Sorted image files of a sequence: `img/` when present, else the directory
/// itself.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let img_dir = dir.join("img");
    let source = if img_dir.is_dir() { img_dir } else { dir.to_path_buf() };
    let entries = fs::read_dir(&source).map_err(|e| Error::io(&source, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&source, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image {
            frames.push(path);
        }
    }
    frames.sort();
    Ok(frames)
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into())
}

pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let gt_path = find_ground_truth(dir).ok_or_else(|| Error::MissingGroundTruth(dir.join(GROUND_TRUTH_FILES[0])))?;
    let ground_truth = load_ground_truth(&gt_path)?;
    let frames = list_frames(dir)?;
    Sequence::new(dir_name(dir), Frames::Paths(frames), ground_truth)
}

/// Frames of a sequence directory without ground truth; used when the
/// initial box comes from elsewhere.
pub fn load_frames_only(dir: &Path) -> Result<Sequence> {
    let frames = list_frames(dir)?;
    Ok(Sequence {
        name: dir_name(dir),
        frames: Frames::Paths(frames),
        ground_truth: Vec::new(),
    })
}

/// A single sequence directory, or every sequence directory directly inside
/// `root`, sorted by name.
pub fn discover_sequences(root: &Path) -> Result<Vec<PathBuf>> {
    if find_ground_truth(root).is_some() {
        return Ok(vec![root.to_path_buf()]);
    }
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() && find_ground_truth(&path).is_some() {
            dirs.push(path);
        }
    }
    if dirs.is_empty() {
        return Err(Error::MissingGroundTruth(root.join(GROUND_TRUTH_FILES[0])));
    }
    dirs.sort();
    Ok(dirs)
}
