//! Command-line interface: `track`, `eval`, `ablate` and `synth`.
//!
//! Exit codes: 0 on success, 2 for I/O and data errors, 3 for configuration
//! errors, 1 for anything else.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval_harness::report::{summary_csv, write_json, write_report_files, write_text};
use crate::eval_harness::sequence::{find_ground_truth, load_frames_only};
use crate::eval_harness::{
    ablation_csv, ablation_run, ablation_suite, aggregate, discover_sequences, load_sequence, run_protocol,
    standard_suite, synth_sequence, with_jobs, EvalReport, Motion, Occlusion, Protocol, ResetSettings, Sequence,
    SynthSpec, TargetShape,
};
use crate::geometry::Rect;
use crate::tracker::{colorname_table, Tracker, TrackerConfig, Variant};

/// Reference throughput of the original implementation, frames per second.
pub const REFERENCE_FPS: f64 = 13.0;

#[derive(Debug, Parser)]
#[command(name = "csrdcf", version, about = "Correlation filter tracking with channel and spatial reliability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one sequence and write its trajectory and telemetry.
    Track(TrackArgs),
    /// Evaluate sequences under the one-pass or reset protocol.
    Eval(EvalArgs),
    /// Compare the five reliability variants.
    Ablate(AblateArgs),
    /// Render a synthetic sequence in the harness layout.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML file with tracker parameters; unnamed fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set eta=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Reliability variant: CSR, CuSR, CSuR, CuSuR or DCF.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Initial box `x,y,w,h` in zero-based pixels; defaults to the first
    /// ground-truth box.
    #[arg(long, value_name = "X,Y,W,H")]
    pub init: Option<String>,
    /// Write the prior, likelihood, posterior and mask of every frame.
    #[arg(long)]
    pub dump_maps: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SequenceSetArgs {
    /// A sequence directory or a directory of sequences. Repeatable.
    #[arg(long)]
    pub seq: Vec<PathBuf>,
    /// Evaluate the built-in synthetic suite rendered from `--seed`.
    #[arg(long)]
    pub suite: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Frames between a failure and re-initialization.
    #[arg(long, default_value_t = crate::eval_harness::protocol::DEFAULT_REINIT_GAP)]
    pub reinit_gap: usize,
    /// Tracked frames after each re-initialization left out of accuracy.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub set: SequenceSetArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "ope")]
    pub protocol: String,
    /// Also write a timing report with mean frames per second.
    #[arg(long)]
    pub fps: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub set: SequenceSetArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// TOML spec file; flags given alongside it override its values.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Write the standard synthetic suite, one directory per sequence.
    #[arg(long)]
    pub suite: bool,
    #[arg(long)]
    pub name: Option<String>,
    /// linear, sinusoid or zoom.
    #[arg(long)]
    pub motion: Option<String>,
    /// textured-square, ellipse or l-shape.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Frame size `WxH`.
    #[arg(long, value_name = "WxH")]
    pub size: Option<String>,
    /// Target size `WxH`.
    #[arg(long, value_name = "WxH")]
    pub target_size: Option<String>,
    #[arg(long)]
    pub distractor: bool,
    /// Occluded frames `START:END`, zero-based and end-exclusive.
    #[arg(long, value_name = "START:END")]
    pub occlusion: Option<String>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Number of solid rectangles scattered over the background.
    #[arg(long)]
    pub clutter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Record of one invocation, written next to its results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub git_revision: Option<String>,
    pub seed: u64,
    pub config: Option<TrackerConfig>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: f64,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, seed: u64, config: Option<TrackerConfig>) -> Self {
        Self {
            command: command.into(),
            args: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").into(),
            git_revision: git_revision(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            wall_time_s: 0.0,
            notes: Vec::new(),
        }
    }

    fn finish(mut self, out: &Path, started: Instant) -> Result<()> {
        let path = out.join("manifest.json");
        self.outputs.push(path.clone());
        self.wall_time_s = started.elapsed().as_secs_f64();
        write_json(&path, &self)
    }
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_config_error() => 3,
        Error::Io { .. }
        | Error::Image { .. }
        | Error::Json(_)
        | Error::UnparseableLine { .. }
        | Error::FrameCountMismatch { .. }
        | Error::TableMissing(_) => 2,
        _ => 1,
    }
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::MissingGroundTruth(_) = e {
                eprintln!("hint: add a groundtruth.txt or pass --init x,y,w,h");
            }
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track(a) => cmd_track(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Defaults, then the config file, then `--set` overrides, then `--variant`.
pub fn resolve_config(args: &ConfigArgs) -> Result<TrackerConfig> {
    let mut table = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for item in &args.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.trim().to_string(), parsed);
    }
    let mut config = TrackerConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(v) = &args.variant {
        config = config.with_variant(v.parse::<Variant>()?);
    }
    config.validate()?;
    Ok(config)
}

pub fn parse_rect(text: &str) -> Result<Rect> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("expected x,y,w,h, got {text:?}")))?;
    match values[..] {
        [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
        _ => Err(Error::Config(format!("expected four values x,y,w,h, got {text:?}"))),
    }
}

fn parse_size(text: &str) -> Result<(f64, f64)> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::InvalidSpec(format!("expected WxH, got {text:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidSpec(format!("expected WxH, got {text:?}")))
    };
    Ok((parse(w)?, parse(h)?))
}

/// Per-frame output of `track`. Holds no timings so reruns are identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub sequence: String,
    pub init: Rect,
    pub boxes: Vec<Rect>,
}

fn cmd_track(args: &TrackArgs) -> Result<()> {
    let started = Instant::now();
    let config = resolve_config(&args.config)?;
    let (init, sequence) = match &args.init {
        Some(text) => {
            let init = parse_rect(text)?;
            let seq = if find_ground_truth(&args.seq).is_some() {
                load_sequence(&args.seq)?
            } else {
                load_frames_only(&args.seq)?
            };
            (init, seq)
        }
        None => {
            let seq = load_sequence(&args.seq)?;
            (seq.ground_truth[0], seq)
        }
    };
    if sequence.is_empty() {
        return Err(Error::Config(format!("no images found in {}", args.seq.display())));
    }
    let mut manifest = RunManifest::new("track", args.seed, Some(config.clone()));
    manifest.inputs.push(args.seq.clone());
    let (table, table_err) = colorname_table(&config);
    if let Some(e) = table_err {
        manifest.notes.push(format!("built-in colorname table used: {e}"));
        eprintln!("warning: built-in colorname table used: {e}");
    }
    let maps_dir = args.out.join("maps");
    let mut tracker = Tracker::init_with_table(&*sequence.frame(0)?, init, &config, table)?;
    let mut boxes = vec![init];
    let mut telemetry = Vec::with_capacity(sequence.len());
    let dump = |tracker: &Tracker, i: usize| -> Result<()> {
        if let Some(panels) = tracker.last_panels() {
            panels.save_png(&maps_dir.join(format!("{:04}.png", i + 1)))?;
        }
        Ok(())
    };
    if args.dump_maps {
        std::fs::create_dir_all(&maps_dir).map_err(|e| Error::io(&maps_dir, e))?;
        dump(&tracker, 0)?;
    }
    for i in 1..sequence.len() {
        let (bbox, t) = tracker.track(&*sequence.frame(i)?)?;
        boxes.push(bbox);
        telemetry.push(t);
        if args.dump_maps {
            dump(&tracker, i)?;
        }
    }
    let trajectory_path = args.out.join("trajectory.json");
    write_json(
        &trajectory_path,
        &TrackOutput {
            sequence: sequence.name.clone(),
            init,
            boxes,
        },
    )?;
    let telemetry_path = args.out.join("telemetry.json");
    write_json(&telemetry_path, &telemetry)?;
    manifest.outputs.extend([trajectory_path, telemetry_path]);
    if args.dump_maps {
        manifest.outputs.push(maps_dir);
    }
    manifest.finish(&args.out, started)
}

fn load_set(set: &SequenceSetArgs, specs: fn(u64) -> Vec<SynthSpec>) -> Result<(Vec<Sequence>, Vec<PathBuf>)> {
    let mut sequences = Vec::new();
    let mut inputs = Vec::new();
    for root in &set.seq {
        for dir in discover_sequences(root)? {
            sequences.push(load_sequence(&dir)?);
            inputs.push(dir);
        }
    }
    if set.suite {
        for spec in specs(set.seed) {
            sequences.push(synth_sequence(&spec)?);
        }
    }
    if sequences.is_empty() {
        return Err(Error::Config("no sequences given; pass --seq <dir> or --suite".into()));
    }
    Ok((sequences, inputs))
}

#[derive(Debug, Serialize)]
struct TimingReport {
    per_sequence: Vec<(String, f64)>,
    mean_fps: f64,
    reference_fps: f64,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let started = Instant::now();
    let config = resolve_config(&args.config)?;
    let protocol: Protocol = args.protocol.parse()?;
    let settings = ResetSettings {
        reinit_gap: args.set.reinit_gap,
        burn_in: args.set.burn_in,
    };
    let (sequences, inputs) = load_set(&args.set, standard_suite)?;
    let mut manifest = RunManifest::new("eval", args.set.seed, Some(config.clone()));
    manifest.inputs = inputs;
    let results = with_jobs(args.set.jobs, || {
        sequences
            .par_iter()
            .map(|seq| run_protocol(&config, seq, protocol, settings))
            .collect::<Result<Vec<_>>>()
    })??;
    let reports: Vec<EvalReport> = results.iter().map(|(_, r, _)| r.clone()).collect();
    for (traj, report, _) in &results {
        write_report_files(&args.out.join("reports"), report)?;
        write_json(&args.out.join("trajectories").join(format!("{}.json", traj.sequence)), traj)?;
    }
    let mut rows = reports.clone();
    if let Some(all) = aggregate(&reports) {
        write_report_files(&args.out.join("reports"), &all)?;
        rows.push(all);
    }
    let summary = args.out.join("summary.csv");
    write_text(&summary, &summary_csv(&rows))?;
    print!("{}", summary_csv(&rows));
    manifest
        .outputs
        .extend([summary, args.out.join("reports"), args.out.join("trajectories")]);
    if args.fps {
        let per_sequence: Vec<(String, f64)> = reports.iter().map(|r| (r.sequence.clone(), r.fps)).collect();
        let mean_fps = per_sequence.iter().map(|(_, f)| f).sum::<f64>() / per_sequence.len() as f64;
        let timing = TimingReport {
            per_sequence,
            mean_fps,
            reference_fps: REFERENCE_FPS,
        };
        let path = args.out.join("timing.json");
        write_json(&path, &timing)?;
        println!("mean fps {mean_fps:.1} (reference implementation: {REFERENCE_FPS} fps on its own hardware)");
        manifest.outputs.push(path);
    }
    manifest.finish(&args.out, started)
}

fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let started = Instant::now();
    let config = resolve_config(&args.config)?;
    let settings = ResetSettings {
        reinit_gap: args.set.reinit_gap,
        burn_in: args.set.burn_in,
    };
    let (sequences, inputs) = load_set(&args.set, ablation_suite)?;
    let mut manifest = RunManifest::new("ablate", args.set.seed, Some(config.clone()));
    manifest.inputs = inputs;
    let rows = with_jobs(args.set.jobs, || ablation_run(&config, &sequences, &Variant::ALL, settings))??;
    let csv_path = args.out.join("ablation.csv");
    let json_path = args.out.join("ablation.json");
    write_text(&csv_path, &ablation_csv(&rows))?;
    write_json(&json_path, &rows)?;
    print!("{}", ablation_csv(&rows));
    manifest.outputs.extend([csv_path, json_path]);
    manifest.finish(&args.out, started)
}

fn parse_motion(name: &str) -> Result<Motion> {
    match name.to_ascii_lowercase().as_str() {
        "linear" => Ok(Motion::Linear { vx: 5.0, vy: 0.0 }),
        "sinusoid" => Ok(Motion::Sinusoid {
            speed: 3.0,
            amplitude: 60.0,
            period: 40.0,
        }),
        "zoom" => Ok(Motion::Zoom {
            factor: 1.1,
            period: 10.0,
        }),
        _ => Err(Error::InvalidSpec(format!("unknown motion {name:?}; expected linear, sinusoid or zoom"))),
    }
}

fn parse_target(name: &str) -> Result<TargetShape> {
    match name.to_ascii_lowercase().as_str() {
        "textured-square" | "square" => Ok(TargetShape::TexturedSquare),
        "ellipse" => Ok(TargetShape::Ellipse),
        "l-shape" | "lshape" => Ok(TargetShape::LShape),
        _ => Err(Error::InvalidSpec(format!(
            "unknown target {name:?}; expected textured-square, ellipse or l-shape"
        ))),
    }
}

/// Spec file (or defaults) with every given flag applied on top.
pub fn resolve_spec(args: &SynthArgs) -> Result<SynthSpec> {
    let mut spec = match &args.spec {
        Some(path) => SynthSpec::from_file(path)?,
        None => SynthSpec::default(),
    };
    if let Some(name) = &args.name {
        spec.name = name.clone();
    }
    if let Some(m) = &args.motion {
        spec.motion = parse_motion(m)?;
    }
    if let Some(t) = &args.target {
        spec.target = parse_target(t)?;
    }
    if let Some(n) = args.frames {
        spec.frames = n;
    }
    if let Some(s) = &args.size {
        let (w, h) = parse_size(s)?;
        if w.fract() != 0.0 || h.fract() != 0.0 || w < 1.0 || h < 1.0 {
            return Err(Error::InvalidSpec(format!("frame size must be whole pixels, got {s:?}")));
        }
        spec.width = w as u32;
        spec.height = h as u32;
    }
    if let Some(s) = &args.target_size {
        (spec.target_width, spec.target_height) = parse_size(s)?;
    }
    if args.distractor {
        spec.distractor = true;
    }
    if let Some(o) = &args.occlusion {
        let bad = || Error::InvalidSpec(format!("expected START:END, got {o:?}"));
        let (a, b) = o.split_once(':').ok_or_else(bad)?;
        spec.occlusion = Some(Occlusion {
            start: a.trim().parse().map_err(|_| bad())?,
            end: b.trim().parse().map_err(|_| bad())?,
            coverage: 0.5,
        });
    }
    if let Some(n) = args.noise {
        spec.noise_sigma = n;
    }
    if let Some(n) = args.clutter {
        spec.clutter = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let started = Instant::now();
    let seed = args.seed.unwrap_or(0);
    let mut manifest = RunManifest::new("synth", seed, None);
    let specs = if args.suite {
        standard_suite(seed)
    } else {
        vec![resolve_spec(args)?]
    };
    for spec in &specs {
        let dir = if args.suite { args.out.join(&spec.name) } else { args.out.clone() };
        synth_sequence(spec)?.save(&dir)?;
        write_text(&dir.join("spec.toml"), &toml::to_string(spec).map_err(|e| Error::InvalidSpec(e.to_string()))?)?;
        manifest.outputs.push(dir);
    }
    if let Some(p) = &args.spec {
        manifest.inputs.push(p.clone());
    }
    manifest.finish(&args.out, started)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_args(overrides: &[&str]) -> ConfigArgs {
        ConfigArgs {
            config: None,
            overrides: overrides.iter().map(|s| s.to_string()).collect(),
            variant: None,
        }
    }

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "eta = 0.05\neta_c = 0.1\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            overrides: vec!["eta=0.07".into()],
            variant: Some("dcf".into()),
        };
        let c = resolve_config(&args).unwrap();
        assert_eq!((c.eta, c.eta_c, c.lambda), (0.07, 0.1, 0.01));
        assert!(!c.use_spatial_mask && !c.use_channel_reliability);
        assert_eq!(resolve_config(&config_args(&[])).unwrap(), TrackerConfig::default());
    }

    #[test]
    fn bad_config_is_exit_three() {
        let err = resolve_config(&config_args(&["etta=1"])).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        let err = resolve_config(&config_args(&["eta"])).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        assert_eq!(exit_code(&Error::io("x", std::io::Error::other("boom"))), 2);
    }

    #[test]
    fn rect_and_size_parsing() {
        assert_eq!(parse_rect("1, 2,3,4").unwrap(), Rect::new(1.0, 2.0, 3.0, 4.0));
        assert!(parse_rect("1,2,3").is_err());
        assert_eq!(parse_size("640x480").unwrap(), (640.0, 480.0));
        assert!(parse_size("640").is_err());
    }
}
