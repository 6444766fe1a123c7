//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use csrdcf::channel_reliability::{detection_reliability, learning_reliability};
use csrdcf::eval_harness::metrics::{auc, curve_at, success_curve};
use csrdcf::eval_harness::{
    ablation_suite, run_protocol, run_reset, standard_suite, synth_sequence, FrameStatus, Frames, Protocol,
    ResetSettings, ScriptedTracker, Sequence, Trajectory,
};
use csrdcf::features::{ChannelKind, FeatureStack};
use csrdcf::filter_learn::{
    closed_form_channel, learn_closed_form, learn_constrained, learn_constrained_traced, make_desired_response,
    solve_h, solve_hc, training_loss, AdmmParams,
};
use csrdcf::reliability_map::spatial_prior;
use csrdcf::spectral::{circular_correlate, dft2, idft2, Complex64, RealGrid, SpectralGrid};
use csrdcf::tracker::{TrackerConfig, Variant};
use csrdcf::Rect;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RealGrid {
    RealGrid::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RealGrid {
    let m = RealGrid::from_fn(w, h, |_, _| rng.random_bool(0.5) as u8 as f64);
    if m.sum() == 0.0 {
        RealGrid::filled(w, h, 1.0)
    } else {
        m
    }
}

fn single(channel: RealGrid) -> FeatureStack {
    FeatureStack {
        channels: vec![channel],
        kinds: vec![ChannelKind::Gray],
        cell_size: 1,
    }
}

fn naive_dft(x: &RealGrid) -> SpectralGrid {
    let (w, h) = x.dims();
    let mut out = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for xx in 0..w {
                    let phase = -2.0 * std::f64::consts::PI * ((u * xx) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    acc += Complex64::from_polar(x.get(xx, y), phase);
                }
            }
            out.push(acc);
        }
    }
    SpectralGrid::from_vec(w, h, out)
}

fn brute_correlate(f: &RealGrid, h: &RealGrid) -> RealGrid {
    let (w, hh) = f.dims();
    RealGrid::from_fn(w, hh, |x, y| {
        let mut acc = 0.0;
        for v in 0..hh {
            for u in 0..w {
                acc += f.get((u + x) % w, (v + y) % hh) * h.get(u, v);
            }
        }
        acc
    })
}

fn spectral_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut corr_err, mut trip_err, mut dft_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let f = random_grid(&mut rng, w, h);
        let k = random_grid(&mut rng, w, h);
        let fast = circular_correlate(&f, &k).unwrap();
        let slow = brute_correlate(&f, &k);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            corr_err = corr_err.max((a - b).abs());
        }
        let spectrum = dft2(&f);
        let reference = naive_dft(&f);
        dft_err = dft_err.max(spectrum.distance(&reference).unwrap() / reference.norm_sq().sqrt().max(1e-300));
        let back = idft2(&spectrum).unwrap();
        let num: f64 = back.as_slice().iter().zip(f.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        trip_err = trip_err.max((num / f.norm_sq().max(1e-300)).sqrt());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        corr_err < 1e-8 && trip_err < 1e-10 && dft_err < 1e-10 && secs < 10.0,
        format!(
            "correlation err {corr_err:.2e}, round trip rel {trip_err:.2e}, DFT vs direct sum rel {dft_err:.2e}, {secs:.2}s"
        ),
    )
}

fn closed_form_residual() -> Outcome {
    let mut worst = 0.0f64;
    let g = make_desired_response((8, 8), 1.0).unwrap();
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_grid(&mut rng, 8, 8);
        let lambda = rng.random_range(0.001..1.0);
        let filter = learn_closed_form(&single(f.clone()), &g, lambda).unwrap();
        let f_hat = dft2(&f);
        for i in 0..f_hat.len() {
            let fv = f_hat.as_slice()[i];
            let h = filter.channels[0].h_hat.as_slice()[i];
            let residual = (fv.norm_sqr() + lambda) * h - fv * g.g_hat.as_slice()[i].conj();
            worst = worst.max(residual.norm());
        }
    }
    outcome(worst < 1e-10, format!("max normal-equation residual {worst:.2e} over 50 problems"))
}

/// Worst relative training-loss excess of 20-iteration ADMM over the matched
/// closed form, with an all-ones mask.
fn worst_admm_excess(params: &AdmmParams) -> f64 {
    let g = make_desired_response((16, 16), 1.5).unwrap();
    let ones = RealGrid::filled(16, 16, 1.0);
    let matched = params.lambda / (2.0 * ones.len() as f64);
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let f = random_grid(&mut rng, 16, 16);
        let admm = &learn_constrained(&single(f.clone()), &g, &ones, params, None).unwrap().channels[0].h;
        let h_opt = idft2(&closed_form_channel(&dft2(&f), &g.g_hat, matched).unwrap()).unwrap();
        let loss_admm = training_loss(&f, admm, &g.g).unwrap();
        let loss_opt = training_loss(&f, &h_opt, &g.g).unwrap();
        worst = worst.max((loss_admm - loss_opt) / loss_opt);
    }
    worst
}

fn admm_vs_closed_form() -> Outcome {
    // The optimum nearly interpolates g, so the comparison needs a converged
    // solver: hold the penalty at mu0 instead of tripling it every round.
    let steady = AdmmParams {
        iterations: 20,
        beta: 1.0001,
        ..AdmmParams::default()
    };
    let growing = AdmmParams {
        iterations: 20,
        ..AdmmParams::default()
    };
    let (worst, worst_growing) = (worst_admm_excess(&steady), worst_admm_excess(&growing));
    outcome(
        worst <= 0.02,
        format!(
            "worst relative training-loss excess over 20 problems: {:.3}% at mu0=5, beta=1.0001 ({:.1}% with beta=3)",
            100.0 * worst,
            100.0 * worst_growing
        ),
    )
}

fn constraint_exactness() -> Outcome {
    let mut violations = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let (w, h) = (rng.random_range(4..=16), rng.random_range(4..=16));
        let f = FeatureStack {
            channels: (0..3).map(|_| random_grid(&mut rng, w, h)).collect(),
            kinds: vec![ChannelKind::Gray; 3],
            cell_size: 1,
        };
        let g = make_desired_response((w, h), 1.0).unwrap();
        let m = random_mask(&mut rng, w, h);
        let filter = learn_constrained(&f, &g, &m, &AdmmParams::default(), None).unwrap();
        for c in &filter.channels {
            violations += c
                .h
                .as_slice()
                .iter()
                .zip(m.as_slice())
                .filter(|(v, mv)| **mv == 0.0 && v.to_bits() != 0)
                .count();
        }
    }
    outcome(violations == 0, format!("{violations} nonzero coefficients outside the mask over 100 triples"))
}

fn residual_decay() -> Outcome {
    let mut decayed = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let f = single(random_grid(&mut rng, 16, 16));
        let g = make_desired_response((16, 16), 1.5).unwrap();
        let m = random_mask(&mut rng, 16, 16);
        let params = AdmmParams::default();
        let (_, traces) = learn_constrained_traced(&f, &g, &m, &params, None).unwrap();
        let r = &traces[0].residuals;
        decayed += (r[3] < r[0]) as usize;
    }
    outcome(decayed >= 99, format!("{decayed}/100 trials with residual(4) < residual(1) at mu0=5, beta=3"))
}

/// Augmented Lagrangian with the solver's scaling:
/// `sum |f conj(hc) - g|^2 + lambda/2 ||m h||^2 + 2 Re sum conj(l)(hc - F[m h]) + mu sum |hc - F[m h]|^2`.
#[allow(clippy::too_many_arguments)]
fn lagrangian(
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

fn lagrangian_gradient() -> Outcome {
    let step = 1e-5;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let f_hat = dft2(&random_grid(&mut rng, 4, 4));
        let g_hat = dft2(&random_grid(&mut rng, 4, 4));
        let hm_prev = random_grid(&mut rng, 4, 4);
        let l_hat = dft2(&random_grid(&mut rng, 4, 4));
        let m = random_mask(&mut rng, 4, 4);
        let (mu, lambda) = (rng.random_range(1.0..50.0), 0.01);
        let hc = solve_hc(&f_hat, &g_hat, &dft2(&hm_prev), &l_hat, mu).unwrap();
        let h = solve_h(&hc, &l_hat, &m, mu, lambda).unwrap();
        let ones = RealGrid::filled(4, 4, 1.0);
        for i in 0..16 {
            for delta in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let at = |t: f64| {
                    let mut p = hc.clone();
                    p.as_mut_slice()[i] += delta * t;
                    lagrangian(&f_hat, &g_hat, &p, &hm_prev, &ones, &l_hat, mu, 0.0)
                };
                worst = worst.max(((at(step) - at(-step)) / (2.0 * step)).abs());
            }
            if m.as_slice()[i] != 0.0 {
                let at = |t: f64| {
                    let mut p = h.clone();
                    p.as_mut_slice()[i] += t;
                    lagrangian(&f_hat, &g_hat, &hc, &p, &m, &l_hat, mu, lambda)
                };
                worst = worst.max(((at(step) - at(-step)) / (2.0 * step)).abs());
            }
        }
    }
    outcome(worst < 1e-5, format!("max |finite-difference gradient| {worst:.2e} over 20 problems"))
}

fn transform_budget() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let f = FeatureStack {
        channels: (0..5).map(|_| random_grid(&mut rng, 12, 10)).collect(),
        kinds: vec![ChannelKind::Gray; 5],
        cell_size: 1,
    };
    let g = make_desired_response((12, 10), 1.0).unwrap();
    let m = random_mask(&mut rng, 12, 10);
    let mut pass = true;
    let mut detail = Vec::new();
    for iterations in [1, 4, 7] {
        let params = AdmmParams {
            iterations,
            ..AdmmParams::default()
        };
        let (_, traces) = learn_constrained_traced(&f, &g, &m, &params, None).unwrap();
        for t in &traces {
            pass &= t.transforms.total() == 2 * iterations as u64;
        }
        detail.push(format!("{iterations} it -> {} per channel", traces[0].transforms.total()));
    }
    outcome(pass, detail.join(", "))
}

fn reliability_formulas() -> Outcome {
    let mut twin = RealGrid::zeros(32, 32);
    twin.set(4, 4, 1.0);
    twin.set(20, 20, 1.0);
    let mut lone = RealGrid::zeros(32, 32);
    lone.set(9, 13, 1.0);
    let det = detection_reliability(&[twin, lone]);
    let mut worst = 0.0f64;
    let g = make_desired_response((10, 10), 1.0).unwrap();
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let n = rng.random_range(1..8);
        let f: Vec<RealGrid> = (0..n).map(|_| random_grid(&mut rng, 10, 10)).collect();
        let stack = FeatureStack {
            channels: f.clone(),
            kinds: vec![ChannelKind::Gray; n],
            cell_size: 1,
        };
        let m = random_mask(&mut rng, 10, 10);
        let h = learn_constrained(&stack, &g, &m, &AdmmParams::default(), None).unwrap();
        let w = learning_reliability(&f, &h).unwrap();
        worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        det[0] == 0.5 && det[1] == 1.0 && worst <= 1e-9,
        format!("duplicate peaks {}, lone delta {}, max |sum w - 1| {worst:.1e}", det[0], det[1]),
    )
}

fn prior_values() -> Outcome {
    let prior = spatial_prior((41, 41), &Rect::new(10.5, 10.5, 20.0, 20.0)).unwrap();
    let (center, far) = (prior.get(20, 20), prior.get(0, 0));
    outcome(center == 0.9 && far == 0.5, format!("center {center}, far field {far}"))
}

fn trajectory_json(t: &Trajectory) -> String {
    serde_json::to_string(t).unwrap()
}

struct SuiteRun {
    rows: Vec<(String, f64, usize)>,
    trajectories: Vec<String>,
    fps: Vec<f64>,
    seconds: f64,
}

fn run_standard_suite() -> SuiteRun {
    let start = Instant::now();
    let config = TrackerConfig::default();
    let results: Vec<_> = standard_suite(0)
        .par_iter()
        .map(|spec| {
            let seq = synth_sequence(spec).unwrap();
            let (ope_traj, ope, _) = run_protocol(&config, &seq, Protocol::Ope, ResetSettings::default()).unwrap();
            let (reset_traj, reset, _) = run_protocol(&config, &seq, Protocol::Reset, ResetSettings::default()).unwrap();
            (
                (spec.name.clone(), ope.mean_iou, reset.failures),
                trajectory_json(&ope_traj) + &trajectory_json(&reset_traj),
                ope.fps,
            )
        })
        .collect();
    SuiteRun {
        rows: results.iter().map(|r| r.0.clone()).collect(),
        trajectories: results.iter().map(|r| r.1.clone()).collect(),
        fps: results.iter().map(|r| r.2).collect(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn end_to_end(run: &SuiteRun) -> Outcome {
    let mut pass = run.seconds < 300.0;
    let mut parts = Vec::new();
    for (name, iou, failures) in &run.rows {
        pass &= *iou >= 0.6;
        if name == "linear" || name == "sinusoid" {
            pass &= *failures == 0;
        }
        parts.push(format!("{name} {iou:.3}/{failures}"));
    }
    outcome(
        pass && run.rows.len() == 5,
        format!("mean IoU/reset failures: {}; {:.0}s", parts.join(", "), run.seconds),
    )
}

fn ablation_ordering() -> Outcome {
    let specs = ablation_suite(0);
    let sequences: Vec<Sequence> = specs.iter().map(|s| synth_sequence(s).unwrap()).collect();
    let variants = [Variant::Csr, Variant::CuSuR, Variant::Dcf];
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..sequences.len()).map(move |s| (v, s)))
        .collect();
    let base = TrackerConfig::default();
    let ious: Vec<f64> = jobs
        .par_iter()
        .map(|&(v, s)| {
            let config = base.with_variant(variants[v]);
            run_protocol(&config, &sequences[s], Protocol::Ope, ResetSettings::default())
                .unwrap()
                .1
                .mean_iou
        })
        .collect();
    let n = sequences.len();
    let means: Vec<f64> = (0..variants.len())
        .map(|v| ious[v * n..(v + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    outcome(
        means[0] >= means[1] && means[1] >= means[2],
        format!(
            "over {n} sequences: CSR {:.3}, CuSuR {:.3}, DCF {:.3}",
            means[0], means[1], means[2]
        ),
    )
}

fn metrics_correctness() -> Outcome {
    let ious = [1.0, 0.4, 0.2];
    let curve = success_curve(&ious);
    let at_half = curve_at(&curve, 0.5);
    let area = auc(&curve);
    let mean = ious.iter().sum::<f64>() / 3.0;

    let n = 100;
    let gt: Vec<Rect> = (0..n).map(|i| Rect::new(10.0 + i as f64, 20.0, 30.0, 30.0)).collect();
    let frames = Frames::Memory(vec![image::RgbImage::new(200, 80); n]);
    let seq = Sequence::new("scripted", frames, gt.clone()).unwrap();
    let mut boxes = gt.clone();
    // Frame 30 in one-based numbering.
    boxes[29] = Rect::new(150.0, 0.0, 10.0, 10.0);
    let (traj, report) = run_reset(&mut ScriptedTracker { boxes }, &seq, ResetSettings::default()).unwrap();
    let expected: Vec<usize> = (1..29).chain(35..100).collect();
    let skipped = (30..34).all(|i| traj.status[i] == FrameStatus::Skipped);
    let pass = (at_half - 1.0 / 3.0).abs() < 1e-12
        && (area - mean).abs() <= 0.01
        && report.failures == 1
        && traj.resets == vec![34]
        && traj.accuracy_frames == expected
        && skipped;
    outcome(
        pass,
        format!(
            "success@0.5 {at_half:.4}, AUC {area:.4} vs mean IoU {mean:.4}, failures {}, reinit at frame {}",
            report.failures,
            traj.resets.first().map(|r| r + 1).unwrap_or(0)
        ),
    )
}

fn throughput(run: &SuiteRun) -> Outcome {
    let in_process = run.fps.iter().sum::<f64>() / run.fps.len() as f64;
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_csrdcf"))
        .args(["eval", "--suite", "--fps", "--out"])
        .arg(dir.path())
        .output()
        .expect("binary runs");
    let reported = std::fs::read_to_string(dir.path().join("timing.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v["mean_fps"].as_f64());
    match (out.status.success(), reported) {
        (true, Some(fps)) => outcome(
            true,
            format!("eval --fps reports {fps:.1} fps (in-process {in_process:.1}); reference 13.0 fps, not asserted"),
        ),
        _ => outcome(false, format!("eval --fps failed: {}", String::from_utf8_lossy(&out.stderr))),
    }
}

fn determinism(first: &SuiteRun) -> Outcome {
    let second = run_standard_suite();
    let same = first.trajectories == second.trajectories;
    let bytes: usize = first.trajectories.iter().map(String::len).sum();
    outcome(same, format!("{bytes} bytes of trajectory JSON compared across two runs"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, o: Outcome| {
        println!("[{}] {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    };
    report(1, "spectral oracle equivalence", spectral_oracle());
    report(2, "closed-form correctness", closed_form_residual());
    report(3, "ADMM vs closed form", admm_vs_closed_form());
    report(4, "constraint exactness", constraint_exactness());
    report(5, "ADMM residual decay", residual_decay());
    report(6, "Lagrangian gradient check", lagrangian_gradient());
    report(7, "transform budget", transform_budget());
    report(8, "reliability formulas", reliability_formulas());
    report(9, "spatial prior values", prior_values());
    let suite = run_standard_suite();
    report(10, "synthetic end-to-end", end_to_end(&suite));
    report(11, "ablation ordering", ablation_ordering());
    report(12, "metrics correctness", metrics_correctness());
    report(13, "throughput report", throughput(&suite));
    report(14, "determinism", determinism(&suite));
    if failed == 0 {
        println!("acceptance: all 14 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 14 criteria fail");
        ExitCode::FAILURE
    }
}
