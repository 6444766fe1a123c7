//! Learns a mask-constrained filter and compares it with the unconstrained
//! ridge solution.

use csrdcf::features::{ChannelKind, FeatureStack};
use csrdcf::filter_learn::{learn_closed_form, learn_constrained_traced, make_desired_response, training_loss, AdmmParams};
use csrdcf::spectral::RealGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> csrdcf::Result<()> {
    let (w, h) = (24, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = RealGrid::from_fn(w, h, |_, _| rng.random::<f64>() - 0.5);
    let stack = FeatureStack {
        channels: vec![f.clone()],
        kinds: vec![ChannelKind::Gray],
        cell_size: 1,
    };
    let g = make_desired_response((w, h), 2.0)?;
    let mask = RealGrid::from_fn(w, h, |x, y| {
        let near = |v: usize, n: usize| v.min(n - v) <= 6;
        if near(x, w) && near(y, h) { 1.0 } else { 0.0 }
    });

    let params = AdmmParams::default();
    let (constrained, traces) = learn_constrained_traced(&stack, &g, &mask, &params, None)?;
    let h_c = &constrained.channels[0].h;
    let outside = h_c
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(v, m)| **m == 0.0 && **v != 0.0)
        .count();
    println!("residuals per iteration: {:?}", traces[0].residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>());
    println!("transforms per iteration: {}", traces[0].transforms.total() as usize / params.iterations);
    println!("nonzero taps outside the mask: {outside}");

    let lambda = params.lambda / (2.0 * (w * h) as f64);
    let free = learn_closed_form(&stack, &g, lambda)?;
    println!(
        "training loss: constrained {:.4}, unconstrained {:.4}",
        training_loss(&f, h_c, &g.g)?,
        training_loss(&f, &free.channels[0].h, &g.g)?
    );
    Ok(())
}
