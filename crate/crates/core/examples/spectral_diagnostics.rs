//! High/low frequency magnitude ratio on white noise, smooth images and
//! their blurred versions, at the cutoff used for 32x32 runs.

use dpscm::diagnostics::{default_cutoff, freq_ratio};
use dpscm::harness::dataset::synthetic_corpus;
use dpscm::operators::{ForwardOperator, OperatorKind, OperatorSpec};
use dpscm::{Shape, Signal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dpscm::Result<()> {
    let side = 32;
    let shape = Shape::new(side, side, 1);
    let cutoff = default_cutoff(side);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 2000;
    let white: f64 = (0..draws).map(|_| freq_ratio(&Signal::randn(shape, &mut rng), cutoff).unwrap()).sum::<f64>() / draws as f64;
    println!("cutoff {cutoff} cycles/image");
    println!("white noise mean ratio   {white:.4}");

    let blur = ForwardOperator::new(OperatorSpec::default_for(OperatorKind::GaussianBlur, side), shape, &mut rng)?;
    for (i, img) in synthetic_corpus(7, 0, 5, side).iter().enumerate() {
        let centered = img.map(|v| v - img.mean());
        let blurred = blur.apply(&centered)?;
        println!(
            "image {i}: ratio {:.4}  blurred {:.4}",
            freq_ratio(&centered, cutoff)?,
            freq_ratio(&blurred, cutoff)?
        );
    }
    Ok(())
}
