//! Follow the crafted measurement of one deblur run: how far its Tweedie
//! estimate sits from the observed measurement as t runs down to 1.

use dpscm::diagnostics::DiagnosticsConfig;
use dpscm::harness::dataset::synthetic_corpus;
use dpscm::operators::{ForwardOperator, NoiseModel, OperatorKind, OperatorSpec};
use dpscm::samplers::{run, Method, Problem, SamplerConfig};
use dpscm::schedule::NoiseSchedule;
use dpscm::score::{EmpiricalPrior, ScoreModel};
use dpscm::Shape;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dpscm::Result<()> {
    let omega: f64 = std::env::args().nth(1).map_or(Ok(13.0), |a| a.parse()).expect("omega must be a number");
    let side = 32;
    let shape = Shape::new(side, side, 1);
    let prior: ScoreModel = EmpiricalPrior::new(synthetic_corpus(7, 0, 64, side))?.into();
    let truth = &synthetic_corpus(7, 1000, 1, side)[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = ForwardOperator::new(OperatorSpec::default_for(OperatorKind::GaussianBlur, side), shape, &mut rng)?;
    let y = op.degrade(&NoiseModel::gaussian(0.05)?, truth, &mut rng)?;
    let schedule = NoiseSchedule::default();
    let problem = Problem { schedule: &schedule, x_model: &prior, y_model: Some(&prior), op: &op, y: &y };
    let config = SamplerConfig::new(Method::DpsCm).zeta(1.8).omega(omega).mu(0.5).seed(0);
    let out = run(&config, &problem, &DiagnosticsConfig::every(50, side).with_truth(truth.clone()))?;

    println!("omega {omega}, |y| = {:.3}", y.norm());
    println!("{:>5} {:>14} {:>14}", "t", "|y0hat - y|/|y|", "|y - A x0hat|");
    for row in &out.record.rows {
        println!("{:>5} {:>14.4} {:>14.4}", row.t, row.craft_gap.unwrap_or(f64::NAN) / y.norm(), row.residual);
    }
    Ok(())
}
