//! Standard normal prior, identity operator, Gaussian noise. The posterior
//! mean is y / (1 + sigma^2), so every guided sampler can be scored exactly.

use dpscm::craft::{make_measurement_model, CovarianceMode, CraftMode};
use dpscm::diagnostics::DiagnosticsConfig;
use dpscm::operators::{ForwardOperator, NoiseModel};
use dpscm::samplers::{run, Method, Problem, SamplerConfig};
use dpscm::schedule::NoiseSchedule;
use dpscm::score::{GmmPrior, ScoreModel};
use dpscm::{Shape, Signal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dpscm::Result<()> {
    let shape = Shape::vector(16);
    let sigma = 0.05;
    let noise = NoiseModel::gaussian(sigma)?;
    let schedule = NoiseSchedule::default();
    let model: ScoreModel = GmmPrior::standard_normal(shape).into();
    let op = ForwardOperator::identity(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let truth = Signal::randn(shape, &mut rng);
    let y = op.degrade(&noise, &truth, &mut rng)?;
    let craft = make_measurement_model(&model, &op, &noise, CraftMode::Auto, CovarianceMode::Isotropic)?;
    let problem = Problem { schedule: &schedule, x_model: &model, y_model: Some(&craft.model), op: &op, y: &y };
    let target = y.scaled(1.0 / (1.0 + sigma * sigma));

    let runs = 100;
    println!("method   rmse_to_posterior_mean  ({runs} runs, dim {})", shape.len());
    for method in [Method::Dps, Method::DpsCm, Method::DpsYt] {
        let mut mean = Signal::zeros(shape);
        for seed in 0..runs {
            let config = SamplerConfig::new(method).zeta(0.05).omega(0.05).mu(0.5).seed(seed);
            mean.axpy(1.0 / runs as f64, &run(&config, &problem, &DiagnosticsConfig::off())?.x0);
        }
        let rmse = (mean.sub(&target).norm_sq() / shape.len() as f64).sqrt();
        println!("{:<8} {rmse:.4}", method.name());
    }
    Ok(())
}
