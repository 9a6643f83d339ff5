//! Print a few rows of the default linear schedule next to the posterior
//! variance alternative.

use dpscm::schedule::{NoiseSchedule, SigmaMode, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS};

fn main() -> dpscm::Result<()> {
    let simple = NoiseSchedule::default();
    let posterior =
        NoiseSchedule::linear_with(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END, SigmaMode::Posterior, true)?;
    println!("{:>5} {:>10} {:>12} {:>10} {:>10}", "t", "beta", "alpha_bar", "sigma", "sigma_post");
    for t in [1, 2, 10, 100, 250, 500, 750, 900, 1000] {
        println!(
            "{t:>5} {:>10.6} {:>12.6e} {:>10.6} {:>10.6}",
            simple.beta(t),
            simple.alpha_bar(t),
            simple.sigma(t),
            posterior.sigma(t)
        );
    }
    Ok(())
}
