use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dpscm::harness::curves::{compare_curves, Curve};
use dpscm::harness::{run_experiment, write_outputs, ExperimentSpec};
use dpscm::schedule::{NoiseSchedule, SigmaMode, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS};
use dpscm::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "dpscm", version, about = "Diffusion posterior sampling with crafted measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write all outputs.
    Run(RunArgs),
    /// Run an experiment file and write only curves, ratios and the report.
    Diagnose(RunArgs),
    /// Ratio the mean curves of two output directories, method by method.
    Compare { a: PathBuf, b: PathBuf },
    /// Print the noise schedule as CSV.
    ScheduleDump {
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_BETA_START)]
        beta_start: f64,
        #[arg(long, default_value_t = DEFAULT_BETA_END)]
        beta_end: f64,
        /// `simple` (sigma^2 = beta) or `posterior` (beta tilde).
        #[arg(long, default_value = "simple")]
        sigma_mode: String,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(clap::Args)]
struct RunArgs {
    spec: PathBuf,
    /// Output directory; defaults to the `output` key of the experiment file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(args: &RunArgs, curves_only: bool) -> Result<bool> {
    let mut spec = ExperimentSpec::parse(&std::fs::read_to_string(&args.spec)?)?;
    if let Some(j) = args.jobs {
        spec.jobs = j;
    }
    let out = args.output.clone().unwrap_or_else(|| spec.output.clone());
    let report = run_experiment(&spec)?;
    write_outputs(&spec, &report, &out, curves_only)?;
    print!("{}", dpscm::harness::experiment::report_text(&spec, &report));
    eprintln!("wrote {}", out.display());
    if !report.failures.is_empty() {
        eprintln!("{} runs failed; see report.txt", report.failures.len());
    }
    Ok(true)
}

fn load_curves(dir: &Path) -> Result<Vec<Curve>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.join("curves"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Curve::parse_csv(&std::fs::read_to_string(p)?)).collect()
}

fn compare(a: &Path, b: &Path) -> Result<bool> {
    let (ca, cb) = (load_curves(a)?, load_curves(b)?);
    let mut matched = 0;
    println!("label,column,mean_ratio,flagged_rows");
    for x in &ca {
        let Some(y) = cb.iter().find(|c| c.label == x.label) else { continue };
        matched += 1;
        let r = compare_curves(x, y)?;
        let flagged = r.flagged.iter().filter(|f| **f).count();
        for col in ["residual", "recon_mse", "eps_error", "freq_ratio"] {
            let m = r.window_mean(col, 1, usize::MAX).map_or("NA".into(), |v| format!("{v:.6}"));
            println!("{},{col},{m},{flagged}", x.label);
        }
    }
    if matched == 0 {
        return Err(Error::InvalidConfig("the two directories share no method labels".into()));
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(a, false),
        Command::Diagnose(a) => run(a, true),
        Command::Compare { a, b } => compare(a, b),
        Command::ScheduleDump { steps, beta_start, beta_end, sigma_mode } => SigmaMode::parse(sigma_mode)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown sigma mode {sigma_mode:?}")))
            .and_then(|m| NoiseSchedule::linear_with(*steps, *beta_start, *beta_end, m, true))
            .map(|s| {
                print!("{}", s.to_csv());
                true
            }),
        Command::Selftest => {
            let report = selftest::run_selftest();
            print!("{}", report.render());
            Ok(report.passed())
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
