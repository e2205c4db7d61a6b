use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cfmimo::beamform::{BeamformSettings, Beamformer};
use cfmimo::harness::{pilot_sweep, run_experiment, write_outputs, ExperimentSpec};
use cfmimo::{ExperimentError, SystemConfig};

/// Monte Carlo simulation of max-min downlink beamforming in cell-free massive MIMO.
#[derive(Debug, Parser)]
#[command(name = "cfmimo", version)]
struct Cli {
    /// Scenario file (`key = value` lines); defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ob, zf, cb or all.
    #[arg(long, default_value = "all")]
    beamformer: String,
    #[arg(long, default_value_t = 200)]
    realizations: usize,
    /// Overrides `rng_seed` from the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated uplink pilot lengths.
    #[arg(long, value_delimiter = ',')]
    pilot_sweep: Option<Vec<usize>>,
    /// Relative bisection tolerance.
    #[arg(long, default_value_t = 1e-3)]
    bisect_tol: f64,
}

fn parse_beamformers(s: &str) -> Result<Vec<Beamformer>, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Beamformer::ALL.to_vec());
    }
    s.split(',')
        .map(|t| t.trim().parse::<Beamformer>().map_err(|e| e.to_string()))
        .collect()
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let mut config = match &cli.config {
        Some(path) => SystemConfig::load(path)?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    let beamformers = parse_beamformers(&cli.beamformer)
        .map_err(|e| ExperimentError::Config(cfmimo::ConfigError::Invalid(e)))?;
    let spec = ExperimentSpec {
        pilot_sweep: cli.pilot_sweep,
        output_dir: Some(cli.out.clone()),
        settings: BeamformSettings::with_tol(cli.bisect_tol),
        ..ExperimentSpec::new(config, beamformers, cli.realizations)
    };
    if spec.pilot_sweep.is_some() {
        let (points, runs) = pilot_sweep(&spec)?;
        for p in &points {
            println!(
                "tau_p={:<4} {}  mean {:.3} Mbps  min {:.3} Mbps",
                p.tau_p,
                p.beamformer,
                p.mean_bps / 1e6,
                p.min_bps / 1e6
            );
        }
        let last = runs.last().expect("nonempty sweep");
        write_outputs(&cli.out, last, Some(&points))?;
    } else {
        let result = run_experiment(&spec)?;
        for &bf in &result.beamformers {
            let cdf = result.cdf(bf)?;
            println!(
                "{bf}  5%-outage {:.3} Mbps  median {:.3} Mbps  mean {:.3} Mbps",
                cdf.outage() / 1e6,
                cdf.median() / 1e6,
                result.mean_throughput(bf) / 1e6
            );
        }
        if result.failed_realizations() > 0 {
            eprintln!("excluded {} failed realization(s)", result.failed_realizations());
        }
        write_outputs(&cli.out, &result, None)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
