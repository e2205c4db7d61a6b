//! Monte Carlo driver: end-to-end realizations, throughput CDFs, pilot-length
//! sweeps and CSV output.

mod cdf;
mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use faer::Mat;
use rayon::prelude::*;

pub use cdf::{empirical_cdf, CdfTable};
pub use output::{write_outputs, write_sweep, write_throughput_samples};

use crate::beamform::{cu_sinr, zf_directions, BeamformSettings, Beamformer};
use crate::channel::{
    compose_channel, draw_small_scale, mmse_estimate, uplink_pilot_receive, ChannelState, PilotBook,
};
use crate::config::SystemConfig;
use crate::downlink::{downlink_train, effective_channels, net_throughput, ue_sinr};
use crate::error::{BeamformError, ConfigError, ExperimentError};
use crate::rng::{stream, Purpose};
use crate::scenario::{draw_layout, large_scale, link_budget, BetaMatrix, LinkBudget};

/// Fresh small-scale draws allowed per realization when ZF meets a rank-deficient channel.
pub const MAX_CHANNEL_DRAWS: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub beamformers: Vec<Beamformer>,
    pub num_realizations: usize,
    pub pilot_sweep: Option<Vec<usize>>,
    pub output_dir: Option<PathBuf>,
    pub settings: BeamformSettings,
}

impl ExperimentSpec {
    pub fn new(config: SystemConfig, beamformers: Vec<Beamformer>, num_realizations: usize) -> Self {
        Self {
            config,
            beamformers,
            num_realizations,
            pilot_sweep: None,
            output_dir: None,
            settings: BeamformSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.config.validate()?;
        if self.num_realizations == 0 {
            return Err(ConfigError::Invalid("at least one realization is required".into()));
        }
        if self.beamformers.is_empty() {
            return Err(ConfigError::Invalid("no beamformer selected".into()));
        }
        if !(self.settings.bisect_tol > 0.0) {
            return Err(ConfigError::Invalid("bisection tolerance must be positive".into()));
        }
        if let Some(sweep) = &self.pilot_sweep {
            if sweep.is_empty() {
                return Err(ConfigError::Invalid("empty pilot sweep".into()));
            }
            for &tp in sweep {
                self.config_for(tp).validate()?;
            }
        }
        Ok(())
    }

    fn config_for(&self, tau_p: usize) -> SystemConfig {
        SystemConfig {
            tau_p,
            ..self.config.clone()
        }
    }
}

/// One user's outcome under one beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub beamformer: Beamformer,
    pub realization: usize,
    pub user: usize,
    pub gamma_cu: f64,
    pub gamma_ue: f64,
    pub throughput_bps: f64,
    /// Lowest throughput among the users of this realization and beamformer.
    pub is_min: bool,
}

/// Cost of one beamformer design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignStats {
    pub beamformer: Beamformer,
    pub realization: usize,
    pub bisect_steps: usize,
    pub solver_iterations: usize,
    pub numerical_failures: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedRealization {
    pub realization: usize,
    pub beamformer: Beamformer,
    pub error: BeamformError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub config: SystemConfig,
    pub beamformers: Vec<Beamformer>,
    pub num_realizations: usize,
    /// Ordered by beamformer (as requested), realization, user.
    pub records: Vec<UserRecord>,
    pub stats: Vec<DesignStats>,
    pub failures: Vec<FailedRealization>,
    pub channel_redraws: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunResult {
    pub fn throughputs(&self, bf: Beamformer) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.beamformer == bf)
            .map(|r| r.throughput_bps)
            .collect()
    }

    pub fn cdf(&self, bf: Beamformer) -> Result<CdfTable, ExperimentError> {
        empirical_cdf(&self.throughputs(bf))
    }

    pub fn mean_throughput(&self, bf: Beamformer) -> f64 {
        mean(&self.throughputs(bf))
    }

    /// Smallest per-user throughput over all realizations.
    pub fn min_throughput(&self, bf: Beamformer) -> f64 {
        self.throughputs(bf).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Per-realization minimum user throughput, in realization order.
    pub fn min_user_throughputs(&self, bf: Beamformer) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.beamformer == bf && r.is_min)
            .map(|r| r.throughput_bps)
            .collect()
    }

    pub fn failed_realizations(&self) -> usize {
        let mut r: Vec<usize> = self.failures.iter().map(|f| f.realization).collect();
        r.sort_unstable();
        r.dedup();
        r.len()
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Layout and shadowing of one realization; depends only on the seed and index.
pub fn realization_geometry(config: &SystemConfig, realization: usize) -> BetaMatrix {
    let mut rng = stream(config.rng_seed, realization as u64, Purpose::Geometry, 0);
    let layout = draw_layout(config, &mut rng);
    large_scale(&layout, config, &mut rng)
}

/// Channels and estimates for one realization. `draw` selects the small-scale
/// and noise substreams so a rank-deficient draw can be replaced.
pub fn realization_channel(
    config: &SystemConfig,
    budget: &LinkBudget,
    beta: &BetaMatrix,
    realization: usize,
    draw: u64,
) -> (PilotBook, ChannelState) {
    let r = realization as u64;
    let seed = config.rng_seed;
    let pilots = PilotBook::random(
        config.tau_p,
        config.num_ues,
        &mut stream(seed, r, Purpose::PilotAssignment, 0),
    );
    let h = draw_small_scale(
        config.num_aps,
        config.num_ues,
        &mut stream(seed, r, Purpose::SmallScale, draw),
    );
    let g = compose_channel(&beta.beta, &h);
    let rx = uplink_pilot_receive(&g, &pilots, budget.rho_p, &mut stream(seed, r, Purpose::UplinkNoise, draw));
    let est = mmse_estimate(&rx, &pilots, &beta.beta, budget.rho_p);
    (pilots, ChannelState::new(g, est))
}

struct RealizationOutcome {
    records: Vec<UserRecord>,
    stats: Vec<DesignStats>,
    failures: Vec<FailedRealization>,
    redraws: usize,
}

fn run_realization(spec: &ExperimentSpec, budget: &LinkBudget, r: usize) -> Result<RealizationOutcome, ExperimentError> {
    let cfg = &spec.config;
    let beta = realization_geometry(cfg, r);
    let needs_rank = spec.beamformers.contains(&Beamformer::Zf);
    let mut draw = 0;
    let state = loop {
        let (_, state) = realization_channel(cfg, budget, &beta, r, draw);
        if !needs_rank || zf_directions(&state.g_hat).is_ok() {
            break state;
        }
        draw += 1;
        if draw >= MAX_CHANNEL_DRAWS {
            return Err(ExperimentError::RankResampleExhausted {
                realization: r,
                attempts: draw as usize,
            });
        }
    };

    let mut out = RealizationOutcome {
        records: Vec::new(),
        stats: Vec::new(),
        failures: Vec::new(),
        redraws: draw as usize,
    };
    for (slot, &bf) in spec.beamformers.iter().enumerate() {
        let start = Instant::now();
        let designed = bf.design(&state.g_hat, &state.delta, budget.rho_d, &spec.settings);
        let seconds = start.elapsed().as_secs_f64();
        let (precoder, log) = match designed {
            Ok(v) => v,
            Err(error) => {
                out.failures.push(FailedRealization {
                    realization: r,
                    beamformer: bf,
                    error,
                });
                continue;
            }
        };
        out.stats.push(DesignStats {
            beamformer: bf,
            realization: r,
            bisect_steps: log.steps.len(),
            solver_iterations: log.solver_iterations(),
            numerical_failures: log.numerical_failures(),
            seconds,
        });
        let cu = cu_sinr(&state.g_hat, &state.delta, &precoder.w, budget.rho_d);
        let a = effective_channels(&state.g, &precoder.w);
        let mut rng = stream(cfg.rng_seed, r as u64, Purpose::DownlinkNoise, slot as u64);
        let est = downlink_train(&a, cfg.tau_b, budget.rho_b, &mut rng);
        let gamma_ue = ue_sinr(&est, &a, budget.rho_d);
        let s = net_throughput(&gamma_ue, cfg.bandwidth_hz, cfg.tau_p, cfg.tau_b, cfg.tau_c);
        let worst = (0..s.len()).min_by(|&i, &j| s[i].total_cmp(&s[j])).unwrap_or(0);
        out.records.extend((0..s.len()).map(|k| UserRecord {
            beamformer: bf,
            realization: r,
            user: k,
            gamma_cu: cu.gamma[k],
            gamma_ue: gamma_ue[k],
            throughput_bps: s[k],
            is_min: k == worst,
        }));
    }
    Ok(out)
}

/// Runs every realization of `spec`. Realizations in which any beamformer fails
/// are dropped from the aggregates and counted; more than 1% aborts the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunResult, ExperimentError> {
    spec.validate()?;
    let started_unix = unix_now();
    let budget = link_budget(&spec.config);
    let outcomes: Vec<Result<RealizationOutcome, ExperimentError>> = (0..spec.num_realizations)
        .into_par_iter()
        .map(|r| run_realization(spec, &budget, r))
        .collect();

    let mut records = Vec::new();
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    let mut channel_redraws = 0;
    for outcome in outcomes {
        let o = outcome?;
        channel_redraws += o.redraws;
        stats.extend(o.stats);
        if o.failures.is_empty() {
            records.extend(o.records);
        } else {
            failures.extend(o.failures);
        }
    }
    let failed = {
        let mut r: Vec<usize> = failures.iter().map(|f: &FailedRealization| f.realization).collect();
        r.dedup();
        r.len()
    };
    if failed * 100 > spec.num_realizations {
        return Err(ExperimentError::TooManyFailures {
            failed,
            total: spec.num_realizations,
        });
    }
    let order = |bf: Beamformer| spec.beamformers.iter().position(|&b| b == bf).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (order(r.beamformer), r.realization, r.user));
    Ok(RunResult {
        seed: spec.config.rng_seed,
        config: spec.config.clone(),
        beamformers: spec.beamformers.clone(),
        num_realizations: spec.num_realizations,
        records,
        stats,
        failures,
        channel_redraws,
        started_unix,
        finished_unix: unix_now(),
    })
}

/// One row of a pilot-length sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tau_p: usize,
    pub beamformer: Beamformer,
    pub mean_bps: f64,
    /// Smallest per-user throughput over all realizations.
    pub min_bps: f64,
    /// Per-realization minimum user throughput, averaged over realizations.
    pub mean_min_bps: f64,
}

/// Runs the experiment once per pilot length. Layouts, shadowing and small-scale
/// fading are shared across pilot lengths, so the comparison is paired.
pub fn pilot_sweep(spec: &ExperimentSpec) -> Result<(Vec<SweepPoint>, Vec<RunResult>), ExperimentError> {
    let sweep = spec
        .pilot_sweep
        .clone()
        .ok_or_else(|| ConfigError::Invalid("no pilot lengths given".into()))?;
    spec.validate()?;
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for tau_p in sweep {
        let sub = ExperimentSpec {
            config: spec.config_for(tau_p),
            pilot_sweep: None,
            ..spec.clone()
        };
        let run = run_experiment(&sub)?;
        for &bf in &spec.beamformers {
            points.push(SweepPoint {
                tau_p,
                beamformer: bf,
                mean_bps: run.mean_throughput(bf),
                min_bps: run.min_throughput(bf),
                mean_min_bps: mean(&run.min_user_throughputs(bf)),
            });
        }
        runs.push(run);
    }
    Ok((points, runs))
}

/// Average per-user CU-side estimation quality, `Σγ / Σβ`, for diagnostics.
pub fn estimation_quality(beta: &Mat<f64>, state: &ChannelState) -> f64 {
    let (mut g, mut b) = (0.0, 0.0);
    for k in 0..beta.ncols() {
        for m in 0..beta.nrows() {
            g += state.gamma[(m, k)];
            b += beta[(m, k)];
        }
    }
    g / b
}
