//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! The full-scale M=100, K=40 run is skipped unless `CFMIMO_FULL_SCALE=1`.

use std::process::ExitCode;
use std::time::Instant;

use cfmimo::beamform::{
    build_feasibility, cb_precoder, cu_sinr, maxmin_ob, phase_align_all, to_variables, zf_precoder,
    BeamformSettings, Beamformer, Precoder,
};
use cfmimo::channel::{complex_normal, compose_channel, draw_small_scale, mmse_estimate, uplink_pilot_receive, PilotBook};
use cfmimo::harness::{
    pilot_sweep, realization_channel, realization_geometry, run_experiment, write_throughput_samples, ExperimentSpec,
};
use cfmimo::scenario::link_budget;
use cfmimo::SystemConfig;
use cfmimo_socp::{solve_feasibility, FeasibilityStatus, SolverSettings};
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_channel(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Mat<c64> {
    Mat::from_fn(m, k, |_, _| complex_normal(rng))
}

fn random_precoder(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Mat<c64> {
    let scale = rng.random_range(0.2..1.5);
    Precoder::new(Mat::from_fn(m, k, |_, _| complex_normal(rng) * scale))
        .clamp_power()
        .w
}

fn estimator_statistics() -> Outcome {
    let (b1, b2, rho_p) = (0.8, 0.3, 5.0);
    let pilots = PilotBook::new(1, vec![0, 0]);
    let beta = Mat::from_fn(1, 2, |_, k| if k == 0 { b1 } else { b2 });
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 100_000;
    let mut power = [0.0; 2];
    let mut exact = true;
    let mut gamma = [0.0; 2];
    for _ in 0..n {
        let g = compose_channel(&beta, &draw_small_scale(1, 2, &mut rng));
        let rx = uplink_pilot_receive(&g, &pilots, rho_p, &mut rng);
        let est = mmse_estimate(&rx, &pilots, &beta, rho_p);
        for k in 0..2 {
            power[k] += est.g_hat[(0, k)].norm_sqr();
            gamma[k] = est.gamma[(0, k)];
            exact &= est.delta[(0, k)] == beta[(0, k)] - est.gamma[(0, k)];
        }
    }
    let tp = rho_p;
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (k, b) in [b1, b2].into_iter().enumerate() {
        let oracle = tp * b * b / (tp * (b1 + b2) + 1.0);
        let empirical = power[k] / n as f64;
        let rel = (empirical / oracle - 1.0).abs();
        worst = worst.max(rel).max((gamma[k] / oracle - 1.0).abs());
        detail.push_str(&format!("user {k}: var {empirical:.5} vs {oracle:.5}; "));
    }
    check(worst < 0.03 && exact, format!("{detail}worst rel err {worst:.4}, delta exact {exact}"))
}

fn soc_sinr_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut compared, mut boundary, mut mismatches) = (0, 0, 0);
    for _ in 0..1000 {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(1..=3.min(m));
        let g = random_channel(&mut rng, m, k);
        let delta = Mat::from_fn(m, k, |_, _| rng.random_range(0.0..0.5));
        let w = phase_align_all(&g, &random_precoder(&mut rng, m, k));
        let rho = 10f64.powf(rng.random_range(-1.0..2.0));
        let rep = cu_sinr(&g, &delta, &w, rho);
        let anchor = rep.gamma[rng.random_range(0..k)].max(1e-9);
        let gamma0 = anchor * rng.random_range(0.5f64..2.0);
        let prog = build_feasibility(&g, &delta, rho, gamma0);
        let x = to_variables(&w);
        for u in 0..k {
            if (rep.gamma[u] / gamma0 - 1.0).abs() <= 1e-6 {
                boundary += 1;
                continue;
            }
            compared += 1;
            let member = prog.blocks()[u].gap(&x) <= 0.0;
            if member != (rep.gamma[u] >= gamma0) {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0,
        format!("{compared} user checks, {mismatches} mismatches, {boundary} boundary cases skipped"),
    )
}

fn feasibility_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = SolverSettings::default();
    let mut violations = 0;
    let mut not_feasible = 0;
    for _ in 0..100 {
        let m = rng.random_range(2..=6);
        let k = rng.random_range(1..=3.min(m));
        let g = random_channel(&mut rng, m, k);
        let delta = Mat::from_fn(m, k, |_, _| rng.random_range(0.0..0.3));
        let rho = 10f64.powf(rng.random_range(0.0..1.5));
        let w = phase_align_all(&g, &random_precoder(&mut rng, m, k));
        let gamma2 = cu_sinr(&g, &delta, &w, rho).min_gamma * rng.random_range(0.5..1.0);
        let res = solve_feasibility(&build_feasibility(&g, &delta, rho, gamma2), &settings);
        let Some(x) = res.x.filter(|_| res.status == FeasibilityStatus::Feasible) else {
            not_feasible += 1;
            continue;
        };
        let half = build_feasibility(&g, &delta, rho, gamma2 / 2.0);
        if half.check_point(&x).unwrap() > settings.feas_tol {
            violations += 1;
        }
        if !solve_feasibility(&half, &settings).is_feasible() {
            violations += 1;
        }
    }
    check(
        violations == 0 && not_feasible == 0,
        format!("100 instances, {violations} violations, {not_feasible} planted-feasible levels not certified"),
    )
}

fn grid_maxmin(g: [c64; 2], delta: [f64; 2], rho: f64) -> f64 {
    // |w1|², |w2|² on a 0.01 grid; phases do not enter when M = 1.
    let mut best: f64 = 0.0;
    for i in 0..=100 {
        for j in 0..=(100 - i) {
            let p = [i as f64 / 100.0, j as f64 / 100.0];
            let total = p[0] + p[1];
            let s = |k: usize| {
                let o = 1 - k;
                rho * g[k].norm_sqr() * p[k] / (rho * g[k].norm_sqr() * p[o] + rho * delta[k] * total + 1.0)
            };
            best = best.max(s(0).min(s(1)));
        }
    }
    best
}

fn ob_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let settings = BeamformSettings::with_tol(1e-4);
    let mut worst_single: f64 = 0.0;
    for _ in 0..10 {
        let m = rng.random_range(1..=8);
        let g = random_channel(&mut rng, m, 1);
        let rho = 10f64.powf(rng.random_range(-1.0..2.0));
        let (_, gamma, _) = maxmin_ob(&g, &Mat::zeros(m, 1), rho, &settings).map_err(|e| e.to_string())?;
        let s: f64 = g.col(0).iter().map(|v| v.norm()).sum();
        worst_single = worst_single.max((gamma / (rho * s * s) - 1.0).abs());
    }
    let mut worst_grid: f64 = 0.0;
    for _ in 0..10 {
        let gv = [complex_normal(&mut rng), complex_normal(&mut rng)];
        let delta = [rng.random_range(0.0..0.3), rng.random_range(0.0..0.3)];
        let rho = 10f64.powf(rng.random_range(0.0..1.5));
        let g = Mat::from_fn(1, 2, |_, k| gv[k]);
        let d = Mat::from_fn(1, 2, |_, k| delta[k]);
        let (_, gamma, _) = maxmin_ob(&g, &d, rho, &settings).map_err(|e| e.to_string())?;
        let grid = grid_maxmin(gv, delta, rho);
        worst_grid = worst_grid.max((gamma / grid - 1.0).abs());
    }
    check(
        worst_single < 1e-3 && worst_grid < 1e-2,
        format!("K=1 closed form worst rel err {worst_single:.2e}; M=1,K=2 grid worst rel err {worst_grid:.2e}"),
    )
}

fn dominance() -> Outcome {
    let cfg = SystemConfig::with_size(20, 5);
    let budget = link_budget(&cfg);
    let ob_settings = BeamformSettings::with_tol(1e-6);
    let base = BeamformSettings::default();
    let tol = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut violations = Vec::new();
    let mut worst_ratio = f64::INFINITY;
    for r in 0..25 {
        let beta = realization_geometry(&cfg, r);
        let (_, st) = realization_channel(&cfg, &budget, &beta, r, 0);
        let rho = budget.rho_d;
        let (_, ob, _) = maxmin_ob(&st.g_hat, &st.delta, rho, &ob_settings).map_err(|e| format!("r{r} ob: {e}"))?;
        let mut rivals = Vec::new();
        let (zf, _) = zf_precoder(&st.g_hat, &st.delta, rho, &base).map_err(|e| format!("r{r} zf: {e}"))?;
        rivals.push(("zf", zf.w));
        let (cb, _) = cb_precoder(&st.g_hat, &st.delta, rho, &base).map_err(|e| format!("r{r} cb: {e}"))?;
        rivals.push(("cb", cb.w));
        for _ in 0..100 {
            rivals.push(("random", random_precoder(&mut rng, 20, 5)));
        }
        for (name, w) in rivals {
            let other = cu_sinr(&st.g_hat, &st.delta, &w, rho).min_gamma;
            if name != "random" {
                worst_ratio = worst_ratio.min(ob / other);
            }
            if ob < other * (1.0 - tol) {
                violations.push(format!("r{r} {name}: ob {ob:.6e} < {other:.6e}"));
            }
        }
    }
    check(
        violations.is_empty(),
        format!(
            "25 realizations, {} violations, smallest OB/baseline ratio {worst_ratio:.6} {}",
            violations.len(),
            violations.join("; ")
        ),
    )
}

fn ordering() -> Outcome {
    let spec = ExperimentSpec::new(SystemConfig::with_size(40, 10), Beamformer::ALL.to_vec(), 50);
    let run = run_experiment(&spec).map_err(|e| e.to_string())?;
    let p = |bf| run.cdf(bf).map(|c| c.outage()).map_err(|e| e.to_string());
    let (ob, zf, cb) = (p(Beamformer::Ob)?, p(Beamformer::Zf)?, p(Beamformer::Cb)?);
    check(
        ob >= zf && zf >= cb,
        format!(
            "5%-outage OB {:.3} / ZF {:.3} / CB {:.3} Mbps over {} realizations",
            ob / 1e6,
            zf / 1e6,
            cb / 1e6,
            run.num_realizations - run.failed_realizations()
        ),
    )
}

fn full_scale() -> Option<Outcome> {
    if std::env::var("CFMIMO_FULL_SCALE").as_deref() != Ok("1") {
        return None;
    }
    let spec = ExperimentSpec::new(SystemConfig::default(), Beamformer::ALL.to_vec(), 200);
    let run = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => return Some(Err(e.to_string())),
    };
    let p = |bf| run.cdf(bf).map(|c| c.outage() / 1e6).unwrap_or(f64::NAN);
    let (ob, zf, cb) = (p(Beamformer::Ob), p(Beamformer::Zf), p(Beamformer::Cb));
    let within = |v: f64, target: f64, band: f64| (v / target - 1.0).abs() <= band;
    Some(check(
        within(ob, 28.0, 0.2) && within(zf, 25.0, 0.2) && within(cb, 9.5, 0.3),
        format!("5%-outage OB {ob:.2} / ZF {zf:.2} / CB {cb:.2} Mbps"),
    ))
}

fn pilot_concavity() -> Outcome {
    let cfg = SystemConfig {
        num_aps: 30,
        num_ues: 16,
        tau_c: 300,
        tau_b: 16,
        tau_p: 16,
        ..SystemConfig::default()
    };
    let taus = vec![4, 8, 16, 32, 64];
    let spec = ExperimentSpec {
        pilot_sweep: Some(taus.clone()),
        ..ExperimentSpec::new(cfg, vec![Beamformer::Ob], 10)
    };
    let (points, _) = pilot_sweep(&spec).map_err(|e| e.to_string())?;
    let means: Vec<f64> = points.iter().map(|p| p.mean_bps).collect();
    let diffs: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    let changes = diffs.windows(2).filter(|d| d[0].signum() != d[1].signum()).count();
    let peak = (0..means.len()).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
    let shape = diffs.first().is_some_and(|&d| d > 0.0) && diffs.last().is_some_and(|&d| d < 0.0) && changes == 1;
    check(
        shape && peak > 0 && peak + 1 < means.len(),
        format!(
            "mean Mbps at tau_p {:?}: {:?}",
            taus,
            means.iter().map(|m| format!("{:.3}", m / 1e6)).collect::<Vec<_>>()
        ),
    )
}

fn determinism() -> Outcome {
    let spec = ExperimentSpec::new(SystemConfig::with_size(12, 4), Beamformer::ALL.to_vec(), 4);
    let bytes = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let run = pool.install(|| run_experiment(&spec)).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_throughput_samples(&mut buf, &run).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b, c) = (bytes(1)?, bytes(1)?, bytes(3)?);
    check(
        a == b && a == c && !a.is_empty(),
        format!("{} bytes, repeat identical {}, 3-thread identical {}", a.len(), a == b, a == c),
    )
}

fn solve_time_in_k() -> Outcome {
    let settings = BeamformSettings::default();
    let mut times = Vec::new();
    for k in [5, 10, 15] {
        let cfg = SystemConfig::with_size(30, k);
        let budget = link_budget(&cfg);
        let mut total = 0.0;
        for r in 0..3 {
            let beta = realization_geometry(&cfg, r);
            let (_, st) = realization_channel(&cfg, &budget, &beta, r, 0);
            let start = Instant::now();
            maxmin_ob(&st.g_hat, &st.delta, budget.rho_d, &settings).map_err(|e| e.to_string())?;
            total += start.elapsed().as_secs_f64();
        }
        times.push(total / 3.0);
    }
    check(
        times.windows(2).all(|w| w[0] < w[1]),
        format!("mean OB solve seconds at M=30, K=5/10/15: {:.3} / {:.3} / {:.3}", times[0], times[1], times[2]),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("estimator statistics", estimator_statistics),
        ("SOC/SINR equivalence", soc_sinr_equivalence),
        ("feasibility monotonicity", feasibility_monotonicity),
        ("OB optimality oracles", ob_oracles),
        ("dominance over ZF, CB and random precoders", dominance),
        ("OB >= ZF >= CB outage ordering at M=40, K=10", ordering),
        ("pilot-length concavity", pilot_concavity),
        ("determinism", determinism),
        ("OB solve time increasing in K", solve_time_in_k),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {d}");
            }
        }
    }
    let name = "full-scale 5%-outage throughput at M=100, K=40";
    match full_scale() {
        None => println!("SKIP  {name}: long-running batch job, set CFMIMO_FULL_SCALE=1"),
        Some(Ok(d)) => println!("PASS  {name}: {d}"),
        Some(Err(d)) => {
            failed += 1;
            println!("FAIL  {name}: {d}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
