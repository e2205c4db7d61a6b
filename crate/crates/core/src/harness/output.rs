use std::fs;
use std::io::Write;
use std::path::Path;

use super::{RunResult, SweepPoint};
use crate::error::ExperimentError;

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_owned(),
        source,
    }
}

/// `beamformer,realization,user,gamma_ue,throughput_bps`
pub fn write_throughput_samples<W: Write>(out: W, run: &RunResult) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beamformer", "realization", "user", "gamma_ue", "throughput_bps"])?;
    for r in &run.records {
        w.write_record([
            r.beamformer.token().to_string(),
            r.realization.to_string(),
            r.user.to_string(),
            num(r.gamma_ue),
            num(r.throughput_bps),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `tau_p,beamformer,mean_bps,min_bps,mean_min_bps`
pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau_p", "beamformer", "mean_bps", "min_bps", "mean_min_bps"])?;
    for p in points {
        w.write_record([
            p.tau_p.to_string(),
            p.beamformer.token().to_string(),
            num(p.mean_bps),
            num(p.min_bps),
            num(p.mean_min_bps),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn write_cdf(path: &Path, values: &[f64], levels: &[f64]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value", "level"])?;
    for (v, l) in values.iter().zip(levels) {
        w.write_record([num(*v), num(*l)])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn meta_text(run: &RunResult) -> String {
    let mut s = String::new();
    s.push_str(&format!("seed = {}\n", run.seed));
    s.push_str(&format!(
        "beamformers = {}\n",
        run.beamformers.iter().map(|b| b.token()).collect::<Vec<_>>().join(",")
    ));
    s.push_str(&format!("realizations = {}\n", run.num_realizations));
    s.push_str(&format!("failed_realizations = {}\n", run.failed_realizations()));
    for f in &run.failures {
        s.push_str(&format!("failure = {} {} {}\n", f.realization, f.beamformer, f.error));
    }
    s.push_str(&format!("channel_redraws = {}\n", run.channel_redraws));
    for &bf in &run.beamformers {
        let st: Vec<_> = run.stats.iter().filter(|s| s.beamformer == bf).collect();
        let iters: usize = st.iter().map(|s| s.solver_iterations).sum();
        let steps: usize = st.iter().map(|s| s.bisect_steps).sum();
        let numerical: usize = st.iter().map(|s| s.numerical_failures).sum();
        s.push_str(&format!(
            "solver_{bf} = bisect_steps {steps} ipm_iterations {iters} numerical_failures {numerical}\n"
        ));
    }
    s.push_str(&format!("started_unix = {}\n", run.started_unix));
    s.push_str(&format!("finished_unix = {}\n", run.finished_unix));
    s.push_str("\n[config]\n");
    s.push_str(&run.config.to_text());
    s
}

/// Writes `throughput_samples.csv`, `cdf_<bf>.csv`, `run_meta.txt` and, when
/// given, `sweep.csv` into `dir`.
pub fn write_outputs(dir: &Path, run: &RunResult, sweep: Option<&[SweepPoint]>) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("throughput_samples.csv");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    write_throughput_samples(file, run)?;
    for &bf in &run.beamformers {
        if let Ok(cdf) = run.cdf(bf) {
            write_cdf(&dir.join(format!("cdf_{bf}.csv")), &cdf.values, &cdf.levels)?;
        }
    }
    if let Some(points) = sweep {
        let path = dir.join("sweep.csv");
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        write_sweep(file, points)?;
    }
    let path = dir.join("run_meta.txt");
    fs::write(&path, meta_text(run)).map_err(io_err(&path))?;
    Ok(())
}
