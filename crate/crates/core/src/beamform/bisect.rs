use faer::{c64, Mat};

use crate::error::BeamformError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeStatus {
    Feasible,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectStep {
    pub gamma: f64,
    pub status: ProbeStatus,
    pub solver_iterations: usize,
}

/// Trace of one bisection: every probed level, the final bracket and the
/// SINR actually attained by the returned precoder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BisectLog {
    pub steps: Vec<BisectStep>,
    pub lo: f64,
    pub hi: f64,
    pub gamma_star: f64,
}

impl BisectLog {
    pub fn solver_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.solver_iterations).sum()
    }

    pub fn numerical_failures(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.status == ProbeStatus::NumericalFailure)
            .count()
    }
}

pub(crate) enum Probe {
    /// Precoder found at the probed level and the minimum SINR it attains.
    Feasible(Mat<c64>, f64),
    Infeasible,
    Failed,
}

const MAX_STEPS: usize = 200;

/// Bisection on `[0, hi]`. `probe(γ)` returns the feasibility verdict at `γ`
/// and the solver iteration count. Stops once `hi − lo ≤ tol · max(1, lo)`
/// with a feasible point in hand; a failed probe is treated as infeasible.
pub(crate) fn bisect(
    hi: f64,
    tol: f64,
    mut probe: impl FnMut(f64) -> (Probe, usize),
) -> Result<(Mat<c64>, f64, BisectLog), BeamformError> {
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(BeamformError::NoFeasiblePoint(hi));
    }
    let hi0 = hi;
    let mut log = BisectLog {
        lo: 0.0,
        hi,
        ..BisectLog::default()
    };
    let mut best: Option<(Mat<c64>, f64)> = None;
    while log.steps.len() < MAX_STEPS {
        if best.is_some() && log.hi - log.lo <= tol * log.lo.max(1.0) {
            break;
        }
        if best.is_none() && log.hi <= hi0 * 1e-12 {
            break;
        }
        let mid = 0.5 * (log.lo + log.hi);
        let (outcome, iterations) = probe(mid);
        let status = match outcome {
            Probe::Feasible(w, achieved) => {
                log.lo = log.lo.max(mid).max(achieved);
                log.hi = log.hi.max(log.lo);
                if best.as_ref().is_none_or(|(_, g)| achieved > *g) {
                    best = Some((w, achieved));
                }
                ProbeStatus::Feasible
            }
            Probe::Infeasible => {
                log.hi = mid;
                ProbeStatus::Infeasible
            }
            Probe::Failed => {
                log.hi = mid;
                ProbeStatus::NumericalFailure
            }
        };
        log.steps.push(BisectStep {
            gamma: mid,
            status,
            solver_iterations: iterations,
        });
    }
    match best {
        Some((w, achieved)) => {
            log.gamma_star = achieved;
            Ok((w, achieved, log))
        }
        None => Err(BeamformError::NoFeasiblePoint(hi0)),
    }
}
