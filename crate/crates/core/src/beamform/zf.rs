use cfmimo_socp::{solve_feasibility, FeasibilityStatus, SocBlock, SocProgram, SparseVec};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use super::bisect::{bisect, BisectLog, Probe};
use super::{check_shapes, cu_sinr, sinr_upper_bound, BeamformSettings, Precoder};
use crate::error::BeamformError;

/// Smallest accepted ratio of extreme singular values of the column-normalised channel.
pub const RANK_TOL: f64 = 1e-8;

/// Unit-norm columns of `Ĝ*(ĜᵀĜ*)⁻¹`.
pub fn zf_directions(g_hat: &Mat<c64>) -> Result<Mat<c64>, BeamformError> {
    let (m, k) = (g_hat.nrows(), g_hat.ncols());
    if k > m {
        return Err(BeamformError::RankDeficient(0.0));
    }
    // Column scaling leaves the normalised directions unchanged and keeps the
    // Gram matrix well scaled.
    let mut g = g_hat.clone();
    for u in 0..k {
        let n = g.col(u).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(BeamformError::RankDeficient(0.0));
        }
        for a in 0..m {
            g[(a, u)] /= n;
        }
    }
    let sv = g
        .singular_values()
        .map_err(|_| BeamformError::RankDeficient(f64::NAN))?;
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if !(smin / smax >= RANK_TOL) {
        return Err(BeamformError::RankDeficient(smin / smax));
    }
    let gc = Mat::from_fn(m, k, |a, u| g[(a, u)].conj());
    let gram = g.transpose() * &gc;
    let llt = gram
        .llt(Side::Lower)
        .map_err(|_| BeamformError::RankDeficient(smin / smax))?;
    let eye = Mat::<c64>::identity(k, k);
    let mut dirs = &gc * llt.solve(&eye);
    for u in 0..k {
        let n = dirs.col(u).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for a in 0..m {
            dirs[(a, u)] /= n;
        }
    }
    Ok(dirs)
}

/// Zero-forcing directions with max-min power allocation.
///
/// With interference nulled on the estimates, `γ_k = ρ_d a_k p_k / (ρ_d Σ_i c_ki p_i + 1)`
/// where `a_k = |ĝ_kᵀu_k|²` and `c_ki = Σ_m δ_mk |u_mi|²`, so each level set is a
/// polyhedron in the powers `p`.
pub fn zf_precoder(
    g_hat: &Mat<c64>,
    delta: &Mat<f64>,
    rho_d: f64,
    settings: &BeamformSettings,
) -> Result<(Precoder, BisectLog), BeamformError> {
    check_shapes(g_hat, delta, rho_d)?;
    let u = zf_directions(g_hat)?;
    let (m_aps, k_ues) = (g_hat.nrows(), g_hat.ncols());
    let gain: Vec<f64> = (0..k_ues)
        .map(|k| (0..m_aps).map(|m| g_hat[(m, k)] * u[(m, k)]).sum::<c64>().norm_sqr())
        .collect();
    let leak = Mat::from_fn(k_ues, k_ues, |k, i| {
        (0..m_aps).map(|m| delta[(m, k)] * u[(m, i)].norm_sqr()).sum::<f64>()
    });

    let mut base = SocProgram::new(k_ues);
    for i in 0..k_ues {
        base.add_block(halfspace(SparseVec::unit(i), 0.0)).expect("index");
    }
    for m in 0..m_aps {
        let mut c = SparseVec::with_capacity(k_ues);
        for i in 0..k_ues {
            c.push(i, -u[(m, i)].norm_sqr());
        }
        base.add_block(halfspace(c, 1.0)).expect("index");
    }

    let hi = sinr_upper_bound(g_hat, rho_d);
    let build = |p: &[f64]| {
        Mat::from_fn(m_aps, k_ues, |m, k| u[(m, k)] * p[k].max(0.0).sqrt())
    };
    let (w, _, log) = bisect(hi, settings.bisect_tol, |gamma| {
        let mut prog = base.clone();
        for k in 0..k_ues {
            let mut c = SparseVec::with_capacity(k_ues);
            for i in 0..k_ues {
                let mut v = -rho_d * leak[(k, i)];
                if i == k {
                    v += rho_d * gain[k] / gamma;
                }
                c.push(i, v);
            }
            prog.add_block(halfspace(c, -1.0)).expect("index");
        }
        let res = solve_feasibility(&prog, &settings.solver);
        let outcome = match (res.status, res.x) {
            (FeasibilityStatus::Feasible, Some(p)) => {
                let w = Precoder::new(build(&p)).clamp_power().w;
                let achieved = cu_sinr(g_hat, delta, &w, rho_d).min_gamma;
                Probe::Feasible(w, achieved)
            }
            (FeasibilityStatus::Infeasible, _) => Probe::Infeasible,
            _ => Probe::Failed,
        };
        (outcome, res.iterations)
    })?;
    Ok((Precoder::new(w), log))
}

/// `cᵀx + d ≥ 0`
pub(crate) fn halfspace(c: SparseVec, d: f64) -> SocBlock {
    SocBlock::new(vec![SparseVec::new()], vec![0.0], c, d).expect("one row")
}
