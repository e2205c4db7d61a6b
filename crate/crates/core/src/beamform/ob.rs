use cfmimo_socp::{solve_feasibility, FeasibilityStatus, SocBlock, SocProgram, SparseVec};
use faer::{c64, Mat};

use super::bisect::{bisect, BisectLog, Probe};
use super::{check_shapes, cu_sinr, phase_align_all, sinr_upper_bound, BeamformSettings, Precoder};
use crate::error::BeamformError;

/// Index of `Re w_mk`; `Im w_mk` follows it.
fn var(num_aps: usize, m: usize, k: usize) -> usize {
    2 * (k * num_aps + m)
}

/// Real and imaginary parts of `s · ĝ_kᵀ w_i` as linear forms in the variables.
fn inner_forms(g_hat: &Mat<c64>, k: usize, i: usize, s: f64) -> (SparseVec, SparseVec) {
    let m_aps = g_hat.nrows();
    let mut re = SparseVec::with_capacity(2 * m_aps);
    let mut im = SparseVec::with_capacity(2 * m_aps);
    for m in 0..m_aps {
        let g = g_hat[(m, k)] * s;
        let j = var(m_aps, m, i);
        re.push(j, g.re);
        re.push(j + 1, -g.im);
        im.push(j, g.im);
        im.push(j + 1, g.re);
    }
    (re, im)
}

/// Flattens `W` into the variable layout of [`build_feasibility`].
pub fn to_variables(w: &Mat<c64>) -> Vec<f64> {
    let m_aps = w.nrows();
    let mut x = vec![0.0; 2 * m_aps * w.ncols()];
    for k in 0..w.ncols() {
        for m in 0..m_aps {
            x[var(m_aps, m, k)] = w[(m, k)].re;
            x[var(m_aps, m, k) + 1] = w[(m, k)].im;
        }
    }
    x
}

/// Inverse of [`to_variables`].
pub fn from_variables(x: &[f64], num_aps: usize, num_ues: usize) -> Mat<c64> {
    Mat::from_fn(num_aps, num_ues, |m, k| {
        let j = var(num_aps, m, k);
        c64::new(x[j], x[j + 1])
    })
}

/// Real SOC program whose points are the precoders reaching CU SINR `γ₀` for
/// every user with `ĝ_kᵀw_k` real.
///
/// Variables are `(Re w_mk, Im w_mk)` pairs, user-major. Block `k`
/// (`k < K`) reads, after multiplying through by `√ρ_d`,
///
/// `‖[√ρ_d ĝ_kᵀw_i (i ≠ k); √(ρ_d δ_mk) w_mi (all m, i); 1]‖ ≤ √(ρ_d/γ₀) Re(ĝ_kᵀw_k)`
///
/// with complex entries split into real and imaginary rows. Blocks `K..K+M`
/// are the per-AP power limits `‖(w_m1, …, w_mK)‖ ≤ 1`. Equality `k` is
/// `Im(ĝ_kᵀw_k) = 0`.
pub fn build_feasibility(g_hat: &Mat<c64>, delta: &Mat<f64>, rho_d: f64, gamma0: f64) -> SocProgram {
    assert!(gamma0 > 0.0, "target SINR must be positive");
    let (m_aps, k_ues) = (g_hat.nrows(), g_hat.ncols());
    let s = rho_d.sqrt();
    let mut prog = SocProgram::new(2 * m_aps * k_ues);
    for k in 0..k_ues {
        let dim = 2 * (k_ues - 1) + 2 * m_aps * k_ues + 1;
        let mut rows = Vec::with_capacity(dim);
        for i in (0..k_ues).filter(|&i| i != k) {
            let (re, im) = inner_forms(g_hat, k, i, s);
            rows.push(re);
            rows.push(im);
        }
        for i in 0..k_ues {
            for m in 0..m_aps {
                let c = (rho_d * delta[(m, k)]).sqrt();
                let j = var(m_aps, m, i);
                let mut re = SparseVec::new();
                re.push(j, c);
                let mut im = SparseVec::new();
                im.push(j + 1, c);
                rows.push(re);
                rows.push(im);
            }
        }
        rows.push(SparseVec::new());
        let mut b = vec![0.0; dim];
        b[dim - 1] = 1.0;
        let (re, im) = inner_forms(g_hat, k, k, s);
        let c = re.scaled(1.0 / gamma0.sqrt());
        prog.add_block(SocBlock::new(rows, b, c, 0.0).expect("block shape"))
            .expect("indices in range");
        prog.add_equality(im, 0.0).expect("indices in range");
    }
    for m in 0..m_aps {
        let rows = (0..k_ues)
            .flat_map(|i| {
                let j = var(m_aps, m, i);
                [SparseVec::unit(j), SparseVec::unit(j + 1)]
            })
            .collect();
        prog.add_block(SocBlock::new(rows, vec![0.0; 2 * k_ues], SparseVec::new(), 1.0).expect("block shape"))
            .expect("indices in range");
    }
    prog
}

/// Max-min optimal beamforming: bisection on `γ₀` over [`build_feasibility`].
///
/// Returns the best precoder found, the minimum CU SINR it attains and the
/// bisection trace.
pub fn maxmin_ob(
    g_hat: &Mat<c64>,
    delta: &Mat<f64>,
    rho_d: f64,
    settings: &BeamformSettings,
) -> Result<(Precoder, f64, BisectLog), BeamformError> {
    check_shapes(g_hat, delta, rho_d)?;
    let (m_aps, k_ues) = (g_hat.nrows(), g_hat.ncols());
    if let Some(k) = (0..k_ues).find(|&k| g_hat.col(k).iter().all(|g| g.norm() == 0.0)) {
        return Err(BeamformError::ZeroChannel(k));
    }
    let hi = sinr_upper_bound(g_hat, rho_d);
    let (w, gamma_star, log) = bisect(hi, settings.bisect_tol, |gamma| {
        let prog = build_feasibility(g_hat, delta, rho_d, gamma);
        let res = solve_feasibility(&prog, &settings.solver);
        let outcome = match (res.status, res.x) {
            (FeasibilityStatus::Feasible, Some(x)) => {
                let w = phase_align_all(g_hat, &from_variables(&x, m_aps, k_ues));
                let w = Precoder::new(w).clamp_power().w;
                let achieved = cu_sinr(g_hat, delta, &w, rho_d).min_gamma;
                Probe::Feasible(w, achieved)
            }
            (FeasibilityStatus::Infeasible, _) => Probe::Infeasible,
            _ => Probe::Failed,
        };
        (outcome, res.iterations)
    })?;
    Ok((Precoder::new(w), gamma_star, log))
}
