//! Effective downlink channels, beamformed downlink training and the
//! UE-side SINR and net throughput.

use faer::{c64, Mat};
use rand::Rng;

use crate::channel::complex_normal;

/// `a_ki = Σ_m g_mk w_mi`, the gain from precoder column `i` to UE `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub a: Mat<c64>,
}

pub fn effective_channels(g: &Mat<c64>, w: &Mat<c64>) -> EffectiveChannel {
    assert_eq!((g.nrows(), g.ncols()), (w.nrows(), w.ncols()), "channel and precoder shapes");
    EffectiveChannel { a: g.transpose() * w }
}

/// Each UE's least-squares estimate of its own effective gain.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkEstimate {
    pub a_hat_kk: Vec<c64>,
    pub error_var: f64,
}

/// Orthonormal downlink pilots of length `τ_b ≥ K`: the cross-user terms vanish
/// and `â_kk = a_kk + ν_k` with `ν_k ~ CN(0, 1/(τ_b ρ_b))`.
pub fn downlink_train<R: Rng + ?Sized>(a: &EffectiveChannel, tau_b: usize, rho_b: f64, rng: &mut R) -> DownlinkEstimate {
    let k = a.a.nrows();
    assert!(tau_b >= k, "downlink pilots must be orthogonal");
    assert!(rho_b > 0.0, "pilot SNR must be positive");
    let error_var = 1.0 / (tau_b as f64 * rho_b);
    let sd = error_var.sqrt();
    let a_hat_kk = (0..k).map(|u| a.a[(u, u)] + complex_normal(rng) * sd).collect();
    DownlinkEstimate { a_hat_kk, error_var }
}

/// `γ_k = ρ_d |â_kk|² / (ρ_d/(τ_b ρ_b) + ρ_d Σ_{i≠k} |a_ki|² + 1)`
pub fn ue_sinr(estimate: &DownlinkEstimate, a: &EffectiveChannel, rho_d: f64) -> Vec<f64> {
    let k = a.a.nrows();
    assert_eq!(estimate.a_hat_kk.len(), k, "one estimate per user");
    (0..k)
        .map(|u| {
            let interference: f64 = (0..k).filter(|&i| i != u).map(|i| a.a[(u, i)].norm_sqr()).sum();
            rho_d * estimate.a_hat_kk[u].norm_sqr() / (rho_d * estimate.error_var + rho_d * interference + 1.0)
        })
        .collect()
}

/// `S = (B/2)(1 − (τ_p + τ_b)/τ_c) log2(1 + γ)` in bit/s.
pub fn net_throughput(gamma_ue: &[f64], bandwidth_hz: f64, tau_p: usize, tau_b: usize, tau_c: usize) -> Vec<f64> {
    assert!(tau_p + tau_b < tau_c, "training overhead must leave room for data");
    let prefactor = bandwidth_hz / 2.0 * (1.0 - (tau_p + tau_b) as f64 / tau_c as f64);
    gamma_ue.iter().map(|g| prefactor * g.ln_1p() / std::f64::consts::LN_2).collect()
}
