//! Max-min fair downlink beamforming evaluated on the CU's channel estimates.
//!
//! [`maxmin_ob`] searches over every precoder, [`zf_precoder`] and
//! [`cb_precoder`] fix the directions and optimise only the amplitudes. All three
//! maximise the same [`cu_sinr`] objective through [`bisect`].

mod bisect;
mod cb;
mod ob;
mod zf;

use std::fmt;
use std::str::FromStr;

use cfmimo_socp::SolverSettings;
use faer::{c64, Mat};

pub use bisect::{BisectLog, BisectStep, ProbeStatus};
pub use cb::cb_precoder;
pub use ob::{build_feasibility, from_variables, maxmin_ob, to_variables};
pub use zf::{zf_directions, zf_precoder};

use crate::error::BeamformError;

/// Precoding matrix `W` (M × K) with its per-AP transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: Mat<c64>,
    pub per_ap_power: Vec<f64>,
}

impl Precoder {
    pub fn new(w: Mat<c64>) -> Self {
        let per_ap_power = (0..w.nrows())
            .map(|m| (0..w.ncols()).map(|k| w[(m, k)].norm_sqr()).sum())
            .collect();
        Self { w, per_ap_power }
    }

    pub fn zeros(num_aps: usize, num_ues: usize) -> Self {
        Self::new(Mat::zeros(num_aps, num_ues))
    }

    pub fn max_power(&self) -> f64 {
        self.per_ap_power.iter().copied().fold(0.0, f64::max)
    }

    /// Scales `W` down uniformly so that no AP exceeds unit power.
    pub fn clamp_power(self) -> Self {
        let peak = self.max_power();
        if peak <= 1.0 {
            return self;
        }
        let s = 1.0 / peak.sqrt();
        Self::new(Mat::from_fn(self.w.nrows(), self.w.ncols(), |m, k| self.w[(m, k)] * s))
    }
}

/// SINR seen by the CU for every user, with the desired signal, inter-user
/// interference and estimation-error terms it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CuSinrReport {
    pub gamma: Vec<f64>,
    pub min_gamma: f64,
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
    pub estimation_error: Vec<f64>,
}

/// `γ_k = |ĝ_kᵀw_k|² / (Σ_{i≠k} |ĝ_kᵀw_i|² + Σ_m δ_mk Σ_i |w_mi|² + 1/ρ_d)`
pub fn cu_sinr(g_hat: &Mat<c64>, delta: &Mat<f64>, w: &Mat<c64>, rho_d: f64) -> CuSinrReport {
    let (m, k) = (g_hat.nrows(), g_hat.ncols());
    assert_eq!((w.nrows(), w.ncols()), (m, k), "precoder shape");
    assert_eq!((delta.nrows(), delta.ncols()), (m, k), "error variance shape");
    let b = g_hat.transpose() * w;
    let power: Vec<f64> = (0..m)
        .map(|a| (0..k).map(|i| w[(a, i)].norm_sqr()).sum())
        .collect();
    let mut gamma = Vec::with_capacity(k);
    let mut signal = Vec::with_capacity(k);
    let mut interference = Vec::with_capacity(k);
    let mut estimation_error = Vec::with_capacity(k);
    for u in 0..k {
        let ds = b[(u, u)].norm_sqr();
        let mui: f64 = (0..k).filter(|&i| i != u).map(|i| b[(u, i)].norm_sqr()).sum();
        let cee: f64 = (0..m).map(|a| delta[(a, u)] * power[a]).sum();
        gamma.push(rho_d * ds / (rho_d * (mui + cee) + 1.0));
        signal.push(ds);
        interference.push(mui);
        estimation_error.push(cee);
    }
    let min_gamma = gamma.iter().copied().fold(f64::INFINITY, f64::min);
    CuSinrReport {
        gamma,
        min_gamma,
        signal,
        interference,
        estimation_error,
    }
}

/// Rotates `w_k` so that `ĝ_kᵀw_k` is real and nonnegative.
pub fn phase_align(g_hat_k: &[c64], w_k: &[c64]) -> Vec<c64> {
    let inner: c64 = g_hat_k.iter().zip(w_k).map(|(g, w)| g * w).sum();
    if inner.norm() == 0.0 {
        return w_k.to_vec();
    }
    let rot = (inner / inner.norm()).conj();
    w_k.iter().map(|w| w * rot).collect()
}

/// Applies [`phase_align`] to every column.
pub fn phase_align_all(g_hat: &Mat<c64>, w: &Mat<c64>) -> Mat<c64> {
    let mut out = w.clone();
    for k in 0..w.ncols() {
        let g: Vec<c64> = g_hat.col(k).iter().copied().collect();
        let col: Vec<c64> = w.col(k).iter().copied().collect();
        for (m, v) in phase_align(&g, &col).into_iter().enumerate() {
            out[(m, k)] = v;
        }
    }
    out
}

/// `ρ_d · min_k (Σ_m |ĝ_mk|)²`: no user can beat its interference-free,
/// full-power matched SINR.
pub fn sinr_upper_bound(g_hat: &Mat<c64>, rho_d: f64) -> f64 {
    (0..g_hat.ncols())
        .map(|k| {
            let s: f64 = g_hat.col(k).iter().map(|g| g.norm()).sum();
            rho_d * s * s
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformSettings {
    pub bisect_tol: f64,
    pub solver: SolverSettings,
}

impl Default for BeamformSettings {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-3,
            solver: SolverSettings::default(),
        }
    }
}

impl BeamformSettings {
    pub fn with_tol(bisect_tol: f64) -> Self {
        Self {
            bisect_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Beamformer {
    Ob,
    Zf,
    Cb,
}

impl Beamformer {
    pub const ALL: [Beamformer; 3] = [Beamformer::Ob, Beamformer::Zf, Beamformer::Cb];

    pub fn token(self) -> &'static str {
        match self {
            Beamformer::Ob => "ob",
            Beamformer::Zf => "zf",
            Beamformer::Cb => "cb",
        }
    }

    /// Runs this scheme and returns the precoder with its bisection log.
    pub fn design(
        self,
        g_hat: &Mat<c64>,
        delta: &Mat<f64>,
        rho_d: f64,
        settings: &BeamformSettings,
    ) -> Result<(Precoder, BisectLog), BeamformError> {
        match self {
            Beamformer::Ob => maxmin_ob(g_hat, delta, rho_d, settings).map(|(p, _, log)| (p, log)),
            Beamformer::Zf => zf_precoder(g_hat, delta, rho_d, settings),
            Beamformer::Cb => cb_precoder(g_hat, delta, rho_d, settings),
        }
    }
}

impl fmt::Display for Beamformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Beamformer {
    type Err = BeamformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ob" => Ok(Beamformer::Ob),
            "zf" => Ok(Beamformer::Zf),
            "cb" => Ok(Beamformer::Cb),
            other => Err(BeamformError::Invalid(format!("unknown beamformer `{other}`"))),
        }
    }
}

pub(crate) fn check_shapes(g_hat: &Mat<c64>, delta: &Mat<f64>, rho_d: f64) -> Result<(), BeamformError> {
    if g_hat.nrows() == 0 || g_hat.ncols() == 0 {
        return Err(BeamformError::Invalid("empty channel matrix".into()));
    }
    if (delta.nrows(), delta.ncols()) != (g_hat.nrows(), g_hat.ncols()) {
        return Err(BeamformError::Invalid("error variance shape does not match channel".into()));
    }
    if !(rho_d > 0.0 && rho_d.is_finite()) {
        return Err(BeamformError::Invalid("rho_d must be positive".into()));
    }
    Ok(())
}
