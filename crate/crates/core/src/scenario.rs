//! Network geometry on a wrap-around square, large-scale fading and the
//! normalised link budget.

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::SystemConfig;
use crate::units::{db_to_linear, dbm_to_watts, BOLTZMANN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Distance on the torus obtained by identifying opposite edges of a square.
pub fn wrap_distance(p: Point, q: Point, side: f64) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(side - d)
    };
    wrap(p.x - q.x).hypot(wrap(p.y - q.y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

impl Layout {
    pub fn distances(&self, side: f64) -> Mat<f64> {
        Mat::from_fn(self.ap_positions.len(), self.ue_positions.len(), |m, k| {
            wrap_distance(self.ap_positions[m], self.ue_positions[k], side)
        })
    }
}

/// M APs then K UEs, each uniform on `[0, side)²`.
pub fn draw_layout<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Layout {
    let side = config.side_km;
    let mut point = || Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
    let ap_positions = (0..config.num_aps).map(|_| point()).collect();
    let ue_positions = (0..config.num_ues).map(|_| point()).collect();
    Layout {
        ap_positions,
        ue_positions,
    }
}

/// Large-scale fading in linear scale and the shadowing draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMatrix {
    pub beta: Mat<f64>,
    pub shadow_db: Mat<f64>,
}

/// Pathloss in dB (negative) at distance `d_km`, clamped below at the configured minimum distance.
pub fn pathloss_db(d_km: f64, config: &SystemConfig) -> f64 {
    let d = d_km.max(config.min_distance_km);
    -config.pathloss_ref_db - 10.0 * config.pathloss_exp * d.log10()
}

/// `β_mk(dB) = −L − 10·α·log10(d_mk) + z_mk`, `z_mk ~ N(0, σ_sh²)` i.i.d.
pub fn large_scale<R: Rng + ?Sized>(layout: &Layout, config: &SystemConfig, rng: &mut R) -> BetaMatrix {
    let dist = layout.distances(config.side_km);
    let (m, k) = (dist.nrows(), dist.ncols());
    let normal = Normal::new(0.0, config.shadow_std_db).expect("validated shadowing std");
    let mut shadow_db = Mat::<f64>::zeros(m, k);
    for a in 0..m {
        for u in 0..k {
            shadow_db[(a, u)] = normal.sample(rng);
        }
    }
    let beta = Mat::from_fn(m, k, |a, u| db_to_linear(pathloss_db(dist[(a, u)], config) + shadow_db[(a, u)]));
    BetaMatrix { beta, shadow_db }
}

/// Noise power and per-symbol SNRs normalised by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub noise_power_w: f64,
    pub rho_p: f64,
    pub rho_d: f64,
    pub rho_b: f64,
}

pub fn link_budget(config: &SystemConfig) -> LinkBudget {
    let noise_power_w = config.bandwidth_hz * BOLTZMANN * config.noise_temp_k * db_to_linear(config.noise_figure_db);
    let rho = |dbm: f64| dbm_to_watts(dbm) / noise_power_w;
    LinkBudget {
        noise_power_w,
        rho_p: rho(config.uplink_pilot_power_dbm),
        rho_d: rho(config.downlink_data_power_dbm),
        rho_b: rho(config.downlink_pilot_power_dbm),
    }
}
