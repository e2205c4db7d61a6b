//! Scenario constants, loaded from a `key = value` text file (TOML syntax).
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! | key                        | default  | meaning                                  |
//! |----------------------------|----------|------------------------------------------|
//! | `num_aps`                  | 100      | single-antenna access points M           |
//! | `num_ues`                  | 40       | single-antenna users K (K ≤ M)           |
//! | `side_km`                  | 1.0      | side of the wrap-around square           |
//! | `pathloss_ref_db`          | 140.72   | pathloss at 1 km                         |
//! | `pathloss_exp`             | 3.5      | pathloss exponent                        |
//! | `shadow_std_db`            | 8.0      | log-normal shadowing standard deviation  |
//! | `min_distance_km`          | 0.01     | AP–UE distance clamp                     |
//! | `bandwidth_hz`             | 20e6     | system bandwidth                         |
//! | `noise_figure_db`          | 9.0      | receiver noise figure                    |
//! | `noise_temp_k`             | 290.0    | noise temperature                        |
//! | `uplink_pilot_power_dbm`   | 23.0     | UE pilot power                           |
//! | `downlink_data_power_dbm`  | 23.0     | per-AP data power                        |
//! | `downlink_pilot_power_dbm` | 23.0     | per-AP beamformed pilot power            |
//! | `carrier_hz`               | 1.9e9    | informational only                       |
//! | `tau_c`                    | 400      | coherence interval (symbols)             |
//! | `tau_p`                    | 40       | uplink pilot length                      |
//! | `tau_b`                    | 40       | downlink pilot length                    |
//! | `rng_seed`                 | 1        | master seed                              |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_ues: usize,
    pub side_km: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exp: f64,
    pub shadow_std_db: f64,
    pub min_distance_km: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub noise_temp_k: f64,
    pub uplink_pilot_power_dbm: f64,
    pub downlink_data_power_dbm: f64,
    pub downlink_pilot_power_dbm: f64,
    pub carrier_hz: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub tau_b: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 100,
            num_ues: 40,
            side_km: 1.0,
            pathloss_ref_db: 140.72,
            pathloss_exp: 3.5,
            shadow_std_db: 8.0,
            min_distance_km: 0.01,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            noise_temp_k: 290.0,
            uplink_pilot_power_dbm: 23.0,
            downlink_data_power_dbm: 23.0,
            downlink_pilot_power_dbm: 23.0,
            carrier_hz: 1.9e9,
            tau_c: 400,
            tau_p: 40,
            tau_b: 40,
            rng_seed: 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl SystemConfig {
    /// Defaults with a different network size; `tau_p = tau_b = K`.
    pub fn with_size(num_aps: usize, num_ues: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            tau_p: num_ues,
            tau_b: num_ues,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_aps == 0 || self.num_ues == 0 {
            return Err(invalid("num_aps and num_ues must be positive"));
        }
        if self.num_ues > self.num_aps {
            return Err(invalid(format!(
                "num_ues ({}) must not exceed num_aps ({})",
                self.num_ues, self.num_aps
            )));
        }
        if self.tau_p == 0 || self.tau_b == 0 || self.tau_c == 0 {
            return Err(invalid("pilot lengths and coherence interval must be positive"));
        }
        if self.tau_b < self.num_ues {
            return Err(invalid(format!(
                "tau_b ({}) must be at least num_ues ({}) for orthogonal downlink pilots",
                self.tau_b, self.num_ues
            )));
        }
        if self.tau_p + self.tau_b >= self.tau_c {
            return Err(invalid(format!(
                "tau_p + tau_b ({}) must be below tau_c ({})",
                self.tau_p + self.tau_b,
                self.tau_c
            )));
        }
        let positive = [
            ("side_km", self.side_km),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_temp_k", self.noise_temp_k),
            ("min_distance_km", self.min_distance_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        let finite = [
            self.pathloss_ref_db,
            self.pathloss_exp,
            self.noise_figure_db,
            self.uplink_pilot_power_dbm,
            self.downlink_data_power_dbm,
            self.downlink_pilot_power_dbm,
            self.carrier_hz,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite parameter"));
        }
        if !(self.shadow_std_db >= 0.0 && self.shadow_std_db.is_finite()) {
            return Err(invalid("shadow_std_db must be nonnegative"));
        }
        Ok(())
    }
}
