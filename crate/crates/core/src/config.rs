//! Scenario configuration: the static description of one experiment.
//!
//! Documents are TOML. Keys are named exactly as the struct fields; unknown
//! keys are rejected. See `configs/reference.toml` for the canonical example.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::antenna::ArrayConfig;
use crate::baselines::OpportunisticConfig;
use crate::error::ConfigError;
use crate::geometry::Point3;
use crate::mobility::MobilityConfig;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the interference term weights a co-channel transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceGainMode {
    /// Gain of the beam steered at the interfering user, seen from the victim.
    #[default]
    SteeredAtVictim,
    /// Full beam gain toward the interfering user, independent of the victim.
    PeakGain,
}

/// A rectangular region with its own outage requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityZone {
    pub x_range_m: [f64; 2],
    pub y_range_m: [f64; 2],
    pub eps_max: f64,
}

impl ReliabilityZone {
    /// Closed-interval membership test on the horizontal projection.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_range_m[0]
            && x <= self.x_range_m[1]
            && y >= self.y_range_m[0]
            && y <= self.y_range_m[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_x_m: f64,
    pub area_y_m: f64,
    pub oru_positions: Vec<Point3>,
    pub n_max_users: usize,
    pub array: ArrayConfig,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub gamma_th_db: f64,
    pub p_max_w: f64,
    pub p_oru_budget_w: f64,
    pub cluster_power_threshold_w: f64,
    #[serde(default)]
    pub zones: Vec<ReliabilityZone>,
    pub eps_max_default: f64,
    pub mobility: MobilityConfig,
    pub arrival_prob: f64,
    pub departure_prob: f64,
    pub reward_weights: [f64; 3],
    pub step_duration_s: f64,
    #[serde(default = "default_episode_len")]
    pub episode_len: u64,
    #[serde(default)]
    pub interference_gain_mode: InterferenceGainMode,
    #[serde(default)]
    pub opportunistic: OpportunisticConfig,
}

fn default_episode_len() -> u64 {
    1000
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads and validates a configuration file.
pub fn load_config_file(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invariant(what()))
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl ScenarioConfig {
    /// The evaluation scenario: 6 users, 19 ORUs at 25 m in a 3 km square,
    /// 2.4 GHz, 10 MHz, -5 dB threshold and a strict zone in the center.
    ///
    /// Per-link and per-ORU power default to 1 W; the UAV altitude to 100 m.
    pub fn reference_scenario() -> Self {
        const ORU_KM: [(f64, f64); 19] = [
            (0.4, 0.6),
            (1.2, 0.8),
            (2.1, 1.3),
            (0.9, 1.7),
            (2.3, 2.0),
            (1.1, 2.4),
            (2.0, 0.5),
            (0.8, 2.9),
            (0.6, 0.4),
            (0.8, 1.2),
            (1.3, 2.1),
            (1.7, 0.9),
            (2.0, 2.3),
            (2.4, 1.1),
            (0.5, 2.0),
            (2.9, 0.8),
            (1.5, 1.5),
            (2.7, 2.7),
            (0.2, 1.4),
        ];
        let carrier_hz = 2.4e9;
        Self {
            area_x_m: 3000.0,
            area_y_m: 3000.0,
            oru_positions: ORU_KM
                .iter()
                .map(|&(x, y)| Point3::new(x * 1000.0, y * 1000.0, 25.0))
                .collect(),
            n_max_users: 6,
            array: ArrayConfig::half_wavelength(4, 4, carrier_hz),
            carrier_hz,
            bandwidth_hz: 10e6,
            noise_density_dbm_hz: -174.0,
            gamma_th_db: -5.0,
            p_max_w: 1.0,
            p_oru_budget_w: 1.0,
            cluster_power_threshold_w: 1e-6,
            zones: vec![ReliabilityZone {
                x_range_m: [1000.0, 2000.0],
                y_range_m: [1000.0, 2000.0],
                eps_max: 1e-5,
            }],
            eps_max_default: 1e-2,
            mobility: MobilityConfig::default(),
            arrival_prob: 0.05,
            departure_prob: 0.01,
            reward_weights: [1.0, 1.0, 1.0],
            step_duration_s: 1.0,
            episode_len: default_episode_len(),
            interference_gain_mode: InterferenceGainMode::default(),
            opportunistic: OpportunisticConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(
            self.area_x_m > 0.0 && self.area_y_m > 0.0,
            || "area_x_m and area_y_m must be > 0".into(),
        )?;
        check(!self.oru_positions.is_empty(), || {
            "oru_positions must hold at least one ORU (K >= 1)".into()
        })?;
        for (k, p) in self.oru_positions.iter().enumerate() {
            check(self.in_footprint(p.x, p.y) && p.z.is_finite(), || {
                format!("oru_positions[{k}] = ({}, {}, {}) lies outside the area", p.x, p.y, p.z)
            })?;
        }
        check(self.n_max_users >= 1, || "n_max_users must be >= 1".into())?;
        self.array.validate()?;
        check(self.carrier_hz > 0.0, || "carrier_hz must be > 0".into())?;
        check(self.bandwidth_hz > 0.0, || "bandwidth_hz must be > 0".into())?;
        check(self.noise_density_dbm_hz.is_finite(), || {
            "noise_density_dbm_hz must be finite".into()
        })?;
        check(self.gamma_th_db.is_finite(), || "gamma_th_db must be finite".into())?;
        check(self.p_max_w > 0.0, || "p_max_w must be > 0 (C1 bound)".into())?;
        check(self.p_oru_budget_w > 0.0, || "p_oru_budget_w must be > 0".into())?;
        check(
            self.cluster_power_threshold_w >= 0.0 && self.cluster_power_threshold_w < self.p_max_w,
            || "cluster_power_threshold_w must satisfy 0 <= threshold < p_max_w".into(),
        )?;
        for (z, zone) in self.zones.iter().enumerate() {
            let [x0, x1] = zone.x_range_m;
            let [y0, y1] = zone.y_range_m;
            check(
                x0 <= x1 && y0 <= y1 && self.in_footprint(x0, y0) && self.in_footprint(x1, y1),
                || format!("zones[{z}] ranges must be ordered and lie within the area"),
            )?;
            check(zone.eps_max > 0.0 && zone.eps_max < 1.0, || {
                format!("zones[{z}].eps_max must lie in (0, 1)")
            })?;
        }
        check(is_prob(self.eps_max_default), || {
            "eps_max_default must lie in [0, 1]".into()
        })?;
        self.mobility.validate()?;
        check(is_prob(self.arrival_prob), || "arrival_prob must lie in [0, 1]".into())?;
        check(is_prob(self.departure_prob), || "departure_prob must lie in [0, 1]".into())?;
        check(self.reward_weights.iter().all(|w| *w >= 0.0 && w.is_finite()), || {
            "reward_weights must be non-negative".into()
        })?;
        check(self.step_duration_s > 0.0, || "step_duration_s must be > 0".into())?;
        check(self.episode_len >= 1, || "episode_len must be >= 1".into())?;
        self.opportunistic.validate()?;
        Ok(())
    }

    pub fn n_orus(&self) -> usize {
        self.oru_positions.len()
    }

    pub fn in_footprint(&self, x: f64, y: f64) -> bool {
        (0.0..=self.area_x_m).contains(&x) && (0.0..=self.area_y_m).contains(&y)
    }

    /// Carrier wavenumber 2π/λ in rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Receiver noise power σ² = N0·B in watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_w(self.noise_density_dbm_hz) * self.bandwidth_hz
    }

    pub fn gamma_th_linear(&self) -> f64 {
        db_to_linear(self.gamma_th_db)
    }

    /// Outage requirement at a position: first zone containing (x, y), else the default.
    pub fn eps_max_at(&self, position: &Point3) -> f64 {
        self.zone_at(position.x, position.y)
            .map_or(self.eps_max_default, |z| z.eps_max)
    }

    pub fn zone_at(&self, x: f64, y: f64) -> Option<&ReliabilityZone> {
        self.zones.iter().find(|z| z.contains(x, y))
    }

    pub fn uav_altitude_m(&self) -> f64 {
        self.mobility.altitude_m
    }
}

/// Free-function form of [`ScenarioConfig::eps_max_at`].
pub fn eps_max_at(config: &ScenarioConfig, position: &Point3) -> f64 {
    config.eps_max_at(position)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
