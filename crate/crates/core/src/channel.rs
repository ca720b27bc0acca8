//! Link-level radio model: LOS state, path loss, serving-link means `α_ik`
//! and interference-plus-noise `β_i`.
//!
//! Path loss follows the UMa-style aerial formulas below (dB, `d` in meters,
//! `f` in GHz):
//!
//! - LOS:  `28.0 + 22·log10(d) + 20·log10(f)`
//! - NLOS: `max(LOS, 13.54 + 39.08·log10(d) + 20·log10(f) − 0.6·(h_ut − 1.5))`
//!
//! Interference enters at its expected power, so `β_i` is deterministic given
//! positions, LOS flags and powers.

use rand::Rng;

use crate::antenna::{direction_to, steered_gain, Direction};
use crate::config::{InterferenceGainMode, ScenarioConfig};
use crate::environment::{NetworkState, PowerAllocation};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::matrix::Matrix;

/// LOS flag per `(user slot, ORU)` pair, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    n_max: usize,
    k: usize,
    los: Vec<bool>,
}

impl LinkState {
    pub fn all_los(n_max: usize, k: usize) -> Self {
        Self {
            n_max,
            k,
            los: vec![true; n_max * k],
        }
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        self.los[i * self.k + k]
    }

    pub fn set(&mut self, i: usize, k: usize, los: bool) {
        self.los[i * self.k + k] = los;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.los[i * self.k..(i + 1) * self.k]
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Redraws every link of the active slots independently.
    pub fn redraw<R: Rng + ?Sized>(
        &mut self,
        positions: &[Point3],
        active: &[bool],
        config: &ScenarioConfig,
        rng: &mut R,
    ) {
        for (i, (pos, &on)) in positions.iter().zip(active).enumerate() {
            for (k, oru) in config.oru_positions.iter().enumerate() {
                // Draw for every pair so that the stream position does not
                // depend on which slots are active.
                let u: f64 = rng.random();
                let p = los_probability(pos.distance_2d(oru), pos.z).unwrap_or(1.0);
                self.set(i, k, on && u < p);
            }
        }
    }
}

/// Probability of line of sight at horizontal distance `d_2d_m` for a UAV at `uav_alt_m`.
pub fn los_probability(d_2d_m: f64, uav_alt_m: f64) -> Result<f64> {
    if !(d_2d_m >= 0.0) {
        return Err(Error::Domain(format!(
            "horizontal distance must be >= 0, got {d_2d_m}"
        )));
    }
    if uav_alt_m >= 100.0 {
        return Ok(1.0);
    }
    let h = uav_alt_m.clamp(22.5, 100.0);
    let p1 = 233.98 * h.log10() - 0.95;
    let d1 = (294.05 * h.log10() - 432.94).max(18.0);
    if d_2d_m <= d1 {
        return Ok(1.0);
    }
    Ok(d1 / d_2d_m + (-d_2d_m / p1).exp() * (1.0 - d1 / d_2d_m))
}

pub fn path_loss_db(d_3d_m: f64, carrier_hz: f64, los: bool, uav_alt_m: f64) -> Result<f64> {
    if !(d_3d_m >= 1.0) {
        return Err(Error::Domain(format!(
            "3D distance must be >= 1 m, got {d_3d_m}"
        )));
    }
    let f_ghz = carrier_hz / 1e9;
    let los_db = 28.0 + 22.0 * d_3d_m.log10() + 20.0 * f_ghz.log10();
    if los {
        return Ok(los_db);
    }
    let nlos_db =
        13.54 + 39.08 * d_3d_m.log10() + 20.0 * f_ghz.log10() - 0.6 * (uav_alt_m - 1.5);
    Ok(los_db.max(nlos_db))
}

/// Linear large-scale power gain, capped at 1.
pub fn path_gain(d_3d_m: f64, carrier_hz: f64, los: bool, uav_alt_m: f64) -> Result<f64> {
    let pl = path_loss_db(d_3d_m, carrier_hz, los, uav_alt_m)?;
    Ok(10f64.powf(-pl / 10.0).min(1.0))
}

/// Mean serving powers and interference-plus-noise for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    /// `α_ik` in watts, `N_max × K`.
    pub alpha: Matrix,
    /// `β_i` in watts, noise included.
    pub beta: Vec<f64>,
}

/// Per-step geometry of every active link: direction and path gain.
#[derive(Debug, Clone)]
pub struct LinkGeometry {
    k: usize,
    dirs: Vec<Option<Direction>>,
    gains: Vec<f64>,
}

impl LinkGeometry {
    pub fn new(state: &NetworkState, config: &ScenarioConfig) -> Result<Self> {
        let k = config.n_orus();
        let n = state.uavs.len();
        let mut dirs = vec![None; n * k];
        let mut gains = vec![0.0; n * k];
        for (i, uav) in state.uavs.iter().enumerate() {
            if !uav.active {
                continue;
            }
            for (j, oru) in config.oru_positions.iter().enumerate() {
                dirs[i * k + j] = Some(direction_to(oru, &uav.position)?);
                gains[i * k + j] = path_gain(
                    uav.position.distance(oru),
                    config.carrier_hz,
                    state.los.get(i, j),
                    uav.position.z,
                )?;
            }
        }
        Ok(Self { k, dirs, gains })
    }

    pub fn direction(&self, i: usize, k: usize) -> Option<&Direction> {
        self.dirs[i * self.k + k].as_ref()
    }

    /// Large-scale path gain of link `(i, k)`; zero for inactive users.
    pub fn path_gain(&self, i: usize, k: usize) -> f64 {
        self.gains[i * self.k + k]
    }
}

fn is_active(state: &NetworkState, i: usize) -> bool {
    state.uavs[i].active
}

/// `α_ik = P_ik · G0·L · h_ik`; rows of inactive users are zero.
pub fn link_means(
    state: &NetworkState,
    power: &PowerAllocation,
    config: &ScenarioConfig,
    geometry: &LinkGeometry,
) -> Matrix {
    let n = state.uavs.len();
    let k = config.n_orus();
    let wavenumber = config.wavenumber();
    let mut alpha = Matrix::zeros(n, k);
    for i in (0..n).filter(|&i| is_active(state, i)) {
        for j in 0..k {
            let p = power.p[(i, j)];
            if p == 0.0 {
                continue;
            }
            let dir = geometry.direction(i, j).expect("active link has a direction");
            let gain = steered_gain(dir, dir, &config.array, wavenumber);
            alpha[(i, j)] = p * gain * geometry.path_gain(i, j);
        }
    }
    alpha
}

/// `β_i = σ² + Σ_k Σ_{n≠i} P_nk · G_int(i, n, k) · h_ik` over active users.
pub fn interference_noise(
    state: &NetworkState,
    power: &PowerAllocation,
    config: &ScenarioConfig,
    geometry: &LinkGeometry,
) -> Vec<f64> {
    let n = state.uavs.len();
    let k = config.n_orus();
    let noise = config.noise_power_w();
    let wavenumber = config.wavenumber();
    let peak = config.array.peak_gain();
    let mut beta = vec![0.0; n];
    for victim in (0..n).filter(|&i| is_active(state, i)) {
        let mut interference = 0.0;
        for j in 0..k {
            let h = geometry.path_gain(victim, j);
            let victim_dir = geometry.direction(victim, j).expect("active link");
            for other in (0..n).filter(|&o| o != victim && is_active(state, o)) {
                let p = power.p[(other, j)];
                if p == 0.0 {
                    continue;
                }
                let gain = match config.interference_gain_mode {
                    InterferenceGainMode::SteeredAtVictim => {
                        let steer = geometry.direction(other, j).expect("active link");
                        steered_gain(victim_dir, steer, &config.array, wavenumber)
                    }
                    InterferenceGainMode::PeakGain => peak,
                };
                interference += p * gain * h;
            }
        }
        beta[victim] = noise + interference;
    }
    beta
}

/// Builds `α` and `β` for one step.
pub fn link_budget(
    state: &NetworkState,
    power: &PowerAllocation,
    config: &ScenarioConfig,
) -> Result<LinkBudget> {
    let geometry = LinkGeometry::new(state, config)?;
    Ok(LinkBudget {
        alpha: link_means(state, power, config, &geometry),
        beta: interference_noise(state, power, config, &geometry),
    })
}
