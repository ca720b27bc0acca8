//! UAV mobility: Ornstein–Uhlenbeck velocity pulled toward a waypoint, with
//! reflection at the area boundary and a fixed flight altitude.
//!
//! Per axis the velocity follows `dv = θ(v_des − v)dt + σ dW` where `v_des`
//! points at the current waypoint with speed `0.8·v_max`. Each step applies
//! the exact transition of that SDE over `dt`, so the stationary velocity
//! spread is `σ/√(2θ)` for any step length.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::Point3;

/// Fraction of `v_max` used as the cruise speed toward the waypoint.
pub const CRUISE_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub theta_revert_per_s: f64,
    pub sigma_accel: f64,
    pub v_max_m_s: f64,
    pub waypoint_dwell_s: f64,
    pub altitude_m: f64,
    pub position_noise_std_m: f64,
    /// Clamp speed to `v_max_m_s`. Only switched off to study the raw process.
    #[serde(default = "yes")]
    pub clamp_speed: bool,
}

fn yes() -> bool {
    true
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            theta_revert_per_s: 0.3,
            sigma_accel: 1.0,
            v_max_m_s: 20.0,
            waypoint_dwell_s: 120.0,
            altitude_m: 100.0,
            position_noise_std_m: 5.0,
            clamp_speed: true,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("theta_revert_per_s", self.theta_revert_per_s),
            ("sigma_accel", self.sigma_accel),
            ("v_max_m_s", self.v_max_m_s),
            ("waypoint_dwell_s", self.waypoint_dwell_s),
            ("altitude_m", self.altitude_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(ConfigError::Invariant(format!("mobility.{name} must be > 0")));
            }
        }
        if !(self.position_noise_std_m >= 0.0) {
            return Err(ConfigError::Invariant(
                "mobility.position_noise_std_m must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Rectangular service area `[0, x] × [0, y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x: f64,
    pub y: f64,
}

impl Area {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.x).contains(&x) && (0.0..=self.y).contains(&y)
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        [rng.random::<f64>() * self.x, rng.random::<f64>() * self.y]
    }

    /// Uniform point on the perimeter.
    pub fn boundary_point<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let u = rng.random::<f64>() * 2.0 * (self.x + self.y);
        if u < self.x {
            [u, 0.0]
        } else if u < self.x + self.y {
            [self.x, u - self.x]
        } else if u < 2.0 * self.x + self.y {
            [2.0 * self.x + self.y - u, self.y]
        } else {
            [0.0, 2.0 * (self.x + self.y) - u]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavKinematics {
    pub position: Point3,
    pub velocity: [f64; 2],
    pub waypoint: [f64; 2],
    pub active: bool,
}

impl UavKinematics {
    pub fn at_rest(xy: [f64; 2], waypoint: [f64; 2], cfg: &MobilityConfig) -> Self {
        Self {
            position: Point3::new(xy[0], xy[1], cfg.altitude_m),
            velocity: [0.0, 0.0],
            waypoint,
            active: true,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }
}

/// Velocity the UAV is pulled toward: cruise speed aimed at the waypoint.
pub fn desired_velocity(state: &UavKinematics, cfg: &MobilityConfig) -> [f64; 2] {
    let dx = state.waypoint[0] - state.position.x;
    let dy = state.waypoint[1] - state.position.y;
    let dist = dx.hypot(dy);
    if dist == 0.0 {
        return [0.0, 0.0];
    }
    let speed = CRUISE_FRACTION * cfg.v_max_m_s;
    [speed * dx / dist, speed * dy / dist]
}

/// Folds `x` back into `[0, hi]`; returns the folded value and whether the
/// number of wall bounces was odd.
fn reflect(mut x: f64, hi: f64) -> (f64, bool) {
    let mut flipped = false;
    if !(0.0..=hi).contains(&x) {
        let period = 2.0 * hi;
        x = x.rem_euclid(period);
        if x > hi {
            x = period - x;
        }
        flipped = true;
    }
    (x, flipped)
}

/// Advances one UAV by `dt` seconds.
pub fn mobility_step<R: Rng + ?Sized>(
    state: &UavKinematics,
    cfg: &MobilityConfig,
    area: Area,
    dt: f64,
    rng: &mut R,
) -> UavKinematics {
    let target = desired_velocity(state, cfg);
    let decay = (-cfg.theta_revert_per_s * dt).exp();
    let spread =
        cfg.sigma_accel * ((1.0 - decay * decay) / (2.0 * cfg.theta_revert_per_s)).sqrt();
    let mut v = [0.0; 2];
    for axis in 0..2 {
        let xi: f64 = rng.sample(StandardNormal);
        v[axis] = target[axis] + (state.velocity[axis] - target[axis]) * decay + spread * xi;
    }
    let speed = v[0].hypot(v[1]);
    if cfg.clamp_speed && speed > cfg.v_max_m_s {
        let scale = cfg.v_max_m_s / speed;
        v = [v[0] * scale, v[1] * scale];
    }

    let (x, flip_x) = reflect(state.position.x + v[0] * dt, area.x);
    let (y, flip_y) = reflect(state.position.y + v[1] * dt, area.y);
    if flip_x {
        v[0] = -v[0];
    }
    if flip_y {
        v[1] = -v[1];
    }

    let mut waypoint = state.waypoint;
    if rng.random::<f64>() < dt / cfg.waypoint_dwell_s {
        waypoint = area.uniform_point(rng);
    }

    UavKinematics {
        position: Point3::new(x, y, cfg.altitude_m),
        velocity: v,
        waypoint,
        active: state.active,
    }
}

/// True position with isotropic horizontal Gaussian noise; altitude is exact.
pub fn observed_position<R: Rng + ?Sized>(
    state: &UavKinematics,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> Point3 {
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    Point3::new(
        state.position.x + cfg.position_noise_std_m * nx,
        state.position.y + cfg.position_noise_std_m * ny,
        state.position.z,
    )
}
