//! Uniform planar array geometry and steered beam gain.
//!
//! Arrays lie in the y–z plane with the same orientation at every ORU. Element
//! `(m, n)` sits at `(m·d_z, n·d_y)`; the steering vector is stored row-major
//! over `m` (z index) then `n` (y index).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SPEED_OF_LIGHT;
use crate::error::{ConfigError, Error, Result};
use crate::geometry::Point3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub m_z: usize,
    pub n_y: usize,
    pub d_z_m: f64,
    pub d_y_m: f64,
    pub g0_linear: f64,
}

impl ArrayConfig {
    /// `m_z × n_y` array with λ/2 spacing at `carrier_hz` and unit gain factor.
    pub fn half_wavelength(m_z: usize, n_y: usize, carrier_hz: f64) -> Self {
        let half = SPEED_OF_LIGHT / carrier_hz / 2.0;
        Self {
            m_z,
            n_y,
            d_z_m: half,
            d_y_m: half,
            g0_linear: 1.0,
        }
    }

    /// Number of elements `L`.
    pub fn len(&self) -> usize {
        self.m_z * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.is_empty() {
            return Err(ConfigError::Invariant("array.m_z * array.n_y must be >= 1".into()));
        }
        if !(self.d_z_m > 0.0 && self.d_y_m > 0.0) {
            return Err(ConfigError::Invariant("array spacings d_z_m, d_y_m must be > 0".into()));
        }
        if !(self.g0_linear > 0.0) {
            return Err(ConfigError::Invariant("array.g0_linear must be > 0".into()));
        }
        Ok(())
    }

    /// Gain toward the steered direction itself: `G0·L`.
    pub fn peak_gain(&self) -> f64 {
        self.g0_linear * self.len() as f64
    }
}

/// Zenith angle from the array's +z axis and azimuth from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta_rad: f64,
    pub phi_rad: f64,
}

impl Direction {
    pub fn new(theta_rad: f64, phi_rad: f64) -> Self {
        Self { theta_rad, phi_rad }
    }

    /// Phase slopes per unit spacing: `(cos θ, sin θ · sin φ)`.
    fn phase_slopes(&self) -> (f64, f64) {
        (
            self.theta_rad.cos(),
            self.theta_rad.sin() * self.phi_rad.sin(),
        )
    }
}

/// Direction of `target` as seen from `oru`.
pub fn direction_to(oru: &Point3, target: &Point3) -> Result<Direction> {
    let d = target.sub(oru);
    let horizontal = d.x.hypot(d.y);
    if horizontal == 0.0 && d.z == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    let theta = horizontal.atan2(d.z);
    let mut phi = if horizontal == 0.0 { 0.0 } else { d.y.atan2(d.x) };
    if phi <= -std::f64::consts::PI {
        phi += 2.0 * std::f64::consts::PI;
    }
    Ok(Direction::new(theta, phi))
}

/// Array response toward `dir`, length `L`, unit-magnitude entries.
pub fn steering_vector(dir: &Direction, array: &ArrayConfig, wavenumber: f64) -> Vec<Complex64> {
    let (cz, cy) = dir.phase_slopes();
    let dz = wavenumber * array.d_z_m * cz;
    let dy = wavenumber * array.d_y_m * cy;
    let mut out = Vec::with_capacity(array.len());
    for m in 0..array.m_z {
        for n in 0..array.n_y {
            out.push(Complex64::from_polar(1.0, m as f64 * dz + n as f64 * dy));
        }
    }
    out
}

/// Sum of `count` unit phasors with progression `delta`.
fn axis_sum(count: usize, delta: f64) -> Complex64 {
    (0..count)
        .map(|m| Complex64::from_polar(1.0, m as f64 * delta))
        .sum()
}

/// Gain `G0·|wᴴ a(target)|²` of a conjugate beam `w = a(steer)/√L`.
///
/// The planar response separates into a z-axis sum times a y-axis sum, so the
/// evaluation costs `M + N` phasors instead of `M·N`.
pub fn steered_gain(
    target: &Direction,
    steer: &Direction,
    array: &ArrayConfig,
    wavenumber: f64,
) -> f64 {
    let (tz, ty) = target.phase_slopes();
    let (sz, sy) = steer.phase_slopes();
    let delta_z = wavenumber * array.d_z_m * (tz - sz);
    let delta_y = wavenumber * array.d_y_m * (ty - sy);
    let az = axis_sum(array.m_z, delta_z).norm_sqr();
    let ay = axis_sum(array.n_y, delta_y).norm_sqr();
    array.g0_linear * az * ay / array.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn lambda_half_array(m_z: usize, n_y: usize) -> (ArrayConfig, f64) {
        // wavenumber 2π with unit wavelength
        let array = ArrayConfig {
            m_z,
            n_y,
            d_z_m: 0.5,
            d_y_m: 0.5,
            g0_linear: 1.0,
        };
        (array, 2.0 * PI)
    }

    #[test]
    fn straight_overhead() {
        let d = direction_to(&Point3::new(0.0, 0.0, 25.0), &Point3::new(0.0, 0.0, 125.0)).unwrap();
        assert_eq!(d.theta_rad, 0.0);
        assert_eq!(d.phi_rad, 0.0);
    }

    #[test]
    fn broadside_east() {
        let d = direction_to(&Point3::new(0.0, 0.0, 25.0), &Point3::new(100.0, 0.0, 25.0)).unwrap();
        assert!((d.theta_rad - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(d.phi_rad, 0.0);
    }

    #[test]
    fn diagonal_direction() {
        let d = direction_to(&Point3::new(0.0, 0.0, 0.0), &Point3::new(1.0, 1.0, 1.0)).unwrap();
        assert!((d.theta_rad - 0.955_316_618_124_509_3).abs() < 1e-15);
        assert!((d.phi_rad - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn azimuth_range_is_half_open() {
        let d = direction_to(&Point3::new(0.0, 0.0, 0.0), &Point3::new(-1.0, -0.0, 0.0)).unwrap();
        assert_eq!(d.phi_rad, PI);
    }

    #[test]
    fn coincident_positions_fail() {
        let p = Point3::new(3.0, 4.0, 5.0);
        assert!(matches!(direction_to(&p, &p), Err(Error::DegenerateGeometry)));
    }

    #[test]
    fn broadside_vector_is_all_ones() {
        let (array, k) = lambda_half_array(4, 4);
        for a in steering_vector(&Direction::new(FRAC_PI_2, 0.0), &array, k) {
            assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_element_zenith_vector() {
        let (array, k) = lambda_half_array(2, 1);
        let a = steering_vector(&Direction::new(0.0, 0.0), &array, k);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_entries_are_unit_magnitude() {
        let (array, k) = lambda_half_array(3, 5);
        for a in steering_vector(&Direction::new(0.7, -2.1), &array, k) {
            assert!((a.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_gain_is_l() {
        let (array, k) = lambda_half_array(4, 4);
        let d = Direction::new(1.1, 0.3);
        assert!((steered_gain(&d, &d, &array, k) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_null() {
        let (array, k) = lambda_half_array(2, 1);
        let g = steered_gain(&Direction::new(FRAC_PI_2, 0.0), &Direction::new(0.0, 0.0), &array, k);
        assert!(g.abs() < 1e-30);
    }

    #[test]
    fn gain_invariant_under_full_turn_of_azimuth() {
        let (array, k) = lambda_half_array(4, 4);
        let t = Direction::new(0.9, 0.4);
        let s = Direction::new(1.3, -1.0);
        let t2 = Direction::new(0.9, 0.4 + 2.0 * PI);
        let s2 = Direction::new(1.3, -1.0 + 2.0 * PI);
        let a = steered_gain(&t, &s, &array, k);
        let b = steered_gain(&t2, &s2, &array, k);
        assert!((a - b).abs() <= 1e-12 * a.max(1e-12));
    }

    #[test]
    fn half_wavelength_default_geometry() {
        let a = ArrayConfig::half_wavelength(4, 4, 2.4e9);
        assert_eq!(a.len(), 16);
        assert!((a.d_z_m - 0.062_456_762).abs() < 1e-9);
        assert_eq!(a.peak_gain(), 16.0);
    }
}
