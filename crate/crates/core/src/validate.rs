//! Monte-Carlo cross-check of the closed-form outage.
//!
//! Each case draws a cluster of 1–5 means log-uniform over six decades, picks
//! a target outage log-uniform in `[1e-4, 0.99]`, solves for the threshold
//! `s` that produces it, and compares the closed form at `s` with a
//! Monte-Carlo estimate. A case passes when
//! `|closed − mc| ≤ 4·std_error + 1e-4`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::outage::{mc_outage, outage_probability, ExponentialSum};
use crate::rng::{RandomSource, Stream};

pub const SIGMA_MULTIPLIER: f64 = 4.0;
pub const ABS_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub means: Vec<f64>,
    pub s: f64,
    pub closed_form: f64,
    pub mc: f64,
    pub std_error: f64,
}

impl CaseResult {
    pub fn deviation(&self) -> f64 {
        (self.closed_form - self.mc).abs()
    }

    pub fn tolerance(&self) -> f64 {
        SIGMA_MULTIPLIER * self.std_error + ABS_SLACK
    }

    pub fn passes(&self) -> bool {
        self.deviation() <= self.tolerance()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub cases: Vec<CaseResult>,
}

impl ValidationReport {
    pub fn max_deviation(&self) -> f64 {
        self.cases.iter().map(CaseResult::deviation).fold(0.0, f64::max)
    }

    /// Largest `deviation − tolerance`; non-positive when every case passes.
    pub fn worst_margin(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.deviation() - c.tolerance())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(CaseResult::passes)
    }
}

/// Threshold `s` at which the closed-form outage equals `target`.
pub fn threshold_for(sum: &ExponentialSum, target: f64) -> Result<f64> {
    let eps = |s: f64| outage_probability(sum, 1.0, s);
    let mut hi = sum.means().iter().sum::<f64>();
    while eps(hi)? < target {
        hi *= 2.0;
    }
    let mut lo = hi;
    while eps(lo)? > target {
        lo /= 2.0;
    }
    // bisection in log space
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if eps(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

fn draw_case<R: Rng + ?Sized>(rng: &mut R) -> Result<(ExponentialSum, f64)> {
    let size = rng.random_range(1..=5);
    let means: Vec<f64> = (0..size).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
    let sum = ExponentialSum::new(means)?;
    let target = 10f64.powf(rng.random_range(-4.0..0.99f64.log10()));
    let s = threshold_for(&sum, target)?;
    Ok((sum, s))
}

pub fn run_case(seed: u64, case: usize, samples: u64) -> Result<CaseResult> {
    let mut gen = RandomSource::named(seed, Stream::FadingOracle(2 * case));
    let mut mc_rng = RandomSource::named(seed, Stream::FadingOracle(2 * case + 1));
    let (sum, s) = draw_case(&mut gen)?;
    let closed_form = outage_probability(&sum, 1.0, s)?;
    let (mc, std_error) = mc_outage(&sum, s, samples, &mut mc_rng)?;
    Ok(CaseResult {
        means: sum.means().to_vec(),
        s,
        closed_form,
        mc,
        std_error,
    })
}

/// Runs `cases` independent cases in parallel; results are ordered by case index
/// and do not depend on thread scheduling.
pub fn validate_outage(cases: usize, samples: u64, seed: u64) -> Result<ValidationReport> {
    let cases = (0..cases)
        .into_par_iter()
        .map(|case| run_case(seed, case, samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport { cases })
}
