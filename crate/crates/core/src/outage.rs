//! Exact SINR outage under Rayleigh fading.
//!
//! With Rayleigh serving links the received power of a cluster is a sum of
//! independent exponentials `T = Σ Y_k`, `Y_k ~ Exp(mean α_k)`. For pairwise
//! distinct means its survival function is
//!
//! ```text
//! P(T > s) = Σ_k C_k · exp(−s/α_k),   C_k = Π_{j≠k} α_k / (α_k − α_j)
//! ```
//!
//! and the outage probability for threshold `γ_th` and interference-plus-noise
//! `β` is `P(T < γ_th·β)`.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Minimum relative gap between two means accepted by the closed form.
pub const MIN_RELATIVE_GAP: f64 = 1e-9;

/// Multiplicative nudge applied to a mean that collides with another.
pub const PERTURBATION: f64 = 1e-8;

/// Exponential means of one user's serving cluster, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialSum {
    means: Vec<f64>,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b)
}

impl ExponentialSum {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::EmptyInput("exponential sum needs at least one mean"));
        }
        if let Some(bad) = means.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::Domain(format!("exponential means must be > 0, got {bad}")));
        }
        for (k, &a) in means.iter().enumerate() {
            for &b in &means[..k] {
                let gap = relative_gap(a, b);
                if gap <= MIN_RELATIVE_GAP {
                    return Err(Error::IllConditioned { a, b, gap });
                }
            }
        }
        Ok(Self { means })
    }

    /// Like [`ExponentialSum::new`] but nudges colliding means apart by factors
    /// of `1 + 1e-8` until every pair clears the gap guard.
    pub fn perturbed(mut means: Vec<f64>) -> Result<Self> {
        for k in 1..means.len() {
            while means[..k]
                .iter()
                .any(|&b| relative_gap(means[k], b) <= MIN_RELATIVE_GAP)
            {
                means[k] *= 1.0 + PERTURBATION;
            }
        }
        Self::new(means)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Partial-fraction weights `C_k`; they sum to one.
    pub fn coefficients(&self) -> Vec<f64> {
        self.means
            .iter()
            .enumerate()
            .map(|(k, &ak)| {
                self.means
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &aj)| ak / (ak - aj))
                    .product()
            })
            .collect()
    }
}

fn check_threshold(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold must be >= 0, got {s}")))
    }
}

/// Survival function `P(T > s)` before clamping to `[0, 1]`.
pub fn hypoexp_sf_unclamped(sum: &ExponentialSum, s: f64) -> Result<f64> {
    check_threshold(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(sum
        .coefficients()
        .iter()
        .zip(sum.means())
        .map(|(c, a)| c * (-s / a).exp())
        .sum())
}

/// Survival function `P(T > s)`, clamped to `[0, 1]`.
pub fn hypoexp_sf(sum: &ExponentialSum, s: f64) -> Result<f64> {
    Ok(hypoexp_sf_unclamped(sum, s)?.clamp(0.0, 1.0))
}

/// `P(T < γ_th·β)`.
///
/// Evaluated as `Σ C_k·(1 − e^{−s/α_k})` with `expm1`, which equals
/// `1 − hypoexp_sf` but keeps relative accuracy for tiny outages.
pub fn outage_probability(sum: &ExponentialSum, gamma_th_linear: f64, beta_w: f64) -> Result<f64> {
    if !(gamma_th_linear > 0.0) || !(beta_w >= 0.0) {
        return Err(Error::Domain(format!(
            "need gamma_th > 0 and beta >= 0, got {gamma_th_linear}, {beta_w}"
        )));
    }
    let s = gamma_th_linear * beta_w;
    if s == 0.0 {
        return Ok(0.0);
    }
    let eps: f64 = sum
        .coefficients()
        .iter()
        .zip(sum.means())
        .map(|(c, a)| -c * (-s / a).exp_m1())
        .sum();
    Ok(eps.clamp(0.0, 1.0))
}

/// Monte-Carlo estimate of `P(T < s)` with its binomial standard error.
pub fn mc_outage<R: Rng + ?Sized>(
    sum: &ExponentialSum,
    s: f64,
    n_samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_threshold(s)?;
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be >= 1".into()));
    }
    let mut below = 0u64;
    for _ in 0..n_samples {
        let t: f64 = sum
            .means()
            .iter()
            .map(|a| a * rng.sample::<f64, _>(Exp1))
            .sum();
        if t < s {
            below += 1;
        }
    }
    let p = below as f64 / n_samples as f64;
    Ok((p, (p * (1.0 - p) / n_samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RandomSource, Stream};
    use proptest::prelude::*;

    fn sum(means: &[f64]) -> ExponentialSum {
        ExponentialSum::new(means.to_vec()).unwrap()
    }

    #[test]
    fn single_exponential() {
        let v = hypoexp_sf(&sum(&[2.0]), 2.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.367_879_4).abs() < 1e-7);
    }

    #[test]
    fn two_term_closed_form() {
        let v = hypoexp_sf(&sum(&[1.0, 2.0]), 1.0).unwrap();
        let expected = 2.0 * (-0.5f64).exp() - (-1f64).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.845_181_878_253_824_5).abs() < 1e-12);
    }

    #[test]
    fn survival_at_zero_is_one() {
        assert_eq!(hypoexp_sf(&sum(&[0.3, 7.0, 11.0]), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_threshold_means_no_outage() {
        assert_eq!(outage_probability(&sum(&[1.0, 3.0]), 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_link_outage() {
        let eps = outage_probability(&sum(&[2.0]), 1.0, 2.0).unwrap();
        assert!((eps - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((eps - 0.632_120_6).abs() < 1e-7);
    }

    #[test]
    fn coincident_means_are_ill_conditioned() {
        let err = ExponentialSum::new(vec![1.0, 1.0 + 1e-12]).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
        assert!(err.to_string().contains("perturb"));
    }

    #[test]
    fn empty_and_nonpositive_means_rejected() {
        assert!(ExponentialSum::new(vec![]).is_err());
        assert!(ExponentialSum::new(vec![1.0, 0.0]).is_err());
        assert!(ExponentialSum::new(vec![-2.0]).is_err());
    }

    #[test]
    fn perturbation_separates_triples() {
        let s = ExponentialSum::perturbed(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.means()[0], 1.0);
        assert!(s.means()[1] > 1.0 && s.means()[2] > s.means()[1]);
    }

    #[test]
    fn perturbed_pair_outage_matches_oracle() {
        // two equal means: the exact law is Erlang(2), P(T < s) = 1 − e^{−x}(1 + x)
        let a = 3.0e-10;
        let s = 2.5e-10;
        let pair = ExponentialSum::perturbed(vec![a, a]).unwrap();
        let eps = outage_probability(&pair, 1.0, s).unwrap();
        let x = s / a;
        let erlang = 1.0 - (-x).exp() * (1.0 + x);
        assert!((eps - erlang).abs() < 1e-6, "{eps} vs {erlang}");
        let mut rng = RandomSource::named(5, Stream::FadingOracle(0));
        let (mc, se) = mc_outage(&pair, s, 1_000_000, &mut rng).unwrap();
        assert!((eps - mc).abs() <= 4.0 * se, "{eps} vs {mc} ± {se}");
    }

    #[test]
    fn mc_exponential_cdf() {
        let mut rng = RandomSource::named(1, Stream::FadingOracle(0));
        let (p, se) = mc_outage(&sum(&[1.0]), 0.7, 200_000, &mut rng).unwrap();
        assert!((p - (1.0 - (-0.7f64).exp())).abs() <= 4.0 * se);
    }

    #[test]
    fn mc_at_zero() {
        let mut rng = RandomSource::named(1, Stream::FadingOracle(0));
        assert_eq!(mc_outage(&sum(&[1.0, 5.0]), 0.0, 1000, &mut rng).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn mc_two_term() {
        let mut rng = RandomSource::named(2, Stream::FadingOracle(0));
        let (p, se) = mc_outage(&sum(&[1.0, 2.0]), 1.0, 1_000_000, &mut rng).unwrap();
        assert!((p - 0.154_818_121_746_175_5).abs() <= 4.0 * se, "{p} ± {se}");
    }

    fn distinct_means() -> impl Strategy<Value = Vec<f64>> {
        // log-spaced with at least 1% separation so the closed form is well conditioned
        (1usize..=5, -6.0f64..6.0, proptest::collection::vec(0.01f64..2.0, 5)).prop_map(
            |(n, start, steps)| {
                let mut log = start;
                let mut out = Vec::with_capacity(n);
                for step in &steps[..n] {
                    out.push(10f64.powf(log));
                    log += step;
                }
                out
            },
        )
    }

    proptest! {
        #[test]
        fn sf_bounded_and_monotone(means in distinct_means(), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            let sum = ExponentialSum::new(means.clone()).unwrap();
            let scale = means.iter().cloned().fold(0.0, f64::max) * 10.0;
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            let a = hypoexp_sf_unclamped(&sum, lo * scale).unwrap();
            let b = hypoexp_sf_unclamped(&sum, hi * scale).unwrap();
            prop_assert!((-1e-6..=1.0 + 1e-6).contains(&a));
            prop_assert!((-1e-6..=1.0 + 1e-6).contains(&b));
            prop_assert!(hypoexp_sf(&sum, hi * scale).unwrap() <= hypoexp_sf(&sum, lo * scale).unwrap() + 1e-9);
        }

        #[test]
        fn permutation_invariant(means in distinct_means(), frac in 0.01f64..3.0, rot in 0usize..5) {
            let s = frac * means.iter().sum::<f64>();
            let mut rotated = means.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            rotated.reverse();
            let a = hypoexp_sf(&ExponentialSum::new(means).unwrap(), s).unwrap();
            let b = hypoexp_sf(&ExponentialSum::new(rotated).unwrap(), s).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }

        #[test]
        fn more_power_less_outage(means in distinct_means(), frac in 0.05f64..3.0, pick in 0usize..5, boost in 1.5f64..4.0) {
            let s = frac * means.iter().sum::<f64>();
            let k = pick % means.len();
            let mut stronger = means.clone();
            stronger[k] *= boost;
            if let Ok(stronger) = ExponentialSum::new(stronger) {
                let base = outage_probability(&ExponentialSum::new(means).unwrap(), 1.0, s).unwrap();
                let better = outage_probability(&stronger, 1.0, s).unwrap();
                prop_assert!(better < base || base < 1e-300, "{} !< {}", better, base);
            }
        }

        #[test]
        fn sf_vanishes_far_out(means in distinct_means()) {
            let sum = ExponentialSum::new(means.clone()).unwrap();
            let s = 200.0 * means.iter().cloned().fold(0.0, f64::max);
            prop_assert!(hypoexp_sf(&sum, s).unwrap() < 1e-12);
        }
    }
}
