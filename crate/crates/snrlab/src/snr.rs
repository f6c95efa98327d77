//! Empirical SNR estimation, exact variance propagation, and closed-form
//! SNR predictions with their ratio bounds.
//!
//! Two independent prediction routes exist for LCI noise power: the printed
//! closed form ([`snr_lci_theory`]) and the exact propagation oracle
//! ([`lci_variance_oracle`]) that pushes per-measurement variances through
//! the dense inverse of the sensing matrix. The two are NOT asserted against
//! each other anywhere; the harness reports their gap per resolution and the
//! oracle is what Monte-Carlo runs are checked against.

use crate::architectures::TrialResult;
use crate::hadamard::{inverse_column_weights, SensingOperator};
use crate::scene::SceneVector;
use crate::{Arch, Error, Result};

/// Aggregated empirical SNR for one (architecture, resolution) cell, with
/// optional closed-form and oracle predictions attached.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrEstimate {
    pub arch: Arch,
    pub n: usize,
    pub trials: usize,
    /// Total signal power (scene brightness; gain-scaled for LAI).
    pub signal_power: f64,
    /// Mean residual noise power over the trial ensemble.
    pub noise_power: f64,
    /// signal_power / sqrt(noise_power); +inf sentinel when noise is zero.
    pub snr_linear: f64,
    pub snr_db: f64,
    pub theory_linear: Option<f64>,
    pub oracle_linear: Option<f64>,
}

impl SnrEstimate {
    /// Build an estimate from per-trial residual noise powers. Aggregation
    /// uses fixed-order pairwise summation so the result is independent of
    /// how trials were scheduled.
    pub fn from_residual_powers(
        arch: Arch,
        n: usize,
        signal_power: f64,
        residual_powers: &[f64],
    ) -> Result<Self> {
        if residual_powers.is_empty() {
            return Err(Error::Aggregation("empty trial ensemble".into()));
        }
        let trials = residual_powers.len();
        let noise_power = pairwise_sum(residual_powers) / trials as f64;
        let snr_linear = snr_from_powers(signal_power, noise_power);
        Ok(SnrEstimate {
            arch,
            n,
            trials,
            signal_power,
            noise_power,
            snr_linear,
            snr_db: db_sentinel(snr_linear),
            theory_linear: None,
            oracle_linear: None,
        })
    }
}

/// Aggregate a trial ensemble into one SNR estimate.
///
/// Requires at least two trials, all from the same architecture at the same
/// resolution. The residual-based noise power estimator is unbiased for the
/// total reconstruction variance because every pipeline is unbiased.
pub fn empirical_snr(trials: &[TrialResult]) -> Result<SnrEstimate> {
    if trials.len() < 2 {
        return Err(Error::Aggregation(format!(
            "need at least 2 trials, got {}",
            trials.len()
        )));
    }
    let arch = trials[0].arch;
    let n = trials[0].n;
    if trials.iter().any(|t| t.arch != arch || t.n != n) {
        return Err(Error::Aggregation(
            "mixed ensemble: all trials must share architecture and resolution".into(),
        ));
    }
    let residuals: Vec<f64> = trials.iter().map(|t| t.residual_power).collect();
    let signals: Vec<f64> = trials.iter().map(|t| t.signal_power()).collect();
    let signal_power = pairwise_sum(&signals) / signals.len() as f64;
    SnrEstimate::from_residual_powers(arch, n, signal_power, &residuals)
}

/// signal / sqrt(noise), with +inf as the zero-noise sentinel.
pub fn snr_from_powers(signal_power: f64, noise_power: f64) -> f64 {
    if noise_power == 0.0 {
        f64::INFINITY
    } else {
        signal_power / noise_power.sqrt()
    }
}

/// dB value used for table columns: accepts the sentinels (0 maps to -inf,
/// +inf stays +inf).
pub fn db_sentinel(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibel form of a positive linear SNR (or SNR ratio).
///
/// The convention is 10*log10 of the linear value, which makes a factor of
/// sqrt(2) come out as the conventional "about 1.5 dB".
pub fn to_db(linear: f64) -> Result<f64> {
    if linear.is_nan() || linear <= 0.0 {
        return Err(Error::Domain(format!(
            "dB conversion needs a positive value, got {linear}"
        )));
    }
    Ok(10.0 * linear.log10())
}

/// Exact total reconstruction variance for one LCI configuration:
/// `sum_j var(x~_j) = sum_i w_i (y_i + sigma^2)` with `w_i` the squared
/// column norms of the dense `A^-1` and `y = A x`.
///
/// Valid because measurement noises are independent with variance
/// `y_i + sigma^2` each, and the reconstruction is linear. This is the
/// ground truth that Monte-Carlo residual powers converge to, and the
/// reference the closed-form prediction is audited against.
pub fn lci_variance_oracle(scene: &SceneVector, op: &SensingOperator, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Domain(format!(
            "sigma must be nonnegative and finite, got {sigma}"
        )));
    }
    let weights = inverse_column_weights(op)?;
    let y = op.apply(scene.pixels())?;
    let s2 = sigma * sigma;
    Ok(y
        .iter()
        .zip(weights.iter())
        .map(|(yi, wi)| wi * (yi + s2))
        .sum())
}

/// Closed-form LCI SNR prediction at resolution `n`:
/// `x0 / sqrt((2 - 4/n) x0 + (4 - 4/n) sigma^2)`.
///
/// Reported as a prediction only; see [`lci_variance_oracle`].
pub fn snr_lci_theory(x0: f64, sigma: f64, n: usize) -> Result<f64> {
    check_positive("x0", x0)?;
    check_nonnegative("sigma", sigma)?;
    if n < 2 {
        return Err(Error::Domain(format!(
            "closed form needs n >= 2, got {n} (degenerate denominator at n = 1)"
        )));
    }
    let nf = n as f64;
    let denom = (2.0 - 4.0 / nf) * x0 + (4.0 - 4.0 / nf) * sigma * sigma;
    Ok(snr_from_powers(x0, denom))
}

/// Resolution-independent lower bound of the LCI SNR:
/// `x0 / sqrt(2 x0 + 4 sigma^2)`.
pub fn snr_lci_bound(x0: f64, sigma: f64) -> Result<f64> {
    check_positive("x0", x0)?;
    check_nonnegative("sigma", sigma)?;
    Ok(x0 / (2.0 * x0 + 4.0 * sigma * sigma).sqrt())
}

/// PAI SNR: `x0 / sqrt(x0 + n rho^2)`. Strictly decreasing in `n` for
/// `rho > 0`.
pub fn snr_pai_theory(x0: f64, rho: f64, n: usize) -> Result<f64> {
    check_nonnegative("x0", x0)?;
    check_nonnegative("rho", rho)?;
    let denom = x0 + n as f64 * rho * rho;
    if denom <= 0.0 {
        return Err(Error::Domain(
            "PAI SNR undefined: x0 + n rho^2 must be positive".into(),
        ));
    }
    Ok(x0 / denom.sqrt())
}

/// LAI SNR: `g x0 / sqrt(g x0 + n rho^2)`, i.e. the PAI SNR of a scene
/// brightened by the lens gain.
pub fn snr_lai_theory(x0: f64, rho: f64, n: usize, g: f64) -> Result<f64> {
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::Domain(format!(
            "lens gain must be positive, got {g}"
        )));
    }
    snr_pai_theory(g * x0, rho, n)
}

/// Guaranteed LCI/PAI SNR ratio: `sqrt(x0 + n rho^2) / sqrt(2 x0 + 4 sigma^2)`
/// (the exact expression, not its large-n simplification).
pub fn ratio_lci_pai(x0: f64, sigma: f64, rho: f64, n: usize) -> Result<f64> {
    check_positive("x0", x0)?;
    check_nonnegative("sigma", sigma)?;
    check_nonnegative("rho", rho)?;
    Ok(((x0 + n as f64 * rho * rho) / (2.0 * x0 + 4.0 * sigma * sigma)).sqrt())
}

/// Guaranteed LCI/LAI SNR ratio:
/// `sqrt(g x0 + n rho^2) / (g sqrt(2 x0 + 4 sigma^2))` (exact expression).
pub fn ratio_lci_lai(x0: f64, sigma: f64, rho: f64, n: usize, g: f64) -> Result<f64> {
    check_positive("x0", x0)?;
    check_nonnegative("sigma", sigma)?;
    check_nonnegative("rho", rho)?;
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::Domain(format!(
            "lens gain must be positive, got {g}"
        )));
    }
    Ok((g * x0 + n as f64 * rho * rho).sqrt() / (g * (2.0 * x0 + 4.0 * sigma * sigma).sqrt()))
}

/// Resolution at which the PAI closed form drops below the LCI lower bound:
/// `n* = (x0 + 4 sigma^2) / rho^2`.
pub fn theory_crossover(x0: f64, sigma: f64, rho: f64) -> Result<f64> {
    check_positive("x0", x0)?;
    check_nonnegative("sigma", sigma)?;
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::Domain(
            "crossover undefined for rho = 0 (PAI never drops below the bound)".into(),
        ));
    }
    Ok((x0 + 4.0 * sigma * sigma) / (rho * rho))
}

/// Smallest dyadic exponent `k <= max_log2` with
/// `snr_pai_theory(x0, rho, 2^k) < snr_lci_bound(x0, sigma)`.
pub fn first_dyadic_crossover(x0: f64, sigma: f64, rho: f64, max_log2: u32) -> Option<u32> {
    let bound = snr_lci_bound(x0, sigma).ok()?;
    (1..=max_log2).find(|&k| {
        snr_pai_theory(x0, rho, 1usize << k)
            .map(|snr| snr < bound)
            .unwrap_or(false)
    })
}

/// Fixed-order pairwise summation. The reduction tree depends only on the
/// slice length, so concurrent producers that fill the slice by index give
/// bit-identical totals.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Domain(format!(
            "{name} must be nonnegative and finite, got {v}"
        )));
    }
    Ok(())
}
