//! Soft-failure time distribution under normal use.
//!
//! A unit fails when its degradation path crosses `y0`. Under the mixed model
//! the failure time has CDF `F(t) = Φ(h(t))` with
//! `h(t) = (μ(t) − y0) / σ_u(t)`, `μ(t) = f2(t)ᵀδ` and
//! `σ_u²(t) = f2(t)ᵀ Σγ f2(t)`.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{DesignError, Result};
use crate::model::{eval_delta, DegradationModel};

/// Initial upper end of the root bracket.
const BRACKET_START: f64 = 1.0;
/// The bracket is doubled until it passes this bound.
const BRACKET_LIMIT: f64 = 1e6;
/// Residual bound on `|h(t) − z_α|` for a returned quantile.
pub const QUANTILE_TOL: f64 = 1e-10;
const MONOTONICITY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileResult {
    pub alpha: f64,
    /// Standardized time; only meaningful when `exists`.
    pub t_alpha: f64,
    pub exists: bool,
    pub bounds_used: (f64, f64),
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `z_α`.
pub fn std_normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(alpha)
}

/// Aggregate degradation path `μ(t) = f2(t)ᵀδ`.
pub fn mu_aggregate(t: f64, model: &DegradationModel) -> f64 {
    model.time_basis().eval(t).dot(&eval_delta(model))
}

/// Variance of the unit-level path around `μ(t)`.
pub fn sigma_u2(t: f64, model: &DegradationModel) -> f64 {
    let f = model.time_basis().eval(t);
    (f.transpose() * model.sigma_gamma() * &f)[(0, 0)].max(0.0)
}

/// Standardized margin `h(t) = (μ(t) − y0) / σ_u(t)`.
pub fn h(t: f64, model: &DegradationModel) -> Result<f64> {
    let mu = mu_aggregate(t, model);
    let var = sigma_u2(t, model);
    let gap = mu - model.y0();
    if var > 0.0 {
        Ok(gap / var.sqrt())
    } else if gap != 0.0 {
        Err(DesignError::DegenerateVariance { t })
    } else {
        Err(DesignError::IndeterminateMargin { t })
    }
}

/// `h` extended to ±∞ where the path variance vanishes.
fn h_extended(t: f64, model: &DegradationModel) -> Result<f64> {
    match h(t, model) {
        Err(DesignError::DegenerateVariance { .. }) => {
            Ok(if mu_aggregate(t, model) > model.y0() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            })
        }
        other => other,
    }
}

pub fn failure_cdf(t: f64, model: &DegradationModel) -> Result<f64> {
    Ok(std_normal_cdf(h(t, model)?))
}

/// Median failure time.
///
/// For straight-line paths this is `(y0 − δ1) / δ2`, which does not involve
/// the random-effect covariance at all. Other bases solve `μ(t) = y0` by
/// bracketed bisection.
pub fn median_failure_time(model: &DegradationModel) -> Result<f64> {
    let delta = eval_delta(model);
    let y0 = model.y0();
    if model.time_basis().is_affine() {
        let (d1, d2) = (delta[0], delta[1]);
        if !(d2 > 0.0) || !(d1 < y0) {
            return Err(DesignError::NoPositiveMedian {
                delta1: d1,
                delta2: d2,
                y0,
            });
        }
        return Ok((y0 - d1) / d2);
    }
    let no_median = || DesignError::NoPositiveMedian {
        delta1: delta[0],
        delta2: delta.get(1).copied().unwrap_or(0.0),
        y0,
    };
    let gap = |t: f64| mu_aggregate(t, model) - y0;
    if !(gap(0.0) < 0.0) {
        return Err(no_median());
    }
    let mut hi = BRACKET_START;
    while gap(hi) <= 0.0 {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(no_median());
        }
    }
    Ok(bisect(gap, 0.0, hi))
}

/// Failure-time quantile `t_α`, the root of `h(t) = z_α`.
///
/// Non-existence (α outside the attainable window) is reported through
/// `exists = false`. When `h` is not guaranteed increasing (ρ < 0 or a
/// non-affine basis), monotonicity is verified on the bracket first and a
/// [`DesignError::NonMonotone`] error is returned if it fails.
pub fn quantile(alpha: f64, model: &DegradationModel) -> Result<QuantileResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DesignError::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let z = std_normal_quantile(alpha);
    let missing = |bounds| QuantileResult {
        alpha,
        t_alpha: f64::NAN,
        exists: false,
        bounds_used: bounds,
    };

    let lo = 0.0;
    if h_extended(lo, model)? >= z {
        return Ok(missing((lo, lo)));
    }
    let mut hi = BRACKET_START;
    while h_extended(hi, model)? <= z {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Ok(missing((lo, hi)));
        }
    }
    if !monotone_by_construction(model) {
        verify_increasing(model, lo, hi)?;
    }
    let g = |t: f64| h_extended(t, model).map_or(f64::NAN, |v| v - z);
    let t = bisect(g, lo, hi);
    let residual = (h(t, model)? - z).abs();
    if residual > QUANTILE_TOL {
        // the root is bracketed to machine precision, so a large residual
        // means h is too steep to resolve at this t
        return Err(DesignError::Config(format!(
            "quantile residual {residual:e} exceeds {QUANTILE_TOL:e} at t = {t}"
        )));
    }
    Ok(QuantileResult {
        alpha,
        t_alpha: t,
        exists: true,
        bounds_used: (lo, hi),
    })
}

/// Open interval of α for which a positive quantile exists, straight-line
/// paths only: `(Φ(−(y0 − δ1)/σ1), Φ(δ2/σ2))`.
pub fn existence_window(model: &DegradationModel) -> Option<(f64, f64)> {
    let (s1, s2, _) = model.variance_components()?;
    let delta = eval_delta(model);
    let lower = if s1 > 0.0 {
        std_normal_cdf(-(model.y0() - delta[0]) / s1)
    } else {
        0.0
    };
    let upper = if s2 > 0.0 {
        std_normal_cdf(delta[1] / s2)
    } else if delta[1] > 0.0 {
        1.0
    } else {
        0.0
    };
    Some((lower, upper))
}

fn monotone_by_construction(model: &DegradationModel) -> bool {
    match model.variance_components() {
        Some((_, _, rho)) if model.time_basis().is_affine() => {
            rho >= 0.0 && eval_delta(model)[1] > 0.0
        }
        _ => false,
    }
}

fn verify_increasing(model: &DegradationModel, lo: f64, hi: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=MONOTONICITY_SAMPLES {
        let t = lo + (hi - lo) * i as f64 / MONOTONICITY_SAMPLES as f64;
        let v = h_extended(t, model)?;
        if v.is_finite() && v <= prev {
            return Err(DesignError::NonMonotone { lo, hi });
        }
        if v.is_finite() {
            prev = v;
        }
    }
    Ok(())
}

/// Bisection on a sign change `g(lo) < 0 < g(hi)`, down to adjacent floats.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(hi).abs() < g(lo).abs() {
        hi
    } else {
        lo
    }
}
