//! Information matrices and the c-criterion for the median failure time.
//!
//! The asymptotic variance of the estimated median factorizes as
//!
//! ```text
//! aVar = c0² · f1(x_u)ᵀ M1⁻¹ f1(x_u) · f2(t*)ᵀ M2⁻¹ f2(t*)
//! ```
//!
//! and the inverse of the mixed-model time information splits into a
//! fixed-effect part plus the random-effect covariance,
//! `M2⁻¹ = M2⁽⁰⁾⁻¹ + Σγ`. Only the first part depends on the time plan.
//!
//! Normalization: for an approximate time plan `τ` the fixed-effect
//! information is per observation, `M2⁽⁰⁾(τ) = σε⁻² Σ_j π_j f2(t_j) f2(t_j)ᵀ`,
//! without a factor `k`. For an exact k-point plan this equals
//! `F2ᵀ Σε⁻¹ F2 / k`; the unscaled `F2ᵀ Σε⁻¹ F2` is available from
//! [`info_time_fixed_exact`].
//!
//! All criterion values are reported up to the constant `c0²`, which is fixed
//! to one. Only the median (α = 0.5) is supported for design purposes.

use nalgebra::{DMatrix, DVector};

use crate::design::ApproximateDesign;
use crate::error::{DesignError, Result};
use crate::failure::median_failure_time;
use crate::linalg::{spd_inverse, spd_solve};
use crate::model::{design_matrix, DegradationModel, ErrorSpec, TimeMarginal};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeInfoMatrices {
    /// Inverse of the mixed-model information, `M2⁽⁰⁾⁻¹ + Σγ`.
    pub m2_inverse: DMatrix<f64>,
    pub m2_0: DMatrix<f64>,
    pub criterion_fixed: f64,
    pub criterion_random: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionReport {
    pub criterion_total: f64,
    pub criterion_fixed: f64,
    pub criterion_random: f64,
    /// `f1(x_u)ᵀ M1⁻¹ f1(x_u)`, when a stress design was supplied.
    pub stress_factor: Option<f64>,
    pub t_star: f64,
}

/// Extrapolation time used for design optimization.
///
/// Returns the median failure time for `alpha = 0.5`. Other quantiles need
/// the information for the variance parameters, which is not modeled here,
/// so they are rejected.
pub fn design_target(alpha: f64, model: &DegradationModel) -> Result<f64> {
    if alpha != 0.5 {
        return Err(DesignError::Unsupported(format!(
            "design optimization is implemented for the median only (alpha = 0.5), got alpha = {alpha}; \
             other quantiles require the variance-parameter information"
        )));
    }
    median_failure_time(model)
}

/// Fixed-effect time information, normalized per observation.
///
/// With a full Σε the design must be an exact plan with `k = dim Σε` equally
/// weighted points.
pub fn info_time_fixed(design: &ApproximateDesign, model: &DegradationModel) -> Result<DMatrix<f64>> {
    match model.error() {
        ErrorSpec::Homoscedastic { .. } => Ok(info_time_marginal(design, &model.time_marginal()?)),
        ErrorSpec::Full(se) => {
            let k = design.len();
            if se.nrows() != k {
                return Err(DesignError::Config(format!(
                    "full sigma_eps is {0}x{0} but the design has {k} points",
                    se.nrows()
                )));
            }
            if design.weights().iter().any(|w| (w - 1.0 / k as f64).abs() > 1e-12) {
                return Err(DesignError::Config(
                    "a full sigma_eps requires an exact plan with equal weights 1/k".into(),
                ));
            }
            Ok(info_time_fixed_exact(design.points(), model)? / k as f64)
        }
    }
}

/// `σε⁻² Σ_j π_j f2(t_j) f2(t_j)ᵀ` for the fixed-effect time marginal.
pub fn info_time_marginal(design: &ApproximateDesign, marginal: &TimeMarginal) -> DMatrix<f64> {
    let p = marginal.basis.dim();
    let mut m = DMatrix::zeros(p, p);
    for (t, w) in design.iter() {
        let f = marginal.basis.eval(t);
        m += (&f * f.transpose()) * w;
    }
    m / (marginal.sigma_eps * marginal.sigma_eps)
}

/// Unnormalized exact-plan information `F2ᵀ Σε⁻¹ F2` (k-scaled).
pub fn info_time_fixed_exact(time_points: &[f64], model: &DegradationModel) -> Result<DMatrix<f64>> {
    let f2 = design_matrix(time_points, model.time_basis());
    match model.error() {
        ErrorSpec::Homoscedastic { sigma_eps } => {
            Ok(f2.transpose() * &f2 / (sigma_eps * sigma_eps))
        }
        ErrorSpec::Full(se) => {
            if se.nrows() != time_points.len() {
                return Err(DesignError::Config(format!(
                    "full sigma_eps is {0}x{0} but the plan has {1} points",
                    se.nrows(),
                    time_points.len()
                )));
            }
            let se_inv = spd_inverse(se)?;
            Ok(f2.transpose() * se_inv * &f2)
        }
    }
}

/// Inverse mixed-model information via `(Fᵀ Σε⁻¹ F)⁻¹ + Σγ`.
pub fn mixed_inverse_decomposed(
    f: &DMatrix<f64>,
    sigma_gamma: &DMatrix<f64>,
    sigma_eps: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let se_inv = spd_inverse(sigma_eps)?;
    let fixed = f.transpose() * se_inv * f;
    Ok(spd_inverse(&fixed)? + sigma_gamma)
}

/// `M2⁻¹ = M2⁽⁰⁾(τ)⁻¹ + Σγ` with the per-observation normalization.
pub fn inv_info_time_mixed(design: &ApproximateDesign, model: &DegradationModel) -> Result<DMatrix<f64>> {
    let m0 = info_time_fixed(design, model)?;
    Ok(spd_inverse(&m0)? + model.sigma_gamma())
}

/// All time-marginal quantities for one plan.
pub fn time_info(design: &ApproximateDesign, model: &DegradationModel, t_star: f64) -> Result<TimeInfoMatrices> {
    let m2_0 = info_time_fixed(design, model)?;
    let c = model.time_basis().eval(t_star);
    let m0_inv = spd_inverse(&m2_0)?;
    let criterion_fixed = c.dot(&(&m0_inv * &c));
    let criterion_random = c.dot(&(model.sigma_gamma() * &c));
    Ok(TimeInfoMatrices {
        m2_inverse: m0_inv + model.sigma_gamma(),
        m2_0,
        criterion_fixed,
        criterion_random,
    })
}

/// Fixed-effect c-criterion `f2(t*)ᵀ M2⁽⁰⁾⁻¹ f2(t*)` on the time marginal alone.
pub fn c_criterion_fixed(design: &ApproximateDesign, marginal: &TimeMarginal, t_star: f64) -> Result<f64> {
    let m = info_time_marginal(design, marginal);
    let c = marginal.basis.eval(t_star);
    Ok(c.dot(&spd_solve(&m, &c)?))
}

pub fn c_criterion_time(design: &ApproximateDesign, model: &DegradationModel, t_star: f64) -> Result<CriterionReport> {
    if !(t_star > 0.0 && t_star.is_finite()) {
        return Err(DesignError::Config(format!("t_star must be positive, got {t_star}")));
    }
    let m0 = info_time_fixed(design, model)?;
    let c = model.time_basis().eval(t_star);
    let criterion_fixed = c.dot(&spd_solve(&m0, &c)?);
    let criterion_random = c.dot(&(model.sigma_gamma() * &c));
    Ok(CriterionReport {
        criterion_total: criterion_fixed + criterion_random,
        criterion_fixed,
        criterion_random,
        stress_factor: None,
        t_star,
    })
}

/// Normalized stress information `Σ_i w_i f1(x_i) f1(x_i)ᵀ`.
pub fn info_stress(design: &ApproximateDesign, model: &DegradationModel) -> DMatrix<f64> {
    let basis = model.stress_basis();
    let p = basis.dim();
    let mut m = DMatrix::zeros(p, p);
    for (x, w) in design.iter() {
        let f = basis.eval(x);
        m += (&f * f.transpose()) * w;
    }
    m
}

/// `f1(x_u)ᵀ M1(ξ)⁻¹ f1(x_u)`.
pub fn stress_factor(xi: &ApproximateDesign, model: &DegradationModel) -> Result<f64> {
    let c1: DVector<f64> = model.stress_basis().eval(model.x_u());
    Ok(c1.dot(&spd_solve(&info_stress(xi, model), &c1)?))
}

/// Full report for a stress design and a time plan; `criterion_total` is the
/// asymptotic variance of the median estimate up to `c0²`.
pub fn avar_median_report(
    xi: &ApproximateDesign,
    tau: &ApproximateDesign,
    model: &DegradationModel,
) -> Result<CriterionReport> {
    let t_star = median_failure_time(model)?;
    let sf = stress_factor(xi, model)?;
    let time = c_criterion_time(tau, model, t_star)?;
    Ok(CriterionReport {
        criterion_total: sf * time.criterion_total,
        stress_factor: Some(sf),
        ..time
    })
}

pub fn avar_median(xi: &ApproximateDesign, tau: &ApproximateDesign, model: &DegradationModel) -> Result<f64> {
    Ok(avar_median_report(xi, tau, model)?.criterion_total)
}

/// c-efficiency of `candidate` relative to `reference_optimal`: ratio of total
/// criterion values with the reference in the numerator.
pub fn efficiency(
    candidate: &ApproximateDesign,
    reference_optimal: &ApproximateDesign,
    model: &DegradationModel,
    t_star: f64,
) -> Result<f64> {
    let reference = c_criterion_time(reference_optimal, model, t_star)?;
    let cand = c_criterion_time(candidate, model, t_star)?;
    Ok(reference.criterion_total / cand.criterion_total)
}

/// Fixed-effect-only c-efficiency; a lower bound for [`efficiency`].
pub fn efficiency_fixed(
    candidate: &ApproximateDesign,
    reference_optimal: &ApproximateDesign,
    marginal: &TimeMarginal,
    t_star: f64,
) -> Result<f64> {
    Ok(c_criterion_fixed(reference_optimal, marginal, t_star)?
        / c_criterion_fixed(candidate, marginal, t_star)?)
}
