//! Cross-sectional designs for destructive testing: every unit is measured
//! once, so the observation variance `σ²(t) = f2(t)ᵀΣγf2(t) + σε²` enters as
//! a weight on the time regression.
//!
//! For straight lines the c-optimal time design for extrapolation to
//! `t* > 1` is supported on the endpoints with
//! `π* = t*σ(1) / (t*σ(1) + (t* − 1)σ(0))` at `t = 1`, the stress design is
//! the classical two-point extrapolation design, and their product is optimal
//! for the combined model.

use nalgebra::{DMatrix, DVector};

use crate::design::ApproximateDesign;
use crate::error::{DesignError, Result};
use crate::failure::median_failure_time;
use crate::linalg::{kron_mat, kron_vec, spd_solve};
use crate::model::{Basis, DegradationModel};
use crate::optimizer::{capped_c_optimal, OptimalityCertificate, OptimizerConfig};

/// Grid used to verify that the endpoint design is in the Elfving regime.
const REGIME_GRID: usize = 1000;
const REGIME_TOL: f64 = 1e-9;

/// Standard deviation of a single measurement as a function of time.
pub trait VarianceProfile: Sync {
    fn sigma(&self, t: f64) -> Result<f64>;
}

/// `σ²(t) = f2(t)ᵀ Σγ f2(t) + σε²` for a homoscedastic model.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFunction {
    basis: Basis,
    sigma_gamma: DMatrix<f64>,
    sigma_eps2: f64,
}

impl VarianceFunction {
    /// Fails unless `σ²(t) > 0` on all of [0, 1].
    pub fn new(model: &DegradationModel) -> Result<Self> {
        let sigma_eps = model.sigma_eps().ok_or_else(|| {
            DesignError::Config("destructive designs need homoscedastic errors".into())
        })?;
        let vf = Self {
            basis: model.time_basis(),
            sigma_gamma: model.sigma_gamma().clone(),
            sigma_eps2: sigma_eps * sigma_eps,
        };
        let (t_min, v_min) = vf.minimum_on_unit_interval();
        if !(v_min > 0.0) {
            return Err(DesignError::DegenerateVariance { t: t_min });
        }
        Ok(vf)
    }

    pub fn variance(&self, t: f64) -> f64 {
        let f = self.basis.eval(t);
        (f.transpose() * &self.sigma_gamma * &f)[(0, 0)] + self.sigma_eps2
    }

    /// `σ(1) / σ(0)`.
    pub fn ratio(&self) -> f64 {
        (self.variance(1.0) / self.variance(0.0)).sqrt()
    }

    fn minimum_on_unit_interval(&self) -> (f64, f64) {
        if self.basis.is_affine() {
            // σ²(t) = a + 2bt + ct² + σε²
            let (b, c) = (self.sigma_gamma[(0, 1)], self.sigma_gamma[(1, 1)]);
            let t = if c > 0.0 { (-b / c).clamp(0.0, 1.0) } else if b >= 0.0 { 0.0 } else { 1.0 };
            return (t, self.variance(t));
        }
        (0..=REGIME_GRID)
            .map(|i| i as f64 / REGIME_GRID as f64)
            .map(|t| (t, self.variance(t)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }
}

impl VarianceProfile for VarianceFunction {
    fn sigma(&self, t: f64) -> Result<f64> {
        let v = self.variance(t);
        if v > 0.0 {
            Ok(v.sqrt())
        } else {
            Err(DesignError::DegenerateVariance { t })
        }
    }
}

/// Standard deviations known only at the endpoints `t = 0` and `t = 1`.
///
/// Enough to evaluate designs supported on {0, 1}, which covers every
/// endpoint design in the straight-line case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointProfile {
    pub sigma0: f64,
    pub sigma1: f64,
}

impl VarianceProfile for EndpointProfile {
    fn sigma(&self, t: f64) -> Result<f64> {
        match t {
            0.0 => Ok(self.sigma0),
            1.0 => Ok(self.sigma1),
            _ => Err(DesignError::Unsupported(format!(
                "variance at t = {t} is not defined by an endpoint-only profile"
            ))),
        }
    }
}

/// `f2(t) / σ(t)`.
pub fn weighted_f2(t: f64, model: &DegradationModel) -> Result<DVector<f64>> {
    weighted_f2_with(t, model.time_basis(), &VarianceFunction::new(model)?)
}

pub fn weighted_f2_with(t: f64, basis: Basis, profile: &dyn VarianceProfile) -> Result<DVector<f64>> {
    let s = profile.sigma(t)?;
    if !(s > 0.0) {
        return Err(DesignError::DegenerateVariance { t });
    }
    Ok(basis.eval(t) / s)
}

/// Weight at `t = 1` of the endpoint design for extrapolation to `t_star ≥ 1`.
pub fn elfving_endpoint_weight(t_star: f64, sigma0: f64, sigma1: f64) -> f64 {
    let upper = t_star * sigma1;
    upper / (upper + (t_star - 1.0) * sigma0)
}

/// c-optimal single-observation time design for extrapolation to `t_star > 1`
/// with a straight-line time trend.
///
/// Returns an out-of-regime error when the ray through `f2(t*)` does not
/// leave the Elfving set through the face spanned by `−f̃2(0)` and `f̃2(1)`;
/// use [`numeric_time_design`] then.
pub fn elfving_time_design(model: &DegradationModel, t_star: f64) -> Result<ApproximateDesign> {
    if !model.time_basis().is_affine() {
        return Err(DesignError::OutOfRegime(
            "closed-form Elfving design needs a straight-line time basis; use the numeric design".into(),
        ));
    }
    if !(t_star > 1.0 && t_star.is_finite()) {
        return Err(DesignError::OutOfRegime(format!(
            "t_star = {t_star} <= 1 is not extrapolation; use the grid optimizer"
        )));
    }
    let vf = VarianceFunction::new(model)?;
    let (s0, s1) = (vf.sigma(0.0)?, vf.sigma(1.0)?);
    check_endpoint_regime(&vf, s0, s1)?;
    let pi = elfving_endpoint_weight(t_star, s0, s1);
    ApproximateDesign::new(vec![0.0, 1.0], vec![1.0 - pi, pi])
}

/// The face through `−f̃(0)` and `f̃(1)` is `{h : hᵀv = 1}` with
/// `h = (−σ0, σ0 + σ1)`; every `±f̃(t)` must stay on the origin side.
fn check_endpoint_regime(vf: &VarianceFunction, s0: f64, s1: f64) -> Result<()> {
    for i in 0..=REGIME_GRID {
        let t = i as f64 / REGIME_GRID as f64;
        let reach = ((s0 + s1) * t - s0).abs() / vf.sigma(t)?;
        if reach > 1.0 + REGIME_TOL {
            return Err(DesignError::OutOfRegime(format!(
                "observation at t = {t} lies outside the endpoint Elfving face; use the numeric design"
            )));
        }
    }
    Ok(())
}

/// Two-point extrapolation design in stress for `x_u` outside [0, 1].
pub fn elfving_stress_design(model: &DegradationModel) -> Result<ApproximateDesign> {
    if !model.stress_basis().is_affine() {
        return Err(DesignError::Unsupported(
            "stress designs are implemented for a straight-line stress basis only".into(),
        ));
    }
    let x_u = model.x_u();
    let upper = if x_u < 0.0 {
        -x_u / (-x_u + (1.0 - x_u))
    } else if x_u > 1.0 {
        1.0 - (x_u - 1.0) / ((x_u - 1.0) + x_u)
    } else {
        return Err(DesignError::OutOfRegime(format!(
            "x_u = {x_u} lies inside the experimental region [0, 1]"
        )));
    };
    ApproximateDesign::new(vec![0.0, 1.0], vec![1.0 - upper, upper])
}

/// Product of a stress design and a time design.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDesign {
    pub stress: ApproximateDesign,
    pub time: ApproximateDesign,
    /// `((x, t), weight)` in stress-major order.
    pub combined: Vec<((f64, f64), f64)>,
}

pub fn product_design(xi: &ApproximateDesign, tau: &ApproximateDesign) -> ProductDesign {
    let combined = xi
        .iter()
        .flat_map(|(x, wx)| tau.iter().map(move |(t, wt)| ((x, t), wx * wt)))
        .collect();
    ProductDesign {
        stress: xi.clone(),
        time: tau.clone(),
        combined,
    }
}

/// `Σ η_i f1(x_i)f1(x_i)ᵀ ⊗ f̃2(t_i)f̃2(t_i)ᵀ`.
pub fn info_single_obs(zeta: &ProductDesign, model: &DegradationModel) -> Result<DMatrix<f64>> {
    info_single_obs_with(
        zeta,
        model.stress_basis(),
        model.time_basis(),
        &VarianceFunction::new(model)?,
    )
}

pub fn info_single_obs_with(
    zeta: &ProductDesign,
    stress_basis: Basis,
    time_basis: Basis,
    profile: &dyn VarianceProfile,
) -> Result<DMatrix<f64>> {
    let p = stress_basis.dim() * time_basis.dim();
    let mut m = DMatrix::zeros(p, p);
    for &((x, t), w) in &zeta.combined {
        if w == 0.0 {
            continue;
        }
        let f1 = stress_basis.eval(x);
        let f2 = weighted_f2_with(t, time_basis, profile)?;
        m += kron_mat(&(&f1 * f1.transpose()), &(&f2 * f2.transpose())) * w;
    }
    Ok(m)
}

/// `cᵀ M(ζ)⁻¹ c` with `c = f1(x_u) ⊗ f2(t*)`.
pub fn single_obs_criterion(zeta: &ProductDesign, model: &DegradationModel, t_star: f64) -> Result<f64> {
    single_obs_criterion_with(
        zeta,
        model.stress_basis(),
        model.time_basis(),
        model.x_u(),
        t_star,
        &VarianceFunction::new(model)?,
    )
}

pub fn single_obs_criterion_with(
    zeta: &ProductDesign,
    stress_basis: Basis,
    time_basis: Basis,
    x_u: f64,
    t_star: f64,
    profile: &dyn VarianceProfile,
) -> Result<f64> {
    let m = info_single_obs_with(zeta, stress_basis, time_basis, profile)?;
    let c = kron_vec(&stress_basis.eval(x_u), &time_basis.eval(t_star));
    Ok(c.dot(&spd_solve(&m, &c)?))
}

/// Best two-point design over a `grid_n`-point grid of [0, 1], for testing
/// the closed form.
///
/// For a fixed support `{a, b}` the c-optimal weights follow from
/// `c = α f̃(a) + β f̃(b)`: weight `|β| / (|α| + |β|)` at `b`, criterion
/// `(|α| + |β|)²`.
pub fn elfving_brute_force_oracle(model: &DegradationModel, t_star: f64, grid_n: usize) -> Result<ApproximateDesign> {
    if !model.time_basis().is_affine() {
        return Err(DesignError::Unsupported("brute-force oracle needs an affine time basis".into()));
    }
    if grid_n < 2 {
        return Err(DesignError::Config("grid_n must be at least 2".into()));
    }
    let vf = VarianceFunction::new(model)?;
    let grid: Vec<f64> = (0..grid_n).map(|i| i as f64 / (grid_n - 1) as f64).collect();
    let g: Vec<DVector<f64>> = grid
        .iter()
        .map(|&t| weighted_f2_with(t, Basis::Affine, &vf))
        .collect::<Result<_>>()?;
    let c = Basis::Affine.eval(t_star);
    let mut best: Option<(f64, usize, usize, f64)> = None;
    for a in 0..grid_n {
        for b in a + 1..grid_n {
            let det = g[a][0] * g[b][1] - g[b][0] * g[a][1];
            if det.abs() < 1e-14 {
                continue;
            }
            let alpha = (c[0] * g[b][1] - g[b][0] * c[1]) / det;
            let beta = (g[a][0] * c[1] - c[0] * g[a][1]) / det;
            let total = alpha.abs() + beta.abs();
            let crit = total * total;
            if best.is_none_or(|(b0, ..)| crit < b0) {
                best = Some((crit, a, b, beta.abs() / total));
            }
        }
    }
    let (_, a, b, wb) = best.ok_or_else(|| DesignError::Infeasible("no nonsingular pair".into()))?;
    ApproximateDesign::new(vec![grid[a], grid[b]], vec![1.0 - wb, wb])
}

/// Numerically optimal single-observation time design on a grid of
/// `intervals + 1` points, for any time basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericDesign {
    pub design: ApproximateDesign,
    pub certificate: OptimalityCertificate,
    pub criterion: f64,
}

pub fn numeric_time_design(
    model: &DegradationModel,
    t_star: f64,
    intervals: usize,
    cfg: &OptimizerConfig,
) -> Result<NumericDesign> {
    let vf = VarianceFunction::new(model)?;
    let basis = model.time_basis();
    if intervals + 1 < basis.dim() {
        return Err(DesignError::Infeasible("grid too coarse for the time basis".into()));
    }
    let grid: Vec<f64> = (0..=intervals).map(|i| i as f64 / intervals as f64).collect();
    let regressors = grid
        .iter()
        .map(|&t| weighted_f2_with(t, basis, &vf))
        .collect::<Result<Vec<_>>>()?;
    let raw = capped_c_optimal(&regressors, &basis.eval(t_star), 1.0, cfg)?;
    let (points, weights): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&raw.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| (*t, *w))
        .unzip();
    Ok(NumericDesign {
        design: ApproximateDesign::normalized(points, weights, 1e-12)?,
        certificate: raw.certificate,
        criterion: raw.criterion,
    })
}

/// Everything reported for the destructive-testing problem at the median.
#[derive(Debug, Clone, PartialEq)]
pub struct DestructivePlan {
    pub t_star: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub product: ProductDesign,
    pub criterion: f64,
    /// Present when the time design was found numerically.
    pub certificate: Option<OptimalityCertificate>,
}

/// Optimal product design for estimating the median failure time; falls back
/// to the grid optimizer (J = 400) outside the closed-form regime.
pub fn optimize_destructive(model: &DegradationModel) -> Result<DestructivePlan> {
    let t_star = median_failure_time(model)?;
    let vf = VarianceFunction::new(model)?;
    let xi = elfving_stress_design(model)?;
    let (tau, certificate) = match elfving_time_design(model, t_star) {
        Ok(tau) => (tau, None),
        Err(DesignError::OutOfRegime(_)) => {
            let num = numeric_time_design(model, t_star, 400, &OptimizerConfig::default())?;
            (num.design, Some(num.certificate))
        }
        Err(e) => return Err(e),
    };
    let product = product_design(&xi, &tau);
    let criterion = single_obs_criterion(&product, model, t_star)?;
    Ok(DestructivePlan {
        t_star,
        sigma0: vf.sigma(0.0)?,
        sigma1: vf.sigma(1.0)?,
        product,
        criterion,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{nominal, ErrorSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn example() -> DegradationModel {
        nominal::straight_line_example()
    }

    fn t50() -> f64 {
        median_failure_time(&example()).unwrap()
    }

    #[test]
    fn variance_endpoints() {
        let vf = VarianceFunction::new(&example()).unwrap();
        assert_abs_diff_eq!(vf.sigma(0.0).unwrap(), 0.123693, epsilon = 1e-6);
        assert_abs_diff_eq!(vf.sigma(1.0).unwrap(), 0.151333, epsilon = 1e-6);
        assert_abs_diff_eq!(vf.ratio(), 1.22345, epsilon = 1e-5);
        let f = weighted_f2(0.0, &example()).unwrap();
        assert_abs_diff_eq!(f[0], 8.0846, epsilon = 1e-4);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn variance_bounded_below_by_error_variance() {
        // Σγ = 0 leaves σ²(t) = σε², and the model refuses σε = 0
        let m = example()
            .with_covariance(DMatrix::zeros(2, 2), ErrorSpec::Homoscedastic { sigma_eps: 0.3 })
            .unwrap();
        let vf = VarianceFunction::new(&m).unwrap();
        assert_abs_diff_eq!(vf.variance(0.37), 0.09, epsilon = 1e-15);
        assert!(example()
            .with_covariance(DMatrix::zeros(2, 2), ErrorSpec::Homoscedastic { sigma_eps: 0.0 })
            .is_err());
    }

    #[test]
    fn unweighted_reduction() {
        let m = example()
            .with_covariance(DMatrix::zeros(2, 2), ErrorSpec::Homoscedastic { sigma_eps: 1.0 })
            .unwrap();
        assert_eq!(weighted_f2(0.3, &m).unwrap(), Basis::Affine.eval(0.3));
        let d = elfving_time_design(&m, 2.0).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn nominal_time_design() {
        let d = elfving_time_design(&example(), t50()).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 0.768455, epsilon = 1e-5);
        let far = elfving_time_design(&example(), 1e6).unwrap();
        assert_abs_diff_eq!(far.weights()[1], 0.151333 / (0.151333 + 0.123693), epsilon = 1e-5);
        assert!(elfving_time_design(&example(), 1.0).is_err());
        assert!(elfving_time_design(&example(), 0.5).is_err());
    }

    #[test]
    fn elfving_equalizes_weighted_sensitivity() {
        let m = example();
        let t = t50();
        let xi = ApproximateDesign::new(vec![0.0], vec![1.0]).unwrap();
        let tau = elfving_time_design(&m, t).unwrap();
        let vf = VarianceFunction::new(&m).unwrap();
        let mut info = DMatrix::zeros(2, 2);
        for (s, w) in tau.iter() {
            let g = weighted_f2_with(s, Basis::Affine, &vf).unwrap();
            info += &g * g.transpose() * w;
        }
        let a = spd_solve(&info, &Basis::Affine.eval(t)).unwrap();
        let phi = |s: f64| weighted_f2_with(s, Basis::Affine, &vf).unwrap().dot(&a).powi(2);
        assert_relative_eq!(phi(0.0), phi(1.0), max_relative = 1e-9);
        for i in 1..100 {
            assert!(phi(i as f64 / 100.0) <= phi(1.0) * (1.0 + 1e-9));
        }
        let _ = xi;
    }

    #[test]
    fn stress_design() {
        let d = elfving_stress_design(&example()).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 0.056 / 1.112, epsilon = 1e-15);
        let mut p = nominal::PARAMS;
        p.x_u = -1.0;
        let d = elfving_stress_design(&DegradationModel::straight_line(p).unwrap()).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 1.0 / 3.0, epsilon = 1e-15);
        p.x_u = 2.0;
        let d = elfving_stress_design(&DegradationModel::straight_line(p).unwrap()).unwrap();
        assert_abs_diff_eq!(d.weights()[0], 1.0 / 3.0, epsilon = 1e-15);
        p.x_u = -1e9;
        let d = elfving_stress_design(&DegradationModel::straight_line(p).unwrap()).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 0.5, epsilon = 1e-8);
        p.x_u = 0.4;
        assert!(elfving_stress_design(&DegradationModel::straight_line(p).unwrap()).is_err());
    }

    #[test]
    fn product_weights() {
        let xi = elfving_stress_design(&example()).unwrap();
        let tau = elfving_time_design(&example(), t50()).unwrap();
        let z = product_design(&xi, &tau);
        let w: Vec<f64> = z.combined.iter().map(|c| c.1).collect();
        let expected = [0.21988, 0.72976, 0.01166, 0.03870];
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let one = ApproximateDesign::new(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(product_design(&one, &one).combined, vec![((0.5, 0.5), 1.0)]);
    }

    #[test]
    fn product_information_factorizes() {
        let m = example();
        let vf = VarianceFunction::new(&m).unwrap();
        let xi = ApproximateDesign::new(vec![0.0, 0.4, 1.0], vec![0.2, 0.3, 0.5]).unwrap();
        let tau = ApproximateDesign::new(vec![0.0, 0.7, 1.0], vec![0.1, 0.6, 0.3]).unwrap();
        let z = product_design(&xi, &tau);
        let full = info_single_obs(&z, &m).unwrap();
        let m1 = crate::criteria::info_stress(&xi, &m);
        let mut m2 = DMatrix::zeros(2, 2);
        for (t, w) in tau.iter() {
            let g = weighted_f2_with(t, Basis::Affine, &vf).unwrap();
            m2 += &g * g.transpose() * w;
        }
        let expected = kron_mat(&m1, &m2);
        assert!((full - &expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn brute_force_agrees_with_closed_form() {
        let m = example();
        let oracle = elfving_brute_force_oracle(&m, t50(), 401).unwrap();
        assert_eq!(oracle.points(), &[0.0, 1.0]);
        assert_abs_diff_eq!(oracle.weights()[1], 0.768455, epsilon = 1e-5);
        let edge = elfving_brute_force_oracle(&m, 1.0, 401).unwrap();
        assert_abs_diff_eq!(edge.weights()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nominal_product_beats_alternatives() {
        let m = example();
        let t = t50();
        let plan = optimize_destructive(&m).unwrap();
        assert!(plan.certificate.is_none());
        let xi = plan.product.stress.clone();
        for (a, b, w) in [(0.0, 0.9, 0.8), (0.1, 1.0, 0.77), (0.0, 1.0, 0.7), (0.0, 1.0, 0.8)] {
            let tau = ApproximateDesign::new(vec![a, b], vec![1.0 - w, w]).unwrap();
            let crit = single_obs_criterion(&product_design(&xi, &tau), &m, t).unwrap();
            assert!(crit >= plan.criterion);
        }
    }

    #[test]
    fn numeric_design_matches_closed_form() {
        let m = example();
        let t = t50();
        let num = numeric_time_design(&m, t, 100, &OptimizerConfig::default()).unwrap();
        assert!(num.certificate.passed, "{} after {:?}", num.certificate.max_violation, num.design);
        assert_eq!(num.design.points(), &[0.0, 1.0]);
        assert_abs_diff_eq!(num.design.weights()[1], 0.768455, epsilon = 1e-4);
    }

    #[test]
    fn endpoint_profile_limits() {
        let p = EndpointProfile { sigma0: 1.0, sigma1: 2.0 };
        assert!(p.sigma(0.5).is_err());
        let xi = ApproximateDesign::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let z = product_design(&xi, &xi);
        assert!(single_obs_criterion_with(&z, Basis::Affine, Basis::Affine, -0.5, 2.0, &p).is_ok());
    }
}
