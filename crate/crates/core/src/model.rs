//! Degradation model: regression bases, fixed effects, and covariance structure.
//!
//! A unit tested at stress `x` and measured at time `t` follows
//!
//! ```text
//! y = (f1(x) ⊗ f2(t))ᵀ β + f2(t)ᵀ γ + ε,   γ ~ N(0, Σγ),  ε ~ N(0, Σε)
//! ```
//!
//! `β` is stored lexicographically by (stress index, time index), which is the
//! ordering produced by `f1 ⊗ f2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};
use crate::linalg::{is_symmetric, min_eigenvalue};

/// Polynomial regression basis in one standardized variable.
///
/// The first component is always the constant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `(1, x)`.
    Affine,
    /// `(1, x, …, x^degree)`.
    Polynomial(usize),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Affine => 2,
            Basis::Polynomial(d) => d + 1,
        }
    }

    pub fn degree(&self) -> usize {
        self.dim() - 1
    }

    /// Straight-line basis, whether spelled `Affine` or `Polynomial(1)`.
    pub fn is_affine(&self) -> bool {
        self.dim() == 2
    }

    pub fn eval(&self, x: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        let mut p = 1.0;
        for v in out.iter_mut() {
            *v = p;
            p *= x;
        }
        out
    }
}

/// Within-unit measurement error structure.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorSpec {
    Homoscedastic { sigma_eps: f64 },
    /// Full k×k covariance for a fixed k-point time plan.
    Full(DMatrix<f64>),
}

impl ErrorSpec {
    fn validate(&self) -> Result<()> {
        match self {
            ErrorSpec::Homoscedastic { sigma_eps } => {
                if !(sigma_eps.is_finite() && *sigma_eps > 0.0) {
                    return Err(DesignError::Config(format!(
                        "sigma_eps must be positive, got {sigma_eps}"
                    )));
                }
            }
            ErrorSpec::Full(m) => {
                if !is_symmetric(m, 1e-12) {
                    return Err(DesignError::Config("sigma_eps matrix is not symmetric".into()));
                }
                if min_eigenvalue(m) <= 0.0 {
                    return Err(DesignError::Config(
                        "sigma_eps matrix is not positive definite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Random-effect covariance for a straight-line time basis from `(σ1, σ2, ρ)`.
pub fn sigma_gamma_from_components(sigma1: f64, sigma2: f64, rho: f64) -> DMatrix<f64> {
    let off = rho * sigma1 * sigma2;
    DMatrix::from_row_slice(2, 2, &[sigma1 * sigma1, off, off, sigma2 * sigma2])
}

/// Parameters of a straight-line-in-stress, straight-line-in-time model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightLineParams {
    /// `(β11, β12, β21, β22)`: intercept, time slope, stress effect, interaction.
    pub beta: [f64; 4],
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub sigma_eps: f64,
    pub x_u: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationModel {
    stress_basis: Basis,
    time_basis: Basis,
    beta: DVector<f64>,
    sigma_gamma: DMatrix<f64>,
    error: ErrorSpec,
    x_u: f64,
    y0: f64,
}

impl DegradationModel {
    pub fn new(
        stress_basis: Basis,
        time_basis: Basis,
        beta: DVector<f64>,
        sigma_gamma: DMatrix<f64>,
        error: ErrorSpec,
        x_u: f64,
        y0: f64,
    ) -> Result<Self> {
        let p1 = stress_basis.dim();
        let p2 = time_basis.dim();
        if beta.len() != p1 * p2 {
            return Err(DesignError::Config(format!(
                "beta has {} entries, expected p1 * p2 = {}",
                beta.len(),
                p1 * p2
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(DesignError::Config("beta contains non-finite values".into()));
        }
        if sigma_gamma.nrows() != p2 || sigma_gamma.ncols() != p2 {
            return Err(DesignError::Config(format!(
                "sigma_gamma is {}x{}, expected {p2}x{p2}",
                sigma_gamma.nrows(),
                sigma_gamma.ncols()
            )));
        }
        if !is_symmetric(&sigma_gamma, 1e-12) {
            return Err(DesignError::Config("sigma_gamma is not symmetric".into()));
        }
        let scale = sigma_gamma.amax().max(f64::MIN_POSITIVE);
        if min_eigenvalue(&sigma_gamma) < -1e-12 * scale {
            return Err(DesignError::Config(
                "sigma_gamma is not non-negative definite".into(),
            ));
        }
        error.validate()?;
        if !x_u.is_finite() || !y0.is_finite() {
            return Err(DesignError::Config("x_u and y0 must be finite".into()));
        }
        Ok(Self {
            stress_basis,
            time_basis,
            beta,
            sigma_gamma,
            error,
            x_u,
            y0,
        })
    }

    pub fn straight_line(p: StraightLineParams) -> Result<Self> {
        for (name, v) in [("sigma1", p.sigma1), ("sigma2", p.sigma2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DesignError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(p.rho.abs() <= 1.0) {
            return Err(DesignError::Config(format!(
                "rho must lie in [-1, 1], got {}",
                p.rho
            )));
        }
        Self::new(
            Basis::Affine,
            Basis::Affine,
            DVector::from_row_slice(&p.beta),
            sigma_gamma_from_components(p.sigma1, p.sigma2, p.rho),
            ErrorSpec::Homoscedastic {
                sigma_eps: p.sigma_eps,
            },
            p.x_u,
            p.y0,
        )
    }

    pub fn stress_basis(&self) -> Basis {
        self.stress_basis
    }

    pub fn time_basis(&self) -> Basis {
        self.time_basis
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn sigma_gamma(&self) -> &DMatrix<f64> {
        &self.sigma_gamma
    }

    pub fn error(&self) -> &ErrorSpec {
        &self.error
    }

    pub fn x_u(&self) -> f64 {
        self.x_u
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// σε for homoscedastic errors, `None` for a full Σε.
    pub fn sigma_eps(&self) -> Option<f64> {
        match self.error {
            ErrorSpec::Homoscedastic { sigma_eps } => Some(sigma_eps),
            ErrorSpec::Full(_) => None,
        }
    }

    /// `(σ1, σ2, ρ)` for a two-dimensional time basis.
    pub fn variance_components(&self) -> Option<(f64, f64, f64)> {
        if self.sigma_gamma.nrows() != 2 {
            return None;
        }
        let s1 = self.sigma_gamma[(0, 0)].sqrt();
        let s2 = self.sigma_gamma[(1, 1)].sqrt();
        let rho = if s1 > 0.0 && s2 > 0.0 {
            self.sigma_gamma[(0, 1)] / (s1 * s2)
        } else {
            0.0
        };
        Some((s1, s2, rho))
    }

    pub fn with_y0(&self, y0: f64) -> Result<Self> {
        let mut m = self.clone();
        m.y0 = y0;
        if !y0.is_finite() {
            return Err(DesignError::Config("y0 must be finite".into()));
        }
        Ok(m)
    }

    pub fn with_covariance(&self, sigma_gamma: DMatrix<f64>, error: ErrorSpec) -> Result<Self> {
        Self::new(
            self.stress_basis,
            self.time_basis,
            self.beta.clone(),
            sigma_gamma,
            error,
            self.x_u,
            self.y0,
        )
    }

    /// The fixed-effect time marginal: basis and σε only.
    ///
    /// Requires homoscedastic errors.
    pub fn time_marginal(&self) -> Result<TimeMarginal> {
        let sigma_eps = self.sigma_eps().ok_or_else(|| {
            DesignError::Config(
                "approximate time plans require homoscedastic errors (sigma_eps scalar)".into(),
            )
        })?;
        Ok(TimeMarginal {
            basis: self.time_basis,
            sigma_eps,
        })
    }
}

/// Marginal fixed-effect model in time: everything the time-plan optimizer
/// is allowed to see. It carries no random-effect covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMarginal {
    pub basis: Basis,
    pub sigma_eps: f64,
}

/// Aggregate coefficients under use conditions, `δ_s = Σ_r f1r(x_u) β_rs`.
pub fn eval_delta(model: &DegradationModel) -> DVector<f64> {
    let p2 = model.time_basis.dim();
    let f1 = model.stress_basis.eval(model.x_u);
    DVector::from_fn(p2, |s, _| {
        f1.iter()
            .enumerate()
            .map(|(r, fr)| fr * model.beta[r * p2 + s])
            .sum()
    })
}

/// Per-unit covariance `V = F2 Σγ F2ᵀ + Σε` for a k-point time plan.
pub fn assemble_v(time_points: &[f64], model: &DegradationModel) -> Result<DMatrix<f64>> {
    let k = time_points.len();
    if k == 0 {
        return Err(DesignError::Config("time plan is empty".into()));
    }
    for w in time_points.windows(2) {
        if w[0] == w[1] {
            return Err(DesignError::Config(format!("duplicate time point {}", w[0])));
        }
    }
    if let Some(t) = time_points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(DesignError::Config(format!("time point {t} outside [0, 1]")));
    }
    let f2 = design_matrix(time_points, model.time_basis);
    let mut v = &f2 * &model.sigma_gamma * f2.transpose();
    match &model.error {
        ErrorSpec::Homoscedastic { sigma_eps } => {
            for i in 0..k {
                v[(i, i)] += sigma_eps * sigma_eps;
            }
        }
        ErrorSpec::Full(se) => {
            if se.nrows() != k {
                return Err(DesignError::Config(format!(
                    "sigma_eps matrix is {}x{} but the time plan has {k} points",
                    se.nrows(),
                    se.ncols()
                )));
            }
            v += se;
        }
    }
    Ok(v)
}

/// Rows `f(t_j)ᵀ`.
pub fn design_matrix(points: &[f64], basis: Basis) -> DMatrix<f64> {
    let p = basis.dim();
    let mut f = DMatrix::zeros(points.len(), p);
    for (j, &t) in points.iter().enumerate() {
        f.row_mut(j).copy_from(&basis.eval(t).transpose());
    }
    f
}

/// Nominal values of the straight-line reference example used throughout the
/// docs, tests, and shipped scenario.
pub mod nominal {
    use super::{DegradationModel, StraightLineParams};

    pub const PARAMS: StraightLineParams = StraightLineParams {
        beta: [2.397, 1.018, 1.629, 0.0696],
        sigma1: 0.114,
        sigma2: 0.105,
        rho: -0.143,
        sigma_eps: 0.048,
        x_u: -0.056,
        y0: 3.912,
    };

    pub fn straight_line_example() -> DegradationModel {
        DegradationModel::straight_line(PARAMS).expect("nominal parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example() -> DegradationModel {
        nominal::straight_line_example()
    }

    #[test]
    fn basis_first_component_is_one() {
        for b in [Basis::Affine, Basis::Polynomial(0), Basis::Polynomial(3)] {
            for x in [-2.0, 0.0, 0.3, 7.5] {
                assert_eq!(b.eval(x)[0], 1.0);
            }
        }
        assert_eq!(Basis::Polynomial(3).eval(2.0).as_slice(), &[1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn delta_from_nominal_values() {
        let d = eval_delta(&example());
        assert_abs_diff_eq!(d[0], 2.305776, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 1.0141024, epsilon = 1e-12);
        assert_abs_diff_eq!((3.912 - d[0]) / d[1], 1.583, epsilon = 1e-3);
    }

    #[test]
    fn delta_at_zero_stress_is_constant_row() {
        let mut p = nominal::PARAMS;
        p.x_u = 0.0;
        let d = eval_delta(&DegradationModel::straight_line(p).unwrap());
        assert_eq!(d.as_slice(), &[p.beta[0], p.beta[1]]);
    }

    #[test]
    fn delta_of_zero_beta() {
        let mut p = nominal::PARAMS;
        p.beta = [0.0; 4];
        let d = eval_delta(&DegradationModel::straight_line(p).unwrap());
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn v_without_random_effects_is_scaled_identity() {
        let mut p = nominal::PARAMS;
        p.sigma1 = 0.0;
        p.sigma2 = 0.0;
        let m = DegradationModel::straight_line(p).unwrap();
        let v = assemble_v(&[0.0, 0.3, 1.0], &m).unwrap();
        let expected = DMatrix::identity(3, 3) * (0.048 * 0.048);
        assert!((v - expected).amax() < 1e-18);
    }

    #[test]
    fn v_single_point_at_origin() {
        let v = assemble_v(&[0.0], &example()).unwrap();
        assert_abs_diff_eq!(v[(0, 0)], 0.114 * 0.114 + 0.048 * 0.048, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(0, 0)], 0.015300, epsilon = 1e-6);
    }

    #[test]
    fn v_endpoints() {
        let v = assemble_v(&[0.0, 1.0], &example()).unwrap();
        let (s1, s2, rho, se) = (0.114_f64, 0.105_f64, -0.143_f64, 0.048_f64);
        // f2(0)ᵀ Σγ f2(1) = σ1² + ρσ1σ2
        assert_abs_diff_eq!(v[(0, 1)], s1 * s1 + rho * s1 * s2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(0, 1)], 0.0112843, epsilon = 1e-7);
        assert_abs_diff_eq!(
            v[(1, 1)],
            s1 * s1 + 2.0 * rho * s1 * s2 + s2 * s2 + se * se,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(v[(1, 1)], 0.0229016, epsilon = 1e-7);
        assert_eq!(v[(0, 1)], v[(1, 0)]);
    }

    #[test]
    fn v_dimension_mismatch() {
        let m = example()
            .with_covariance(
                sigma_gamma_from_components(0.1, 0.1, 0.0),
                ErrorSpec::Full(DMatrix::identity(3, 3)),
            )
            .unwrap();
        assert!(matches!(
            assemble_v(&[0.0, 1.0], &m),
            Err(DesignError::Config(_))
        ));
    }

    #[test]
    fn rejects_bad_components() {
        let mut p = nominal::PARAMS;
        p.rho = 1.5;
        assert!(DegradationModel::straight_line(p).is_err());
        let mut p = nominal::PARAMS;
        p.sigma_eps = 0.0;
        assert!(DegradationModel::straight_line(p).is_err());
        let bad_beta = DegradationModel::new(
            Basis::Affine,
            Basis::Affine,
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DMatrix::zeros(2, 2),
            ErrorSpec::Homoscedastic { sigma_eps: 1.0 },
            0.0,
            1.0,
        );
        assert!(bad_beta.is_err());
    }

    #[test]
    fn variance_components_roundtrip() {
        let (s1, s2, rho) = example().variance_components().unwrap();
        assert_abs_diff_eq!(s1, 0.114, epsilon = 1e-15);
        assert_abs_diff_eq!(s2, 0.105, epsilon = 1e-15);
        assert_abs_diff_eq!(rho, -0.143, epsilon = 1e-14);
    }
}
