//! Sensitivity of the destructive-testing design to misspecified parameters.
//!
//! Two abscissas are supported: the true median failure time (variances held
//! at their nominal values) and the true ratio `σ(1)/σ(0)` (median held
//! fixed). The ratio is moved by fixing `σ1² = σ2² + σε²` and solving for ρ;
//! ratios that no ρ in [−1, 1] reaches are still scored for designs supported
//! on the endpoints, since those only see `σ(0)` and `σ(1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::ApproximateDesign;
use crate::destructive::{
    elfving_endpoint_weight, elfving_stress_design, elfving_time_design, product_design,
    single_obs_criterion_with, EndpointProfile, ProductDesign, VarianceFunction, VarianceProfile,
};
use crate::error::{DesignError, Result};
use crate::failure::median_failure_time;
use crate::model::{Basis, DegradationModel, StraightLineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TMedian,
    SigmaRatio,
}

/// Designs scored against the locally optimal design at each abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    /// `ξ* ⊗ τ*` computed at the nominal parameters and held fixed.
    ZetaStar,
    /// `ξ* ⊗ τ̄2`, endpoints with equal weight.
    Tau2,
    /// `ξ* ⊗ τ̄6`, six equally spaced times.
    Tau6,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::ZetaStar, Candidate::Tau2, Candidate::Tau6];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    /// Number of log-spaced abscissa values.
    pub n: usize,
    pub candidates: Vec<Candidate>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, lo: f64, hi: f64, n: usize, candidates: Vec<Candidate>) -> Result<Self> {
        let spec = Self {
            variable,
            lo,
            hi,
            n,
            candidates,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 200 log-spaced points on [1.05, 10] for the median, [0.2, 5] for the ratio.
    pub fn default_for(variable: SweepVariable) -> Self {
        let (lo, hi) = match variable {
            SweepVariable::TMedian => (1.05, 10.0),
            SweepVariable::SigmaRatio => (0.2, 5.0),
        };
        Self {
            variable,
            lo,
            hi,
            n: 200,
            candidates: Candidate::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            errors.push(format!("need lo < hi, got [{}, {}]", self.lo, self.hi));
        }
        if !(self.lo > 0.0) {
            errors.push(format!("lo must be positive for a log-spaced sweep, got {}", self.lo));
        }
        if self.variable == SweepVariable::TMedian && !(self.lo > 1.0) {
            errors.push(format!("median sweeps need lo > 1, got {}", self.lo));
        }
        if self.n < 2 {
            errors.push(format!("n must be at least 2, got {}", self.n));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(DesignError::Config(errors.join("; ")))
        }
    }

    pub fn abscissas(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let last = self.n - 1;
        (0..self.n)
            .map(|i| match i {
                0 => self.lo,
                i if i == last => self.hi,
                i => (a + (b - a) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub abscissa: f64,
    pub pi_star: Option<f64>,
    pub eff_zeta_star: Option<f64>,
    pub eff_tau2: Option<f64>,
    pub eff_tau6: Option<f64>,
    /// Why a value is missing, if any is.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub nominal_t_median: f64,
    pub nominal_ratio: f64,
    pub rows: Vec<SweepRow>,
}

/// `k` equally spaced times `j/(k−1)` with weight `1/k`.
pub fn uniform_time_design(k: usize) -> Result<ApproximateDesign> {
    if k < 2 {
        return Err(DesignError::Config(format!("uniform time design needs k >= 2, got {k}")));
    }
    ApproximateDesign::uniform((0..k).map(|j| j as f64 / (k - 1) as f64).collect())
}

/// Reachable ratios `σ(1)/σ(0)` under `σ1² = σ2² + σε²`, nominal σ2 and σε.
pub fn reachable_ratio_interval(model: &DegradationModel) -> Result<(f64, f64)> {
    let p = constrained_params(model)?;
    let ratio_at = |rho: f64| ratio_for(&StraightLineParams { rho, ..p });
    Ok((ratio_at(-1.0), ratio_at(1.0)))
}

fn constrained_params(model: &DegradationModel) -> Result<StraightLineParams> {
    let (_, s2, rho) = model.variance_components().ok_or_else(|| {
        DesignError::Unsupported("ratio sweeps need a straight-line time basis".into())
    })?;
    let se = model
        .sigma_eps()
        .ok_or_else(|| DesignError::Unsupported("ratio sweeps need homoscedastic errors".into()))?;
    if !(model.stress_basis().is_affine() && model.time_basis().is_affine()) {
        return Err(DesignError::Unsupported("ratio sweeps need straight-line bases".into()));
    }
    let b = model.beta();
    Ok(StraightLineParams {
        beta: [b[0], b[1], b[2], b[3]],
        sigma1: (s2 * s2 + se * se).sqrt(),
        sigma2: s2,
        rho,
        sigma_eps: se,
        x_u: model.x_u(),
        y0: model.y0(),
    })
}

fn ratio_for(p: &StraightLineParams) -> f64 {
    let (s1, s2, se2) = (p.sigma1, p.sigma2, p.sigma_eps * p.sigma_eps);
    let v0 = s1 * s1 + se2;
    let v1 = s1 * s1 + 2.0 * p.rho * s1 * s2 + s2 * s2 + se2;
    (v1 / v0).sqrt()
}

/// Model with `σ1 = √(σ2² + σε²)` and ρ chosen so that `σ(1)/σ(0) = target`.
pub fn vary_ratio_via_rho(target: f64, model: &DegradationModel) -> Result<DegradationModel> {
    let p = constrained_params(model)?;
    let (s1, s2, se2) = (p.sigma1, p.sigma2, p.sigma_eps * p.sigma_eps);
    let unreachable = || {
        let (lo, hi) = reachable_ratio_interval(model).unwrap_or((f64::NAN, f64::NAN));
        DesignError::OutOfRegime(format!(
            "ratio {target} is not reachable with |rho| <= 1; reachable interval is [{lo}, {hi}]"
        ))
    };
    if !(target > 0.0) || !(s1 > 0.0 && s2 > 0.0) {
        return Err(unreachable());
    }
    let rho = (target * target * (s1 * s1 + se2) - s1 * s1 - s2 * s2 - se2) / (2.0 * s1 * s2);
    if !(rho.abs() <= 1.0) {
        return Err(unreachable());
    }
    DegradationModel::straight_line(StraightLineParams { rho, ..p })
}

/// The scenario of one sweep point: variance profile, extrapolation target
/// and the locally optimal endpoint weight.
struct Truth {
    profile: Box<dyn VarianceProfile + Send>,
    t_star: f64,
    pi_star: f64,
    /// Interior variances unavailable.
    endpoint_only: bool,
}

struct Setup<'a> {
    model: &'a DegradationModel,
    xi: ApproximateDesign,
    zeta_nominal: ProductDesign,
    tau2: ProductDesign,
    tau6: ProductDesign,
    t_nominal: f64,
    nominal_ratio: f64,
}

impl Setup<'_> {
    fn truth(&self, variable: SweepVariable, x: f64) -> Result<Truth> {
        match variable {
            SweepVariable::TMedian => {
                let tau = elfving_time_design(self.model, x)?;
                Ok(Truth {
                    profile: Box::new(VarianceFunction::new(self.model)?),
                    t_star: x,
                    pi_star: tau.weights()[1],
                    endpoint_only: false,
                })
            }
            SweepVariable::SigmaRatio => match vary_ratio_via_rho(x, self.model) {
                Ok(m) => {
                    let tau = elfving_time_design(&m, self.t_nominal)?;
                    Ok(Truth {
                        profile: Box::new(VarianceFunction::new(&m)?),
                        t_star: self.t_nominal,
                        pi_star: tau.weights()[1],
                        endpoint_only: false,
                    })
                }
                Err(DesignError::OutOfRegime(_)) => {
                    let p = constrained_params(self.model)?;
                    let sigma0 = (p.sigma1 * p.sigma1 + p.sigma_eps * p.sigma_eps).sqrt();
                    let sigma1 = x * sigma0;
                    Ok(Truth {
                        profile: Box::new(EndpointProfile { sigma0, sigma1 }),
                        t_star: self.t_nominal,
                        pi_star: elfving_endpoint_weight(self.t_nominal, sigma0, sigma1),
                        endpoint_only: true,
                    })
                }
                Err(e) => Err(e),
            },
        }
    }

    fn criterion(&self, zeta: &ProductDesign, truth: &Truth) -> Result<f64> {
        single_obs_criterion_with(
            zeta,
            Basis::Affine,
            Basis::Affine,
            self.model.x_u(),
            truth.t_star,
            truth.profile.as_ref(),
        )
    }

    fn row(&self, spec: &SweepSpec, x: f64, score: bool) -> SweepRow {
        let mut row = SweepRow {
            abscissa: x,
            pi_star: None,
            eff_zeta_star: None,
            eff_tau2: None,
            eff_tau6: None,
            note: None,
        };
        let truth = match self.truth(spec.variable, x) {
            Ok(t) => t,
            Err(e) => {
                row.note = Some(e.to_string());
                return row;
            }
        };
        row.pi_star = Some(truth.pi_star);
        if truth.endpoint_only {
            row.note = Some("ratio outside the reachable interval; interior times not scored".into());
        }
        if !score {
            return row;
        }
        let Ok(best_tau) =
            ApproximateDesign::new(vec![0.0, 1.0], vec![1.0 - truth.pi_star, truth.pi_star])
        else {
            return row;
        };
        let best = match self.criterion(&product_design(&self.xi, &best_tau), &truth) {
            Ok(b) => b,
            Err(e) => {
                row.note = Some(e.to_string());
                return row;
            }
        };
        let eff = |z: &ProductDesign| self.criterion(z, &truth).ok().map(|c| best / c);
        for cand in &spec.candidates {
            match cand {
                Candidate::ZetaStar => row.eff_zeta_star = eff(&self.zeta_nominal),
                Candidate::Tau2 => row.eff_tau2 = eff(&self.tau2),
                Candidate::Tau6 => row.eff_tau6 = eff(&self.tau6),
            }
        }
        row
    }
}

fn setup(model: &DegradationModel) -> Result<Setup<'_>> {
    if !(model.stress_basis().is_affine() && model.time_basis().is_affine()) {
        return Err(DesignError::Unsupported("sweeps need straight-line bases".into()));
    }
    let t_nominal = median_failure_time(model)?;
    let xi = elfving_stress_design(model)?;
    let tau_star = elfving_time_design(model, t_nominal)?;
    Ok(Setup {
        model,
        zeta_nominal: product_design(&xi, &tau_star),
        tau2: product_design(&xi, &uniform_time_design(2)?),
        tau6: product_design(&xi, &uniform_time_design(6)?),
        xi,
        t_nominal,
        nominal_ratio: VarianceFunction::new(model)?.ratio(),
    })
}

fn run(spec: &SweepSpec, model: &DegradationModel, score: bool) -> Result<SweepResult> {
    spec.validate()?;
    let s = setup(model)?;
    let rows = spec
        .abscissas()
        .into_par_iter()
        .map(|x| s.row(spec, x, score))
        .collect();
    Ok(SweepResult {
        variable: spec.variable,
        nominal_t_median: s.t_nominal,
        nominal_ratio: s.nominal_ratio,
        rows,
    })
}

/// Optimal endpoint weight `π*` along the sweep.
pub fn sweep_pi_star(spec: &SweepSpec, model: &DegradationModel) -> Result<SweepResult> {
    run(spec, model, false)
}

/// `π*` plus the efficiency of every requested candidate along the sweep.
pub fn sweep_efficiency(spec: &SweepSpec, model: &DegradationModel) -> Result<SweepResult> {
    run(spec, model, true)
}
