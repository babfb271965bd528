//! Capped c-optimal time plans on a grid.
//!
//! The weights `π_j` on the grid `{0, 1/J, …, 1}` minimize the fixed-effect
//! c-criterion `f2(t*)ᵀ M2⁽⁰⁾(π)⁻¹ f2(t*)` subject to `0 ≤ π_j ≤ 1/k` and
//! `Σ π_j = 1`. The random-effect covariance never enters: the optimizer only
//! sees a [`TimeMarginal`] (basis and σε).
//!
//! Each iteration multiplies the weights by `φ_j^λ`, where `φ_j` is the
//! c-criterion sensitivity, and maps the result back onto the capped simplex
//! by water-filling with a common scale factor:
//! `π_j ← min(1/k, s · π_j φ_j^λ)`. With `λ = 1/2` this step minimizes a
//! majorizer of the criterion, so the criterion never increases; its fixed
//! points are exactly the constrained equivalence (KKT) points.

use itertools::{Either, Itertools};
use nalgebra::{DMatrix, DVector};

use crate::criteria::{c_criterion_fixed, info_time_marginal};
use crate::design::ApproximateDesign;
use crate::error::{DesignError, Result};
use crate::linalg::spd_solve;
use crate::model::TimeMarginal;

/// Grid matching tolerance for design points.
const GRID_MATCH_TOL: f64 = 1e-9;
/// Iterations of negligible progress before the optimizer gives up.
const STALL_WINDOW: usize = 100;
const STALL_REL_CHANGE: f64 = 1e-14;
/// Largest number of completions `round_to_exact` will enumerate.
const MAX_ENUMERATION: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Number of subintervals J; the grid has J + 1 points.
    pub intervals: usize,
    /// Measurements per unit; caps every weight at 1/k.
    pub k: usize,
}

impl GridSpec {
    pub fn new(intervals: usize, k: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(DesignError::Infeasible("grid needs at least one subinterval".into()));
        }
        if k == 0 {
            return Err(DesignError::Infeasible("k must be at least 1".into()));
        }
        if k > intervals + 1 {
            return Err(DesignError::Infeasible(format!(
                "k = {k} distinct measurement times do not fit on a grid of {} points",
                intervals + 1
            )));
        }
        Ok(Self { intervals, k })
    }

    pub fn points(&self) -> Vec<f64> {
        let j = self.intervals as f64;
        (0..=self.intervals).map(|i| i as f64 / j).collect()
    }

    pub fn cap(&self) -> f64 {
        1.0 / self.k as f64
    }

    fn check_identifiable(&self, p: usize) -> Result<()> {
        if self.intervals + 1 < p {
            return Err(DesignError::Infeasible(format!(
                "grid of {} points cannot identify {p} parameters",
                self.intervals + 1
            )));
        }
        if self.k > 1 && self.k < p {
            return Err(DesignError::Infeasible(format!(
                "k = {} measurements per unit cannot identify {p} time parameters",
                self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Bound on the KKT violation for a certified solution.
    pub tol: f64,
    /// Exponent λ in the multiplicative step.
    pub damping: f64,
    /// Keep the criterion value of every iterate of the main phase in
    /// [`TimePlan::trace`].
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            tol: 1e-7,
            damping: 0.5,
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(DesignError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(DesignError::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Constrained equivalence-theorem diagnostics on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCertificate {
    /// Smallest ε such that some threshold μ has φ ≥ μ − ε on saturated points,
    /// |φ − μ| ≤ ε on interior points and φ ≤ μ + ε on zero-weight points.
    pub max_violation: f64,
    /// The threshold μ attaining `max_violation`.
    pub threshold: f64,
    pub saturated: Vec<usize>,
    pub interior: Vec<usize>,
    pub zero: Vec<usize>,
    /// φ(t_j) for every grid point, normalized so that Σ π_j φ_j = 1.
    pub sensitivity: Vec<f64>,
    pub tol: f64,
    /// `max_violation ≤ tol`.
    pub passed: bool,
    /// Saturated points form runs at the interval ends, zero-weight points a
    /// single interior run, with at most two interior points between them.
    pub endpoint_structure: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimePlan {
    /// Support of the optimized plan.
    pub design: ApproximateDesign,
    pub grid: Vec<f64>,
    /// Weight of every grid point, zeros included.
    pub grid_weights: Vec<f64>,
    pub certificate: OptimalityCertificate,
    pub iterations: usize,
    pub criterion_fixed: f64,
    pub trace: Vec<f64>,
}

impl TimePlan {
    pub fn certified(&self) -> bool {
        self.certificate.passed
    }
}

/// Sensitivities `φ_j = (g_jᵀ M⁻¹ c)² / (cᵀ M⁻¹ c)` and the criterion `cᵀ M⁻¹ c`.
pub(crate) fn sensitivities(
    regressors: &[DVector<f64>],
    weights: &[f64],
    c: &DVector<f64>,
) -> Result<(Vec<f64>, f64)> {
    let p = c.len();
    let mut m = DMatrix::zeros(p, p);
    for (g, &w) in regressors.iter().zip(weights) {
        if w > 0.0 {
            m.ger(w, g, g, 1.0);
        }
    }
    // plain Cholesky on the hot path; the checked solve only to report singularity
    let a = match m.clone().cholesky() {
        Some(ch) if ch.l_dirty().diagonal().min() > 1e-150 => ch.solve(c),
        _ => spd_solve(&m, c)?,
    };
    let crit = c.dot(&a);
    let phi = regressors
        .iter()
        .map(|g| {
            let v = g.dot(&a);
            v * v / crit
        })
        .collect();
    Ok((phi, crit))
}

/// Water-filling with a common scale: returns `min(cap, s v_j)` with `s`
/// chosen so the result sums to one. Requires `cap · len ≥ 1`.
pub fn project_capped_scaling(v: &[f64], cap: f64) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    let mut rest: f64 = v.iter().sum();
    for m in 0..=n {
        let budget = 1.0 - m as f64 * cap;
        if m > 0 {
            rest -= v[order[m - 1]];
        }
        if budget <= 0.0 || rest <= 0.0 || m == n {
            // everything left is saturated
            let mut out = vec![0.0; n];
            for &i in order.iter().take(m) {
                out[i] = cap;
            }
            if m < n && budget > 0.0 {
                // no mass left to scale: spread the remainder evenly
                let tail = &order[m..];
                for &i in tail {
                    out[i] = budget / tail.len() as f64;
                }
            }
            return out;
        }
        let s = budget / rest;
        let next_ok = s * v[order[m]] <= cap;
        let prev_ok = m == 0 || s * v[order[m - 1]] >= cap;
        if next_ok && prev_ok {
            let mut out: Vec<f64> = v.iter().map(|&x| s * x).collect();
            for &i in &order[..m] {
                out[i] = cap;
            }
            return out;
        }
    }
    unreachable!("water-filling always terminates")
}

pub(crate) struct RawSolution {
    pub weights: Vec<f64>,
    pub certificate: OptimalityCertificate,
    pub iterations: usize,
    pub criterion: f64,
    pub trace: Vec<f64>,
}

/// Capped c-optimal weights over arbitrary regression vectors.
pub(crate) fn capped_c_optimal(
    regressors: &[DVector<f64>],
    c: &DVector<f64>,
    cap: f64,
    cfg: &OptimizerConfig,
) -> Result<RawSolution> {
    cfg.validate()?;
    let n = regressors.len();
    if cap * (n as f64) < 1.0 - 1e-12 {
        return Err(DesignError::Infeasible(format!(
            "cap {cap} on {n} points cannot carry total weight 1"
        )));
    }
    let mut trace = Vec::new();
    let (w, iterations) = run_updates(
        regressors,
        c,
        cap,
        cfg,
        vec![1.0 / n as f64; n],
        cfg.max_iters,
        cfg.record_trace.then_some(&mut trace),
    )?;
    let (phi, crit) = sensitivities(regressors, &w, c)?;
    let cert = certify(&w, phi, cap, cfg.tol);
    let mut best = (w, cert, crit);
    let mut iterations = iterations;

    // Weights on non-support points decay only geometrically. Drop them, then
    // keep iterating on the remaining support so the certificate is issued
    // for an exactly feasible design without the tail.
    let snapped: Vec<f64> = best.0.iter().map(|&x| if x <= cfg.tol { 0.0 } else { x }).collect();
    if snapped.iter().any(|&x| x > 0.0) && snapped != best.0 {
        let start = project_capped_scaling(&snapped, cap);
        if sensitivities(regressors, &start, c).is_ok() {
            let budget = cfg.max_iters.saturating_sub(iterations).max(STALL_WINDOW * 10);
            let (polished, extra) = run_updates(regressors, c, cap, cfg, start, budget, None)?;
            let (phi, crit) = sensitivities(regressors, &polished, c)?;
            let cert = certify(&polished, phi, cap, cfg.tol);
            if cert.passed || cert.max_violation <= best.1.max_violation {
                best = (polished, cert, crit);
            }
            iterations += extra;
        }
    }
    let (weights, certificate, criterion) = best;
    Ok(RawSolution {
        weights,
        certificate,
        iterations,
        criterion,
        trace,
    })
}

/// Multiplicative updates from `w` until the certificate passes, progress
/// stalls or `budget` iterations are spent.
fn run_updates(
    regressors: &[DVector<f64>],
    c: &DVector<f64>,
    cap: f64,
    cfg: &OptimizerConfig,
    mut w: Vec<f64>,
    budget: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<(Vec<f64>, usize)> {
    let mut prev = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    while iterations < budget {
        let (phi, crit) = sensitivities(regressors, &w, c)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(crit);
        }
        if kkt_violation(&w, &phi, cap, cfg.tol) <= cfg.tol {
            break;
        }
        if ((prev - crit) / crit).abs() <= STALL_REL_CHANGE {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                break;
            }
        } else {
            stalled = 0;
        }
        prev = crit;
        let v: Vec<f64> = w
            .iter()
            .zip(&phi)
            .map(|(wi, f)| wi * f.powf(cfg.damping))
            .collect();
        w = project_capped_scaling(&v, cap);
        iterations += 1;
    }
    Ok((w, iterations))
}

/// `max_violation` of [`certify`] without building the certificate.
fn kkt_violation(weights: &[f64], phi: &[f64], cap: f64, tol: f64) -> f64 {
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    for (&w, &f) in weights.iter().zip(phi) {
        if w < cap - tol {
            upper = upper.max(f);
        }
        if w > tol {
            lower = lower.min(f);
        }
    }
    if upper.is_finite() && lower.is_finite() {
        ((upper - lower) / 2.0).max(0.0)
    } else {
        0.0
    }
}

fn certify(weights: &[f64], sensitivity: Vec<f64>, cap: f64, tol: f64) -> OptimalityCertificate {
    let mut saturated = Vec::new();
    let mut interior = Vec::new();
    let mut zero = Vec::new();
    for (j, &w) in weights.iter().enumerate() {
        if w >= cap - tol {
            saturated.push(j);
        } else if w <= tol {
            zero.push(j);
        } else {
            interior.push(j);
        }
    }
    let phi = &sensitivity;
    // φ must not exceed μ off the saturated set, nor fall below it off the zero set
    let upper = zero.iter().chain(&interior).map(|&j| phi[j]).fold(f64::NEG_INFINITY, f64::max);
    let lower = saturated.iter().chain(&interior).map(|&j| phi[j]).fold(f64::INFINITY, f64::min);
    let (max_violation, threshold) = match (upper.is_finite(), lower.is_finite()) {
        (true, true) => (((upper - lower) / 2.0).max(0.0), (upper + lower) / 2.0),
        (true, false) => (0.0, upper),
        (false, true) => (0.0, lower),
        (false, false) => (0.0, f64::NAN),
    };
    let endpoint_structure = endpoint_structure(weights.len(), &saturated, &interior);
    OptimalityCertificate {
        max_violation,
        threshold,
        saturated,
        interior,
        zero,
        sensitivity,
        tol,
        passed: max_violation <= tol,
        endpoint_structure,
    }
}

fn endpoint_structure(n: usize, saturated: &[usize], interior: &[usize]) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Label {
        Sat,
        Partial,
        Zero,
    }
    let mut labels = vec![Label::Zero; n];
    saturated.iter().for_each(|&j| labels[j] = Label::Sat);
    interior.iter().for_each(|&j| labels[j] = Label::Partial);
    let lead = labels.iter().take_while(|l| **l == Label::Sat).count();
    let trail = labels[lead..].iter().rev().take_while(|l| **l == Label::Sat).count();
    let mid = &labels[lead..n - trail];
    mid.iter().enumerate().all(|(i, l)| match l {
        Label::Zero => true,
        Label::Partial => i == 0 || i + 1 == mid.len(),
        Label::Sat => false,
    })
}

fn marginal_regressors(points: &[f64], marginal: &TimeMarginal) -> Vec<DVector<f64>> {
    points
        .iter()
        .map(|&t| marginal.basis.eval(t) / marginal.sigma_eps)
        .collect()
}

/// Capped c-optimal approximate time plan for extrapolation (or
/// interpolation) at `t_star`.
///
/// Returns the best iterate even when the certificate fails; check
/// [`TimePlan::certified`].
pub fn optimize_time_plan(
    grid: &GridSpec,
    marginal: &TimeMarginal,
    t_star: f64,
    cfg: &OptimizerConfig,
) -> Result<TimePlan> {
    grid.check_identifiable(marginal.basis.dim())?;
    if !(t_star.is_finite() && t_star >= 0.0) {
        return Err(DesignError::Config(format!("t_star must be >= 0, got {t_star}")));
    }
    let points = grid.points();
    let regressors = marginal_regressors(&points, marginal);
    let c = marginal.basis.eval(t_star);
    let raw = capped_c_optimal(&regressors, &c, grid.cap(), cfg)?;
    let (sp, sw): (Vec<f64>, Vec<f64>) = points
        .iter()
        .zip(&raw.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(p, w)| (*p, *w))
        .unzip();
    let design = ApproximateDesign::normalized(sp, sw, 1e-12)?;
    Ok(TimePlan {
        design,
        grid: points,
        grid_weights: raw.weights,
        certificate: raw.certificate,
        iterations: raw.iterations,
        criterion_fixed: raw.criterion,
        trace: raw.trace,
    })
}

/// Weights of `design` on the grid points, failing for off-grid support.
pub fn weights_on_grid(design: &ApproximateDesign, grid: &GridSpec) -> Result<Vec<f64>> {
    let j = grid.intervals as f64;
    let mut w = vec![0.0; grid.intervals + 1];
    for (t, wt) in design.iter() {
        let idx = (t * j).round();
        if (idx / j - t).abs() > GRID_MATCH_TOL {
            return Err(DesignError::Config(format!(
                "design point {t} is not on the grid with spacing 1/{}",
                grid.intervals
            )));
        }
        w[idx as usize] += wt;
    }
    Ok(w)
}

/// Evaluates the constrained equivalence conditions for a grid-supported plan.
pub fn kkt_check(
    design: &ApproximateDesign,
    grid: &GridSpec,
    marginal: &TimeMarginal,
    t_star: f64,
    tol: f64,
) -> Result<OptimalityCertificate> {
    let w = weights_on_grid(design, grid)?;
    let points = grid.points();
    let regressors = marginal_regressors(&points, marginal);
    let c = marginal.basis.eval(t_star);
    let (phi, _) = sensitivities(&regressors, &w, &c)?;
    Ok(certify(&w, phi, grid.cap(), tol))
}

/// Rounds a capped approximate plan to an exact plan of `k` equally weighted points.
///
/// Saturated points (weight 1/k) are kept. The remaining slots are filled from
/// the other support points by enumerating every completion and keeping the
/// one with the smallest fixed-effect criterion; ties go to the
/// lexicographically first support. When enumeration is too large, slots are
/// filled greedily by sensitivity.
pub fn round_to_exact(
    design: &ApproximateDesign,
    k: usize,
    marginal: &TimeMarginal,
    t_star: f64,
) -> Result<ApproximateDesign> {
    if k == 0 {
        return Err(DesignError::Infeasible("k must be at least 1".into()));
    }
    let cap = 1.0 / k as f64;
    let support = design.support();
    if support.len() < k {
        return Err(DesignError::Infeasible(format!(
            "design has {} support points, need at least k = {k}",
            support.len()
        )));
    }
    if let Some(w) = support.weights().iter().find(|w| **w > cap + 1e-9) {
        return Err(DesignError::Config(format!("weight {w} exceeds the cap 1/{k}")));
    }
    let (fixed, candidates): (Vec<f64>, Vec<f64>) = support
        .iter()
        .partition_map(|(t, w)| if w >= cap - 1e-7 { Either::Left(t) } else { Either::Right(t) });
    let slots = k.saturating_sub(fixed.len());
    if fixed.len() > k {
        return Err(DesignError::Infeasible("more saturated points than k".into()));
    }

    let build = |chosen: &[f64]| -> Result<ApproximateDesign> {
        let mut pts: Vec<f64> = fixed.iter().chain(chosen).copied().collect();
        pts.sort_by(f64::total_cmp);
        ApproximateDesign::uniform(pts)
    };

    if slots == 0 {
        return build(&[]);
    }
    if binomial(candidates.len(), slots) <= MAX_ENUMERATION {
        let mut best: Option<(f64, ApproximateDesign)> = None;
        for combo in (0..candidates.len()).combinations(slots) {
            let chosen: Vec<f64> = combo.iter().map(|&i| candidates[i]).collect();
            let d = build(&chosen)?;
            let Ok(crit) = c_criterion_fixed(&d, marginal, t_star) else {
                continue;
            };
            if best.as_ref().is_none_or(|(b, _)| crit < *b) {
                best = Some((crit, d));
            }
        }
        return best
            .map(|(_, d)| d)
            .ok_or_else(|| DesignError::Infeasible("every completion is singular".into()));
    }

    let regressors = marginal_regressors(support.points(), marginal);
    let (phi, _) = sensitivities(&regressors, support.weights(), &marginal.basis.eval(t_star))?;
    let mut ranked: Vec<(usize, f64)> = support
        .iter()
        .enumerate()
        .filter(|(_, (_, w))| *w < cap - 1e-7)
        .map(|(i, (t, _))| (i, t))
        .collect();
    ranked.sort_by(|a, b| phi[b.0].total_cmp(&phi[a.0]).then(a.1.total_cmp(&b.1)));
    let chosen: Vec<f64> = ranked.iter().take(slots).map(|(_, t)| *t).collect();
    build(&chosen)
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: usize = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Unconstrained c-optimal plan for a straight-line time trend, homoscedastic
/// errors and extrapolation at `t_star ≥ 1`: endpoints with
/// `π(1) = t*/(2t* − 1)`.
pub fn two_point_extrapolation_design(marginal: &TimeMarginal, t_star: f64) -> Result<ApproximateDesign> {
    if !marginal.basis.is_affine() {
        return Err(DesignError::OutOfRegime(
            "the two-point closed form needs a straight-line time basis".into(),
        ));
    }
    if !(t_star >= 1.0 && t_star.is_finite()) {
        return Err(DesignError::OutOfRegime(format!(
            "t_star = {t_star} < 1 is an interpolation problem; use the grid optimizer"
        )));
    }
    let upper = t_star / (2.0 * t_star - 1.0);
    ApproximateDesign::new(vec![0.0, 1.0], vec![1.0 - upper, upper])
}

/// Fixed-effect information of a plan supported on the grid; exposed for
/// diagnostics.
pub fn plan_information(plan: &TimePlan, marginal: &TimeMarginal) -> DMatrix<f64> {
    info_time_marginal(&plan.design, marginal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::median_failure_time;
    use crate::model::{nominal, Basis};
    use approx::assert_abs_diff_eq;

    fn marginal() -> TimeMarginal {
        nominal::straight_line_example().time_marginal().unwrap()
    }

    fn t50() -> f64 {
        median_failure_time(&nominal::straight_line_example()).unwrap()
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binomial(13, 4), 715);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn projection_is_feasible_and_scales() {
        let v = [0.5, 0.1, 0.3, 0.05, 0.05];
        let out = project_capped_scaling(&v, 0.3);
        assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(out.iter().all(|&x| (0.0..=0.3 + 1e-15).contains(&x)));
        // unsaturated entries keep their ratios
        assert_abs_diff_eq!(out[1] / out[3], 2.0, epsilon = 1e-12);
        assert_eq!(out[0], 0.3);
    }

    #[test]
    fn projection_fills_all_caps() {
        let out = project_capped_scaling(&[1.0, 2.0, 3.0], 1.0 / 3.0);
        for x in out {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn grid_feasibility() {
        assert!(GridSpec::new(20, 6).is_ok());
        assert!(GridSpec::new(20, 22).is_err());
        assert!(GridSpec::new(0, 1).is_err());
        let g = GridSpec::new(20, 1).unwrap();
        assert!(g.check_identifiable(2).is_ok());
        let g = GridSpec::new(1, 1).unwrap();
        assert!(g.check_identifiable(3).is_err());
    }

    #[test]
    fn cap_equal_to_grid_size_forces_uniform() {
        let grid = GridSpec::new(20, 21).unwrap();
        let plan = optimize_time_plan(&grid, &marginal(), t50(), &OptimizerConfig::default()).unwrap();
        assert_eq!(plan.design.len(), 21);
        for w in plan.design.weights() {
            assert_abs_diff_eq!(*w, 1.0 / 21.0, epsilon = 1e-15);
        }
        assert!(plan.certified());
        assert_eq!(plan.certificate.saturated.len(), 21);
    }

    #[test]
    fn uncapped_straight_line_matches_closed_form() {
        let grid = GridSpec::new(20, 1).unwrap();
        for t_star in [1.2, 2.0, 5.0] {
            let plan = optimize_time_plan(&grid, &marginal(), t_star, &OptimizerConfig::default()).unwrap();
            assert!(plan.certified(), "t* = {t_star}: {:?}", plan.certificate.max_violation);
            let expected = t_star / (2.0 * t_star - 1.0);
            assert_eq!(plan.design.points(), &[0.0, 1.0]);
            assert_abs_diff_eq!(plan.design.weights()[1], expected, epsilon = 1e-4);
        }
    }

    #[test]
    fn interpolation_target_is_handled() {
        let grid = GridSpec::new(10, 4).unwrap();
        let plan = optimize_time_plan(&grid, &marginal(), 0.35, &OptimizerConfig::default()).unwrap();
        assert!(plan.certified());
    }

    #[test]
    fn nominal_plan_is_certified_with_endpoint_structure() {
        let grid = GridSpec::new(20, 6).unwrap();
        let plan = optimize_time_plan(&grid, &marginal(), t50(), &OptimizerConfig::default()).unwrap();
        assert!(plan.certified());
        assert!(plan.certificate.max_violation <= 1e-7);
        assert!(plan.certificate.endpoint_structure);
        for w in plan.design.weights() {
            assert!(*w <= 1.0 / 6.0 + 1e-12);
        }
    }

    #[test]
    fn uniform_plan_fails_certificate() {
        let grid = GridSpec::new(20, 6).unwrap();
        let tau0 = ApproximateDesign::uniform(vec![0.0, 0.05, 0.10, 0.90, 0.95, 1.0]).unwrap();
        let cert = kkt_check(&tau0, &grid, &marginal(), t50(), 1e-7).unwrap();
        assert!(!cert.passed);
        assert_eq!(cert.saturated.len(), 6);
    }

    #[test]
    fn two_point_optimum_equalizes_sensitivity() {
        let grid = GridSpec::new(20, 1).unwrap();
        let d = two_point_extrapolation_design(&marginal(), 2.5).unwrap();
        let cert = kkt_check(&d, &grid, &marginal(), 2.5, 1e-9).unwrap();
        assert_abs_diff_eq!(cert.sensitivity[0], cert.sensitivity[20], epsilon = 1e-9);
        assert!(cert.passed);
    }

    #[test]
    fn off_grid_design_rejected() {
        let grid = GridSpec::new(20, 6).unwrap();
        let d = ApproximateDesign::uniform(vec![0.0, 0.33, 1.0]).unwrap();
        assert!(kkt_check(&d, &grid, &marginal(), 2.0, 1e-7).is_err());
    }

    #[test]
    fn two_point_formula() {
        let d = two_point_extrapolation_design(&marginal(), 1.5838).unwrap();
        assert_abs_diff_eq!(d.weights()[1], 0.730670, epsilon = 1e-6);
        assert_abs_diff_eq!(d.weights()[0], 0.269330, epsilon = 1e-6);
        let far = two_point_extrapolation_design(&marginal(), 1e9).unwrap();
        assert_abs_diff_eq!(far.weights()[1], 0.5, epsilon = 1e-8);
        let edge = two_point_extrapolation_design(&marginal(), 1.0).unwrap();
        assert_eq!(edge.weights()[1], 1.0);
        assert!(two_point_extrapolation_design(&marginal(), 0.7).is_err());
        let quad = TimeMarginal {
            basis: Basis::Polynomial(2),
            sigma_eps: 1.0,
        };
        assert!(two_point_extrapolation_design(&quad, 2.0).is_err());
    }

    #[test]
    fn rounding_exact_design_is_identity() {
        let d = ApproximateDesign::uniform(vec![0.0, 0.05, 0.85, 0.9, 0.95, 1.0]).unwrap();
        let r = round_to_exact(&d, 6, &marginal(), t50()).unwrap();
        assert_eq!(r, d);
    }

    #[test]
    fn rounding_resolves_boundary_points() {
        // five saturated points plus two partial boundary points
        let cap = 1.0 / 6.0;
        let pts = vec![0.0, 0.05, 0.10, 0.85, 0.90, 0.95, 1.0];
        let w = vec![cap, cap, 0.117, 0.0497, cap, cap, cap];
        let d = ApproximateDesign::normalized(pts, w, 1e-3).unwrap();
        let m = marginal();
        // at the nominal median the later point is better
        let r = round_to_exact(&d, 6, &m, t50()).unwrap();
        assert_eq!(r.points(), &[0.0, 0.05, 0.85, 0.90, 0.95, 1.0]);
        // far extrapolation favors balancing the ends
        let r = round_to_exact(&d, 6, &m, 6.0).unwrap();
        assert_eq!(r.points(), &[0.0, 0.05, 0.10, 0.90, 0.95, 1.0]);
    }

    #[test]
    fn rounding_needs_enough_support() {
        let d = ApproximateDesign::uniform(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            round_to_exact(&d, 3, &marginal(), 2.0),
            Err(DesignError::Infeasible(_))
        ));
    }
}
