//! Scenario files: a TOML document describing the model, and optionally a
//! time grid, a sweep and an output target.
//!
//! ```toml
//! [model]
//! stress_basis = "affine"
//! time_basis = "affine"
//! beta = [2.397, 1.018, 1.629, 0.0696]
//! sigma1 = 0.114
//! sigma2 = 0.105
//! rho = -0.143
//! sigma_eps = 0.048
//! x_u = -0.056
//! y0 = 3.912
//!
//! [grid]
//! J = 20
//! k = 6
//! ```
//!
//! Non-affine time bases take a full `sigma_gamma` matrix instead of
//! `sigma1`, `sigma2` and `rho`. Bases are `"affine"` or `"polynomial:<degree>"`.

use std::fmt;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{sigma_gamma_from_components, Basis, DegradationModel, ErrorSpec};
use crate::optimizer::GridSpec;
use crate::sweeps::{Candidate, SweepSpec, SweepVariable};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub model: Option<ModelDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDoc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub stress_basis: Option<String>,
    pub time_basis: Option<String>,
    pub beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_gamma: Option<Vec<Vec<f64>>>,
    pub sigma_eps: Option<f64>,
    pub x_u: Option<f64>,
    pub y0: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    #[serde(rename = "J")]
    pub j: Option<i64>,
    pub k: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub variable: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Candidate>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: DegradationModel,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<OutputDoc>,
    doc: ScenarioDoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

impl Scenario {
    /// The document this scenario was built from.
    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.doc).expect("scenario documents always serialize")
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_col(text, s.start))
            .unwrap_or((1, 1));
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    validate(doc)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_basis(s: &str) -> Option<Basis> {
    match s.trim() {
        "affine" | "linear" => Some(Basis::Affine),
        other => {
            let degree: usize = other.strip_prefix("polynomial:")?.trim().parse().ok()?;
            (degree >= 1).then_some(if degree == 1 { Basis::Affine } else { Basis::Polynomial(degree) })
        }
    }
}

pub fn basis_name(b: Basis) -> String {
    if b.is_affine() {
        "affine".into()
    } else {
        format!("polynomial:{}", b.degree())
    }
}

/// Builds the scenario, collecting every violation instead of stopping at the first.
pub fn validate(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let mut errs = Errors::default();
    let model = match &doc.model {
        Some(m) => validate_model(m, &mut errs),
        None => {
            errs.push("model", "missing section");
            None
        }
    };
    let grid = doc.grid.and_then(|g| validate_grid(&g, &mut errs));
    let sweep = doc.sweep.as_ref().and_then(|s| validate_sweep(s, &mut errs));
    if let (Some(m), Some(g)) = (&model, &grid) {
        let p2 = m.time_basis().dim();
        if g.k > 1 && g.k < p2 {
            errs.push("grid.k", format!("k = {} cannot identify {p2} time parameters", g.k));
        }
        if g.intervals + 1 < p2 {
            errs.push("grid.J", format!("grid of {} points cannot identify {p2} time parameters", g.intervals + 1));
        }
    }
    if let (Some(m), Some(_)) = (&model, &sweep) {
        if !(m.time_basis().is_affine() && m.stress_basis().is_affine()) {
            errs.push("sweep", "sweeps need straight-line stress and time bases");
        }
    }
    match (errs.0.is_empty(), model) {
        (true, Some(model)) => Ok(Scenario {
            model,
            grid,
            sweep,
            output: doc.output.clone(),
            doc,
        }),
        _ => Err(ScenarioError::Invalid(errs.0)),
    }
}

#[derive(Default)]
struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn required<T: Copy>(&mut self, path: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(path, "missing required field");
        }
        v
    }

    fn finite(&mut self, path: &str, v: Option<f64>) -> Option<f64> {
        let v = self.required(path, v)?;
        if v.is_finite() {
            Some(v)
        } else {
            self.push(path, format!("must be finite, got {v}"));
            None
        }
    }
}

fn validate_model(m: &ModelDoc, errs: &mut Errors) -> Option<DegradationModel> {
    let basis = |errs: &mut Errors, path: &str, v: &Option<String>| match v {
        None => {
            errs.push(path, "missing required field");
            None
        }
        Some(s) => parse_basis(s).or_else(|| {
            errs.push(path, format!("unknown basis {s:?}; use \"affine\" or \"polynomial:<degree>\""));
            None
        }),
    };
    let stress = basis(errs, "model.stress_basis", &m.stress_basis);
    let time = basis(errs, "model.time_basis", &m.time_basis);
    let x_u = errs.finite("model.x_u", m.x_u);
    let y0 = errs.finite("model.y0", m.y0);

    let sigma_eps = errs.finite("model.sigma_eps", m.sigma_eps).and_then(|s| {
        if s > 0.0 {
            Some(s)
        } else {
            errs.push("model.sigma_eps", format!("must be positive, got {s}"));
            None
        }
    });

    let beta = match &m.beta {
        None => {
            errs.push("model.beta", "missing required field");
            None
        }
        Some(b) => {
            if let Some(v) = b.iter().find(|v| !v.is_finite()) {
                errs.push("model.beta", format!("contains non-finite value {v}"));
                None
            } else {
                match (stress, time) {
                    (Some(s), Some(t)) if b.len() != s.dim() * t.dim() => {
                        errs.push(
                            "model.beta",
                            format!("has {} entries, expected {}", b.len(), s.dim() * t.dim()),
                        );
                        None
                    }
                    _ => Some(DVector::from_vec(b.clone())),
                }
            }
        }
    };

    let sigma_gamma = validate_sigma_gamma(m, time, errs);

    let (stress, time, beta, sigma_gamma, sigma_eps, x_u, y0) =
        (stress?, time?, beta?, sigma_gamma?, sigma_eps?, x_u?, y0?);
    match DegradationModel::new(
        stress,
        time,
        beta,
        sigma_gamma,
        ErrorSpec::Homoscedastic { sigma_eps },
        x_u,
        y0,
    ) {
        Ok(model) => Some(model),
        Err(e) => {
            errs.push("model", e.to_string());
            None
        }
    }
}

fn validate_sigma_gamma(m: &ModelDoc, time: Option<Basis>, errs: &mut Errors) -> Option<DMatrix<f64>> {
    let components = m.sigma1.is_some() || m.sigma2.is_some() || m.rho.is_some();
    match (&m.sigma_gamma, components) {
        (Some(_), true) => {
            errs.push(
                "model.sigma_gamma",
                "give either sigma_gamma or sigma1/sigma2/rho, not both",
            );
            None
        }
        (Some(rows), false) => {
            let p = rows.len();
            if rows.iter().any(|r| r.len() != p) || p == 0 {
                errs.push("model.sigma_gamma", "must be a non-empty square matrix");
                return None;
            }
            if let Some(t) = time {
                if t.dim() != p {
                    errs.push(
                        "model.sigma_gamma",
                        format!("is {p}x{p}, expected {0}x{0} for the time basis", t.dim()),
                    );
                    return None;
                }
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            if flat.iter().any(|v| !v.is_finite()) {
                errs.push("model.sigma_gamma", "contains non-finite values");
                return None;
            }
            Some(DMatrix::from_row_slice(p, p, &flat))
        }
        (None, _) => {
            if let Some(t) = time {
                if !t.is_affine() {
                    errs.push(
                        "model.sigma_gamma",
                        "required for a non-affine time basis (sigma1/sigma2/rho describe straight lines only)",
                    );
                    return None;
                }
            }
            let s1 = nonneg(errs, "model.sigma1", m.sigma1);
            let s2 = nonneg(errs, "model.sigma2", m.sigma2);
            let rho = errs.finite("model.rho", m.rho).and_then(|r| {
                if r.abs() <= 1.0 {
                    Some(r)
                } else {
                    errs.push("model.rho", format!("sigma_gamma.rho out of [-1,1]: {r}"));
                    None
                }
            });
            Some(sigma_gamma_from_components(s1?, s2?, rho?))
        }
    }
}

fn nonneg(errs: &mut Errors, path: &str, v: Option<f64>) -> Option<f64> {
    let v = errs.finite(path, v)?;
    if v >= 0.0 {
        Some(v)
    } else {
        errs.push(path, format!("must be >= 0, got {v}"));
        None
    }
}

fn validate_grid(g: &GridDoc, errs: &mut Errors) -> Option<GridSpec> {
    let positive = |errs: &mut Errors, path: &str, v: Option<i64>| {
        let v = errs.required(path, v)?;
        if v >= 1 {
            Some(v as usize)
        } else {
            errs.push(path, format!("must be >= 1, got {v}"));
            None
        }
    };
    let j = positive(errs, "grid.J", g.j);
    let k = positive(errs, "grid.k", g.k);
    match GridSpec::new(j?, k?) {
        Ok(spec) => Some(spec),
        Err(e) => {
            errs.push("grid.k", e.to_string());
            None
        }
    }
}

fn validate_sweep(s: &SweepDoc, errs: &mut Errors) -> Option<SweepSpec> {
    let variable = errs.required("sweep.variable", s.variable)?;
    let defaults = SweepSpec::default_for(variable);
    let n = match s.n {
        None => defaults.n,
        Some(n) if n >= 2 => n as usize,
        Some(n) => {
            errs.push("sweep.n", format!("must be >= 2, got {n}"));
            return None;
        }
    };
    let spec = SweepSpec {
        variable,
        lo: s.lo.unwrap_or(defaults.lo),
        hi: s.hi.unwrap_or(defaults.hi),
        n,
        candidates: s.candidates.clone().unwrap_or(defaults.candidates),
    };
    match spec.validate() {
        Ok(()) => Some(spec),
        Err(e) => {
            errs.push("sweep", e.to_string());
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::median_failure_time;
    use approx::assert_abs_diff_eq;

    const EXAMPLE: &str = include_str!("../scenarios/example1.scenario");

    fn errors(text: &str) -> Vec<FieldError> {
        match parse_scenario(text) {
            Err(ScenarioError::Invalid(e)) => e,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn shipped_example_parses() {
        let s = parse_scenario(EXAMPLE).unwrap();
        assert_abs_diff_eq!(median_failure_time(&s.model).unwrap(), 1.5838, epsilon = 1e-4);
        assert_eq!(s.grid, Some(GridSpec::new(20, 6).unwrap()));
    }

    #[test]
    fn round_trip() {
        let s = parse_scenario(EXAMPLE).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn rho_out_of_range() {
        let e = errors(&EXAMPLE.replace("rho = -0.143", "rho = 1.5"));
        assert!(e.iter().any(|e| e.to_string().contains("sigma_gamma.rho out of [-1,1]")), "{e:?}");
        assert_eq!(e[0].path, "model.rho");
    }

    #[test]
    fn missing_field_is_named() {
        let e = errors(&EXAMPLE.replace("y0 = 3.912\n", ""));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].path, "model.y0");
    }

    #[test]
    fn all_errors_are_reported() {
        let text = EXAMPLE
            .replace("y0 = 3.912\n", "")
            .replace("sigma_eps = 0.048", "sigma_eps = -1.0")
            .replace("k = 6", "k = 0");
        let paths: Vec<String> = errors(&text).into_iter().map(|e| e.path).collect();
        assert!(paths.contains(&"model.y0".to_string()));
        assert!(paths.contains(&"model.sigma_eps".to_string()));
        assert!(paths.contains(&"grid.k".to_string()));
    }

    #[test]
    fn syntax_error_position() {
        let text = "[model]\nstress_basis = \"affine\"\nbeta = [1, 2\n";
        match parse_scenario(text) {
            Err(ScenarioError::Syntax { line, .. }) => assert!(line >= 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            parse_scenario(&EXAMPLE.replace("[grid]", "[grid]\nfoo = 1")),
            Err(ScenarioError::Syntax { .. })
        ));
    }

    #[test]
    fn polynomial_basis_needs_matrix() {
        let text = r#"
[model]
stress_basis = "affine"
time_basis = "polynomial:2"
beta = [1.0, 0.5, 0.25, 0.0, 0.0, 0.0]
sigma_gamma = [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.001]]
sigma_eps = 0.05
x_u = -0.5
y0 = 2.5
"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.model.time_basis(), Basis::Polynomial(2));
        let e = errors(&text.replace(
            "sigma_gamma = [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.001]]",
            "sigma1 = 0.1",
        ));
        assert_eq!(e[0].path, "model.sigma_gamma");
        assert_eq!(parse_scenario(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn sweep_defaults_fill_in() {
        let s = parse_scenario(&format!("{EXAMPLE}\n[sweep]\nvariable = \"sigma_ratio\"\n")).unwrap();
        let sweep = s.sweep.unwrap();
        assert_eq!((sweep.lo, sweep.hi, sweep.n), (0.2, 5.0, 200));
        let e = errors(&format!("{EXAMPLE}\n[sweep]\nvariable = \"t_median\"\nlo = 0.5\n"));
        assert_eq!(e[0].path, "sweep");
    }

    #[test]
    fn basis_names() {
        assert_eq!(parse_basis("polynomial:3"), Some(Basis::Polynomial(3)));
        assert_eq!(parse_basis("polynomial:1"), Some(Basis::Affine));
        assert_eq!(parse_basis("cubic"), None);
        assert_eq!(basis_name(Basis::Polynomial(2)), "polynomial:2");
    }
}
