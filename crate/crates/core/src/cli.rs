//! Command-line front end. Reports go to stdout as `key,value` lines; tables
//! go to the file given by `--out` (or the scenario's `output.path`).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 optimization
//! finished without an optimality certificate.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::criteria::{c_criterion_fixed, c_criterion_time, efficiency, efficiency_fixed};
use crate::csvio::{self, DesignRow};
use crate::design::ApproximateDesign;
use crate::destructive::{optimize_destructive, VarianceFunction};
use crate::error::DesignError;
use crate::failure::{median_failure_time, quantile};
use crate::model::eval_delta;
use crate::optimizer::{kkt_check, optimize_time_plan, round_to_exact, GridSpec, OptimizerConfig};
use crate::scenario::{parse_scenario, OutputFormat, Scenario};
use crate::sweeps::{sweep_efficiency, SweepSpec, SweepVariable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "adtplan", version, about = "Optimal designs for accelerated degradation tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Failure-time quantile under use conditions.
    Quantile {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Capped c-optimal time plan for repeated measures.
    OptimizeTime {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extrapolation target; defaults to the median failure time.
        #[arg(long)]
        t_star: Option<f64>,
        /// Also round the plan to k equally weighted time points.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = OptimizerConfig::default().max_iters)]
        max_iters: usize,
    },
    /// Optimal product design for destructive (single-measurement) testing.
    OptimizeDestructive {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Efficiency of a time plan relative to the optimal (or a given reference) plan.
    Efficiency {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Efficiency and optimal-weight curves over a misspecified parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_variable)]
        variable: Option<SweepVariable>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Validate a scenario and optionally certify a time plan against it.
    Check {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        design: Option<PathBuf>,
    },
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    match s {
        "t_median" => Ok(SweepVariable::TMedian),
        "sigma_ratio" => Ok(SweepVariable::SigmaRatio),
        _ => Err(format!("unknown sweep variable {s:?}; use t_median or sigma_ratio")),
    }
}

/// Failure of a command, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        let code = match e {
            DesignError::Config(_) => EXIT_INVALID,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", path.display()),
    }
}

struct Report<'a> {
    out: &'a mut dyn Write,
}

impl Report<'_> {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        // a closed stdout is not worth failing the run over
        let _ = writeln!(self.out, "{key},{value}");
    }

    fn design(&mut self, prefix: &str, d: &ApproximateDesign) {
        let pts: Vec<String> = d.points().iter().map(|p| p.to_string()).collect();
        let ws: Vec<String> = d.weights().iter().map(|w| w.to_string()).collect();
        self.kv(&format!("{prefix}_points"), pts.join(" "));
        self.kv(&format!("{prefix}_weights"), ws.join(" "));
    }

    fn nominal(&mut self, s: &Scenario) {
        let delta = eval_delta(&s.model);
        for (i, d) in delta.iter().enumerate() {
            self.kv(&format!("delta{}", i + 1), d);
        }
        if let Ok(t) = median_failure_time(&s.model) {
            self.kv("t_median", t);
        }
        if let Ok(vf) = VarianceFunction::new(&s.model) {
            self.kv("sigma0", vf.variance(0.0).sqrt());
            self.kv("sigma1", vf.variance(1.0).sqrt());
            self.kv("ratio", vf.ratio());
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let started = Instant::now();
    let mut report = Report { out };
    match dispatch(cli.command, &mut report) {
        Ok(code) => {
            report.kv("elapsed_ms", started.elapsed().as_millis());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_scenario(&text).map_err(|e| Failure {
        code: EXIT_INVALID,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_design(path: &Path) -> Result<ApproximateDesign, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    csvio::read_design_csv(&text).map_err(|e| Failure {
        code: EXIT_INVALID,
        message: format!("{}: {e}", path.display()),
    })
}

fn require_grid(s: &Scenario) -> Result<GridSpec, Failure> {
    s.grid.ok_or_else(|| Failure {
        code: EXIT_INVALID,
        message: "grid: this command needs a [grid] section with J and k".into(),
    })
}

/// Output path and format: `--out` wins, then the scenario's `[output]`.
fn target(s: &Scenario, out: Option<PathBuf>) -> (Option<PathBuf>, OutputFormat) {
    let format = s.output.as_ref().map(|o| o.format).unwrap_or_default();
    let path = out.or_else(|| s.output.as_ref().and_then(|o| o.path.clone()));
    (path, format)
}

fn emit(report: &mut Report, path: Option<PathBuf>, contents: String) -> Result<(), Failure> {
    if let Some(p) = path {
        csvio::write_atomic(&p, &contents).map_err(|e| io_failure(&p, e))?;
        report.kv("wrote", p.display());
    }
    Ok(())
}

fn dispatch(cmd: Command, report: &mut Report) -> Result<i32, Failure> {
    match cmd {
        Command::Quantile { scenario, alpha } => {
            let s = load_scenario(&scenario)?;
            report.kv("command", "quantile");
            report.nominal(&s);
            let q = quantile(alpha, &s.model)?;
            report.kv("alpha", alpha);
            report.kv("exists", q.exists);
            if q.exists {
                report.kv("t_alpha", q.t_alpha);
            }
            report.kv("bracket", format!("{} {}", q.bounds_used.0, q.bounds_used.1));
            Ok(EXIT_OK)
        }
        Command::OptimizeTime {
            scenario,
            out,
            t_star,
            exact,
            max_iters,
        } => {
            let s = load_scenario(&scenario)?;
            let grid = require_grid(&s)?;
            let marginal = s.model.time_marginal()?;
            let t_star = match t_star {
                Some(t) => t,
                None => median_failure_time(&s.model)?,
            };
            report.kv("command", "optimize-time");
            report.nominal(&s);
            report.kv("t_star", t_star);
            let cfg = OptimizerConfig {
                max_iters,
                ..OptimizerConfig::default()
            };
            let plan = optimize_time_plan(&grid, &marginal, t_star, &cfg)?;
            report.design("design", &plan.design);
            report.kv("criterion_fixed", plan.criterion_fixed);
            report.kv("criterion_total", c_criterion_time(&plan.design, &s.model, t_star)?.criterion_total);
            report.kv("iterations", plan.iterations);
            report.kv("kkt_max_violation", plan.certificate.max_violation);
            report.kv("saturated", plan.certificate.saturated.len());
            report.kv("endpoint_structure", plan.certificate.endpoint_structure);
            report.kv("certified", plan.certified());
            if exact {
                let rounded = round_to_exact(&plan.design, grid.k, &marginal, t_star)?;
                report.design("exact", &rounded);
                report.kv("exact_efficiency", efficiency(&rounded, &plan.design, &s.model, t_star)?);
            }
            let rows = csvio::plan_rows(&plan);
            let (path, format) = target(&s, out);
            emit(report, path, render_design(&rows, format))?;
            Ok(if plan.certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED })
        }
        Command::OptimizeDestructive { scenario, out } => {
            let s = load_scenario(&scenario)?;
            report.kv("command", "optimize-destructive");
            report.nominal(&s);
            let plan = optimize_destructive(&s.model)?;
            report.design("stress", &plan.product.stress);
            report.design("time", &plan.product.time);
            let combined: Vec<String> = plan
                .product
                .combined
                .iter()
                .map(|((x, t), w)| format!("({x} {t}):{w}"))
                .collect();
            report.kv("combined", combined.join(" "));
            report.kv("criterion", plan.criterion);
            let certified = plan.certificate.as_ref().is_none_or(|c| c.passed);
            report.kv("closed_form", plan.certificate.is_none());
            report.kv("certified", certified);
            let (path, format) = target(&s, out);
            let body = match format {
                OutputFormat::Csv => csvio::product_csv(&plan.product),
                OutputFormat::Json => product_json(&plan.product),
            };
            emit(report, path, body)?;
            Ok(if certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
        }
        Command::Efficiency {
            scenario,
            design,
            reference,
        } => {
            let s = load_scenario(&scenario)?;
            let t_star = median_failure_time(&s.model)?;
            let candidate = load_design(&design)?;
            report.kv("command", "efficiency");
            report.nominal(&s);
            let (reference, certified) = match reference {
                Some(p) => (load_design(&p)?, true),
                None => {
                    let grid = require_grid(&s)?;
                    let plan = optimize_time_plan(&grid, &s.model.time_marginal()?, t_star, &OptimizerConfig::default())?;
                    let ok = plan.certified();
                    (plan.design, ok)
                }
            };
            report.design("reference", &reference);
            scores(report, &s, &candidate, &reference, t_star)?;
            Ok(if certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
        }
        Command::Sweep {
            scenario,
            out,
            variable,
            n,
        } => {
            let s = load_scenario(&scenario)?;
            let mut spec = match (variable, &s.sweep) {
                (Some(v), Some(sw)) if sw.variable != v => SweepSpec::default_for(v),
                (_, Some(sw)) => sw.clone(),
                (Some(v), None) => SweepSpec::default_for(v),
                (None, None) => {
                    return Err(Failure {
                        code: EXIT_INVALID,
                        message: "sweep: give --variable or a [sweep] section".into(),
                    })
                }
            };
            if let Some(n) = n {
                spec.n = n;
            }
            report.kv("command", "sweep");
            report.nominal(&s);
            let res = sweep_efficiency(&spec, &s.model)?;
            report.kv("rows", res.rows.len());
            report.kv("nominal_t_median", res.nominal_t_median);
            report.kv("nominal_ratio", res.nominal_ratio);
            report.kv("skipped", res.rows.iter().filter(|r| r.pi_star.is_none()).count());
            let (path, format) = target(&s, out);
            let body = match format {
                OutputFormat::Csv => csvio::sweep_csv(&res),
                OutputFormat::Json => csvio::sweep_json(&res),
            };
            if path.is_none() {
                let _ = write!(report.out, "{body}");
            }
            emit(report, path, body)?;
            Ok(EXIT_OK)
        }
        Command::Check { scenario, design } => {
            let s = load_scenario(&scenario)?;
            report.kv("command", "check");
            report.kv("valid", true);
            report.nominal(&s);
            if s.grid.is_some_and(|g| g.k == 1) {
                // one measurement per unit: intercept variance and σε are confounded
                report.kv("warning", "k = 1: sigma1 and sigma_eps are not separately identifiable from the data");
            }
            let Some(path) = design else {
                return Ok(EXIT_OK);
            };
            let candidate = load_design(&path)?;
            let grid = require_grid(&s)?;
            let marginal = s.model.time_marginal()?;
            let t_star = median_failure_time(&s.model)?;
            let cert = kkt_check(&candidate, &grid, &marginal, t_star, OptimizerConfig::default().tol)?;
            report.kv("design_kkt_max_violation", cert.max_violation);
            report.kv("design_is_optimal", cert.passed);
            let plan = optimize_time_plan(&grid, &marginal, t_star, &OptimizerConfig::default())?;
            report.design("optimal", &plan.design);
            report.kv("optimal_certified", plan.certified());
            scores(report, &s, &candidate, &plan.design, t_star)?;
            Ok(EXIT_OK)
        }
    }
}

fn scores(
    report: &mut Report,
    s: &Scenario,
    candidate: &ApproximateDesign,
    reference: &ApproximateDesign,
    t_star: f64,
) -> Result<(), Failure> {
    let marginal = s.model.time_marginal()?;
    report.kv("efficiency", efficiency(candidate, reference, &s.model, t_star)?);
    report.kv("efficiency_fixed", efficiency_fixed(candidate, reference, &marginal, t_star)?);
    report.kv("criterion_fixed", c_criterion_fixed(candidate, &marginal, t_star)?);
    report.kv("reference_criterion_fixed", c_criterion_fixed(reference, &marginal, t_star)?);
    Ok(())
}

fn render_design(rows: &[DesignRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => csvio::design_csv(rows),
        OutputFormat::Json => csvio::design_json(rows),
    }
}

fn product_json(z: &crate::destructive::ProductDesign) -> String {
    let rows: Vec<serde_json::Value> = z
        .combined
        .iter()
        .map(|((x, t), w)| serde_json::json!({ "x": x, "t": t, "weight": w }))
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}
