//! Tabular output. Numbers are written in Rust's shortest round-trip form,
//! so the files are byte-for-byte reproducible and lose no precision.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::ApproximateDesign;
use crate::destructive::ProductDesign;
use crate::error::{DesignError, Result};
use crate::optimizer::TimePlan;
use crate::sweeps::SweepResult;

/// Rounded weights in hand-written design files are accepted up to this
/// deviation of their sum from 1, then renormalized.
pub const DESIGN_FILE_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    pub t: f64,
    pub weight: f64,
    pub sensitivity: f64,
    pub saturated: bool,
}

/// Support rows of an optimized plan.
pub fn plan_rows(plan: &TimePlan) -> Vec<DesignRow> {
    let sat = &plan.certificate.saturated;
    plan.grid
        .iter()
        .zip(&plan.grid_weights)
        .enumerate()
        .filter(|(_, (_, w))| **w > 0.0)
        .map(|(j, (t, w))| DesignRow {
            t: *t,
            weight: *w,
            sensitivity: plan.certificate.sensitivity[j],
            saturated: sat.contains(&j),
        })
        .collect()
}

fn to_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w).expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn design_csv(rows: &[DesignRow]) -> String {
    to_string(|w| {
        w.write_record(["t", "weight", "sensitivity", "saturated"])?;
        for r in rows {
            w.write_record([num(r.t), num(r.weight), num(r.sensitivity), r.saturated.to_string()])?;
        }
        Ok(())
    })
}

pub fn product_csv(z: &ProductDesign) -> String {
    to_string(|w| {
        w.write_record(["x", "t", "weight"])?;
        for &((x, t), wt) in &z.combined {
            w.write_record([num(x), num(t), num(wt)])?;
        }
        Ok(())
    })
}

pub fn sweep_csv(res: &SweepResult) -> String {
    to_string(|w| {
        w.write_record(["abscissa", "pi_star", "eff_zeta_star", "eff_tau2", "eff_tau6"])?;
        for r in &res.rows {
            w.write_record([
                num(r.abscissa),
                opt(r.pi_star),
                opt(r.eff_zeta_star),
                opt(r.eff_tau2),
                opt(r.eff_tau6),
            ])?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SweepRowJson {
    abscissa: f64,
    pi_star: Option<f64>,
    eff_zeta_star: Option<f64>,
    eff_tau2: Option<f64>,
    eff_tau6: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

pub fn design_json(rows: &[DesignRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn sweep_json(res: &SweepResult) -> String {
    let rows: Vec<SweepRowJson> = res
        .rows
        .iter()
        .map(|r| SweepRowJson {
            abscissa: r.abscissa,
            pi_star: r.pi_star,
            eff_zeta_star: r.eff_zeta_star,
            eff_tau2: r.eff_tau2,
            eff_tau6: r.eff_tau6,
            note: r.note.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}

#[derive(Deserialize)]
struct DesignRecord {
    t: f64,
    weight: f64,
}

/// Reads a design from CSV with at least the columns `t` and `weight`.
/// Rows need not be sorted; other columns are ignored.
pub fn read_design_csv(text: &str) -> Result<ApproximateDesign> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<DesignRecord>().enumerate() {
        let rec = rec.map_err(|e| DesignError::Config(format!("design row {}: {e}", i + 1)))?;
        rows.push((rec.t, rec.weight));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (points, weights) = rows.into_iter().unzip();
    ApproximateDesign::normalized(points, weights, DESIGN_FILE_SUM_TOL)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweeps::SweepRow;
    use crate::sweeps::SweepVariable;

    #[test]
    fn design_round_trip() {
        let rows = vec![
            DesignRow { t: 0.0, weight: 0.25, sensitivity: 1.0, saturated: true },
            DesignRow { t: 0.1, weight: 0.75, sensitivity: 1.0, saturated: false },
        ];
        let text = design_csv(&rows);
        assert_eq!(text, "t,weight,sensitivity,saturated\n0,0.25,1,true\n0.1,0.75,1,false\n");
        let d = read_design_csv(&text).unwrap();
        assert_eq!(d.points(), &[0.0, 0.1]);
        assert_eq!(d.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn shipped_tau0() {
        let d = read_design_csv(include_str!("../scenarios/tau0.csv")).unwrap();
        assert_eq!(d.points(), &[0.0, 0.05, 0.1, 0.9, 0.95, 1.0]);
    }

    #[test]
    fn rounded_weights_are_renormalized() {
        let d = read_design_csv("t,weight\n1,0.6667\n0,0.3333\n").unwrap();
        assert_eq!(d.points(), &[0.0, 1.0]);
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(read_design_csv("t,weight\n0,0.5\n1,0.4\n").is_err());
        assert!(read_design_csv("t,weight\n0,abc\n").is_err());
    }

    #[test]
    fn sweep_missing_values_are_empty() {
        let res = SweepResult {
            variable: SweepVariable::SigmaRatio,
            nominal_t_median: 1.5,
            nominal_ratio: 1.2,
            rows: vec![SweepRow {
                abscissa: 0.2,
                pi_star: Some(0.1),
                eff_zeta_star: Some(0.5),
                eff_tau2: Some(0.25),
                eff_tau6: None,
                note: Some("x".into()),
            }],
        };
        assert_eq!(
            sweep_csv(&res),
            "abscissa,pi_star,eff_zeta_star,eff_tau2,eff_tau6\n0.2,0.1,0.5,0.25,\n"
        );
        assert!(sweep_json(&res).contains("\"eff_tau6\": null"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
