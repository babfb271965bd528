//! How much efficiency is lost when the planning guesses are wrong: sweeps the
//! median failure time and the variance ratio sigma(1)/sigma(0).

use adtplan::model::nominal;
use adtplan::sweeps::{reachable_ratio_interval, sweep_efficiency, SweepSpec, SweepVariable};

fn main() -> adtplan::Result<()> {
    let model = nominal::straight_line_example();
    let (lo, hi) = reachable_ratio_interval(&model)?;
    println!("ratios reachable by varying rho: [{lo:.4}, {hi:.4}]");
    for variable in [SweepVariable::TMedian, SweepVariable::SigmaRatio] {
        let spec = SweepSpec { n: 9, ..SweepSpec::default_for(variable) };
        let res = sweep_efficiency(&spec, &model)?;
        println!("\n{variable:?}  (nominal t50 {:.4}, ratio {:.4})", res.nominal_t_median, res.nominal_ratio);
        println!("{:>9} {:>8} {:>8} {:>8} {:>8}", "value", "pi*", "zeta*", "tau2", "tau6");
        let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        for r in &res.rows {
            println!(
                "{:>9.4} {:>8} {:>8} {:>8} {:>8}",
                r.abscissa,
                f(r.pi_star),
                f(r.eff_zeta_star),
                f(r.eff_tau2),
                f(r.eff_tau6)
            );
        }
    }
    Ok(())
}
