//! Repeated-measures time plan: each unit is measured at k of the J + 1 grid
//! times. Compares the optimum with an evenly spread plan and rounds it.

use adtplan::criteria::{c_criterion_time, efficiency, efficiency_fixed};
use adtplan::failure::median_failure_time;
use adtplan::model::nominal;
use adtplan::optimizer::{optimize_time_plan, round_to_exact, GridSpec, OptimizerConfig};
use adtplan::ApproximateDesign;

fn main() -> adtplan::Result<()> {
    let model = nominal::straight_line_example();
    let marginal = model.time_marginal()?;
    let t_star = median_failure_time(&model)?;
    let grid = GridSpec::new(20, 6)?;

    let plan = optimize_time_plan(&grid, &marginal, t_star, &OptimizerConfig::default())?;
    println!("optimal plan after {} iterations (certified: {})", plan.iterations, plan.certified());
    for (t, w) in plan.design.iter() {
        println!("  t = {t:.3}  weight = {w:.5}");
    }
    let report = c_criterion_time(&plan.design, &model, t_star)?;
    println!(
        "criterion {:.5} = fixed {:.5} + random {:.5}",
        report.criterion_total, report.criterion_fixed, report.criterion_random
    );

    let exact = round_to_exact(&plan.design, grid.k, &marginal, t_star)?;
    println!("rounded to 6 times: {:?}", exact.points());

    let even = ApproximateDesign::uniform(vec![0.0, 0.05, 0.1, 0.9, 0.95, 1.0])?;
    println!(
        "plan {:?}: efficiency {:.4} (fixed effects only {:.4})",
        even.points(),
        efficiency(&even, &plan.design, &model, t_star)?,
        efficiency_fixed(&even, &plan.design, &marginal, t_star)?
    );
    Ok(())
}
