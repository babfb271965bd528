//! Drives the library from a scenario file, the same way the CLI does.
//!
//!     cargo run --example scenario_run -- scenarios/quadratic.scenario

use adtplan::failure::median_failure_time;
use adtplan::optimizer::{optimize_time_plan, OptimizerConfig};
use adtplan::scenario::parse_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/example1.scenario").into());
    let scenario = parse_scenario(&std::fs::read_to_string(&path)?)?;
    let t_star = median_failure_time(&scenario.model)?;
    println!("{path}: median failure time {t_star:.5}");
    let Some(grid) = scenario.grid else {
        println!("no [grid] section, nothing to optimize");
        return Ok(());
    };
    let plan = optimize_time_plan(&grid, &scenario.model.time_marginal()?, t_star, &OptimizerConfig::default())?;
    println!("J = {}, k = {}: certified {}", grid.intervals, grid.k, plan.certified());
    print!("{}", adtplan::csvio::design_csv(&adtplan::csvio::plan_rows(&plan)));
    Ok(())
}
