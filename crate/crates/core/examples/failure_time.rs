//! Failure-time distribution under use conditions for the nominal model.

use adtplan::failure::{existence_window, failure_cdf, median_failure_time, quantile};
use adtplan::model::nominal;

fn main() -> adtplan::Result<()> {
    let model = nominal::straight_line_example();
    println!("median failure time: {:.6}", median_failure_time(&model)?);
    if let Some((lo, hi)) = existence_window(&model) {
        println!("quantiles exist for alpha in ({lo:.4}, {hi:.4})");
    }
    for alpha in [0.01, 0.1, 0.5, 0.9] {
        let q = quantile(alpha, &model)?;
        if q.exists {
            println!("t_{alpha:<4} = {:.5}   F(t) = {:.6}", q.t_alpha, failure_cdf(q.t_alpha, &model)?);
        } else {
            println!("t_{alpha:<4} does not exist");
        }
    }
    Ok(())
}
