//! Destructive testing: one measurement per unit. The optimal design is the
//! product of a two-point stress design and a two-point time design.

use adtplan::destructive::{elfving_brute_force_oracle, optimize_destructive};
use adtplan::model::nominal;

fn main() -> adtplan::Result<()> {
    let model = nominal::straight_line_example();
    let plan = optimize_destructive(&model)?;
    println!("sigma(0) = {:.6}, sigma(1) = {:.6}", plan.sigma0, plan.sigma1);
    println!("stress design: {:?} {:?}", plan.product.stress.points(), plan.product.stress.weights());
    println!("time design:   {:?} {:?}", plan.product.time.points(), plan.product.time.weights());
    for ((x, t), w) in &plan.product.combined {
        println!("  x = {x}, t = {t}: {w:.5}");
    }
    println!("criterion: {:.6}", plan.criterion);

    // independent check by searching all two-point designs on a fine grid
    let brute = elfving_brute_force_oracle(&model, plan.t_star, 2000)?;
    println!("brute force: {:?} {:?}", brute.points(), brute.weights());
    Ok(())
}
