//! The inverse information of a mixed model splits into a fixed-effects part
//! plus the random-effects covariance, so the c-criterion splits the same way.

use adtplan::criteria::mixed_inverse_decomposed;
use adtplan::linalg::spd_inverse;
use nalgebra::{dmatrix, DMatrix};

fn main() -> adtplan::Result<()> {
    let f = dmatrix![1.0, 0.0; 1.0, 0.3; 1.0, 0.7; 1.0, 1.0];
    let sigma_gamma = dmatrix![0.013, -0.0017; -0.0017, 0.011];
    let sigma_eps = DMatrix::identity(4, 4) * 0.048f64.powi(2);

    let v = &f * &sigma_gamma * f.transpose() + &sigma_eps;
    let direct = spd_inverse(&(f.transpose() * spd_inverse(&v)? * &f))?;
    let split = mixed_inverse_decomposed(&f, &sigma_gamma, &sigma_eps)?;
    let gap = (&direct - &split).amax();
    println!("direct:{direct}split:{split}max difference: {gap:.3e}");
    Ok(())
}
