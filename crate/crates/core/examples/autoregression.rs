//! Least squares for an AR(1) coefficient applied to an AR(2) series:
//! the estimate settles on the first autocorrelation, not on either
//! true coefficient.
//!
//! `cargo run --example autoregression`

use smkl::estimators::{fit_ar1_gaussian, fit_ar1_least_squares};
use smkl::oracle::kl_projection_autoregression;
use smkl::simulator::simulate_autoregression;

fn main() -> smkl::Result<()> {
    let coefficients = [0.5, 0.3];
    let series = simulate_autoregression(&coefficients, 1.0, 200_000, 3);
    let ls = fit_ar1_least_squares(&series)?;
    let newton = fit_ar1_gaussian(&series)?;
    let k = kl_projection_autoregression(&coefficients)?;
    println!("least squares {ls:.5}, Newton {:.5}, projection {k:.5}", newton.theta_hat[0]);
    Ok(())
}
