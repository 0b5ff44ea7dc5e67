//! The estimator built from the marginal pair law against the transition
//! likelihood estimator, as the sample grows: their scaled difference should
//! shrink.
//!
//! `cargo run --release --example marginal_pair`

use std::sync::Arc;

use nalgebra::DMatrix;
use smkl::experiments::marginal_pair_diagnostic;
use smkl::kernels::{ChainKernel, ExponentialTilt, SojournKernel};

fn main() -> smkl::Result<()> {
    let tilt = ExponentialTilt::scalar(
        DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.4, 0.1, 0.5, 0.3, 0.3, 0.4]),
        DMatrix::from_fn(3, 3, |x, y| if y == (x + 1) % 3 { 1.0 } else { 0.0 }),
    )?;
    let truth = ChainKernel::new(smkl::kernels::QFamily::transition_matrix(&tilt, &nalgebra::dvector![0.4]))?;
    let rep = marginal_pair_diagnostic(&truth, Arc::new(tilt), &SojournKernel::point_mass(3), &[1_000, 10_000, 100_000], 50, 6)?;
    for (n, med) in rep.n_grid.iter().zip(&rep.medians) {
        println!("n = {n:>6}: median sqrt(n)|theta_2 - theta_Q| = {med:.4}");
    }
    println!("monotone decrease: {}", rep.monotone_decrease);
    Ok(())
}
