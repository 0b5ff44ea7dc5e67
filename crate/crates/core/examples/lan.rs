//! Log-likelihood ratios along a local perturbation of both kernels,
//! compared with the Gaussian limit.
//!
//! `cargo run --release --example lan`

use std::sync::Arc;

use nalgebra::DMatrix;
use smkl::experiments::{lan_diagnostic, PerturbationDirection};
use smkl::kernels::{ChainKernel, SojournKernel};

fn main() -> smkl::Result<()> {
    let chain = ChainKernel::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]])?;
    let sojourn = SojournKernel::exponential_by_state(&[1.0, 2.0])?;
    let dir = PerturbationDirection::zero(2)
        .with_pair(&chain, &DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -1.0, 0.5]))
        .with_triple(&sojourn, Arc::new(|x, _, u| (1.0 + x as f64) * u))?;
    let rep = lan_diagnostic(&chain, &sojourn, &dir, 20_000.0, 500, 9)?;
    println!("mean log ratio {:.4} (limit {:.4})", rep.mean_log_ratio, rep.predicted_mean);
    println!("variance {:.4} (limit {:.4})", rep.var_log_ratio, rep.predicted_variance);
    Ok(())
}
