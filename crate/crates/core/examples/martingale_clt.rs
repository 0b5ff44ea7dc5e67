//! Variance of a centred additive functional `Σ (U_j − P₃U)` over a
//! horizon, against its martingale-approximation limit.
//!
//! `cargo run --release --example martingale_clt`

use std::sync::Arc;

use smkl::experiments::martingale_clt_check;
use smkl::kernels::{ChainKernel, SojournKernel};

fn main() -> smkl::Result<()> {
    let chain = ChainKernel::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5], vec![0.3, 0.3, 0.4]])?;
    let sojourn = SojournKernel::exponential_by_state(&[0.5, 1.0, 2.0])?;
    let rep = martingale_clt_check(&chain, &sojourn, Arc::new(|_, _, u| u), 20_000.0, 300, 10)?;
    println!("chain part {:.4}, sojourn part {:.4}, m = {:.4}", rep.limit.chain_part, rep.limit.sojourn_part, rep.limit.m);
    println!("variance {:.4} (limit {:.4})", rep.empirical_variance, rep.predicted_variance);
    Ok(())
}
