//! Monte Carlo check of the sandwich: exponential fits to gamma(2, 3)
//! sojourns. Set `SMKL_THREADS` to cap parallelism.
//!
//! `cargo run --release --example monte_carlo`

use std::sync::Arc;

use smkl::experiments::{run_mc, Scenario};
use smkl::kernels::{ChainKernel, ExponentialRate, SojournKernel, SojournLaw, Target};
use smkl::simulator::Regime;

fn main() -> smkl::Result<()> {
    let scenario = Scenario {
        q: ChainKernel::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]])?,
        r: SojournKernel::uniform(2, SojournLaw::Gamma { shape: 2.0, rate: 3.0 })?,
        target: Target::Sojourn(Arc::new(ExponentialRate::new())),
        regime: Regime::Count { n: 20_000 },
        replications: 400,
        base_seed: 42,
    };
    let mc = run_mc(&scenario)?;
    let r = &mc.report;
    println!("K = {:.6}", r.k_star[0]);
    println!("mean scaled error {:.4} ± {:.4}", r.mean_scaled_error[0], r.mean_scaled_error_se[0]);
    println!("variance {:.4}, sandwich {:.4}", r.empirical_cov[(0, 0)], r.predicted_cov[(0, 0)]);
    println!("skewness {:.3}, excess kurtosis {:.3}", r.normality.skewness[0], r.normality.excess_kurtosis[0]);
    Ok(())
}
