//! Exact sandwich covariance at the KL projection against the plug-in
//! estimate from one long path.
//!
//! `cargo run --release --example sandwich`

use std::sync::Arc;

use smkl::asymptotics::{sandwich_oracle, sandwich_plugin};
use smkl::empirical::EmpiricalMeasures;
use smkl::estimators::fit;
use smkl::kernels::{ChainKernel, ExponentialByOrigin, SojournKernel, SojournLaw, Target};
use smkl::linalg::frobenius_rel_error;
use smkl::oracle::{kl_projection, PopulationLaw};
use smkl::simulator::{simulate, RegimeKind, SimConfig};

fn main() -> smkl::Result<()> {
    let chain = ChainKernel::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]])?;
    let sojourn = SojournKernel::by_origin(vec![
        SojournLaw::Gamma { shape: 2.0, rate: 3.0 },
        SojournLaw::Gamma { shape: 0.7, rate: 1.0 },
    ])?;
    let target = Target::Sojourn(Arc::new(ExponentialByOrigin::new(2)));
    let law = PopulationLaw::new(chain.clone(), sojourn.clone())?;
    let kl = kl_projection(&law, &target)?;
    let oracle = sandwich_oracle(&law, &target, &kl.k_star, RegimeKind::Horizon)?;
    println!("oracle covariance (m = {:.4}):\n{:.6}", law.m(), oracle.covariance);

    let path = simulate(&chain, &sojourn, &SimConfig::horizon(200_000.0, 3))?;
    let emp = EmpiricalMeasures::build(&path, 2)?;
    let est = fit(&emp, &target, None)?;
    let plugin = sandwich_plugin(&emp, &target, &est.theta_hat)?;
    println!("plug-in covariance:\n{:.6}", plugin.covariance);
    println!("relative Frobenius error {:.4}", frobenius_rel_error(&plugin.covariance, &oracle.covariance));
    Ok(())
}
