//! Partial and full likelihood fits on one simulated path: a tilt family for
//! the chain, an exponential rate for the sojourns, and both together.
//!
//! `cargo run --release --example fit_models`

use std::sync::Arc;

use nalgebra::DMatrix;
use smkl::empirical::EmpiricalMeasures;
use smkl::estimators::{fit_exponential_closed_form, fit_q, fit_r, fit_s};
use smkl::kernels::{ChainKernel, ExponentialRate, ExponentialTilt, ParamBox, SModel, SojournKernel, SojournLaw};
use smkl::simulator::{simulate, SimConfig};

fn main() -> smkl::Result<()> {
    let chain = ChainKernel::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5], vec![0.3, 0.3, 0.4]])?;
    let sojourn = SojournKernel::uniform(3, SojournLaw::Gamma { shape: 2.0, rate: 3.0 })?;
    let path = simulate(&chain, &sojourn, &SimConfig::count(20_000, 1))?;
    let emp = EmpiricalMeasures::build(&path, 3)?;

    let forward = DMatrix::from_fn(3, 3, |x, y| if y == (x + 1) % 3 { 1.0 } else { 0.0 });
    let tilt = Arc::new(ExponentialTilt::new(
        DMatrix::from_element(3, 3, 1.0 / 3.0),
        vec![forward],
        ParamBox::new(vec![0.01], vec![10.0])?,
    )?);
    let rate = Arc::new(ExponentialRate::with_domain(ParamBox::new(vec![0.01], vec![10.0])?)?);

    let q = fit_q(&emp, tilt.clone(), None)?;
    println!("theta_Q = {:.6} ({} Newton steps)", q.theta_hat[0], q.iterations);
    let r = fit_r(&emp, rate.clone(), None)?;
    println!("theta_R = {:.6} (closed form {:.6})", r.theta_hat[0], fit_exponential_closed_form(&emp));
    let s = fit_s(&emp, SModel::shared(tilt, rate)?, None)?;
    println!("theta_S = {:.6} (shared scalar)", s.theta_hat[0]);
    println!("{}", smkl::json::to_string(&s)?);
    Ok(())
}
