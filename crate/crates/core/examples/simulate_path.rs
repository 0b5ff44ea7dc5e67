//! Simulates a three-state semi-Markov path over a time horizon and prints
//! the first few transitions.
//!
//! `cargo run --example simulate_path`

use smkl::kernels::{ChainKernel, SojournKernel, SojournLaw};
use smkl::simulator::{empirical_rate_check, simulate, SimConfig};

fn main() -> smkl::Result<()> {
    let chain = ChainKernel::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5], vec![0.3, 0.3, 0.4]])?;
    let sojourn = SojournKernel::by_origin(vec![
        SojournLaw::Exponential { rate: 1.0 },
        SojournLaw::Exponential { rate: 2.0 },
        SojournLaw::Gamma { shape: 2.0, rate: 3.0 },
    ])?;
    let path = simulate(&chain, &sojourn, &SimConfig::horizon(1000.0, 11))?;
    println!("N = {} transitions in [0, 1000]", path.n_obs());
    println!("n/N = {:.4} (mean sojourn)", empirical_rate_check(&path)?);
    for (j, (x, y, u)) in path.transitions().take(5).enumerate() {
        println!("j={} {x} -> {y} after {u:.4}", j + 1);
    }
    let mut out = Vec::new();
    path.write_csv(&mut out)?;
    println!("CSV is {} bytes", out.len());
    Ok(())
}
