//! Stationary embedded Markov renewal paths `(X_j, T_j)`.
//!
//! Randomness comes from ChaCha8 (a counter-based generator) seeded with a
//! 64-bit seed; replication `i` of an experiment with base seed `s` uses the
//! stream `s ^ i`, so replications are independent of execution order.
//! States are drawn by inverse CDF on an open uniform, exponential sojourns
//! by inverse CDF, gamma sojourns by Marsaglia–Tsang.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{open_unit, ChainKernel, SojournKernel};

/// Observation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    /// Observe the semi-Markov process on `[0, n]`; `N` is random.
    Horizon { n: f64 },
    /// Observe exactly `n` transitions of the embedded process.
    Count { n: usize },
}

impl Regime {
    /// The `n` used in `√n` scalings.
    pub fn scale(&self) -> f64 {
        match *self {
            Regime::Horizon { n } => n,
            Regime::Count { n } => n as f64,
        }
    }

    pub fn is_horizon(&self) -> bool {
        matches!(self, Regime::Horizon { .. })
    }

    pub fn kind(&self) -> RegimeKind {
        match self {
            Regime::Horizon { .. } => RegimeKind::Horizon,
            Regime::Count { .. } => RegimeKind::Count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Regime::Horizon { n } => n > 0.0 && n.is_finite(),
            Regime::Count { n } => n > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("regime {self:?} needs n > 0")))
        }
    }
}

/// Regime without its `n`, as recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Horizon,
    Count,
}

/// Law of `X₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    #[default]
    Stationary,
    Fixed { state: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub regime: Regime,
    pub seed: u64,
    pub initial: Initial,
}

impl SimConfig {
    pub fn horizon(n: f64, seed: u64) -> Self {
        Self { regime: Regime::Horizon { n }, seed, initial: Initial::Stationary }
    }

    pub fn count(n: usize, seed: u64) -> Self {
        Self { regime: Regime::Count { n }, seed, initial: Initial::Stationary }
    }
}

/// Seed of replication `index` under base seed `base`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    base ^ index
}

/// Observed embedded Markov renewal data.
///
/// In the horizon regime the first arrival beyond the horizon is stored
/// (index `N + 1`) but [`RenewalPath::transitions`] only yields `j ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPath {
    states: Vec<usize>,
    times: Vec<f64>,
    sojourns: Vec<f64>,
    regime: Regime,
    n_obs: usize,
}

impl RenewalPath {
    /// Builds a path from states and sojourns `U_1..U_J`; `N` follows from the regime.
    pub fn from_sojourns(states: Vec<usize>, sojourns: Vec<f64>, regime: Regime) -> Result<Self> {
        if states.len() != sojourns.len() + 1 {
            return Err(Error::DimensionMismatch { expected: states.len() - 1, got: sojourns.len() });
        }
        if let Some(&u) = sojourns.iter().find(|&&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::InvalidSojourn(format!("non-positive sojourn {u}")));
        }
        let mut times = Vec::with_capacity(states.len());
        times.push(0.0);
        let mut t = 0.0;
        for &u in &sojourns {
            t += u;
            times.push(t);
        }
        let n_obs = match regime {
            Regime::Horizon { n } => times.iter().rposition(|&t| t <= n).unwrap_or(0),
            Regime::Count { n } => {
                if sojourns.len() < n {
                    return Err(Error::DimensionMismatch { expected: n, got: sojourns.len() });
                }
                n
            }
        };
        Ok(Self { states, times, sojourns, regime, n_obs })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `N`: the number of transitions used by estimators.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `U_1, …, U_J` (including the post-horizon arrival, if stored).
    pub fn sojourns(&self) -> &[f64] {
        &self.sojourns
    }

    /// `(X_{j−1}, X_j, U_j)` for `j = 1..=N`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n_obs).map(move |j| (self.states[j - 1], self.states[j], self.sojourns[j - 1]))
    }

    /// Writes `j,x,t,u` rows for `j = 0..=J`; `u` is empty for `j = 0`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "x", "t", "u"])?;
        for (j, (&x, &t)) in self.states.iter().zip(&self.times).enumerate() {
            let u = if j == 0 { String::new() } else { format!("{:.17e}", self.sojourns[j - 1]) };
            wr.write_record([j.to_string(), x.to_string(), format!("{t:.17e}"), u])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a path written by [`RenewalPath::write_csv`]. Sojourns come
    /// from the `u` column, so no precision is lost to differencing `t`.
    pub fn read_csv<R: Read>(r: R, regime: Regime) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["j", "x", "t", "u"] {
            return Err(Error::ConfigInvalid(format!("path csv header {headers:?}, expected j,x,t,u")));
        }
        let mut states = Vec::new();
        let mut sojourns = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<&str> {
                rec.get(i).ok_or_else(|| Error::ConfigInvalid(format!("row {row}: missing column {i}")))
            };
            let bad = |what: &str| Error::ConfigInvalid(format!("row {row}: bad {what}"));
            let x: usize = parse(1)?.trim().parse().map_err(|_| bad("x"))?;
            states.push(x);
            let u = parse(3)?.trim();
            if row == 0 {
                if !u.is_empty() {
                    return Err(bad("u (must be empty for j=0)"));
                }
            } else {
                sojourns.push(u.parse::<f64>().map_err(|_| bad("u"))?);
            }
        }
        if states.is_empty() {
            return Err(Error::EmptyPath);
        }
        Self::from_sojourns(states, sojourns, regime)
    }
}

/// Inverse-CDF sampler for the rows of a chain.
struct RowSampler {
    cumulative: Vec<Vec<f64>>,
}

impl RowSampler {
    fn new(q: &ChainKernel) -> Self {
        let n = q.size();
        let cumulative = (0..n)
            .map(|x| {
                let mut acc = 0.0;
                (0..n)
                    .map(|y| {
                        acc += q.prob(x, y);
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { cumulative }
    }

    fn draw_from(cum: &[f64], u: f64) -> usize {
        let total = *cum.last().expect("non-empty row");
        let target = u * total;
        cum.iter().position(|&c| target < c).unwrap_or(cum.len() - 1)
    }

    fn next(&self, x: usize, u: f64) -> usize {
        Self::draw_from(&self.cumulative[x], u)
    }
}

/// Simulates the embedded Markov renewal process under `(Q, R)`.
pub fn simulate(q: &ChainKernel, r: &SojournKernel, cfg: &SimConfig) -> Result<RenewalPath> {
    cfg.regime.validate()?;
    if q.size() != r.size() {
        return Err(Error::DimensionMismatch { expected: q.size(), got: r.size() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampler = RowSampler::new(q);
    let x0 = match cfg.initial {
        Initial::Stationary => {
            let mut acc = 0.0;
            let cum: Vec<f64> = q
                .stationary()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            RowSampler::draw_from(&cum, open_unit(&mut rng))
        }
        Initial::Fixed { state } => {
            if state >= q.size() {
                return Err(Error::ConfigInvalid(format!("initial state {state} out of range")));
            }
            state
        }
    };
    let mut states = vec![x0];
    let mut sojourns = Vec::new();
    let mut step = |states: &mut Vec<usize>, sojourns: &mut Vec<f64>| -> f64 {
        let x = *states.last().expect("non-empty");
        let y = sampler.next(x, open_unit(&mut rng));
        let u = r.law(x, y).sample(&mut rng);
        states.push(y);
        sojourns.push(u);
        u
    };
    match cfg.regime {
        Regime::Count { n } => {
            states.reserve(n);
            sojourns.reserve(n);
            for _ in 0..n {
                step(&mut states, &mut sojourns);
            }
        }
        Regime::Horizon { n } => {
            let mut t = 0.0;
            loop {
                t += step(&mut states, &mut sojourns);
                if t > n {
                    break;
                }
            }
        }
    }
    let path = RenewalPath::from_sojourns(states, sojourns, cfg.regime)?;
    if path.n_obs() == 0 {
        let horizon = cfg.regime.scale();
        return Err(Error::HorizonTooShort { horizon });
    }
    Ok(path)
}

/// `n / N`, the empirical mean inter-arrival time in the horizon regime.
pub fn empirical_rate_check(path: &RenewalPath) -> Result<f64> {
    match path.regime() {
        Regime::Horizon { n } => {
            if path.n_obs() == 0 {
                return Err(Error::HorizonTooShort { horizon: n });
            }
            Ok(n / path.n_obs() as f64)
        }
        Regime::Count { .. } => Err(Error::WrongRegime { expected: "horizon" }),
    }
}

/// Stationary Gaussian autoregression `X_j = Σ_k φ_k X_{j−k} + τ ε_j`
/// (order 1 or 2), started after a burn-in of 1000 steps.
pub fn simulate_autoregression(coefficients: &[f64], innovation_sd: f64, len: usize, seed: u64) -> Vec<f64> {
    const BURN_IN: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = coefficients.len();
    let mut xs: Vec<f64> = vec![0.0; p];
    xs.reserve(len + BURN_IN);
    for _ in 0..(len + BURN_IN) {
        let k = xs.len();
        let mean: f64 = coefficients.iter().enumerate().map(|(i, c)| c * xs[k - 1 - i]).sum();
        let e: f64 = StandardNormal.sample(&mut rng);
        xs.push(mean + innovation_sd * e);
    }
    xs.split_off(p + BURN_IN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SojournLaw;

    fn two_state() -> ChainKernel {
        ChainKernel::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn point_mass_clock_is_deterministic() {
        let path = simulate(&two_state(), &SojournKernel::point_mass(2), &SimConfig::horizon(10.0, 1)).unwrap();
        assert_eq!(path.n_obs(), 10);
        for j in 0..=10 {
            assert_eq!(path.times()[j], j as f64);
        }
        assert_eq!(empirical_rate_check(&path).unwrap(), 1.0);
    }

    #[test]
    fn count_regime_has_exact_length() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let path = simulate(&two_state(), &r, &SimConfig::count(1000, 5)).unwrap();
        assert_eq!(path.n_obs(), 1000);
        assert_eq!(path.transitions().count(), 1000);
        assert!(matches!(empirical_rate_check(&path), Err(Error::WrongRegime { .. })));
    }

    #[test]
    fn horizon_bracketing() {
        let r = SojournKernel::uniform(2, SojournLaw::Gamma { shape: 2.0, rate: 3.0 }).unwrap();
        let path = simulate(&two_state(), &r, &SimConfig::horizon(500.0, 11)).unwrap();
        let n = path.n_obs();
        assert!(path.times()[n] <= 500.0);
        assert!(path.times()[n + 1] > 500.0);
        assert_eq!(path.states().len(), n + 2);
        assert_eq!(path.times()[0], 0.0);
    }

    #[test]
    fn too_short_horizon() {
        let r = SojournKernel::uniform(2, SojournLaw::PointMass).unwrap();
        let err = simulate(&two_state(), &r, &SimConfig::horizon(0.5, 1)).unwrap_err();
        assert!(matches!(err, Error::HorizonTooShort { .. }));
    }

    #[test]
    fn same_seed_same_path() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let a = simulate(&two_state(), &r, &SimConfig::horizon(200.0, 9)).unwrap();
        let b = simulate(&two_state(), &r, &SimConfig::horizon(200.0, 9)).unwrap();
        let c = simulate(&two_state(), &r, &SimConfig::horizon(200.0, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_round_trip() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let a = simulate(&two_state(), &r, &SimConfig::horizon(50.0, 3)).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("j,x,t,u\n0,"));
        assert!(text.lines().nth(1).unwrap().ends_with(','));
        let b = RenewalPath::read_csv(buf.as_slice(), a.regime()).unwrap();
        assert_eq!(a.states(), b.states());
        assert_eq!(a.sojourns(), b.sojourns());
        assert_eq!(a.n_obs(), b.n_obs());
    }

    #[test]
    fn fixed_initial_state() {
        let r = SojournKernel::point_mass(2);
        let cfg = SimConfig { regime: Regime::Count { n: 5 }, seed: 1, initial: Initial::Fixed { state: 1 } };
        assert_eq!(simulate(&two_state(), &r, &cfg).unwrap().states()[0], 1);
    }

    #[test]
    fn autoregression_lag_one_correlation() {
        let xs = simulate_autoregression(&[0.5], 1.0, 50_000, 4);
        let num: f64 = xs.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = xs[..xs.len() - 1].iter().map(|x| x * x).sum();
        assert!((num / den - 0.5).abs() < 0.02);
    }
}
