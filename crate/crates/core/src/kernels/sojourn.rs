use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, digamma, ln_gamma, trigamma};

/// Conditional law of one inter-arrival time.
///
/// Densities are with respect to Lebesgue measure on `(0, ∞)`, except for
/// [`SojournLaw::PointMass`], which is the Dirac mass at `u = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SojournLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    PointMass,
}

/// First and second moments of the feature vector `φ(u) = (1, u, ln u)`.
///
/// Every shipped sojourn family has log-density, score and Hessian affine in
/// `φ`, so these moments give all conditional expectations in closed form.
#[derive(Debug, Clone, Copy)]
pub struct FeatureMoments {
    pub mean: Vector3<f64>,
    pub second: Matrix3<f64>,
}

impl SojournLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            SojournLaw::Exponential { rate } if !ok(rate) => {
                Err(Error::InvalidSojourn(format!("exponential rate {rate}")))
            }
            SojournLaw::Gamma { shape, rate } if !ok(shape) || !ok(rate) => {
                Err(Error::InvalidSojourn(format!("gamma shape {shape}, rate {rate}")))
            }
            _ => Ok(()),
        }
    }

    fn shape_rate(&self) -> Option<(f64, f64)> {
        match *self {
            SojournLaw::Exponential { rate } => Some((1.0, rate)),
            SojournLaw::Gamma { shape, rate } => Some((shape, rate)),
            SojournLaw::PointMass => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.shape_rate() {
            Some((a, b)) => a / b,
            None => 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.shape_rate() {
            Some((a, b)) => a / (b * b),
            None => 0.0,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, SojournLaw::PointMass)
    }

    /// Log-density at `u`; `None` for the point mass.
    pub fn log_density(&self, u: f64) -> Option<f64> {
        let (a, b) = self.shape_rate()?;
        if u <= 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        Some(a * b.ln() - ln_gamma(a) + (a - 1.0) * u.ln() - b * u)
    }

    pub fn feature_moments(&self) -> FeatureMoments {
        let (eu, eu2, el, el2, eul) = match self.shape_rate() {
            Some((a, b)) => {
                let lb = b.ln();
                let el = digamma(a) - lb;
                (
                    a / b,
                    a * (a + 1.0) / (b * b),
                    el,
                    trigamma(a) + el * el,
                    a / b * (digamma(a + 1.0) - lb),
                )
            }
            None => (1.0, 1.0, 0.0, 0.0, 0.0),
        };
        FeatureMoments {
            mean: Vector3::new(1.0, eu, el),
            second: Matrix3::new(1.0, eu, el, eu, eu2, eul, el, eul, el2),
        }
    }

    /// `E[f(U)]` for a vector-valued `f`, by quadrature (or evaluation at 1
    /// for the point mass).
    pub fn expect_vec<F>(&self, f: F, dim: usize) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        match self {
            SojournLaw::PointMass => Ok(f(1.0)),
            _ => quadrature::integrate_positive(
                f,
                |u| self.log_density(u).unwrap_or(f64::NEG_INFINITY),
                self.mean(),
                dim,
                quadrature::DEFAULT_TOL,
            ),
        }
    }

    pub fn expect<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        Ok(self.expect_vec(|u| vec![f(u)], 1)?[0])
    }

    /// Draws one sojourn. Exponential by inverse CDF on an open uniform,
    /// gamma by Marsaglia–Tsang (through `rand_distr`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SojournLaw::Exponential { rate } => -open_unit(rng).ln() / rate,
            SojournLaw::Gamma { shape, rate } => {
                let g = Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters");
                loop {
                    let u: f64 = g.sample(rng);
                    if u > 0.0 {
                        return u;
                    }
                }
            }
            SojournLaw::PointMass => 1.0,
        }
    }
}

/// Uniform on the open interval (0, 1) with 53 random bits.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// True conditional inter-arrival law `R(x, y, du)`, one [`SojournLaw`] per
/// ordered pair of states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournKernel {
    size: usize,
    laws: Vec<SojournLaw>,
}

impl SojournKernel {
    pub fn by_pair(rows: Vec<Vec<SojournLaw>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::DimensionMismatch { expected: size, got: rows.iter().map(|r| r.len()).max().unwrap_or(0) });
        }
        let laws: Vec<SojournLaw> = rows.into_iter().flatten().collect();
        laws.iter().try_for_each(|l| l.validate())?;
        Ok(Self { size, laws })
    }

    /// Same law for every pair.
    pub fn uniform(size: usize, law: SojournLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { size, laws: vec![law; size * size] })
    }

    /// Law depends on the origin state only.
    pub fn by_origin(laws: Vec<SojournLaw>) -> Result<Self> {
        let size = laws.len();
        Self::by_pair((0..size).map(|x| vec![laws[x]; size]).collect())
    }

    /// Markov step process: exponential with rate `λ(x)`.
    pub fn exponential_by_state(rates: &[f64]) -> Result<Self> {
        Self::by_origin(rates.iter().map(|&rate| SojournLaw::Exponential { rate }).collect())
    }

    /// Deterministic unit clock: the semi-Markov process is a Markov chain.
    pub fn point_mass(size: usize) -> Self {
        Self { size, laws: vec![SojournLaw::PointMass; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn law(&self, x: usize, y: usize) -> &SojournLaw {
        &self.laws[x * self.size + y]
    }

    pub fn conditional_mean(&self, x: usize, y: usize) -> f64 {
        self.law(x, y).mean()
    }

    pub fn conditional_means(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |x, y| self.conditional_mean(x, y))
    }

    pub fn is_point_mass(&self) -> bool {
        self.laws.iter().all(|l| l.is_point_mass())
    }

    pub fn rows(&self) -> Vec<Vec<SojournLaw>> {
        self.laws.chunks(self.size).map(|c| c.to_vec()).collect()
    }
}
