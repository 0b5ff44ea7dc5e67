use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, Vector3};

use super::domain::ParamBox;
use super::sojourn::{FeatureMoments, SojournKernel, SojournLaw};
use crate::error::{Error, Result};
use crate::quadrature::{digamma, ln_gamma, trigamma};

/// Conditional expectations given `(x, y)` of the quantities a sojourn
/// family contributes: `log r_θ`, `ϱ_θ`, `ϱ_θϱ_θᵀ` and `ϱ̇_θ`.
#[derive(Debug, Clone)]
pub struct CondMoments {
    pub log_density: f64,
    pub score: DVector<f64>,
    pub score_outer: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
}

impl CondMoments {
    /// `E[(ϱ − Rϱ)(ϱ − Rϱ)ᵀ | x, y]`.
    pub fn score_cov(&self) -> DMatrix<f64> {
        &self.score_outer - &self.score * self.score.transpose()
    }
}

/// Summary statistics used to pick Newton starting points.
#[derive(Debug, Clone)]
pub struct SojournSummary {
    pub mean: f64,
    pub variance: f64,
    pub mean_by_origin: Vec<f64>,
}

impl SojournSummary {
    pub fn from_triples(triples: &[(usize, usize, f64)], size: usize) -> Self {
        let n = triples.len().max(1) as f64;
        let mean = triples.iter().map(|t| t.2).sum::<f64>() / n;
        let variance = triples.iter().map(|t| (t.2 - mean).powi(2)).sum::<f64>() / n;
        let mut sums = vec![0.0; size];
        let mut counts = vec![0usize; size];
        for &(x, _, u) in triples {
            sums[x] += u;
            counts[x] += 1;
        }
        let mean_by_origin = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { mean })
            .collect();
        Self { mean, variance, mean_by_origin }
    }

    pub fn from_population(pair_law: &DMatrix<f64>, kernel: &SojournKernel) -> Self {
        let n = kernel.size();
        let mut mean = 0.0;
        let mut second = 0.0;
        let mut by_origin = vec![0.0; n];
        for x in 0..n {
            let px: f64 = pair_law.row(x).sum();
            for y in 0..n {
                let law = kernel.law(x, y);
                let p = pair_law[(x, y)];
                mean += p * law.mean();
                second += p * (law.variance() + law.mean().powi(2));
                if px > 0.0 {
                    by_origin[x] += p / px * law.mean();
                }
            }
        }
        Self { mean, variance: second - mean * mean, mean_by_origin: by_origin }
    }
}

/// `log r_θ`, `ϱ_θ` and `ϱ̇_θ` written as coefficients on `φ(u) = (1, u, ln u)`.
/// The Hessian is constant in `u` for every family with this form.
#[derive(Debug, Clone)]
pub struct AffineForm {
    pub log_coef: Vector3<f64>,
    pub score_coef: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
}

impl AffineForm {
    pub fn moments(&self, fm: &FeatureMoments) -> CondMoments {
        let mean = DVector::from_column_slice(fm.mean.as_slice());
        let second = DMatrix::from_column_slice(3, 3, fm.second.as_slice());
        let score = &self.score_coef * &mean;
        let score_outer = &self.score_coef * second * self.score_coef.transpose();
        CondMoments {
            log_density: self.log_coef.dot(&fm.mean),
            score,
            score_outer: crate::linalg::symmetrize(&score_outer),
            hessian: self.hessian.clone(),
        }
    }
}

/// Parametric family `r_θ(x, y, u)` for the conditional sojourn density.
pub trait RFamily: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn domain(&self) -> &ParamBox;

    fn log_density(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> f64;
    fn score(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> DVector<f64>;
    fn hessian(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> DMatrix<f64>;

    /// Closed-form representation, when the family has one.
    fn affine_form(&self, _theta: &DVector<f64>, _x: usize, _y: usize) -> Option<AffineForm> {
        None
    }

    /// The family member at `θ` as a [`SojournLaw`], when expressible.
    fn law_at(&self, _theta: &DVector<f64>, _x: usize, _y: usize) -> Option<SojournLaw> {
        None
    }

    /// Conditional moments under `law`: closed form when available,
    /// adaptive quadrature otherwise.
    fn conditional_moments(
        &self,
        theta: &DVector<f64>,
        x: usize,
        y: usize,
        law: &SojournLaw,
    ) -> Result<CondMoments> {
        match self.affine_form(theta, x, y) {
            Some(form) => Ok(form.moments(&law.feature_moments())),
            None => quadrature_moments(self, theta, x, y, law),
        }
    }

    fn initial_guess(&self, summary: &SojournSummary) -> DVector<f64>;
}

/// Conditional moments by direct quadrature of the family's evaluators.
pub fn quadrature_moments<F: RFamily + ?Sized>(
    fam: &F,
    theta: &DVector<f64>,
    x: usize,
    y: usize,
    law: &SojournLaw,
) -> Result<CondMoments> {
    let d = fam.dim();
    let len = 1 + d + 2 * d * d;
    let v = law.expect_vec(
        |u| {
            let s = fam.score(theta, x, y, u);
            let h = fam.hessian(theta, x, y, u);
            let mut out = Vec::with_capacity(len);
            out.push(fam.log_density(theta, x, y, u));
            out.extend(s.iter());
            out.extend((&s * s.transpose()).iter());
            out.extend(h.iter());
            out
        },
        len,
    )?;
    Ok(CondMoments {
        log_density: v[0],
        score: DVector::from_column_slice(&v[1..1 + d]),
        score_outer: DMatrix::from_column_slice(d, d, &v[1 + d..1 + d + d * d]),
        hessian: DMatrix::from_column_slice(d, d, &v[1 + d + d * d..]),
    })
}

/// Moments of a family under its own member at `θ`: through [`RFamily::law_at`]
/// when available, otherwise by quadrature against `r_θ` itself.
pub fn self_moments<F: RFamily + ?Sized>(
    fam: &F,
    theta: &DVector<f64>,
    x: usize,
    y: usize,
) -> Result<CondMoments> {
    if let Some(law) = fam.law_at(theta, x, y) {
        return fam.conditional_moments(theta, x, y, &law);
    }
    self_moments_quadrature(fam, theta, x, y)
}

/// Quadrature against the family's own density; independent of any closed form.
pub fn self_moments_quadrature<F: RFamily + ?Sized>(
    fam: &F,
    theta: &DVector<f64>,
    x: usize,
    y: usize,
) -> Result<CondMoments> {
    let d = fam.dim();
    let len = 1 + d + 2 * d * d;
    // locate a typical value through the mean of the family at θ
    let center = crate::quadrature::integrate_positive(
        |u| vec![u],
        |u| fam.log_density(theta, x, y, u),
        1.0,
        1,
        1e-8,
    )?[0];
    let v = crate::quadrature::integrate_positive(
        |u| {
            let s = fam.score(theta, x, y, u);
            let h = fam.hessian(theta, x, y, u);
            let mut out = Vec::with_capacity(len);
            out.push(fam.log_density(theta, x, y, u));
            out.extend(s.iter());
            out.extend((&s * s.transpose()).iter());
            out.extend(h.iter());
            out
        },
        |u| fam.log_density(theta, x, y, u),
        center,
        len,
        crate::quadrature::DEFAULT_TOL,
    )?;
    Ok(CondMoments {
        log_density: v[0],
        score: DVector::from_column_slice(&v[1..1 + d]),
        score_outer: DMatrix::from_column_slice(d, d, &v[1 + d..1 + d + d * d]),
        hessian: DMatrix::from_column_slice(d, d, &v[1 + d + d * d..]),
    })
}

/// Exponential sojourns with one constant rate: `r_θ(u) = θ e^{−θu}`.
#[derive(Debug, Clone)]
pub struct ExponentialRate {
    domain: ParamBox,
}

impl ExponentialRate {
    pub fn new() -> Self {
        Self { domain: ParamBox::uniform(1, 1e-6, 1e6) }
    }

    pub fn with_domain(domain: ParamBox) -> Result<Self> {
        if domain.dim() != 1 || domain.lower[0] <= 0.0 {
            return Err(Error::ConfigInvalid("exponential rate box must be 1-d and positive".into()));
        }
        Ok(Self { domain })
    }
}

impl Default for ExponentialRate {
    fn default() -> Self {
        Self::new()
    }
}

impl RFamily for ExponentialRate {
    fn name(&self) -> &str {
        "exponential_rate"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn log_density(&self, theta: &DVector<f64>, _x: usize, _y: usize, u: f64) -> f64 {
        theta[0].ln() - theta[0] * u
    }

    fn score(&self, theta: &DVector<f64>, _x: usize, _y: usize, u: f64) -> DVector<f64> {
        DVector::from_element(1, 1.0 / theta[0] - u)
    }

    fn hessian(&self, theta: &DVector<f64>, _x: usize, _y: usize, _u: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -1.0 / (theta[0] * theta[0]))
    }

    fn affine_form(&self, theta: &DVector<f64>, _x: usize, _y: usize) -> Option<AffineForm> {
        let t = theta[0];
        Some(AffineForm {
            log_coef: Vector3::new(t.ln(), -t, 0.0),
            score_coef: DMatrix::from_row_slice(1, 3, &[1.0 / t, -1.0, 0.0]),
            hessian: DMatrix::from_element(1, 1, -1.0 / (t * t)),
        })
    }

    fn law_at(&self, theta: &DVector<f64>, _x: usize, _y: usize) -> Option<SojournLaw> {
        Some(SojournLaw::Exponential { rate: theta[0] })
    }

    fn initial_guess(&self, summary: &SojournSummary) -> DVector<f64> {
        self.domain.project(&DVector::from_element(1, 1.0 / summary.mean))
    }
}

/// Exponential sojourns with a rate per origin state (Markov step process).
#[derive(Debug, Clone)]
pub struct ExponentialByOrigin {
    size: usize,
    domain: ParamBox,
}

impl ExponentialByOrigin {
    pub fn new(size: usize) -> Self {
        Self { size, domain: ParamBox::uniform(size, 1e-6, 1e6) }
    }
}

impl RFamily for ExponentialByOrigin {
    fn name(&self) -> &str {
        "exponential_by_origin"
    }

    fn dim(&self) -> usize {
        self.size
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn log_density(&self, theta: &DVector<f64>, x: usize, _y: usize, u: f64) -> f64 {
        theta[x].ln() - theta[x] * u
    }

    fn score(&self, theta: &DVector<f64>, x: usize, _y: usize, u: f64) -> DVector<f64> {
        let mut s = DVector::zeros(self.size);
        s[x] = 1.0 / theta[x] - u;
        s
    }

    fn hessian(&self, theta: &DVector<f64>, x: usize, _y: usize, _u: f64) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.size, self.size);
        h[(x, x)] = -1.0 / (theta[x] * theta[x]);
        h
    }

    fn affine_form(&self, theta: &DVector<f64>, x: usize, _y: usize) -> Option<AffineForm> {
        let t = theta[x];
        let mut c = DMatrix::zeros(self.size, 3);
        c[(x, 0)] = 1.0 / t;
        c[(x, 1)] = -1.0;
        let mut h = DMatrix::zeros(self.size, self.size);
        h[(x, x)] = -1.0 / (t * t);
        Some(AffineForm { log_coef: Vector3::new(t.ln(), -t, 0.0), score_coef: c, hessian: h })
    }

    fn law_at(&self, theta: &DVector<f64>, x: usize, _y: usize) -> Option<SojournLaw> {
        Some(SojournLaw::Exponential { rate: theta[x] })
    }

    fn initial_guess(&self, summary: &SojournSummary) -> DVector<f64> {
        let t = DVector::from_fn(self.size, |x, _| 1.0 / summary.mean_by_origin[x]);
        self.domain.project(&t)
    }
}

/// Gamma sojourns with constant shape `a` and rate `b`; either may be held
/// fixed. Free coordinates are ordered (shape, rate).
#[derive(Debug, Clone)]
pub struct GammaFamily {
    fixed_shape: Option<f64>,
    fixed_rate: Option<f64>,
    domain: ParamBox,
}

impl GammaFamily {
    pub fn new(fixed_shape: Option<f64>, fixed_rate: Option<f64>) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        if fixed_shape.is_none() {
            lower.push(1e-3);
            upper.push(1e3);
        }
        if fixed_rate.is_none() {
            lower.push(1e-6);
            upper.push(1e6);
        }
        if lower.is_empty() {
            return Err(Error::ConfigInvalid("gamma family needs at least one free parameter".into()));
        }
        for v in fixed_shape.iter().chain(fixed_rate.iter()) {
            if !(*v > 0.0) {
                return Err(Error::InvalidSojourn(format!("fixed gamma parameter {v}")));
            }
        }
        Ok(Self { fixed_shape, fixed_rate, domain: ParamBox { lower, upper } })
    }

    /// Unknown shape, unit rate.
    pub fn shape_only(rate: f64) -> Result<Self> {
        Self::new(None, Some(rate))
    }

    pub fn shape_and_rate() -> Self {
        Self::new(None, None).expect("static")
    }

    fn params(&self, theta: &DVector<f64>) -> (f64, f64) {
        let mut it = theta.iter();
        let a = self.fixed_shape.unwrap_or_else(|| *it.next().expect("shape coordinate"));
        let b = self.fixed_rate.unwrap_or_else(|| *it.next().expect("rate coordinate"));
        (a, b)
    }

    /// Full (shape, rate) derivatives, restricted to the free coordinates.
    fn select(&self) -> Vec<usize> {
        let mut idx = Vec::new();
        if self.fixed_shape.is_none() {
            idx.push(0);
        }
        if self.fixed_rate.is_none() {
            idx.push(1);
        }
        idx
    }
}

impl RFamily for GammaFamily {
    fn name(&self) -> &str {
        "gamma"
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn log_density(&self, theta: &DVector<f64>, _x: usize, _y: usize, u: f64) -> f64 {
        let (a, b) = self.params(theta);
        a * b.ln() - ln_gamma(a) + (a - 1.0) * u.ln() - b * u
    }

    fn score(&self, theta: &DVector<f64>, _x: usize, _y: usize, u: f64) -> DVector<f64> {
        let (a, b) = self.params(theta);
        let full = [b.ln() - digamma(a) + u.ln(), a / b - u];
        DVector::from_iterator(self.dim(), self.select().into_iter().map(|i| full[i]))
    }

    fn hessian(&self, theta: &DVector<f64>, _x: usize, _y: usize, _u: f64) -> DMatrix<f64> {
        let (a, b) = self.params(theta);
        let full = [[-trigamma(a), 1.0 / b], [1.0 / b, -a / (b * b)]];
        let idx = self.select();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[idx[i]][idx[j]])
    }

    fn affine_form(&self, theta: &DVector<f64>, _x: usize, _y: usize) -> Option<AffineForm> {
        let (a, b) = self.params(theta);
        let rows = [[b.ln() - digamma(a), 0.0, 1.0], [a / b, -1.0, 0.0]];
        let idx = self.select();
        let full = [[-trigamma(a), 1.0 / b], [1.0 / b, -a / (b * b)]];
        Some(AffineForm {
            log_coef: Vector3::new(a * b.ln() - ln_gamma(a), -b, a - 1.0),
            score_coef: DMatrix::from_fn(idx.len(), 3, |i, j| rows[idx[i]][j]),
            hessian: DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[idx[i]][idx[j]]),
        })
    }

    fn law_at(&self, theta: &DVector<f64>, _x: usize, _y: usize) -> Option<SojournLaw> {
        let (shape, rate) = self.params(theta);
        Some(SojournLaw::Gamma { shape, rate })
    }

    fn initial_guess(&self, summary: &SojournSummary) -> DVector<f64> {
        let (m, v) = (summary.mean, summary.variance.max(1e-12 * summary.mean * summary.mean));
        let (a, b) = match (self.fixed_shape, self.fixed_rate) {
            (None, None) => (m * m / v, m / v),
            (Some(a), None) => (a, a / m),
            (None, Some(b)) => (m * b, b),
            (Some(a), Some(b)) => (a, b),
        };
        let full = [a, b];
        let t = DVector::from_iterator(self.dim(), self.select().into_iter().map(|i| full[i]));
        self.domain.project(&t)
    }
}
