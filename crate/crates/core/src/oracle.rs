//! Population KL information and KL projections from the true kernels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{initial_point, LawObjective};
use crate::kernels::{ChainKernel, CondMoments, RFamily, SojournKernel, SojournSummary, Target};
use crate::linalg::serde_vector;
use crate::measure::{evaluate, TripleLaw};
use crate::optimize::{golden_section, maximize, NewtonOptions};

/// Stationary law of `(X_{j−1}, X_j, U_j)`: `P₃ = P₁ ⊗ Q ⊗ R`, stored factored.
#[derive(Debug, Clone)]
pub struct PopulationLaw {
    chain: ChainKernel,
    sojourn: SojournKernel,
    p2: DMatrix<f64>,
    m: f64,
}

impl PopulationLaw {
    pub fn new(chain: ChainKernel, sojourn: SojournKernel) -> Result<Self> {
        if chain.size() != sojourn.size() {
            return Err(Error::DimensionMismatch { expected: chain.size(), got: sojourn.size() });
        }
        let p2 = chain.pair_law();
        let m = (0..chain.size())
            .flat_map(|x| (0..chain.size()).map(move |y| (x, y)))
            .map(|(x, y)| p2[(x, y)] * sojourn.conditional_mean(x, y))
            .sum();
        Ok(Self { chain, sojourn, p2, m })
    }

    pub fn chain(&self) -> &ChainKernel {
        &self.chain
    }

    pub fn sojourn(&self) -> &SojournKernel {
        &self.sojourn
    }

    /// `P₁ = π`.
    pub fn p1(&self) -> &DVector<f64> {
        self.chain.stationary()
    }

    /// `P₂ = diag(π) Q`.
    pub fn p2(&self) -> &DMatrix<f64> {
        &self.p2
    }

    /// Mean inter-arrival time `m = P₃[u]`.
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn summary(&self) -> SojournSummary {
        SojournSummary::from_population(&self.p2, &self.sojourn)
    }
}

impl TripleLaw for PopulationLaw {
    fn size(&self) -> usize {
        self.chain.size()
    }

    fn pair_weight(&self, x: usize, y: usize) -> f64 {
        self.p2[(x, y)]
    }

    fn cell_moments(&self, fam: &dyn RFamily, theta: &DVector<f64>, x: usize, y: usize) -> Result<CondMoments> {
        let m = fam
            .conditional_moments(theta, x, y, self.sojourn.law(x, y))
            .map_err(|e| match e {
                Error::QuadratureFailure(msg) => Error::DivergentIntegral(format!("pair ({x}, {y}): {msg}")),
                other => other,
            })?;
        let finite = m.log_density.is_finite()
            && m.score.iter().chain(m.score_outer.iter()).chain(m.hessian.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(self.divergence(x, y));
        }
        Ok(m)
    }

    fn mean_sojourn(&self) -> f64 {
        self.m
    }

    fn divergence(&self, x: usize, y: usize) -> Error {
        Error::DivergentIntegral(format!("log-density not integrable on pair ({x}, {y})"))
    }
}

/// `P₂[log q_θ]`, `P₃[log r_θ]` or `P₃[log s_θ]`.
pub fn kl_information(law: &PopulationLaw, target: &Target, theta: &DVector<f64>) -> Result<f64> {
    target.domain().check(theta)?;
    Ok(evaluate(target, law, theta)?.value)
}

/// A KL projection and how it was verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLResult {
    #[serde(with = "serde_vector")]
    pub k_star: DVector<f64>,
    pub kl_value: f64,
    pub grad_norm: f64,
    pub method: String,
    /// Largest coordinate gap between Newton and the independent search.
    pub verification_gap: f64,
}

/// Window searched around a Newton solution.
fn window(target: &Target, k: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
    let dom = target.domain();
    let lo = (0..k.len()).map(|i| dom.lower[i].max(k[i] - 5.0 * (1.0 + k[i].abs()))).collect();
    let hi = (0..k.len()).map(|i| dom.upper[i].min(k[i] + 5.0 * (1.0 + k[i].abs()))).collect();
    (lo, hi)
}

fn value_or_neg_inf(law: &PopulationLaw, target: &Target, theta: &DVector<f64>) -> f64 {
    match evaluate(target, law, theta) {
        Ok(ev) if ev.value.is_finite() => ev.value,
        _ => f64::NEG_INFINITY,
    }
}

/// Scalar families: 101-point grid, local-maximum scan, golden section.
fn verify_scalar(law: &PopulationLaw, target: &Target, k: &DVector<f64>) -> Result<f64> {
    const POINTS: usize = 101;
    let (lo, hi) = window(target, k);
    let (a, b) = (lo[0], hi[0]);
    let xs: Vec<f64> = (0..POINTS).map(|i| a + (b - a) * i as f64 / (POINTS - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| value_or_neg_inf(law, target, &DVector::from_element(1, x))).collect();
    let mut maxima: Vec<usize> = (0..POINTS)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
            let right = if i + 1 == POINTS { f64::NEG_INFINITY } else { vals[i + 1] };
            vals[i].is_finite() && vals[i] >= left && vals[i] > right
        })
        .collect();
    maxima.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let top = *maxima.first().ok_or_else(|| Error::OracleFailure("grid found no finite maximum".into()))?;
    if let Some(&second) = maxima.get(1) {
        if vals[top] - vals[second] < 1e-3 {
            return Err(Error::MultipleMaxima {
                best: vec![xs[top]],
                best_value: vals[top],
                rival: vec![xs[second]],
                rival_value: vals[second],
            });
        }
    }
    let left = xs[top.saturating_sub(1)];
    let right = xs[(top + 1).min(POINTS - 1)];
    let (g, _) = golden_section(|x| value_or_neg_inf(law, target, &DVector::from_element(1, x)), left, right, 1e-9);
    Ok((g - k[0]).abs())
}

/// Coarse grid over the window, then repeated local refinement.
fn verify_grid(law: &PopulationLaw, target: &Target, k: &DVector<f64>) -> Result<f64> {
    let d = k.len();
    let per_axis: usize = match d {
        2 => 41,
        _ => 15,
    };
    let (mut lo, mut hi) = window(target, k);
    let mut best = DVector::zeros(d);
    for _ in 0..60 {
        let mut best_val = f64::NEG_INFINITY;
        let total = per_axis.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let pt = DVector::from_fn(d, |i, _| {
                let j = rem % per_axis;
                rem /= per_axis;
                lo[i] + (hi[i] - lo[i]) * j as f64 / (per_axis - 1) as f64
            });
            let v = value_or_neg_inf(law, target, &pt);
            if v > best_val {
                best_val = v;
                best = pt;
            }
        }
        if !best_val.is_finite() {
            return Err(Error::OracleFailure("grid found no finite value".into()));
        }
        let dom = target.domain();
        let mut width = 0.0_f64;
        for i in 0..d {
            let step = (hi[i] - lo[i]) / (per_axis - 1) as f64;
            lo[i] = (best[i] - 2.0 * step).max(dom.lower[i]);
            hi[i] = (best[i] + 2.0 * step).min(dom.upper[i]);
            width = width.max(hi[i] - lo[i]);
        }
        if width < 1e-9 {
            break;
        }
    }
    Ok((best - k).amax())
}

/// `K(P)`: Newton on the population score from the estimators' starting
/// point, cross-checked by an independent search for `d ≤ 3`.
pub fn kl_projection(law: &PopulationLaw, target: &Target) -> Result<KLResult> {
    let start = initial_point(target, law.p2(), &law.summary());
    let obj = LawObjective { target, law };
    let opts = NewtonOptions { grad_tol: 1e-11, ..Default::default() };
    let sol = maximize(&obj, &start, &opts)?;
    crate::estimators::check_maximum(&sol, &[])?;
    let (gap, method) = match sol.theta.len() {
        1 => (verify_scalar(law, target, &sol.theta)?, "newton+golden"),
        2 | 3 => (verify_grid(law, target, &sol.theta)?, "newton+grid"),
        _ => (0.0, "newton"),
    };
    let tol = if sol.theta.len() == 1 { 1e-6 } else { 1e-5 };
    if gap > tol * (1.0 + sol.theta.amax()) {
        return Err(Error::OracleFailure(format!("independent search differs from Newton by {gap:e}")));
    }
    Ok(KLResult {
        k_star: sol.theta,
        kl_value: sol.value,
        grad_norm: sol.grad_norm,
        method: method.into(),
        verification_gap: gap,
    })
}

/// KL projection of the Gaussian autoregression family onto a stationary
/// AR(1) or AR(2) law: the lag-one autocorrelation `E[X₀X₁]/E[X₀²]`.
pub fn kl_projection_autoregression(coefficients: &[f64]) -> Result<f64> {
    match *coefficients {
        [phi] if phi.abs() < 1.0 => Ok(phi),
        [p1, p2] if p2.abs() < 1.0 && p2 + p1 < 1.0 && p2 - p1 < 1.0 => Ok(p1 / (1.0 - p2)),
        _ => Err(Error::ConfigInvalid(format!("non-stationary autoregression {coefficients:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernels::{ExponentialRate, ExponentialTilt, GammaFamily, QFamily, Saturated, SojournLaw};

    fn gamma_law() -> PopulationLaw {
        let q = ChainKernel::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let r = SojournKernel::uniform(2, SojournLaw::Gamma { shape: 2.0, rate: 3.0 }).unwrap();
        PopulationLaw::new(q, r).unwrap()
    }

    #[test]
    fn exponential_on_gamma() {
        let law = gamma_law();
        let t = Target::Sojourn(Arc::new(ExponentialRate::new()));
        for th in [0.5, 1.5, 4.0] {
            let v = kl_information(&law, &t, &DVector::from_element(1, th)).unwrap();
            assert!((v - (th.ln() - th * 2.0 / 3.0)).abs() < 1e-14);
        }
        let k = kl_projection(&law, &t).unwrap();
        assert!((k.k_star[0] - 1.5).abs() < 1e-12);
        assert!(k.verification_gap < 1e-6);
    }

    #[test]
    fn correct_specification_returns_truth() {
        let law = gamma_law();
        let t = Target::Sojourn(Arc::new(GammaFamily::shape_and_rate()));
        let k = kl_projection(&law, &t).unwrap();
        assert!((k.k_star[0] - 2.0).abs() < 1e-8 && (k.k_star[1] - 3.0).abs() < 1e-8, "{k:?}");
    }

    #[test]
    fn saturated_truth_maximizes_at_minus_conditional_entropy() {
        let law = gamma_law();
        let fam = Arc::new(Saturated::new(2).unwrap());
        let th = fam.theta_for(law.chain().matrix());
        let t = Target::Chain(fam.clone());
        let v = kl_information(&law, &t, &th).unwrap();
        let p2 = law.p2();
        let q = law.chain().matrix();
        let entropy: f64 = (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).map(|(x, y)| -p2[(x, y)] * q[(x, y)].ln()).sum();
        assert!((v + entropy).abs() < 1e-14);
        let k = kl_projection(&law, &t).unwrap();
        assert!((fam.transition_matrix(&k.k_star) - q).amax() < 1e-10);
    }

    #[test]
    fn kl_is_concave_along_a_segment() {
        let law = gamma_law();
        let base = DMatrix::from_element(2, 2, 0.5);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let t = Target::Chain(Arc::new(ExponentialTilt::scalar(base, h).unwrap()));
        let vals: Vec<f64> = (0..11)
            .map(|i| kl_information(&law, &t, &DVector::from_element(1, -2.0 + 0.4 * i as f64)).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] + w[2] <= 2.0 * w[1] + 1e-14);
        }
    }

    #[test]
    fn zero_probability_pair_is_divergent() {
        let law = gamma_law();
        let base = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let t = Target::Chain(Arc::new(ExponentialTilt::scalar(base, h).unwrap()));
        let err = kl_information(&law, &t, &DVector::from_element(1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DivergentIntegral(_)));
    }

    #[test]
    fn autoregression_projection() {
        assert_eq!(kl_projection_autoregression(&[0.5]).unwrap(), 0.5);
        assert!((kl_projection_autoregression(&[0.5, 0.2]).unwrap() - 0.625).abs() < 1e-15);
        assert!(kl_projection_autoregression(&[1.2]).is_err());
    }
}
