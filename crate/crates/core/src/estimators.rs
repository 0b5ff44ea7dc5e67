//! Maximum-likelihood and partial maximum-likelihood estimators for
//! Models Q, R and S, plus the closed-form and marginal estimators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalMeasures;
use crate::error::{Error, Result};
use crate::kernels::{stationary_distribution, Layout, ModelTag, ParamBox, QFamily, SModel, SojournSummary, Target};
use crate::linalg::{self, serde_matrix, serde_vector};
use crate::measure::{evaluate, Evaluation, TripleLaw};
use crate::optimize::{maximize, NewtonOptions, Objective, Solution};

/// Result of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(with = "serde_vector")]
    pub theta_hat: DVector<f64>,
    pub model_tag: ModelTag,
    pub iterations: usize,
    pub grad_norm: f64,
    #[serde(with = "serde_matrix")]
    pub hessian_at_solution: DMatrix<f64>,
    pub converged: bool,
    /// Objective value at `theta_hat`.
    pub objective: f64,
    /// Coordinates held at their starting values (rows never observed).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frozen_coordinates: Vec<usize>,
}

/// The expected log-likelihood of a target under a law, as an objective.
pub struct LawObjective<'a> {
    pub target: &'a Target,
    pub law: &'a dyn TripleLaw,
}

impl Objective for LawObjective<'_> {
    fn domain(&self) -> &ParamBox {
        self.target.domain()
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Result<Evaluation> {
        evaluate(self.target, self.law, theta)
    }
}

/// Starting point used by both the estimators and the oracle.
pub fn initial_point(target: &Target, pair_freq: &DMatrix<f64>, summary: &SojournSummary) -> DVector<f64> {
    let th = match target {
        Target::Chain(f) => f.initial_guess(pair_freq),
        Target::Sojourn(f) => f.initial_guess(summary),
        Target::Joint(m) => {
            let q = m.q_family().initial_guess(pair_freq);
            let r = m.r_family().initial_guess(summary);
            match m.layout() {
                Layout::Shared => r,
                Layout::Disjoint => m.join(&q, &r),
            }
        }
    };
    target.domain().project(&th)
}

fn frozen_coordinates(target: &Target, visited: &[bool]) -> Vec<usize> {
    match target {
        Target::Chain(f) => f.inactive_coordinates(visited),
        Target::Sojourn(_) => Vec::new(),
        Target::Joint(m) => match m.layout() {
            Layout::Disjoint => m.q_family().inactive_coordinates(visited),
            Layout::Shared => Vec::new(),
        },
    }
}

/// Fails with [`Error::SingularHessian`] unless the Hessian restricted to
/// the free coordinates is negative definite.
pub(crate) fn check_maximum(sol: &Solution, frozen: &[usize]) -> Result<()> {
    let free: Vec<usize> = (0..sol.theta.len()).filter(|i| !frozen.contains(i)).collect();
    if free.is_empty() {
        return Ok(());
    }
    let h = DMatrix::from_fn(free.len(), free.len(), |i, j| sol.hessian[(free[i], free[j])]);
    let tol = 1e-12 * h.amax().max(1e-300);
    if !linalg::is_negative_definite(&h, tol) {
        return Err(Error::SingularHessian);
    }
    Ok(())
}

fn report(sol: Solution, tag: ModelTag, frozen: Vec<usize>) -> EstimateReport {
    EstimateReport {
        theta_hat: sol.theta,
        model_tag: tag,
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
        hessian_at_solution: sol.hessian,
        converged: true,
        objective: sol.value,
        frozen_coordinates: frozen,
    }
}

/// Maximises `ℙ[log density]` for any target.
pub fn fit(emp: &EmpiricalMeasures, target: &Target, init: Option<&DVector<f64>>) -> Result<EstimateReport> {
    let start = match init {
        Some(t) => {
            target.domain().check(t)?;
            t.clone()
        }
        None => initial_point(
            target,
            &emp.pair_freq(),
            &SojournSummary::from_triples(emp.triples(), emp.size()),
        ),
    };
    let frozen = frozen_coordinates(target, &emp.visited());
    let opts = NewtonOptions { frozen: frozen.clone(), ..Default::default() };
    let obj = LawObjective { target, law: emp };
    let sol = maximize(&obj, &start, &opts)?;
    check_maximum(&sol, &frozen)?;
    Ok(report(sol, target.tag(), frozen))
}

/// `θ̂_Q`, the maximiser of `ℙ₂[log q_θ]`.
pub fn fit_q(emp: &EmpiricalMeasures, fam: std::sync::Arc<dyn QFamily>, init: Option<&DVector<f64>>) -> Result<EstimateReport> {
    fit(emp, &Target::Chain(fam), init)
}

/// `θ̂_R`, the maximiser of `ℙ₃[log r_θ]`.
pub fn fit_r(
    emp: &EmpiricalMeasures,
    fam: std::sync::Arc<dyn crate::kernels::RFamily>,
    init: Option<&DVector<f64>>,
) -> Result<EstimateReport> {
    fit(emp, &Target::Sojourn(fam), init)
}

/// `θ̂_S`, the maximiser of `ℙ₃[log s_θ] = ℙ₂[log q_θ] + ℙ₃[log r_θ]`.
pub fn fit_s(emp: &EmpiricalMeasures, model: SModel, init: Option<&DVector<f64>>) -> Result<EstimateReport> {
    fit(emp, &Target::Joint(model), init)
}

/// `1 / m̂`, the exponential-rate estimator.
pub fn fit_exponential_closed_form(emp: &EmpiricalMeasures) -> f64 {
    1.0 / emp.mhat()
}

/// `Σ X_{j−1}X_j / Σ X_{j−1}²`.
pub fn fit_ar1_least_squares(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::DegenerateSeries(format!("length {}", series.len())));
    }
    let num: Vec<f64> = series.windows(2).map(|w| w[0] * w[1]).collect();
    let den: Vec<f64> = series[..series.len() - 1].iter().map(|x| x * x).collect();
    let den = linalg::pairwise_sum(&den);
    if den <= 0.0 {
        return Err(Error::DegenerateSeries("sum of squared lagged values is zero".into()));
    }
    Ok(linalg::pairwise_sum(&num) / den)
}

/// Conditional Gaussian log-likelihood `−(1/2N) Σ (X_j − θX_{j−1})²` of an
/// autoregression with unit innovation variance.
pub struct GaussianAr1<'a> {
    series: &'a [f64],
    domain: ParamBox,
}

impl<'a> GaussianAr1<'a> {
    pub fn new(series: &'a [f64]) -> Self {
        Self { series, domain: ParamBox::uniform(1, -10.0, 10.0) }
    }
}

impl Objective for GaussianAr1<'_> {
    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Result<Evaluation> {
        let t = theta[0];
        let n = (self.series.len() - 1) as f64;
        let res: Vec<f64> = self.series.windows(2).map(|w| (w[1] - t * w[0]).powi(2)).collect();
        let score: Vec<f64> = self.series.windows(2).map(|w| w[0] * (w[1] - t * w[0])).collect();
        let info: Vec<f64> = self.series[..self.series.len() - 1].iter().map(|x| x * x).collect();
        Ok(Evaluation {
            value: -0.5 * linalg::pairwise_sum(&res) / n,
            gradient: DVector::from_element(1, linalg::pairwise_sum(&score) / n),
            hessian: DMatrix::from_element(1, 1, -linalg::pairwise_sum(&info) / n),
        })
    }
}

/// Newton solve of the Gaussian autoregression score equation `Σ x(y − θx) = 0`.
pub fn fit_ar1_gaussian(series: &[f64]) -> Result<EstimateReport> {
    if series.len() < 2 {
        return Err(Error::DegenerateSeries(format!("length {}", series.len())));
    }
    let obj = GaussianAr1::new(series);
    let sol = maximize(&obj, &DVector::zeros(1), &NewtonOptions::default())?;
    check_maximum(&sol, &[])?;
    Ok(report(sol, ModelTag::Q, Vec::new()))
}

/// `ℙ₂[log p_{1θ}(x) + log q_θ(x, y)]` with `p_{1θ}` the stationary law of
/// `Q_θ`. Derivatives of `log p_{1θ}` are central finite differences.
pub struct MarginalPairObjective<'a> {
    fam: &'a dyn QFamily,
    emp: &'a EmpiricalMeasures,
}

impl<'a> MarginalPairObjective<'a> {
    pub fn new(fam: &'a dyn QFamily, emp: &'a EmpiricalMeasures) -> Self {
        Self { fam, emp }
    }

    fn log_p1(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let pi = stationary_distribution(&self.fam.transition_matrix(theta))?;
        Ok(pi.map(f64::ln))
    }

    fn weighted_log_p1(&self, theta: &DVector<f64>, p1: &DVector<f64>) -> Result<f64> {
        Ok(self.log_p1(theta)?.dot(p1))
    }

    /// Central differences of `ℙ₁[log p_{1θ}]` with step `1e−6(1 + |θ_i|)`.
    fn marginal_gradient(&self, theta: &DVector<f64>, p1: &DVector<f64>) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(theta.len());
        for i in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[i].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            g[i] = (self.weighted_log_p1(&tp, p1)? - self.weighted_log_p1(&tm, p1)?) / (2.0 * h);
        }
        Ok(g)
    }
}

impl Objective for MarginalPairObjective<'_> {
    fn domain(&self) -> &ParamBox {
        self.fam.domain()
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Result<Evaluation> {
        let base = crate::measure::chain_evaluation(self.fam, self.emp, theta)?;
        let p1 = self.emp.origin_freq();
        let value = base.value + self.weighted_log_p1(theta, &p1)?;
        let gradient = &base.gradient + self.marginal_gradient(theta, &p1)?;
        let d = theta.len();
        let mut h2 = DMatrix::zeros(d, d);
        for j in 0..d {
            let h = 1e-4 * (1.0 + theta[j].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let col = (self.marginal_gradient(&tp, &p1)? - self.marginal_gradient(&tm, &p1)?) / (2.0 * h);
            h2.set_column(j, &col);
        }
        Ok(Evaluation { value, gradient, hessian: &base.hessian + linalg::symmetrize(&h2) })
    }
}

/// `θ̂₂`, the maximiser of `ℙ₂[log p_{2θ}]` with `p_{2θ}(x, y) = p_{1θ}(x) q_θ(x, y)`.
///
/// The gradient is accurate to about `1e−10`, so the convergence tolerance
/// is `1e−8` rather than the default.
pub fn fit_marginal_pair(emp: &EmpiricalMeasures, fam: &dyn QFamily, init: Option<&DVector<f64>>) -> Result<EstimateReport> {
    let start = match init {
        Some(t) => {
            fam.domain().check(t)?;
            t.clone()
        }
        None => fam.domain().project(&fam.initial_guess(&emp.pair_freq())),
    };
    let frozen = fam.inactive_coordinates(&emp.visited());
    let opts = NewtonOptions { frozen: frozen.clone(), grad_tol: 1e-8, ..Default::default() };
    let sol = maximize(&MarginalPairObjective::new(fam, emp), &start, &opts)?;
    check_maximum(&sol, &frozen)?;
    Ok(report(sol, ModelTag::Marginal2, frozen))
}
