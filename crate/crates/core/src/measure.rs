//! Expectations of log-likelihood terms under a law of `(X_{j−1}, X_j, U_j)`.
//!
//! Population laws and empirical measures both present themselves as pair
//! weights plus per-pair sojourn moments, so the objective, score and Hessian
//! of every model are computed by one routine for both.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{CondMoments, QFamily, RFamily, SModel, Target};

/// A joint law of a transition pair and its sojourn.
pub trait TripleLaw: Sync {
    fn size(&self) -> usize;
    /// Probability (or frequency) of the pair `(x, y)`.
    fn pair_weight(&self, x: usize, y: usize) -> f64;
    /// Conditional moments of `fam` at `θ` given the pair `(x, y)`.
    fn cell_moments(&self, fam: &dyn RFamily, theta: &DVector<f64>, x: usize, y: usize) -> Result<CondMoments>;
    /// Mean inter-arrival time (`m` or `m̂`).
    fn mean_sojourn(&self) -> f64;

    /// Error for a log-density that is not finite on a charged pair.
    fn divergence(&self, x: usize, y: usize) -> Error {
        Error::NonFiniteValue { x, y, u: None }
    }

    fn pair_weights(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |x, y| self.pair_weight(x, y))
    }
}

/// Objective value with its gradient and Hessian.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Evaluation {
    fn zeros(d: usize) -> Self {
        Self { value: 0.0, gradient: DVector::zeros(d), hessian: DMatrix::zeros(d, d) }
    }
}

/// `L[log q_θ]`, `L[χ_θ]`, `L[χ̇_θ]` under the pair weights of `law`.
pub fn chain_evaluation(fam: &dyn QFamily, law: &dyn TripleLaw, theta: &DVector<f64>) -> Result<Evaluation> {
    check_size(fam.size(), law.size())?;
    let mut ev = Evaluation::zeros(fam.dim());
    for x in 0..law.size() {
        let weights: Vec<f64> = (0..law.size()).map(|y| law.pair_weight(x, y)).collect();
        if weights.iter().all(|&w| w == 0.0) {
            continue;
        }
        let row = fam.row(theta, x);
        for (y, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if !row.log_prob[y].is_finite() {
                return Err(law.divergence(x, y));
            }
            ev.value += w * row.log_prob[y];
            ev.gradient += &row.score[y] * w;
            ev.hessian += &row.hessian[y] * w;
        }
    }
    Ok(ev)
}

/// `L[log r_θ]`, `L[ϱ_θ]`, `L[ϱ̇_θ]` under `law`.
pub fn sojourn_evaluation(fam: &dyn RFamily, law: &dyn TripleLaw, theta: &DVector<f64>) -> Result<Evaluation> {
    let mut ev = Evaluation::zeros(fam.dim());
    for x in 0..law.size() {
        for y in 0..law.size() {
            let w = law.pair_weight(x, y);
            if w == 0.0 {
                continue;
            }
            let m = law.cell_moments(fam, theta, x, y)?;
            ev.value += w * m.log_density;
            ev.gradient += &m.score * w;
            ev.hessian += &m.hessian * w;
        }
    }
    Ok(ev)
}

fn joint_evaluation(model: &SModel, law: &dyn TripleLaw, theta: &DVector<f64>) -> Result<Evaluation> {
    let q = chain_evaluation(model.q_family().as_ref(), law, &model.q_theta(theta))?;
    let r = sojourn_evaluation(model.r_family().as_ref(), law, &model.r_theta(theta))?;
    Ok(Evaluation {
        value: q.value + r.value,
        gradient: model.embed_q(&q.gradient) + model.embed_r(&r.gradient),
        hessian: model.embed_q_mat(&q.hessian) + model.embed_r_mat(&r.hessian),
    })
}

/// Expected log-likelihood of `target` under `law`, with derivatives.
/// `θ` is assumed to lie in the target's box.
pub fn evaluate(target: &Target, law: &dyn TripleLaw, theta: &DVector<f64>) -> Result<Evaluation> {
    if theta.len() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), got: theta.len() });
    }
    match target {
        Target::Chain(f) => chain_evaluation(f.as_ref(), law, theta),
        Target::Sojourn(f) => sojourn_evaluation(f.as_ref(), law, theta),
        Target::Joint(m) => joint_evaluation(m, law, theta),
    }
}

fn check_size(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
