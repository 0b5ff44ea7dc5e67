use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};

use super::domain::ParamBox;
use crate::error::{Error, Result};

/// Log-probabilities, scores and Hessians of one row `q_θ(x, ·)`.
#[derive(Debug, Clone)]
pub struct RowEval {
    pub log_prob: Vec<f64>,
    pub score: Vec<DVector<f64>>,
    pub hessian: Vec<DMatrix<f64>>,
}

impl RowEval {
    pub fn prob(&self, y: usize) -> f64 {
        self.log_prob[y].exp()
    }
}

/// Parametric family `q_θ(x, y)` for the embedded-chain transition density
/// with respect to counting measure on the states.
///
/// Implementations assume `θ` lies in [`QFamily::domain`]; the public
/// operations that take a user-supplied `θ` check this first.
pub trait QFamily: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Number of states.
    fn size(&self) -> usize;
    fn domain(&self) -> &ParamBox;

    /// `log q_θ(x, ·)`, `χ_θ(x, ·)` and `χ̇_θ(x, ·)` for every target state.
    fn row(&self, theta: &DVector<f64>, x: usize) -> RowEval;

    fn log_prob(&self, theta: &DVector<f64>, x: usize, y: usize) -> f64 {
        self.row(theta, x).log_prob[y]
    }

    fn score(&self, theta: &DVector<f64>, x: usize, y: usize) -> DVector<f64> {
        self.row(theta, x).score.swap_remove(y)
    }

    fn hessian(&self, theta: &DVector<f64>, x: usize, y: usize) -> DMatrix<f64> {
        self.row(theta, x).hessian.swap_remove(y)
    }

    fn rows(&self, theta: &DVector<f64>) -> Vec<RowEval> {
        (0..self.size()).map(|x| self.row(theta, x)).collect()
    }

    fn transition_matrix(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let rows = self.rows(theta);
        DMatrix::from_fn(self.size(), self.size(), |x, y| rows[x].prob(y))
    }

    /// Starting point for Newton given pair frequencies `ℙ₂` (or `P₂`).
    fn initial_guess(&self, _pair_freq: &DMatrix<f64>) -> DVector<f64> {
        self.domain().project(&DVector::zeros(self.dim()))
    }

    /// Coordinates that carry no information when the listed states were
    /// never left; they are held fixed by the solver.
    fn inactive_coordinates(&self, _visited: &[bool]) -> Vec<usize> {
        Vec::new()
    }
}

/// Row-wise log-sum-exp normalisation of logits, returning log-probabilities.
fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// `q_θ(x, y) ∝ Q₀(x, y) exp(θ · h(x, y))` with a base chain `Q₀` and a
/// `d`-vector of pair statistics `h`.
///
/// Score `χ = h − E_θ[h | x]`, Hessian `χ̇ = −Cov_θ[h | x]`.
#[derive(Debug, Clone)]
pub struct ExponentialTilt {
    base: DMatrix<f64>,
    stats: Vec<DMatrix<f64>>,
    domain: ParamBox,
}

impl ExponentialTilt {
    pub fn new(base: DMatrix<f64>, stats: Vec<DMatrix<f64>>, domain: ParamBox) -> Result<Self> {
        let n = base.nrows();
        if base.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: base.ncols() });
        }
        if stats.is_empty() || stats.iter().any(|h| h.shape() != (n, n)) {
            return Err(Error::ConfigInvalid("tilt statistics must be non-empty size×size matrices".into()));
        }
        if domain.dim() != stats.len() {
            return Err(Error::DimensionMismatch { expected: stats.len(), got: domain.dim() });
        }
        for x in 0..n {
            let row = base.row(x);
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) || row.sum() <= 0.0 {
                return Err(Error::InvalidEntry { row: x, col: 0, value: row.sum() });
            }
        }
        Ok(Self { base, stats, domain })
    }

    /// One-parameter tilt with the default box `[-10, 10]`.
    pub fn scalar(base: DMatrix<f64>, stat: DMatrix<f64>) -> Result<Self> {
        Self::new(base, vec![stat], ParamBox::uniform(1, -10.0, 10.0))
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn stats(&self) -> &[DMatrix<f64>] {
        &self.stats
    }
}

impl QFamily for ExponentialTilt {
    fn name(&self) -> &str {
        "exponential_tilt"
    }

    fn dim(&self) -> usize {
        self.stats.len()
    }

    fn size(&self) -> usize {
        self.base.nrows()
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn row(&self, theta: &DVector<f64>, x: usize) -> RowEval {
        let n = self.size();
        let d = self.dim();
        let h = |y: usize| DVector::from_fn(d, |k, _| self.stats[k][(x, y)]);
        let logits: Vec<f64> = (0..n)
            .map(|y| {
                let b = self.base[(x, y)];
                if b > 0.0 {
                    b.ln() + h(y).dot(theta)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let log_prob = log_softmax(&logits);
        let probs: Vec<f64> = log_prob.iter().map(|l| l.exp()).collect();
        let mean = (0..n).fold(DVector::zeros(d), |acc, y| acc + h(y) * probs[y]);
        let mut cov = DMatrix::zeros(d, d);
        for (y, &p) in probs.iter().enumerate() {
            let c = h(y) - &mean;
            cov += &c * c.transpose() * p;
        }
        let score = (0..n).map(|y| h(y) - &mean).collect();
        let hessian = vec![-cov; n];
        RowEval { log_prob, score, hessian }
    }
}

/// Saturated family: free softmax logits per row, last state as reference.
///
/// `θ` has `size·(size−1)` coordinates, row `x` owning
/// `x·(size−1) .. (x+1)·(size−1)`.
#[derive(Debug, Clone)]
pub struct Saturated {
    size: usize,
    domain: ParamBox,
}

impl Saturated {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::ConfigInvalid("saturated family needs at least two states".into()));
        }
        let d = size * (size - 1);
        Ok(Self { size, domain: ParamBox::uniform(d, -30.0, 30.0) })
    }

    pub fn with_domain(size: usize, domain: ParamBox) -> Result<Self> {
        let s = Self::new(size)?;
        if domain.dim() != s.dim() {
            return Err(Error::DimensionMismatch { expected: s.dim(), got: domain.dim() });
        }
        Ok(Self { size, domain })
    }

    fn offset(&self, x: usize) -> usize {
        x * (self.size - 1)
    }

    /// Logits reproducing a given strictly positive transition matrix.
    pub fn theta_for(&self, q: &DMatrix<f64>) -> DVector<f64> {
        let k = self.size - 1;
        DVector::from_fn(self.dim(), |i, _| {
            let (x, y) = (i / k, i % k);
            (q[(x, y)] / q[(x, k)]).ln()
        })
    }
}

impl QFamily for Saturated {
    fn name(&self) -> &str {
        "saturated"
    }

    fn dim(&self) -> usize {
        self.size * (self.size - 1)
    }

    fn size(&self) -> usize {
        self.size
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn row(&self, theta: &DVector<f64>, x: usize) -> RowEval {
        let n = self.size;
        let k = n - 1;
        let off = self.offset(x);
        let logits: Vec<f64> = (0..n).map(|y| if y < k { theta[off + y] } else { 0.0 }).collect();
        let log_prob = log_softmax(&logits);
        let probs: Vec<f64> = log_prob.iter().map(|l| l.exp()).collect();
        let d = self.dim();
        let score = (0..n)
            .map(|y| {
                let mut s = DVector::zeros(d);
                for j in 0..k {
                    s[off + j] = f64::from(u8::from(y == j)) - probs[j];
                }
                s
            })
            .collect();
        let mut h = DMatrix::zeros(d, d);
        for i in 0..k {
            for j in 0..k {
                let diag = if i == j { probs[i] } else { 0.0 };
                h[(off + i, off + j)] = -(diag - probs[i] * probs[j]);
            }
        }
        RowEval { log_prob, score, hessian: vec![h; n] }
    }

    fn initial_guess(&self, pair_freq: &DMatrix<f64>) -> DVector<f64> {
        let k = self.size - 1;
        let theta = DVector::from_fn(self.dim(), |i, _| {
            let (x, y) = (i / k, i % k);
            let (a, b) = (pair_freq[(x, y)], pair_freq[(x, k)]);
            if a > 0.0 && b > 0.0 {
                (a / b).ln()
            } else {
                0.0
            }
        });
        self.domain.project(&theta)
    }

    fn inactive_coordinates(&self, visited: &[bool]) -> Vec<usize> {
        let k = self.size - 1;
        (0..self.size)
            .filter(|&x| !visited.get(x).copied().unwrap_or(false))
            .flat_map(|x| (x * k)..((x + 1) * k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tilt() -> ExponentialTilt {
        let base = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        ExponentialTilt::scalar(base, h).unwrap()
    }

    #[test]
    fn tilt_rows_normalise_and_scores_center() {
        let f = tilt();
        for t in [-3.0, -0.2, 0.0, 1.7] {
            let th = DVector::from_element(1, t);
            for x in 0..2 {
                let r = f.row(&th, x);
                let total: f64 = (0..2).map(|y| r.prob(y)).sum();
                assert!((total - 1.0).abs() < 1e-14);
                let c: f64 = (0..2).map(|y| r.prob(y) * r.score[y][0]).sum();
                assert!(c.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tilt_score_matches_finite_difference() {
        let base = DMatrix::from_row_slice(3, 3, &[0.2, 0.3, 0.5, 0.6, 0.1, 0.3, 0.3, 0.3, 0.4]);
        let h1 = DMatrix::from_fn(3, 3, |x, y| (x as f64 - y as f64).abs());
        let h2 = DMatrix::from_fn(3, 3, |x, y| if y == 0 { 1.0 + x as f64 } else { 0.0 });
        let f = ExponentialTilt::new(base, vec![h1, h2], ParamBox::uniform(2, -5.0, 5.0)).unwrap();
        let th = DVector::from_vec(vec![0.3, -0.4]);
        let eps = 1e-6;
        for x in 0..3 {
            for y in 0..3 {
                let s = f.score(&th, x, y);
                let hs = f.hessian(&th, x, y);
                for k in 0..2 {
                    let mut tp = th.clone();
                    let mut tm = th.clone();
                    tp[k] += eps;
                    tm[k] -= eps;
                    let fd = (f.log_prob(&tp, x, y) - f.log_prob(&tm, x, y)) / (2.0 * eps);
                    assert!((fd - s[k]).abs() < 1e-8);
                    let fd2 = (f.score(&tp, x, y) - f.score(&tm, x, y)) / (2.0 * eps);
                    for j in 0..2 {
                        assert!((fd2[j] - hs[(j, k)]).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn saturated_reproduces_matrix() {
        let f = Saturated::new(3).unwrap();
        let q = DMatrix::from_row_slice(3, 3, &[0.2, 0.3, 0.5, 0.6, 0.1, 0.3, 0.3, 0.3, 0.4]);
        let th = f.theta_for(&q);
        assert!((f.transition_matrix(&th) - q).amax() < 1e-15);
    }

    #[test]
    fn saturated_inactive_rows() {
        let f = Saturated::new(3).unwrap();
        assert_eq!(f.inactive_coordinates(&[true, false, true]), vec![2, 3]);
    }
}
