use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{serde_matrix, serde_vector};

const ROW_SUM_TOL: f64 = 1e-9;

/// Transition matrix of the embedded chain together with its stationary law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainKernel {
    #[serde(with = "serde_matrix")]
    matrix: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    stationary: DVector<f64>,
}

impl ChainKernel {
    /// Validates the matrix, computes π and rejects chains with a transient
    /// state. Rows are renormalised after validation so they sum to one to
    /// rounding.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let matrix = validate_stochastic(matrix)?;
        let stationary = stationary_distribution(&matrix)?;
        if let Some(state) = stationary.iter().position(|&p| p <= 0.0) {
            return Err(Error::TransientState { state });
        }
        Ok(Self { matrix, stationary })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = crate::linalg::rows_to_mat(rows).ok_or(Error::DimensionMismatch {
            expected: rows.len(),
            got: rows.first().map_or(0, |r| r.len()),
        })?;
        Self::new(m)
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    /// Stationary pair law `P₂ = diag(π) Q`.
    pub fn pair_law(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |x, y| self.stationary[x] * self.matrix[(x, y)])
    }

    pub fn is_aperiodic(&self) -> bool {
        is_aperiodic(&self.matrix)
    }

    /// Seeded chain with Dirichlet(1, …, 1) rows.
    pub fn random(size: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(size, size, |_, _| {
            let e: f64 = Exp1.sample(&mut rng);
            e
        });
        let m = normalize_rows(m);
        Self::new(m)
    }
}

fn normalize_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).sum();
        m.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    m
}

fn validate_stochastic(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry { row: i, col: j, value: v });
            }
        }
        let sum: f64 = m.row(i).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic { row: i, sum });
        }
    }
    Ok(normalize_rows(m))
}

/// Boolean reachability closure of the support graph (reflexive).
fn reachability(q: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let n = q.nrows();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || q[(i, j)] > 0.0).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Number of closed communicating classes of the support graph.
pub fn closed_classes(q: &DMatrix<f64>) -> usize {
    let n = q.nrows();
    let r = reachability(q);
    let mut seen = vec![false; n];
    let mut closed = 0;
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| r[i][j] && r[j][i]).collect();
        class.iter().for_each(|&j| seen[j] = true);
        // closed iff nothing outside the class is reachable
        let escapes = (0..n).any(|j| r[i][j] && !class.contains(&j));
        if !escapes {
            closed += 1;
        }
    }
    closed
}

/// Aperiodicity of an irreducible support graph by Wielandt's bound:
/// some power `Q^k`, `k ≤ (n−1)² + 1`, is entrywise positive.
pub fn is_aperiodic(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    let step: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| q[(i, j)] > 0.0).collect()).collect();
    let mut cur = step.clone();
    let limit = (n - 1) * (n - 1) + 1;
    for _ in 0..limit {
        if cur.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        let next: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| cur[i][k] && step[k][j])).collect())
            .collect();
        cur = next;
    }
    cur.iter().all(|row| row.iter().all(|&b| b))
}

/// Stationary probability vector of a row-stochastic matrix with a single
/// closed class.
///
/// Solves `(Qᵀ − I)π = 0, Σπ = 1` by LU and applies one round of iterative
/// refinement followed by power-iteration polishing.
pub fn stationary_distribution(q: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = q.nrows();
    if q.ncols() != n || n == 0 {
        return Err(Error::DimensionMismatch { expected: n, got: q.ncols() });
    }
    for i in 0..n {
        let sum: f64 = q.row(i).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic { row: i, sum });
        }
    }
    let classes = closed_classes(q);
    if classes != 1 {
        return Err(Error::Reducible { closed_classes: classes });
    }
    let mut a = q.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut pi = lu
        .solve(&b)
        .ok_or_else(|| Error::SingularMatrix("stationary system".into()))?;
    let resid = &b - &a * &pi;
    if let Some(corr) = lu.solve(&resid) {
        pi += corr;
    }
    for _ in 0..4 {
        let next = q.transpose() * &pi;
        let s = next.sum();
        pi = next / s;
    }
    pi.iter_mut().for_each(|p| {
        if *p < 0.0 && *p > -1e-14 {
            *p = 0.0
        }
    });
    Ok(pi)
}
