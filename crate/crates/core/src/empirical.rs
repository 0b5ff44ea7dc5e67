//! Empirical measures `ℙ₁`, `ℙ₂`, `ℙ₃` of an observed path.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::kernels::{CondMoments, FeatureMoments, RFamily};
use crate::measure::TripleLaw;
use crate::simulator::{Regime, RenewalPath};

/// Frozen empirical distributions of one path. Memory is `O(N)`: the raw
/// triples are kept, plus per-cell sojourn lists and feature moments.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasures {
    size: usize,
    n_obs: usize,
    pair_counts: Vec<u64>,
    triples: Vec<(usize, usize, f64)>,
    cells: Vec<Vec<f64>>,
    cell_features: Vec<FeatureMoments>,
    mhat: f64,
    regime: Regime,
}

impl EmpiricalMeasures {
    /// Counts transitions `j = 1..=N` of `path` over `size` states.
    pub fn build(path: &RenewalPath, size: usize) -> Result<Self> {
        let n_obs = path.n_obs();
        if n_obs == 0 {
            return Err(Error::EmptyPath);
        }
        let mut pair_counts = vec![0u64; size * size];
        let mut cells = vec![Vec::new(); size * size];
        let mut triples = Vec::with_capacity(n_obs);
        for (x, y, u) in path.transitions() {
            if x >= size || y >= size {
                return Err(Error::ConfigInvalid(format!("state {} outside 0..{size}", x.max(y))));
            }
            pair_counts[x * size + y] += 1;
            cells[x * size + y].push(u);
            triples.push((x, y, u));
        }
        let mhat = triples.iter().map(|t| t.2).sum::<f64>() / n_obs as f64;
        let cell_features = cells.iter().map(|us| feature_means(us)).collect();
        Ok(Self { size, n_obs, pair_counts, triples, cells, cell_features, mhat, regime: path.regime() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `N`.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `(1/N) Σ U_j`.
    pub fn mhat(&self) -> f64 {
        self.mhat
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.pair_counts[x * self.size + y]
    }

    pub fn pair_counts(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |x, y| self.count(x, y) as f64)
    }

    /// `ℙ₂` as a matrix.
    pub fn pair_freq(&self) -> DMatrix<f64> {
        self.pair_counts() / self.n_obs as f64
    }

    /// `ℙ₁`, the law of `X_{j−1}`.
    pub fn origin_freq(&self) -> DVector<f64> {
        let p2 = self.pair_freq();
        DVector::from_fn(self.size, |x, _| p2.row(x).sum())
    }

    /// States left at least once.
    pub fn visited(&self) -> Vec<bool> {
        (0..self.size).map(|x| (0..self.size).any(|y| self.count(x, y) > 0)).collect()
    }

    /// Row-normalised counts `Q̂`; rows never left stay uniform.
    pub fn transition_estimate(&self) -> DMatrix<f64> {
        let c = self.pair_counts();
        let mut q = DMatrix::from_element(self.size, self.size, 1.0 / self.size as f64);
        for x in 0..self.size {
            let s: f64 = c.row(x).sum();
            if s > 0.0 {
                for y in 0..self.size {
                    q[(x, y)] = c[(x, y)] / s;
                }
            }
        }
        q
    }

    pub fn triples(&self) -> &[(usize, usize, f64)] {
        &self.triples
    }

    /// Sojourns observed on the pair `(x, y)`.
    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        &self.cells[x * self.size + y]
    }

    /// `ℙ₂[f]` computed from the pair counts.
    pub fn expect_pairs<F>(&self, f: F, dim: usize) -> Result<DVector<f64>>
    where
        F: Fn(usize, usize) -> DVector<f64>,
    {
        let mut acc = DVector::zeros(dim);
        for x in 0..self.size {
            for y in 0..self.size {
                let c = self.count(x, y);
                if c == 0 {
                    continue;
                }
                let v = f(x, y);
                if v.iter().any(|a| !a.is_finite()) {
                    return Err(Error::NonFiniteValue { x, y, u: None });
                }
                acc += v * c as f64;
            }
        }
        Ok(acc / self.n_obs as f64)
    }

    /// `ℙ₃[f]`, a uniform average over the stored triples.
    pub fn expect_triples<F>(&self, f: F, dim: usize) -> Result<DVector<f64>>
    where
        F: Fn(usize, usize, f64) -> DVector<f64>,
    {
        let mut acc = DVector::zeros(dim);
        for &(x, y, u) in &self.triples {
            let v = f(x, y, u);
            if v.iter().any(|a| !a.is_finite()) {
                return Err(Error::NonFiniteValue { x, y, u: Some(u) });
            }
            acc += v;
        }
        Ok(acc / self.n_obs as f64)
    }

    pub fn write_pair_counts_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string()];
        header.extend((0..self.size).map(|y| format!("y{y}")));
        wr.write_record(&header)?;
        for x in 0..self.size {
            let mut rec = vec![x.to_string()];
            rec.extend((0..self.size).map(|y| self.count(x, y).to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_triples_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "u"])?;
        for &(x, y, u) in &self.triples {
            wr.write_record([x.to_string(), y.to_string(), format!("{u:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn feature_means(us: &[f64]) -> FeatureMoments {
    if us.is_empty() {
        return FeatureMoments { mean: Vector3::zeros(), second: Matrix3::zeros() };
    }
    let mut mean = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for &u in us {
        let phi = Vector3::new(1.0, u, u.ln());
        mean += phi;
        second += phi * phi.transpose();
    }
    let n = us.len() as f64;
    FeatureMoments { mean: mean / n, second: second / n }
}

impl TripleLaw for EmpiricalMeasures {
    fn size(&self) -> usize {
        self.size
    }

    fn pair_weight(&self, x: usize, y: usize) -> f64 {
        self.count(x, y) as f64 / self.n_obs as f64
    }

    fn cell_moments(&self, fam: &dyn RFamily, theta: &DVector<f64>, x: usize, y: usize) -> Result<CondMoments> {
        let us = self.cell(x, y);
        if let Some(form) = fam.affine_form(theta, x, y) {
            let m = form.moments(&self.cell_features[x * self.size + y]);
            if !m.log_density.is_finite() || m.score.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { x, y, u: None });
            }
            return Ok(m);
        }
        let d = fam.dim();
        let mut m = CondMoments {
            log_density: 0.0,
            score: DVector::zeros(d),
            score_outer: DMatrix::zeros(d, d),
            hessian: DMatrix::zeros(d, d),
        };
        for &u in us {
            let l = fam.log_density(theta, x, y, u);
            let s = fam.score(theta, x, y, u);
            if !l.is_finite() || s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { x, y, u: Some(u) });
            }
            m.log_density += l;
            m.score_outer += &s * s.transpose();
            m.score += s;
            m.hessian += fam.hessian(theta, x, y, u);
        }
        let n = us.len().max(1) as f64;
        m.log_density /= n;
        m.score /= n;
        m.score_outer /= n;
        m.hessian /= n;
        Ok(m)
    }

    fn mean_sojourn(&self) -> f64 {
        self.mhat
    }
}
