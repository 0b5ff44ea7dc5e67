use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed box `Θ = Π [lower_i, upper_i]` of admissible parameters.
///
/// Evaluators reject points outside the box instead of extrapolating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::ConfigInvalid("domain box needs finite lower < upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; dim], upper: vec![upper; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn check(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        for (i, &t) in theta.iter().enumerate() {
            if !(t >= self.lower[i] && t <= self.upper[i]) {
                return Err(Error::OutOfDomain { theta: theta.as_slice().to_vec(), coordinate: i });
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        self.check(theta).is_ok()
    }

    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| theta[i].clamp(self.lower[i], self.upper[i]))
    }

    /// Coordinates sitting on a face of the box (relative tolerance 1e-12).
    pub fn active_faces(&self, theta: &DVector<f64>) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                let tol = 1e-12 * (1.0 + self.upper[i].abs().max(self.lower[i].abs()));
                theta[i] <= self.lower[i] + tol || theta[i] >= self.upper[i] - tol
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| rng.random_range(self.lower[i]..self.upper[i]))
    }

    /// Cartesian product of two boxes.
    pub fn concat(&self, other: &ParamBox) -> ParamBox {
        ParamBox {
            lower: self.lower.iter().chain(&other.lower).copied().collect(),
            upper: self.upper.iter().chain(&other.upper).copied().collect(),
        }
    }

    /// Intersection of two boxes of equal dimension.
    pub fn intersect(&self, other: &ParamBox) -> Result<ParamBox> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        ParamBox::new(
            self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect(),
            self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_outside_points() {
        let b = ParamBox::uniform(2, -1.0, 1.0);
        assert!(b.contains(&DVector::from_vec(vec![0.0, 1.0])));
        let err = b.check(&DVector::from_vec(vec![0.0, 1.5])).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { coordinate: 1, .. }));
        assert!(b.check(&DVector::from_vec(vec![0.0, f64::NAN])).is_err());
    }

    #[test]
    fn projection_and_faces() {
        let b = ParamBox::uniform(2, 0.0, 2.0);
        let p = b.project(&DVector::from_vec(vec![-3.0, 1.0]));
        assert_eq!(p.as_slice(), &[0.0, 1.0]);
        assert_eq!(b.active_faces(&p), vec![0]);
    }
}
