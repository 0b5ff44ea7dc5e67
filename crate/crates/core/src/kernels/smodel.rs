use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::domain::ParamBox;
use super::qfamily::QFamily;
use super::rfamily::RFamily;
use crate::error::{Error, Result};

/// How the chain and sojourn families share the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Both families read the same `θ ∈ ℝᵈ`.
    Shared,
    /// `θ = (θ_q, θ_r)` concatenated.
    Disjoint,
}

/// Joint model `s_θ(x, y, u) = q_θ(x, y) r_θ(x, y, u)`.
#[derive(Debug, Clone)]
pub struct SModel {
    q: Arc<dyn QFamily>,
    r: Arc<dyn RFamily>,
    layout: Layout,
    domain: ParamBox,
}

impl SModel {
    pub fn shared(q: Arc<dyn QFamily>, r: Arc<dyn RFamily>) -> Result<Self> {
        if q.dim() != r.dim() {
            return Err(Error::DimensionMismatch { expected: q.dim(), got: r.dim() });
        }
        let domain = q.domain().intersect(r.domain())?;
        Ok(Self { q, r, layout: Layout::Shared, domain })
    }

    pub fn disjoint(q: Arc<dyn QFamily>, r: Arc<dyn RFamily>) -> Self {
        let domain = q.domain().concat(r.domain());
        Self { q, r, layout: Layout::Disjoint, domain }
    }

    pub fn q_family(&self) -> &Arc<dyn QFamily> {
        &self.q
    }

    pub fn r_family(&self) -> &Arc<dyn RFamily> {
        &self.r
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.q.size()
    }

    pub fn q_theta(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self.layout {
            Layout::Shared => theta.clone(),
            Layout::Disjoint => theta.rows(0, self.q.dim()).into_owned(),
        }
    }

    pub fn r_theta(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self.layout {
            Layout::Shared => theta.clone(),
            Layout::Disjoint => theta.rows(self.q.dim(), self.r.dim()).into_owned(),
        }
    }

    /// Joins per-family parameter vectors into the model's `θ`.
    pub fn join(&self, theta_q: &DVector<f64>, theta_r: &DVector<f64>) -> DVector<f64> {
        match self.layout {
            Layout::Shared => theta_q.clone(),
            Layout::Disjoint => DVector::from_iterator(
                self.dim(),
                theta_q.iter().chain(theta_r.iter()).copied(),
            ),
        }
    }

    pub fn embed_q(&self, v: &DVector<f64>) -> DVector<f64> {
        match self.layout {
            Layout::Shared => v.clone(),
            Layout::Disjoint => {
                let mut out = DVector::zeros(self.dim());
                out.rows_mut(0, self.q.dim()).copy_from(v);
                out
            }
        }
    }

    pub fn embed_r(&self, v: &DVector<f64>) -> DVector<f64> {
        match self.layout {
            Layout::Shared => v.clone(),
            Layout::Disjoint => {
                let mut out = DVector::zeros(self.dim());
                out.rows_mut(self.q.dim(), self.r.dim()).copy_from(v);
                out
            }
        }
    }

    pub fn embed_q_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self.layout {
            Layout::Shared => m.clone(),
            Layout::Disjoint => {
                let dq = self.q.dim();
                let mut out = DMatrix::zeros(self.dim(), self.dim());
                out.view_mut((0, 0), (dq, dq)).copy_from(m);
                out
            }
        }
    }

    pub fn embed_r_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self.layout {
            Layout::Shared => m.clone(),
            Layout::Disjoint => {
                let (dq, dr) = (self.q.dim(), self.r.dim());
                let mut out = DMatrix::zeros(self.dim(), self.dim());
                out.view_mut((dq, dq), (dr, dr)).copy_from(m);
                out
            }
        }
    }

    pub fn log_density(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> f64 {
        self.q.log_prob(&self.q_theta(theta), x, y) + self.r.log_density(&self.r_theta(theta), x, y, u)
    }

    /// `σ_θ = χ_θ + ϱ_θ`.
    pub fn score(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> DVector<f64> {
        self.embed_q(&self.q.score(&self.q_theta(theta), x, y))
            + self.embed_r(&self.r.score(&self.r_theta(theta), x, y, u))
    }

    /// `σ̇_θ = χ̇_θ + ϱ̇_θ`.
    pub fn hessian(&self, theta: &DVector<f64>, x: usize, y: usize, u: f64) -> DMatrix<f64> {
        self.embed_q_mat(&self.q.hessian(&self.q_theta(theta), x, y))
            + self.embed_r_mat(&self.r.hessian(&self.r_theta(theta), x, y, u))
    }
}
