use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::qfamily::QFamily;
use super::rfamily::{self_moments, self_moments_quadrature, RFamily};
use super::Target;
use crate::error::Result;

/// How sojourn-family expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityRoute {
    /// Closed form through the family's own [`SojournLaw`](super::SojournLaw).
    ClosedForm,
    /// Adaptive quadrature against the family's own density.
    Quadrature,
}

/// Residuals of the score identities of a family at its own law.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IdentityReport {
    /// `max_x |Q_θχ_θ(x)|` (chain part).
    pub chain_score: f64,
    /// `max_x ‖Q_θ[χχᵀ] + Q_θ[χ̇]‖_max` (chain part).
    pub chain_information: f64,
    /// `max_{x,y} |R_θϱ_θ(x, y)|` (sojourn part).
    pub sojourn_score: f64,
    /// `max_{x,y} ‖R_θ[ϱϱᵀ] + R_θ[ϱ̇]‖_max` (sojourn part).
    pub sojourn_information: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.chain_score
            .max(self.chain_information)
            .max(self.sojourn_score)
            .max(self.sojourn_information)
    }
}

fn chain_residuals(fam: &dyn QFamily, theta: &DVector<f64>) -> (f64, f64) {
    let d = fam.dim();
    let mut first = 0.0_f64;
    let mut second = 0.0_f64;
    for x in 0..fam.size() {
        let row = fam.row(theta, x);
        let mut mean = DVector::zeros(d);
        let mut info = DMatrix::zeros(d, d);
        for y in 0..fam.size() {
            let p = row.prob(y);
            if p == 0.0 {
                continue;
            }
            mean += &row.score[y] * p;
            info += (&row.score[y] * row.score[y].transpose() + &row.hessian[y]) * p;
        }
        first = first.max(mean.amax());
        second = second.max(info.amax());
    }
    (first, second)
}

fn sojourn_residuals(
    fam: &dyn RFamily,
    theta: &DVector<f64>,
    states: usize,
    route: IdentityRoute,
) -> Result<(f64, f64)> {
    let mut first = 0.0_f64;
    let mut second = 0.0_f64;
    for x in 0..states {
        for y in 0..states {
            let m = match route {
                IdentityRoute::ClosedForm => self_moments(fam, theta, x, y)?,
                IdentityRoute::Quadrature => self_moments_quadrature(fam, theta, x, y)?,
            };
            first = first.max(m.score.amax());
            second = second.max((&m.score_outer + &m.hessian).amax());
        }
    }
    Ok((first, second))
}

/// Checks `Q_θχ_θ = 0`, `Q_θ[χχᵀ] + Q_θ[χ̇] = 0` and their sojourn
/// analogues at `θ`. `states` is the number of states to scan for sojourn
/// families (chain families use their own size).
pub fn score_identity_report(
    target: &Target,
    theta: &DVector<f64>,
    states: usize,
    route: IdentityRoute,
) -> Result<IdentityReport> {
    target.domain().check(theta)?;
    let mut rep = IdentityReport::default();
    match target {
        Target::Chain(f) => {
            (rep.chain_score, rep.chain_information) = chain_residuals(f.as_ref(), theta);
        }
        Target::Sojourn(f) => {
            (rep.sojourn_score, rep.sojourn_information) =
                sojourn_residuals(f.as_ref(), theta, states, route)?;
        }
        Target::Joint(m) => {
            (rep.chain_score, rep.chain_information) =
                chain_residuals(m.q_family().as_ref(), &m.q_theta(theta));
            (rep.sojourn_score, rep.sojourn_information) =
                sojourn_residuals(m.r_family().as_ref(), &m.r_theta(theta), m.size(), route)?;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernels::{ExponentialRate, ExponentialTilt, GammaFamily, ParamBox};

    #[test]
    fn exponential_score_identity_at_two() {
        let t = Target::Sojourn(Arc::new(ExponentialRate::new()));
        let th = DVector::from_element(1, 2.0);
        let rep = score_identity_report(&t, &th, 1, IdentityRoute::ClosedForm).unwrap();
        assert_eq!(rep.sojourn_score, 0.0);
        assert!(rep.sojourn_information < 1e-15);
    }

    #[test]
    fn two_state_tilt_is_exactly_centered() {
        let base = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let t = Target::Chain(Arc::new(ExponentialTilt::new(base, vec![h], ParamBox::uniform(1, -10.0, 10.0)).unwrap()));
        for v in [-4.0, -1.0, 0.0, 0.5, 3.0] {
            let rep = score_identity_report(&t, &DVector::from_element(1, v), 2, IdentityRoute::ClosedForm).unwrap();
            assert!(rep.chain_score < 1e-12);
            assert!(rep.chain_information < 1e-12);
        }
    }

    #[test]
    fn gamma_second_identity_by_quadrature() {
        let t = Target::Sojourn(Arc::new(GammaFamily::shape_only(1.0).unwrap()));
        let th = DVector::from_element(1, 2.0);
        let rep = score_identity_report(&t, &th, 1, IdentityRoute::Quadrature).unwrap();
        assert!(rep.sojourn_score < 1e-8, "{rep:?}");
        assert!(rep.sojourn_information < 1e-8, "{rep:?}");
    }

    #[test]
    fn rejects_theta_outside_box() {
        let t = Target::Sojourn(Arc::new(ExponentialRate::new()));
        assert!(score_identity_report(&t, &DVector::from_element(1, -1.0), 1, IdentityRoute::ClosedForm).is_err());
    }
}
