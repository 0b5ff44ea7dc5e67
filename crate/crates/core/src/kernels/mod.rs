//! True kernels (`Q`, `R`) and the parametric families fitted to them.
//!
//! States are labelled `0..size`. Chain densities are with respect to
//! counting measure; sojourn densities with respect to Lebesgue measure on
//! `(0, ∞)` (the point-mass law lives on `{1}`).

mod chain;
mod domain;
mod identities;
mod qfamily;
mod rfamily;
mod smodel;
mod sojourn;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use chain::{closed_classes, is_aperiodic, stationary_distribution, ChainKernel};
pub use domain::ParamBox;
pub use identities::{score_identity_report, IdentityReport, IdentityRoute};
pub use qfamily::{ExponentialTilt, QFamily, RowEval, Saturated};
pub use rfamily::{
    quadrature_moments, self_moments, self_moments_quadrature, AffineForm, CondMoments,
    ExponentialByOrigin, ExponentialRate, GammaFamily, RFamily, SojournSummary,
};
pub use smodel::{Layout, SModel};
pub use sojourn::{open_unit, FeatureMoments, SojournKernel, SojournLaw};

/// Which conditional model an estimate or oracle refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    Q,
    R,
    S,
    #[serde(rename = "marginal2")]
    Marginal2,
}

/// A fitted model: chain family (Model Q), sojourn family (Model R) or both
/// (Model S).
#[derive(Debug, Clone)]
pub enum Target {
    Chain(Arc<dyn QFamily>),
    Sojourn(Arc<dyn RFamily>),
    Joint(SModel),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Chain(f) => f.dim(),
            Target::Sojourn(f) => f.dim(),
            Target::Joint(m) => m.dim(),
        }
    }

    pub fn domain(&self) -> &ParamBox {
        match self {
            Target::Chain(f) => f.domain(),
            Target::Sojourn(f) => f.domain(),
            Target::Joint(m) => m.domain(),
        }
    }

    pub fn tag(&self) -> ModelTag {
        match self {
            Target::Chain(_) => ModelTag::Q,
            Target::Sojourn(_) => ModelTag::R,
            Target::Joint(_) => ModelTag::S,
        }
    }
}
