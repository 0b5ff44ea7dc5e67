//! TOML run configuration.
//!
//! ```toml
//! schema_version = 1
//!
//! [kernels]
//! q = [[0.7, 0.3], [0.4, 0.6]]
//! sojourn = { kind = "uniform", law = { kind = "gamma", shape = 2.0, rate = 3.0 } }
//!
//! [family]
//! kind = "exponential_rate"
//!
//! [scenario]
//! regime = { kind = "count", n = 20000 }
//! seed = 7
//! replications = 1000
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::asymptotics::Provenance;
use crate::error::{Error, Result};
use crate::kernels::{
    ChainKernel, ExponentialByOrigin, ExponentialRate, ExponentialTilt, GammaFamily, ParamBox, QFamily, RFamily,
    SModel, Saturated, SojournKernel, SojournLaw, Target,
};
use crate::linalg::rows_to_mat;
use crate::simulator::{Initial, Regime};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub kernels: Option<KernelsSpec>,
    pub family: Option<FamilySpec>,
    pub scenario: Option<ScenarioSpec>,
    pub data: Option<DataSpec>,
    pub sandwich: Option<SandwichSpec>,
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsSpec {
    /// Row-major transition matrix.
    pub q: Vec<Vec<f64>>,
    pub sojourn: SojournSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SojournSpec {
    Uniform { law: SojournLaw },
    ByOrigin { laws: Vec<SojournLaw> },
    ByPair { laws: Vec<Vec<SojournLaw>> },
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutSpec {
    Shared,
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    ExponentialRate {
        lower: Option<f64>,
        upper: Option<f64>,
    },
    ExponentialByOrigin {
        size: usize,
    },
    /// Gamma with the given parameters held fixed.
    Gamma {
        shape: Option<f64>,
        rate: Option<f64>,
    },
    Tilt {
        base: Vec<Vec<f64>>,
        stats: Vec<Vec<Vec<f64>>>,
        lower: Option<Vec<f64>>,
        upper: Option<Vec<f64>>,
    },
    Saturated {
        size: usize,
    },
    Joint {
        chain: Box<FamilySpec>,
        sojourn: Box<FamilySpec>,
        layout: LayoutSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub regime: Regime,
    pub seed: u64,
    pub replications: Option<usize>,
    #[serde(default)]
    pub initial: Initial,
}

/// An observed path stored as CSV (`j,x,t,u`), relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub path: PathBuf,
    pub regime: Regime,
    /// Number of states; defaults to the kernels' size or the largest observed state + 1.
    pub size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichSpec {
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: Option<PathBuf>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    rows_to_mat(rows).ok_or_else(|| Error::ConfigInvalid(format!("{what}: rows have unequal lengths")))
}

impl KernelsSpec {
    pub fn chain(&self) -> Result<ChainKernel> {
        ChainKernel::new(matrix(&self.q, "kernels.q")?)
    }

    pub fn sojourn_kernel(&self) -> Result<SojournKernel> {
        let n = self.q.len();
        let k = match &self.sojourn {
            SojournSpec::Uniform { law } => SojournKernel::uniform(n, *law)?,
            SojournSpec::ByOrigin { laws } => SojournKernel::by_origin(laws.clone())?,
            SojournSpec::ByPair { laws } => SojournKernel::by_pair(laws.clone())?,
            SojournSpec::PointMass => SojournKernel::point_mass(n),
        };
        if k.size() != n {
            return Err(Error::ConfigInvalid(format!("kernels.sojourn has {} states, kernels.q has {n}", k.size())));
        }
        Ok(k)
    }
}

impl FamilySpec {
    fn q_family(&self) -> Result<Arc<dyn QFamily>> {
        match self {
            FamilySpec::Tilt { base, stats, lower, upper } => {
                let base = matrix(base, "family.base")?;
                let stats = stats.iter().map(|s| matrix(s, "family.stats")).collect::<Result<Vec<_>>>()?;
                let d = stats.len();
                let domain = ParamBox::new(
                    lower.clone().unwrap_or_else(|| vec![-10.0; d]),
                    upper.clone().unwrap_or_else(|| vec![10.0; d]),
                )?;
                Ok(Arc::new(ExponentialTilt::new(base, stats, domain)?))
            }
            FamilySpec::Saturated { size } => Ok(Arc::new(Saturated::new(*size)?)),
            other => Err(Error::ConfigInvalid(format!("{} is not a chain family", other.kind()))),
        }
    }

    fn r_family(&self) -> Result<Arc<dyn RFamily>> {
        match self {
            FamilySpec::ExponentialRate { lower, upper } => {
                let domain = ParamBox::new(vec![lower.unwrap_or(1e-6)], vec![upper.unwrap_or(1e6)])?;
                Ok(Arc::new(ExponentialRate::with_domain(domain)?))
            }
            FamilySpec::ExponentialByOrigin { size } => Ok(Arc::new(ExponentialByOrigin::new(*size))),
            FamilySpec::Gamma { shape, rate } => Ok(Arc::new(GammaFamily::new(*shape, *rate)?)),
            other => Err(Error::ConfigInvalid(format!("{} is not a sojourn family", other.kind()))),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            FamilySpec::ExponentialRate { .. } => "exponential_rate",
            FamilySpec::ExponentialByOrigin { .. } => "exponential_by_origin",
            FamilySpec::Gamma { .. } => "gamma",
            FamilySpec::Tilt { .. } => "tilt",
            FamilySpec::Saturated { .. } => "saturated",
            FamilySpec::Joint { .. } => "joint",
        }
    }

    pub fn build(&self) -> Result<Target> {
        match self {
            FamilySpec::Tilt { .. } | FamilySpec::Saturated { .. } => Ok(Target::Chain(self.q_family()?)),
            FamilySpec::Joint { chain, sojourn, layout } => {
                let (q, r) = (chain.q_family()?, sojourn.r_family()?);
                Ok(Target::Joint(match layout {
                    LayoutSpec::Shared => SModel::shared(q, r)?,
                    LayoutSpec::Disjoint => SModel::disjoint(q, r),
                }))
            }
            _ => Ok(Target::Sojourn(self.r_family()?)),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "schema_version = {} (supported: {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads and validates a config; relative data paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = cfg.data.as_mut() {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn kernels(&self) -> Result<&KernelsSpec> {
        self.kernels.as_ref().ok_or_else(|| missing("kernels"))
    }

    pub fn family(&self) -> Result<&FamilySpec> {
        self.family.as_ref().ok_or_else(|| missing("family"))
    }

    pub fn scenario(&self) -> Result<&ScenarioSpec> {
        self.scenario.as_ref().ok_or_else(|| missing("scenario"))
    }
}

fn missing(section: &str) -> Error {
    Error::ConfigInvalid(format!("missing section [{section}]"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
schema_version = 1

[kernels]
q = [[0.7, 0.3], [0.4, 0.6]]
sojourn = { kind = "uniform", law = { kind = "gamma", shape = 2.0, rate = 3.0 } }

[family]
kind = "joint"
layout = "disjoint"
chain = { kind = "saturated", size = 2 }
sojourn = { kind = "gamma", rate = 3.0 }

[scenario]
regime = { kind = "horizon", n = 100.0 }
seed = 7
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_toml(EXAMPLE).unwrap();
        let t = cfg.family().unwrap().build().unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(cfg.kernels().unwrap().sojourn_kernel().unwrap().conditional_mean(1, 1), 2.0 / 3.0);
        assert_eq!(cfg.scenario().unwrap().regime, Regime::Horizon { n: 100.0 });
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        let bad = EXAMPLE.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::ConfigInvalid(m)) if m.contains("colour")));
        let bad = EXAMPLE.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn wrong_family_role() {
        let spec = FamilySpec::Joint {
            chain: Box::new(FamilySpec::ExponentialRate { lower: None, upper: None }),
            sojourn: Box::new(FamilySpec::ExponentialRate { lower: None, upper: None }),
            layout: LayoutSpec::Shared,
        };
        assert!(matches!(spec.build(), Err(Error::ConfigInvalid(_))));
    }
}
