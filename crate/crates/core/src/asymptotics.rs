//! Potential operator, martingale approximation, Fisher informations and
//! sandwich covariances, as exact oracles and as plug-in estimates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalMeasures;
use crate::error::{Error, Result};
use crate::kernels::{is_aperiodic, ChainKernel, CondMoments, QFamily, RFamily, SModel, SojournKernel, Target};
use crate::linalg::{self, serde_matrix, serde_vector};
use crate::measure::TripleLaw;
use crate::oracle::PopulationLaw;
use crate::simulator::{Regime, RegimeKind};

/// `G` on centred functions of the chain, through the fundamental matrix
/// `Z = (I − Q + 𝟙πᵀ)⁻¹`.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    q: DMatrix<f64>,
    pi: DVector<f64>,
    z: DMatrix<f64>,
}

impl PotentialOperator {
    /// Rejects periodic chains, for which the series defining `G` diverges.
    pub fn new(q: &DMatrix<f64>, pi: &DVector<f64>) -> Result<Self> {
        let n = q.nrows();
        if !is_aperiodic(q) {
            return Err(Error::Periodic);
        }
        let m = DMatrix::identity(n, n) - q + DMatrix::from_fn(n, n, |_, j| pi[j]);
        let z = linalg::inverse(&m).ok_or_else(|| Error::SingularMatrix("I − Q + 1πᵀ".into()))?;
        Ok(Self { q: q.clone(), pi: pi.clone(), z })
    }

    pub fn from_chain(chain: &ChainKernel) -> Result<Self> {
        Self::new(chain.matrix(), chain.stationary())
    }

    pub fn fundamental(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn size(&self) -> usize {
        self.q.nrows()
    }

    /// `diag(π) Q`.
    pub fn pair_law(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |x, y| self.pi[x] * self.q[(x, y)])
    }

    /// `Zg`: the solution `h` of `(I − Q)h = g − (πᵀg)𝟙` with `πᵀh = πᵀg`.
    /// For centred `g` this is `Σ_i Qⁱg`.
    pub fn apply(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.z * g
    }
}

/// Gordin form of `A` on a pair function:
/// `Af(x, y) = f̄(x, y) − h(x) + Gh(y) − QGh(x)` with `f̄ = f − P₂[f]` and
/// `h(x) = Σ_y Q(x, y) f̄(x, y)`. Satisfies `QAf = 0`.
pub fn a_operator(pot: &PotentialOperator, f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pot.size();
    let q = pot.transition();
    let mean = pot.pair_law().component_mul(f).sum();
    let fbar = f.map(|v| v - mean);
    let h = DVector::from_fn(n, |x, _| (0..n).map(|y| q[(x, y)] * fbar[(x, y)]).sum());
    let gh = pot.apply(&h);
    let qgh = q * &gh;
    DMatrix::from_fn(n, n, |x, y| fbar[(x, y)] - h[x] + gh[y] - qgh[x])
}

/// [`a_operator`] applied to each coordinate of a vector-valued pair function.
pub fn a_operator_vec(pot: &PotentialOperator, fs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    fs.iter().map(|f| a_operator(pot, f)).collect()
}

fn identity_checked(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let residual = (&a - &b).amax();
    if residual > 1e-8 * a.amax().max(1.0) {
        return Err(Error::IdentityViolation { residual });
    }
    Ok(linalg::symmetrize(&a))
}

/// `I_θ = −L[χ̇_θ] = L[χ_θχ_θᵀ]`; errors unless both forms agree.
pub fn fisher_q(law: &dyn TripleLaw, fam: &dyn QFamily, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    fam.domain().check(theta)?;
    let d = fam.dim();
    let (mut neg_hess, mut outer) = (DMatrix::zeros(d, d), DMatrix::zeros(d, d));
    for x in 0..law.size() {
        let row = fam.row(theta, x);
        for y in 0..law.size() {
            let w = law.pair_weight(x, y);
            if w > 0.0 {
                neg_hess -= &row.hessian[y] * w;
                outer += &row.score[y] * row.score[y].transpose() * w;
            }
        }
    }
    identity_checked(neg_hess, outer)
}

/// `J_θ = −L[ϱ̇_θ] = L[ϱ_θϱ_θᵀ]`; errors unless both forms agree.
pub fn fisher_r(law: &dyn TripleLaw, fam: &dyn RFamily, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    fam.domain().check(theta)?;
    let d = fam.dim();
    let (mut neg_hess, mut outer) = (DMatrix::zeros(d, d), DMatrix::zeros(d, d));
    for x in 0..law.size() {
        for y in 0..law.size() {
            let w = law.pair_weight(x, y);
            if w > 0.0 {
                let m = law.cell_moments(fam, theta, x, y)?;
                neg_hess -= &m.hessian * w;
                outer += &m.score_outer * w;
            }
        }
    }
    identity_checked(neg_hess, outer)
}

/// `I_θ + J_θ`, the information of Model S.
pub fn fisher_s(law: &dyn TripleLaw, model: &SModel, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    model.domain().check(theta)?;
    let i = fisher_q(law, model.q_family().as_ref(), &model.q_theta(theta))?;
    let j = fisher_r(law, model.r_family().as_ref(), &model.r_theta(theta))?;
    Ok(model.embed_q_mat(&i) + model.embed_r_mat(&j))
}

/// `Rϱ_θ(x, y)` under the true sojourn kernel, one matrix per coordinate.
pub fn conditional_score_mean(sojourn: &SojournKernel, fam: &dyn RFamily, theta: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = sojourn.size();
    let mut out = vec![DMatrix::zeros(n, n); fam.dim()];
    for x in 0..n {
        for y in 0..n {
            let m = fam.conditional_moments(theta, x, y, sojourn.law(x, y))?;
            for (k, o) in out.iter_mut().enumerate() {
                o[(x, y)] = m.score[k];
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Oracle,
    Plugin,
}

/// Bread, meat and covariance of `√n(θ̂ − K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    #[serde(with = "serde_vector")]
    pub k_star: DVector<f64>,
    #[serde(with = "serde_matrix")]
    pub bread: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub meat: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub covariance: DMatrix<f64>,
    pub regime: RegimeKind,
    pub provenance: Provenance,
    /// Factor in front of `bread⁻¹ meat bread⁻¹` (`m`, `m̂` or 1).
    pub scale: f64,
    /// Pairs whose conditional score moments were pooled (fewer than 5 sojourns).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sparse_cells: Vec<[usize; 2]>,
}

/// Per-pair sojourn moments used by the sandwich.
type CellFn<'a> = dyn Fn(&dyn RFamily, &DVector<f64>, usize, usize) -> Result<CondMoments> + 'a;

fn bread_and_meat(
    pot: &PotentialOperator,
    law: &dyn TripleLaw,
    target: &Target,
    theta: &DVector<f64>,
    cells: &CellFn<'_>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = law.size();
    let d = target.dim();
    let mut bread = DMatrix::zeros(d, d);
    let mut within = DMatrix::zeros(d, d);
    let mut f = vec![DMatrix::zeros(n, n); d];
    let q_rows = |fam: &dyn QFamily, th: &DVector<f64>| fam.rows(th);
    let chain_rows = match target {
        Target::Chain(fam) => Some(q_rows(fam.as_ref(), theta)),
        Target::Joint(m) => Some(q_rows(m.q_family().as_ref(), &m.q_theta(theta))),
        Target::Sojourn(_) => None,
    };
    for x in 0..n {
        for y in 0..n {
            let w = law.pair_weight(x, y);
            if w == 0.0 {
                continue;
            }
            let (score, hess, cov) = match target {
                Target::Chain(_) => {
                    let row = &chain_rows.as_ref().expect("chain rows")[x];
                    (row.score[y].clone(), row.hessian[y].clone(), None)
                }
                Target::Sojourn(fam) => {
                    let m = cells(fam.as_ref(), theta, x, y)?;
                    let cov = m.score_cov();
                    (m.score, m.hessian, Some(cov))
                }
                Target::Joint(model) => {
                    let row = &chain_rows.as_ref().expect("chain rows")[x];
                    let m = cells(model.r_family().as_ref(), &model.r_theta(theta), x, y)?;
                    (
                        model.embed_q(&row.score[y]) + model.embed_r(&m.score),
                        model.embed_q_mat(&row.hessian[y]) + model.embed_r_mat(&m.hessian),
                        Some(model.embed_r_mat(&m.score_cov())),
                    )
                }
            };
            bread += hess * w;
            if let Some(c) = cov {
                within += c * w;
            }
            for k in 0..d {
                f[k][(x, y)] = score[k];
            }
        }
    }
    let af = a_operator_vec(pot, &f);
    let mut meat = within;
    for x in 0..n {
        for y in 0..n {
            let w = law.pair_weight(x, y);
            if w == 0.0 {
                continue;
            }
            let v = DVector::from_fn(d, |k, _| af[k][(x, y)]);
            meat += &v * v.transpose() * w;
        }
    }
    Ok((linalg::symmetrize(&bread), linalg::symmetrize(&meat)))
}

fn assemble(
    k_star: &DVector<f64>,
    bread: DMatrix<f64>,
    meat: DMatrix<f64>,
    regime: RegimeKind,
    provenance: Provenance,
    scale: f64,
    sparse_cells: Vec<[usize; 2]>,
) -> Result<SandwichReport> {
    let inv = linalg::inverse(&bread).ok_or(Error::SingularBread)?;
    let covariance = linalg::symmetrize(&(&inv * &meat * &inv * scale));
    Ok(SandwichReport { k_star: k_star.clone(), bread, meat, covariance, regime, provenance, scale, sparse_cells })
}

/// Exact sandwich at the KL projection `k_star`. The covariance carries the
/// factor `m` in the horizon regime and 1 in the count regime.
pub fn sandwich_oracle(law: &PopulationLaw, target: &Target, k_star: &DVector<f64>, regime: RegimeKind) -> Result<SandwichReport> {
    target.domain().check(k_star)?;
    let pot = PotentialOperator::from_chain(law.chain())?;
    let cells = |fam: &dyn RFamily, th: &DVector<f64>, x: usize, y: usize| law.cell_moments(fam, th, x, y);
    let (bread, meat) = bread_and_meat(&pot, law, target, k_star, &cells)?;
    let scale = match regime {
        RegimeKind::Horizon => law.m(),
        RegimeKind::Count => 1.0,
    };
    assemble(k_star, bread, meat, regime, Provenance::Oracle, scale, Vec::new())
}

/// Cells with fewer sojourns than this borrow pooled score moments.
pub const MIN_CELL_COUNT: u64 = 5;

/// Plug-in sandwich from one path: `Q̂` from pair counts, `π̂` from `Q̂`,
/// empirical conditional score moments per pair, `m̂` in the horizon regime.
pub fn sandwich_plugin(emp: &EmpiricalMeasures, target: &Target, theta_hat: &DVector<f64>) -> Result<SandwichReport> {
    target.domain().check(theta_hat)?;
    if let Some(state) = emp.visited().iter().position(|v| !v) {
        return Err(Error::UnvisitedState { state });
    }
    let chain = ChainKernel::new(emp.transition_estimate())?;
    let pot = PotentialOperator::from_chain(&chain)?;
    let n = emp.size();
    let sparse: Vec<[usize; 2]> = (0..n)
        .flat_map(|x| (0..n).map(move |y| [x, y]))
        .filter(|&[x, y]| emp.count(x, y) > 0 && emp.count(x, y) < MIN_CELL_COUNT)
        .collect();
    let pooled = |fam: &dyn RFamily, th: &DVector<f64>| -> Result<CondMoments> {
        let d = fam.dim();
        let mut acc = CondMoments {
            log_density: 0.0,
            score: DVector::zeros(d),
            score_outer: DMatrix::zeros(d, d),
            hessian: DMatrix::zeros(d, d),
        };
        for x in 0..n {
            for y in 0..n {
                let w = emp.pair_weight(x, y);
                if w > 0.0 {
                    let m = emp.cell_moments(fam, th, x, y)?;
                    acc.score += m.score * w;
                    acc.score_outer += m.score_outer * w;
                }
            }
        }
        Ok(acc)
    };
    let cells = |fam: &dyn RFamily, th: &DVector<f64>, x: usize, y: usize| -> Result<CondMoments> {
        let mut m = emp.cell_moments(fam, th, x, y)?;
        if sparse.contains(&[x, y]) {
            let p = pooled(fam, th)?;
            m.score = p.score;
            m.score_outer = p.score_outer;
        }
        Ok(m)
    };
    let (bread, meat) = bread_and_meat(&pot, emp, target, theta_hat, &cells)?;
    let regime = emp.regime().kind();
    let scale = match emp.regime() {
        Regime::Horizon { .. } => emp.mhat(),
        Regime::Count { .. } => 1.0,
    };
    assemble(theta_hat, bread, meat, regime, Provenance::Plugin, scale, sparse)
}

/// Pieces of the martingale CLT variance of `Σ_{j≤N} (f − P₃[f])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleLimit {
    /// `P₂[(ARf)²]`.
    pub chain_part: f64,
    /// `P₃[(f − Rf)²]`.
    pub sojourn_part: f64,
    pub m: f64,
    /// `m⁻¹(chain_part + sojourn_part)`, the limit of `n⁻¹ Var` in the horizon regime.
    pub horizon_variance: f64,
    /// `chain_part + sojourn_part`, the count-regime limit.
    pub count_variance: f64,
}

/// Exact limiting variance of `n^{−1/2} Σ_{j≤N} (f − P₃[f])`.
pub fn martingale_variance<F>(law: &PopulationLaw, f: F) -> Result<MartingaleLimit>
where
    F: Fn(usize, usize, f64) -> f64,
{
    let pot = PotentialOperator::from_chain(law.chain())?;
    let n = law.chain().size();
    let mut rf = DMatrix::zeros(n, n);
    let mut cond_var = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let v = law.sojourn().law(x, y).expect_vec(|u| {
                let a = f(x, y, u);
                vec![a, a * a]
            }, 2)?;
            rf[(x, y)] = v[0];
            cond_var[(x, y)] = (v[1] - v[0] * v[0]).max(0.0);
        }
    }
    let arf = a_operator(&pot, &rf);
    let p2 = law.p2();
    let chain_part = p2.component_mul(&arf.map(|v| v * v)).sum();
    let sojourn_part = p2.component_mul(&cond_var).sum();
    let total = chain_part + sojourn_part;
    Ok(MartingaleLimit { chain_part, sojourn_part, m: law.m(), horizon_variance: total / law.m(), count_variance: total })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernels::{ExponentialRate, Saturated, SojournLaw};

    fn chain() -> ChainKernel {
        ChainKernel::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn fundamental_matrix_rows_sum_to_one() {
        let pot = PotentialOperator::from_chain(&ChainKernel::random(4, 42).unwrap()).unwrap();
        let ones = pot.fundamental() * DVector::from_element(4, 1.0);
        assert!((ones - DVector::from_element(4, 1.0)).amax() < 1e-10);
    }

    #[test]
    fn equal_rows_give_identity_on_centred() {
        let pi = DVector::from_vec(vec![0.2, 0.5, 0.3]);
        let q = DMatrix::from_fn(3, 3, |_, j| pi[j]);
        let pot = PotentialOperator::new(&q, &pi).unwrap();
        let g = DVector::from_vec(vec![1.0, -0.2, 0.4]);
        let g = &g - DVector::from_element(3, pi.dot(&g));
        assert!((pot.apply(&g) - &g).amax() < 1e-14);
        // f depending only on y: Af = f(y) − P₁[f]
        let f = DMatrix::from_fn(3, 3, |_, y| [2.0, 0.0, 1.0][y]);
        let af = a_operator(&pot, &f);
        let p1f = 0.2 * 2.0 + 0.3;
        for x in 0..3 {
            for y in 0..3 {
                assert!((af[(x, y)] - (f[(x, y)] - p1f)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flip_chain_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let pi = DVector::from_vec(vec![0.5, 0.5]);
        assert!(matches!(PotentialOperator::new(&q, &pi), Err(Error::Periodic)));
    }

    #[test]
    fn constant_f_is_annihilated() {
        let pot = PotentialOperator::from_chain(&chain()).unwrap();
        assert!(a_operator(&pot, &DMatrix::from_element(2, 2, 3.5)).amax() < 1e-15);
    }

    #[test]
    fn saturated_binomial_information() {
        let law = PopulationLaw::new(chain(), SojournKernel::point_mass(2)).unwrap();
        let fam = Saturated::new(2).unwrap();
        let th = fam.theta_for(chain().matrix());
        let i = fisher_q(&law, &fam, &th).unwrap();
        let pi = chain().stationary().clone();
        assert!((i[(0, 0)] - pi[0] * 0.7 * 0.3).abs() < 1e-14);
        assert!((i[(1, 1)] - pi[1] * 0.4 * 0.6).abs() < 1e-14);
        assert!(i[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn exponential_information_and_score_mean() {
        let r = SojournKernel::uniform(2, SojournLaw::Exponential { rate: 2.0 }).unwrap();
        let law = PopulationLaw::new(chain(), r).unwrap();
        let j = fisher_r(&law, &ExponentialRate::new(), &DVector::from_element(1, 2.0)).unwrap();
        assert!((j[(0, 0)] - 0.25).abs() < 1e-14);
        let g = SojournKernel::uniform(2, SojournLaw::Gamma { shape: 2.0, rate: 3.0 }).unwrap();
        let rs = conditional_score_mean(&g, &ExponentialRate::new(), &DVector::from_element(1, 1.2)).unwrap();
        assert!((rs[0][(1, 0)] - (1.0 / 1.2 - 2.0 / 3.0)).abs() < 1e-15);
        let gl = PopulationLaw::new(chain(), g).unwrap();
        assert!(matches!(
            fisher_r(&gl, &ExponentialRate::new(), &DVector::from_element(1, 1.5)),
            Err(Error::IdentityViolation { .. })
        ));
    }

    #[test]
    fn delta_method_for_exponential_on_gamma() {
        let g = SojournKernel::uniform(2, SojournLaw::Gamma { shape: 2.0, rate: 3.0 }).unwrap();
        let law = PopulationLaw::new(chain(), g).unwrap();
        let t = Target::Sojourn(Arc::new(ExponentialRate::new()));
        let rep = sandwich_oracle(&law, &t, &DVector::from_element(1, 1.5), RegimeKind::Count).unwrap();
        assert!((rep.covariance[(0, 0)] - 1.125).abs() < 1e-12);
        let rep = sandwich_oracle(&law, &t, &DVector::from_element(1, 1.5), RegimeKind::Horizon).unwrap();
        assert!((rep.covariance[(0, 0)] - 1.125 * 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn martingale_limit_of_constant_is_zero() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let law = PopulationLaw::new(chain(), r).unwrap();
        let lim = martingale_variance(&law, |_, _, _| 4.0).unwrap();
        assert!(lim.horizon_variance.abs() < 1e-14);
    }
}
