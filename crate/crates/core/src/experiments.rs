//! Monte Carlo harness for the asymptotic claims: consistency, sandwich
//! covariances, normality, local asymptotic normality, the martingale CLT
//! and the marginal-versus-conditional estimator comparison.
//!
//! Replication `i` uses seed `base ^ i`, and results are reduced in index
//! order with pairwise sums, so reports do not depend on scheduling.
//! `SMKL_THREADS` caps the number of worker threads.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{martingale_variance, sandwich_oracle, sandwich_plugin, MartingaleLimit, SandwichReport};
use crate::empirical::EmpiricalMeasures;
use crate::error::{Error, Result};
use crate::estimators::{fit, fit_marginal_pair, fit_q};
use crate::kernels::{ChainKernel, ModelTag, QFamily, SojournKernel, Target};
use crate::linalg::{self, pairwise_sum, serde_matrix, serde_vector};
use crate::oracle::{kl_projection, PopulationLaw};
use crate::simulator::{replication_seed, simulate, Regime, SimConfig};

/// Worker threads requested through `SMKL_THREADS`, if any.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SMKL_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

/// True kernels, fitted target, observation scheme and replication plan.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub q: ChainKernel,
    pub r: SojournKernel,
    pub target: Target,
    pub regime: Regime,
    pub replications: usize,
    pub base_seed: u64,
}

impl Scenario {
    pub fn law(&self) -> Result<PopulationLaw> {
        PopulationLaw::new(self.q.clone(), self.r.clone())
    }

    fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::ConfigInvalid(format!("replications = {} (need at least 2)", self.replications)));
        }
        Ok(())
    }
}

/// Per-coordinate shape statistics of the scaled errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normality {
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// `√(6/M)`.
    pub skewness_se: f64,
    /// `√(24/M)`.
    pub kurtosis_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub model_tag: ModelTag,
    pub regime: Regime,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(with = "serde_vector")]
    pub k_star: DVector<f64>,
    /// Mean of `√n(θ̂ − K)`.
    #[serde(with = "serde_vector")]
    pub mean_scaled_error: DVector<f64>,
    /// Monte Carlo standard errors of `mean_scaled_error`.
    #[serde(with = "serde_vector")]
    pub mean_scaled_error_se: DVector<f64>,
    #[serde(with = "serde_matrix")]
    pub empirical_cov: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub predicted_cov: DMatrix<f64>,
    /// `‖empirical − predicted‖_F / ‖predicted‖_F`.
    pub cov_rel_error: f64,
    pub normality: Normality,
    pub failures: usize,
    pub mean_n_obs: f64,
}

/// One replication, as written to the flat CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    pub theta_hat: Option<DVector<f64>>,
    pub n_obs: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub report: MCReport,
    pub sandwich: SandwichReport,
    pub records: Vec<ReplicationRecord>,
}

impl MonteCarlo {
    /// One row per replication: `seed, theta_0.., n_obs, converged`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.report.k_star.len();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["seed".to_string()];
        header.extend((0..d).map(|k| format!("theta_{k}")));
        header.extend(["n_obs".to_string(), "converged".to_string()]);
        wr.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.seed.to_string()];
            match &r.theta_hat {
                Some(t) => row.extend(t.iter().map(|v| format!("{v:.17e}"))),
                None => row.extend((0..d).map(|_| String::new())),
            }
            row.push(r.n_obs.to_string());
            row.push(r.converged.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Sample moments of a set of vectors, reduced with pairwise sums.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
}

pub fn summarize(rows: &[DVector<f64>]) -> SampleSummary {
    let m = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    let mf = m as f64;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let mean = DVector::from_fn(d, |k, _| pairwise_sum(&col(k)) / mf);
    let centred: Vec<Vec<f64>> = (0..d).map(|k| col(k).iter().map(|v| v - mean[k]).collect()).collect();
    let cov = DMatrix::from_fn(d, d, |a, b| {
        let prods: Vec<f64> = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).collect();
        pairwise_sum(&prods) / (mf - 1.0)
    });
    let moment = |k: usize, p: i32| pairwise_sum(&centred[k].iter().map(|v| v.powi(p)).collect::<Vec<_>>()) / mf;
    let skewness = (0..d).map(|k| moment(k, 3) / moment(k, 2).powf(1.5)).collect();
    let excess_kurtosis = (0..d).map(|k| moment(k, 4) / moment(k, 2).powi(2) - 3.0).collect();
    SampleSummary { mean, cov: linalg::symmetrize(&cov), skewness, excess_kurtosis }
}

fn simulate_emp(q: &ChainKernel, r: &SojournKernel, regime: Regime, seed: u64) -> Result<EmpiricalMeasures> {
    let cfg = SimConfig { regime, seed, initial: Default::default() };
    EmpiricalMeasures::build(&simulate(q, r, &cfg)?, q.size())
}

/// Runs the replications of `s` and compares the scaled errors with the
/// oracle sandwich at the KL projection.
pub fn run_mc(s: &Scenario) -> Result<MonteCarlo> {
    s.validate()?;
    let law = s.law()?;
    let oracle_err = |e: Error| Error::OracleFailure(e.to_string());
    let kl = kl_projection(&law, &s.target).map_err(oracle_err)?;
    let sandwich = sandwich_oracle(&law, &s.target, &kl.k_star, s.regime.kind()).map_err(oracle_err)?;
    let records = par_map(s.replications, |i| {
        let seed = replication_seed(s.base_seed, i as u64);
        let outcome = simulate_emp(&s.q, &s.r, s.regime, seed)
            .and_then(|emp| fit(&emp, &s.target, None).map(|rep| (rep, emp.n_obs())));
        match outcome {
            Ok((rep, n_obs)) => ReplicationRecord { index: i, seed, theta_hat: Some(rep.theta_hat), n_obs, converged: true },
            Err(_) => ReplicationRecord { index: i, seed, theta_hat: None, n_obs: 0, converged: false },
        }
    });
    let failures = records.iter().filter(|r| !r.converged).count();
    if failures * 100 > s.replications {
        return Err(Error::ExcessiveFailures { failures, replications: s.replications });
    }
    let root_n = s.regime.scale().sqrt();
    let scaled: Vec<DVector<f64>> = records
        .iter()
        .filter_map(|r| r.theta_hat.as_ref().map(|t| (t - &kl.k_star) * root_n))
        .collect();
    let ok = scaled.len();
    let sum = summarize(&scaled);
    let n_obs: Vec<f64> = records.iter().filter(|r| r.converged).map(|r| r.n_obs as f64).collect();
    let report = MCReport {
        model_tag: s.target.tag(),
        regime: s.regime,
        replications: s.replications,
        base_seed: s.base_seed,
        k_star: kl.k_star.clone(),
        mean_scaled_error_se: DVector::from_fn(sum.mean.len(), |k, _| (sum.cov[(k, k)] / ok as f64).sqrt()),
        mean_scaled_error: sum.mean,
        cov_rel_error: linalg::frobenius_rel_error(&sum.cov, &sandwich.covariance),
        empirical_cov: sum.cov,
        predicted_cov: sandwich.covariance.clone(),
        normality: Normality {
            skewness: sum.skewness,
            excess_kurtosis: sum.excess_kurtosis,
            skewness_se: (6.0 / ok as f64).sqrt(),
            kurtosis_se: (24.0 / ok as f64).sqrt(),
        },
        failures,
        mean_n_obs: pairwise_sum(&n_obs) / n_obs.len() as f64,
    };
    Ok(MonteCarlo { report, sandwich, records })
}

/// Oracle sandwich against the plug-in sandwich from one long path.
#[derive(Debug, Clone, Serialize)]
pub struct PluginComparison {
    pub oracle: SandwichReport,
    pub plugin: SandwichReport,
    pub rel_error: f64,
    pub n_obs: usize,
}

/// Fits one path of `path_regime` and compares the plug-in sandwich with the oracle.
pub fn plugin_consistency(s: &Scenario, path_regime: Regime, seed: u64) -> Result<PluginComparison> {
    let law = s.law()?;
    let kl = kl_projection(&law, &s.target)?;
    let oracle = sandwich_oracle(&law, &s.target, &kl.k_star, path_regime.kind())?;
    let emp = simulate_emp(&s.q, &s.r, path_regime, seed)?;
    let est = fit(&emp, &s.target, None)?;
    let plugin = sandwich_plugin(&emp, &s.target, &est.theta_hat)?;
    let rel_error = linalg::frobenius_rel_error(&plugin.covariance, &oracle.covariance);
    Ok(PluginComparison { oracle, plugin, rel_error, n_obs: emp.n_obs() })
}

/// Triple function `(x, y, u) ↦ value`.
pub type TripleFn = Arc<dyn Fn(usize, usize, f64) -> f64 + Send + Sync>;

/// Local perturbation direction `(v, w)` with `Qv = 0` and `Rw = 0`.
#[derive(Clone)]
pub struct PerturbationDirection {
    v: DMatrix<f64>,
    w_raw: Option<TripleFn>,
    w_mean: DMatrix<f64>,
}

impl fmt::Debug for PerturbationDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationDirection")
            .field("v", &self.v)
            .field("w", &self.w_raw.as_ref().map(|_| "<fn>"))
            .field("w_mean", &self.w_mean)
            .finish()
    }
}

impl PerturbationDirection {
    pub fn zero(size: usize) -> Self {
        Self { v: DMatrix::zeros(size, size), w_raw: None, w_mean: DMatrix::zeros(size, size) }
    }

    /// `v = g − Qg` rowwise.
    pub fn with_pair(mut self, chain: &ChainKernel, g: &DMatrix<f64>) -> Self {
        let q = chain.matrix();
        let n = chain.size();
        let qg = DVector::from_fn(n, |x, _| (0..n).map(|y| q[(x, y)] * g[(x, y)]).sum::<f64>());
        self.v = DMatrix::from_fn(n, n, |x, y| g[(x, y)] - qg[x]);
        self
    }

    /// `w = g − E_R[g | x, y]`.
    pub fn with_triple(mut self, sojourn: &SojournKernel, g: TripleFn) -> Result<Self> {
        let n = sojourn.size();
        let mut mean = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                mean[(x, y)] = sojourn.law(x, y).expect(|u| g(x, y, u))?;
            }
        }
        self.w_mean = mean;
        self.w_raw = Some(g);
        Ok(self)
    }

    pub fn v(&self, x: usize, y: usize) -> f64 {
        self.v[(x, y)]
    }

    pub fn w(&self, x: usize, y: usize, u: f64) -> f64 {
        match &self.w_raw {
            Some(g) => g(x, y, u) - self.w_mean[(x, y)],
            None => 0.0,
        }
    }

    /// `max_x |Σ_y Q(x, y) v(x, y)|` and `max_{x,y} |E_R[w | x, y]|`.
    pub fn centering_residuals(&self, chain: &ChainKernel, sojourn: &SojournKernel) -> Result<(f64, f64)> {
        let n = chain.size();
        let q = chain.matrix();
        let mut rv = 0.0_f64;
        let mut rw = 0.0_f64;
        for x in 0..n {
            rv = rv.max((0..n).map(|y| q[(x, y)] * self.v[(x, y)]).sum::<f64>().abs());
            for y in 0..n {
                rw = rw.max(sojourn.law(x, y).expect(|u| self.w(x, y, u))?.abs());
            }
        }
        Ok((rv, rw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanReport {
    pub horizon: f64,
    pub replications: usize,
    pub m: f64,
    /// `P₂[v²]`.
    pub p2_v2: f64,
    /// `P₃[w²]`.
    pub p3_w2: f64,
    pub mean_log_ratio: f64,
    pub var_log_ratio: f64,
    /// `−½ m⁻¹(P₂[v²] + P₃[w²])`.
    pub predicted_mean: f64,
    /// `m⁻¹(P₂[v²] + P₃[w²])`.
    pub predicted_variance: f64,
    pub mean_rel_error: f64,
    pub var_rel_error: f64,
    /// Largest row-mass change caused by clipping the perturbed chain.
    pub mass_change: f64,
}

/// Relative error, or absolute error when the reference is zero.
fn rel_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Log-likelihood ratio of `(Q_n, R_n)` against `(Q, R)` over `[0, n]`,
/// with `Q_n ∝ Q(1 + n^{−1/2}v)` and `dR_n/dR ∝ exp(n^{−1/2}w)`.
pub fn lan_diagnostic(
    q: &ChainKernel,
    r: &SojournKernel,
    dir: &PerturbationDirection,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<LanReport> {
    let n = q.size();
    let eps = horizon.powf(-0.5);
    let qm = q.matrix();
    let mut log_q = DMatrix::zeros(n, n);
    let mut mass_change = 0.0_f64;
    for x in 0..n {
        let raw: Vec<f64> = (0..n).map(|y| qm[(x, y)] * (1.0 + eps * dir.v(x, y))).collect();
        let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        mass_change = mass_change.max((total - 1.0).abs());
        for y in 0..n {
            if qm[(x, y)] > 0.0 {
                log_q[(x, y)] = (clipped[y] / total / qm[(x, y)]).ln();
            }
        }
    }
    if mass_change > 1e-3 {
        return Err(Error::PerturbationInvalid { mass_change });
    }
    let mut log_norm = DMatrix::zeros(n, n);
    let mut w2 = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let law = r.law(x, y);
            let v = law.expect_vec(|u| {
                let w = dir.w(x, y, u);
                vec![(eps * w).exp(), w * w]
            }, 2)?;
            log_norm[(x, y)] = v[0].ln();
            w2[(x, y)] = v[1];
        }
    }
    let law = PopulationLaw::new(q.clone(), r.clone())?;
    let p2 = law.p2();
    let p2_v2 = p2.component_mul(&dir.v.map(|v| v * v)).sum();
    let p3_w2 = p2.component_mul(&w2).sum();
    let sigma2 = (p2_v2 + p3_w2) / law.m();
    let ratios: Vec<Result<f64>> = par_map(replications, |i| {
        let cfg = SimConfig::horizon(horizon, replication_seed(seed, i as u64));
        let path = simulate(q, r, &cfg)?;
        let terms: Vec<f64> = path
            .transitions()
            .map(|(x, y, u)| {
                let lw = if dir.w_raw.is_some() { eps * dir.w(x, y, u) - log_norm[(x, y)] } else { 0.0 };
                log_q[(x, y)] + lw
            })
            .collect();
        Ok(pairwise_sum(&terms))
    });
    let ratios: Vec<DVector<f64>> = ratios.into_iter().map(|r| r.map(|v| DVector::from_element(1, v))).collect::<Result<_>>()?;
    let sum = summarize(&ratios);
    let (mean, var) = (sum.mean[0], sum.cov[(0, 0)]);
    Ok(LanReport {
        horizon,
        replications,
        m: law.m(),
        p2_v2,
        p3_w2,
        mean_log_ratio: mean,
        var_log_ratio: var,
        predicted_mean: -0.5 * sigma2,
        predicted_variance: sigma2,
        mean_rel_error: rel_error(mean, -0.5 * sigma2),
        var_rel_error: rel_error(var, sigma2),
        mass_change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub horizon: f64,
    pub replications: usize,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub predicted_variance: f64,
    pub rel_error: f64,
    pub limit: MartingaleLimit,
}

/// Variance of `n^{−1/2} Σ_{j≤N} (f − P₃[f])` over replications against
/// `m⁻¹(P₂[(ARf)²] + P₃[(f − Rf)²])`.
pub fn martingale_clt_check(
    q: &ChainKernel,
    r: &SojournKernel,
    f: TripleFn,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    let law = PopulationLaw::new(q.clone(), r.clone())?;
    let limit = martingale_variance(&law, |x, y, u| f(x, y, u))?;
    let n = q.size();
    let mut p3f = 0.0;
    for x in 0..n {
        for y in 0..n {
            p3f += law.p2()[(x, y)] * r.law(x, y).expect(|u| f(x, y, u))?;
        }
    }
    let scale = horizon.powf(-0.5);
    let sums: Vec<Result<f64>> = par_map(replications, |i| {
        let path = simulate(q, r, &SimConfig::horizon(horizon, replication_seed(seed, i as u64)))?;
        let terms: Vec<f64> = path.transitions().map(|(x, y, u)| f(x, y, u) - p3f).collect();
        Ok(scale * pairwise_sum(&terms))
    });
    let rows: Vec<DVector<f64>> = sums.into_iter().map(|s| s.map(|v| DVector::from_element(1, v))).collect::<Result<_>>()?;
    let sum = summarize(&rows);
    let var = sum.cov[(0, 0)];
    Ok(MartingaleReport {
        horizon,
        replications,
        empirical_mean: sum.mean[0],
        empirical_variance: var,
        predicted_variance: limit.horizon_variance,
        rel_error: rel_error(var, limit.horizon_variance),
        limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPairReport {
    pub n_grid: Vec<usize>,
    pub replications: usize,
    /// Median over replications of `√n · max_i |θ̂₂,i − θ̂_Q,i|`, per `n`.
    pub medians: Vec<f64>,
    /// Whether `medians` is non-increasing along `n_grid`.
    pub monotone_decrease: bool,
    pub failures: usize,
}

/// Compares the marginal pair estimator `θ̂₂` with `θ̂_Q` along `n_grid`
/// (count regime).
pub fn marginal_pair_diagnostic(
    q_true: &ChainKernel,
    fam: Arc<dyn QFamily>,
    sojourn: &SojournKernel,
    n_grid: &[usize],
    replications: usize,
    seed: u64,
) -> Result<MarginalPairReport> {
    let mut medians = Vec::with_capacity(n_grid.len());
    let mut failures = 0;
    for &n in n_grid {
        let diffs: Vec<Option<f64>> = par_map(replications, |i| {
            let emp = simulate_emp(q_true, sojourn, Regime::Count { n }, replication_seed(seed, i as u64)).ok()?;
            let a = fit_q(&emp, fam.clone(), None).ok()?;
            let b = fit_marginal_pair(&emp, fam.as_ref(), Some(&a.theta_hat)).ok()?;
            Some((n as f64).sqrt() * (&b.theta_hat - &a.theta_hat).amax())
        });
        failures += diffs.iter().filter(|d| d.is_none()).count();
        let mut ok: Vec<f64> = diffs.into_iter().flatten().collect();
        if ok.is_empty() {
            return Err(Error::ExcessiveFailures { failures: replications, replications });
        }
        ok.sort_by(f64::total_cmp);
        let mid = ok.len() / 2;
        medians.push(if ok.len() % 2 == 1 { ok[mid] } else { 0.5 * (ok[mid - 1] + ok[mid]) });
    }
    let monotone_decrease = medians.windows(2).all(|w| w[1] <= w[0]);
    Ok(MarginalPairReport { n_grid: n_grid.to_vec(), replications, medians, monotone_decrease, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExponentialRate, SojournLaw};

    fn chain() -> ChainKernel {
        ChainKernel::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn summary_of_known_sample() {
        let rows: Vec<DVector<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| DVector::from_element(1, v)).collect();
        let s = summarize(&rows);
        assert_eq!(s.mean[0], 2.5);
        assert!((s.cov[(0, 0)] - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.skewness[0].abs() < 1e-15);
    }

    #[test]
    fn zero_direction_gives_zero_log_ratio() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let rep = lan_diagnostic(&chain(), &r, &PerturbationDirection::zero(2), 100.0, 5, 1).unwrap();
        assert_eq!(rep.mean_log_ratio, 0.0);
        assert_eq!(rep.var_log_ratio, 0.0);
    }

    #[test]
    fn directions_are_centred() {
        let r = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let dir = PerturbationDirection::zero(2)
            .with_pair(&chain(), &g)
            .with_triple(&r, Arc::new(|x, y, u| (1.0 + x as f64 + y as f64) * (-u).exp()))
            .unwrap();
        let (rv, rw) = dir.centering_residuals(&chain(), &r).unwrap();
        assert!(rv < 1e-15 && rw < 1e-10, "{rv} {rw}");
    }

    #[test]
    fn oversized_perturbation_is_rejected() {
        let r = SojournKernel::point_mass(2);
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 100.0, 0.0, 0.0]);
        let dir = PerturbationDirection::zero(2).with_pair(&chain(), &g);
        let err = lan_diagnostic(&chain(), &r, &dir, 10.0, 2, 1).unwrap_err();
        assert!(matches!(err, Error::PerturbationInvalid { .. }));
    }

    #[test]
    fn run_mc_is_order_independent() {
        let r = SojournKernel::uniform(2, SojournLaw::Exponential { rate: 1.5 }).unwrap();
        let s = Scenario {
            q: chain(),
            r,
            target: Target::Sojourn(Arc::new(ExponentialRate::new())),
            regime: Regime::Count { n: 500 },
            replications: 20,
            base_seed: 3,
        };
        let a = run_mc(&s).unwrap();
        let b = run_mc(&s).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.records, b.records);
        assert_eq!(a.report.failures, 0);
    }
}
