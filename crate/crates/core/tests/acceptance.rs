//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Reference values are computed here from first principles (direct sums,
//! bisection, closed forms) rather than through the library's own oracles.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smkl::asymptotics::{a_operator, fisher_q, fisher_s, sandwich_oracle, PotentialOperator};
use smkl::empirical::EmpiricalMeasures;
use smkl::estimators::{fit_ar1_gaussian, fit_ar1_least_squares, fit_q, fit_r, fit_s};
use smkl::experiments::{
    lan_diagnostic, martingale_clt_check, plugin_consistency, run_mc, PerturbationDirection, Scenario,
};
use smkl::kernels::{
    score_identity_report, ChainKernel, ExponentialByOrigin, ExponentialRate, ExponentialTilt, GammaFamily,
    IdentityRoute, ParamBox, QFamily, RFamily, SModel, Saturated, SojournKernel, SojournLaw, Target,
};
use smkl::oracle::{kl_projection, PopulationLaw};
use smkl::simulator::{simulate, simulate_autoregression, Regime, RegimeKind, SimConfig};

fn verdict(n: u32, what: &str, pass: bool, detail: String, started: Instant) {
    println!(
        "criterion {n:>2} {}: {what} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn two_state() -> ChainKernel {
    ChainKernel::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap()
}

fn three_state() -> ChainKernel {
    ChainKernel::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5], vec![0.3, 0.3, 0.4]]).unwrap()
}

fn uniform_base(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, 1.0 / n as f64)
}

/// Indicator of a forward move `y = x + 1 mod n`.
fn forward_stat(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |x, y| if y == (x + 1) % n { 1.0 } else { 0.0 })
}

fn forward_tilt(n: usize, lower: f64, upper: f64) -> Arc<ExponentialTilt> {
    Arc::new(ExponentialTilt::new(uniform_base(n), vec![forward_stat(n)], ParamBox::new(vec![lower], vec![upper]).unwrap()).unwrap())
}

// ---------------------------------------------------------------------------

/// Direct sums of the chain identities from the family's scores and Hessians.
fn chain_residuals_direct(fam: &dyn QFamily, theta: &DVector<f64>) -> (f64, f64) {
    let q = fam.transition_matrix(theta);
    let (mut s, mut i) = (0.0_f64, 0.0_f64);
    for x in 0..fam.size() {
        let mut first = DVector::zeros(fam.dim());
        let mut second = DMatrix::zeros(fam.dim(), fam.dim());
        for y in 0..fam.size() {
            let sc = fam.score(theta, x, y);
            first += &sc * q[(x, y)];
            second += (&sc * sc.transpose() + fam.hessian(theta, x, y)) * q[(x, y)];
        }
        s = s.max(first.amax());
        i = i.max(second.amax());
    }
    (s, i)
}

#[test]
fn criterion_01_score_identities() {
    let t0 = Instant::now();
    let size = 3;
    let tilt2: Arc<dyn QFamily> = Arc::new(
        ExponentialTilt::new(
            three_state().matrix().clone(),
            vec![forward_stat(3), DMatrix::from_fn(3, 3, |x, y| (x as f64 - y as f64).abs())],
            ParamBox::uniform(2, -10.0, 10.0),
        )
        .unwrap(),
    );
    let saturated: Arc<dyn QFamily> = Arc::new(Saturated::new(size).unwrap());
    let r_families: Vec<Arc<dyn RFamily>> = vec![
        Arc::new(ExponentialRate::new()),
        Arc::new(ExponentialByOrigin::new(size)),
        Arc::new(GammaFamily::shape_only(3.0).unwrap()),
        Arc::new(GammaFamily::new(Some(2.0), None).unwrap()),
        Arc::new(GammaFamily::shape_and_rate()),
    ];
    let mut targets: Vec<(String, Target)> = vec![
        ("tilt".into(), Target::Chain(tilt2.clone())),
        ("saturated".into(), Target::Chain(saturated.clone())),
    ];
    for r in &r_families {
        targets.push((r.name().to_string(), Target::Sojourn(r.clone())));
    }
    targets.push(("joint_disjoint".into(), Target::Joint(SModel::disjoint(tilt2.clone(), r_families[4].clone()))));
    targets.push((
        "joint_shared".into(),
        Target::Joint(SModel::shared(forward_tilt(3, 0.01, 10.0), Arc::new(ExponentialRate::new())).unwrap()),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut worst_name = String::new();
    for (name, target) in &targets {
        for _ in 0..100 {
            let theta = target.domain().sample(&mut rng);
            let mut r = score_identity_report(target, &theta, size, IdentityRoute::ClosedForm).unwrap().max();
            if let Target::Chain(f) = target {
                let (s, i) = chain_residuals_direct(f.as_ref(), &theta);
                r = r.max(s).max(i);
            }
            if r > worst {
                worst = r;
                worst_name = name.clone();
            }
        }
    }
    // independent quadrature route on a box where the densities are well resolved
    let mut worst_quad = 0.0_f64;
    for r in &r_families {
        let target = Target::Sojourn(r.clone());
        let d = r.dim();
        let inner = ParamBox::uniform(d, 0.2, 8.0).intersect(r.domain()).unwrap();
        for _ in 0..100 {
            let theta = inner.sample(&mut rng);
            let q = score_identity_report(&target, &theta, size, IdentityRoute::Quadrature).unwrap().max();
            worst_quad = worst_quad.max(q);
        }
    }
    let pass = worst < 1e-8 && worst_quad < 1e-8 && t0.elapsed().as_secs_f64() < 10.0;
    verdict(
        1,
        "score and information identities",
        pass,
        format!("max residual {worst:.2e} ({worst_name}), quadrature route {worst_quad:.2e}"),
        t0,
    );
}

// ---------------------------------------------------------------------------

/// `Var_P₂(f) + 2 Σ_{i≥1} P₂[f̄ · Q^{i−1}h]` with `h(x) = Σ_y Q(x, y) f̄(x, y)`.
fn autocovariance_series(q: &DMatrix<f64>, pi: &DVector<f64>, f: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    let p2 = DMatrix::from_fn(n, n, |x, y| pi[x] * q[(x, y)]);
    let mean = p2.component_mul(f).sum();
    let fbar = f.map(|v| v - mean);
    let var = p2.component_mul(&fbar.map(|v| v * v)).sum();
    let mut v = DVector::from_fn(n, |x, _| (0..n).map(|y| q[(x, y)] * fbar[(x, y)]).sum::<f64>());
    let mut total = var;
    let mut small = 0;
    for _ in 0..100_000 {
        let term: f64 = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| p2[(x, y)] * fbar[(x, y)] * v[y]).sum();
        total += 2.0 * term;
        small = if term.abs() < 1e-12 { small + 1 } else { 0 };
        if small >= 5 {
            break;
        }
        v = q * v;
    }
    total
}

#[test]
fn criterion_02_potential_operator() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_qa, mut worst_var) = (0.0_f64, 0.0_f64);
    for k in 0..100u64 {
        let size = 2 + (k as usize % 5);
        let chain = ChainKernel::random(size, 1000 + k).unwrap();
        let f = DMatrix::from_fn(size, size, |_, _| rng.random_range(-3.0..3.0));
        let pot = PotentialOperator::from_chain(&chain).unwrap();
        let af = a_operator(&pot, &f);
        let q = chain.matrix();
        for x in 0..size {
            let s: f64 = (0..size).map(|y| q[(x, y)] * af[(x, y)]).sum();
            worst_qa = worst_qa.max(s.abs());
        }
        let p2 = chain.pair_law();
        let lhs = p2.component_mul(&af.map(|v| v * v)).sum();
        let rhs = autocovariance_series(q, chain.stationary(), &f);
        worst_var = worst_var.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    let pass = worst_qa < 1e-10 && worst_var < 1e-8 && t0.elapsed().as_secs_f64() < 30.0;
    verdict(
        2,
        "potential operator",
        pass,
        format!("max |QAf| {worst_qa:.2e}, max variance gap {worst_var:.2e}"),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_03_closed_forms() {
    let t0 = Instant::now();
    let r = SojournKernel::uniform(2, SojournLaw::Exponential { rate: 1.5 }).unwrap();
    let path = simulate(&two_state(), &r, &SimConfig::count(5000, 3)).unwrap();
    let emp = EmpiricalMeasures::build(&path, 2).unwrap();
    let mean_u = path.sojourns().iter().sum::<f64>() / path.n_obs() as f64;
    let exp_fit = fit_r(&emp, Arc::new(ExponentialRate::new()), None).unwrap().theta_hat[0];
    let exp_gap = rel(exp_fit, 1.0 / mean_u);

    let series = simulate_autoregression(&[0.6], 1.0, 5000, 3);
    let ls = fit_ar1_least_squares(&series).unwrap();
    let newton = fit_ar1_gaussian(&series).unwrap().theta_hat[0];
    let ar_gap = (ls - newton).abs();

    let chain = three_state();
    let path = simulate(&chain, &SojournKernel::point_mass(3), &SimConfig::count(5000, 3)).unwrap();
    let emp = EmpiricalMeasures::build(&path, 3).unwrap();
    let sat = Arc::new(Saturated::new(3).unwrap());
    let est = fit_q(&emp, sat.clone(), None).unwrap();
    let fitted = sat.transition_matrix(&est.theta_hat);
    let mut counts = DMatrix::<f64>::zeros(3, 3);
    for (x, y, _) in path.transitions() {
        counts[(x, y)] += 1.0;
    }
    let mut sat_gap = 0.0_f64;
    for x in 0..3 {
        let total: f64 = counts.row(x).sum();
        for y in 0..3 {
            sat_gap = sat_gap.max((fitted[(x, y)] - counts[(x, y)] / total).abs());
        }
    }
    let pass = exp_gap < 1e-10 && ar_gap < 1e-8 && sat_gap < 1e-14 && t0.elapsed().as_secs_f64() < 5.0;
    verdict(
        3,
        "closed-form agreement",
        pass,
        format!("exponential {exp_gap:.2e}, AR(1) {ar_gap:.2e}, saturated {sat_gap:.2e}"),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_04_efficiency_collapse() {
    let t0 = Instant::now();
    let n = 3;
    let tilt = forward_tilt(n, -10.0, 10.0);
    let theta_q = DVector::from_element(1, 0.7);
    let chain = ChainKernel::new(tilt.transition_matrix(&theta_q)).unwrap();
    let rates = [0.8, 1.5, 2.5];
    let sojourn = SojournKernel::exponential_by_state(&rates).unwrap();
    let law = PopulationLaw::new(chain.clone(), sojourn.clone()).unwrap();
    let pi = chain.stationary();
    let m: f64 = (0..n).map(|x| pi[x] / rates[x]).sum();
    let theta_r = DVector::from_column_slice(&rates);

    // Fisher informations summed directly from the scores.
    let q = chain.matrix();
    let mut info_q = DMatrix::zeros(1, 1);
    for x in 0..n {
        for y in 0..n {
            let s = tilt.score(&theta_q, x, y);
            info_q += &s * s.transpose() * (pi[x] * q[(x, y)]);
        }
    }
    let info_r = DMatrix::from_fn(n, n, |i, j| if i == j { pi[i] / (rates[i] * rates[i]) } else { 0.0 });

    let mut gaps = Vec::new();
    let q_target = Target::Chain(tilt.clone());
    let cov = sandwich_oracle(&law, &q_target, &theta_q, RegimeKind::Horizon).unwrap().covariance;
    let expect = info_q.clone().try_inverse().unwrap() * m;
    gaps.push(((&cov - &expect).norm() / expect.norm(), "Q"));

    let r_target = Target::Sojourn(Arc::new(ExponentialByOrigin::new(n)));
    let cov = sandwich_oracle(&law, &r_target, &theta_r, RegimeKind::Horizon).unwrap().covariance;
    let expect = info_r.clone().try_inverse().unwrap() * m;
    gaps.push(((&cov - &expect).norm() / expect.norm(), "R"));

    let model = SModel::disjoint(tilt.clone(), Arc::new(ExponentialByOrigin::new(n)));
    let theta_s = model.join(&theta_q, &theta_r);
    let mut info_s = DMatrix::zeros(1 + n, 1 + n);
    info_s.view_mut((0, 0), (1, 1)).copy_from(&info_q);
    info_s.view_mut((1, 1), (n, n)).copy_from(&info_r);
    let cov = sandwich_oracle(&law, &Target::Joint(model.clone()), &theta_s, RegimeKind::Horizon).unwrap().covariance;
    let expect = info_s.clone().try_inverse().unwrap() * m;
    gaps.push(((&cov - &expect).norm() / expect.norm(), "S"));

    // the library's own Fisher routines agree with the direct sums
    let fq = fisher_q(&law, tilt.as_ref(), &theta_q).unwrap();
    let fs = fisher_s(&law, &model, &theta_s).unwrap();
    let fisher_gap = ((&fq - &info_q).norm() / info_q.norm()).max((&fs - &info_s).norm() / info_s.norm());

    let worst = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
    let pass = worst < 1e-8 && fisher_gap < 1e-8 && t0.elapsed().as_secs_f64() < 5.0;
    verdict(
        4,
        "sandwich collapses to m/Fisher when correctly specified",
        pass,
        format!("Q {:.2e}, R {:.2e}, S {:.2e}, Fisher {fisher_gap:.2e}", gaps[0].0, gaps[1].0, gaps[2].0),
        t0,
    );
}

// ---------------------------------------------------------------------------

fn model_r_scenario(law: SojournLaw, seed: u64) -> Scenario {
    Scenario {
        q: two_state(),
        r: SojournKernel::uniform(2, law).unwrap(),
        target: Target::Sojourn(Arc::new(ExponentialRate::new())),
        regime: Regime::Count { n: 20_000 },
        replications: 1000,
        base_seed: seed,
    }
}

#[test]
fn criterion_05_correct_model_r_monte_carlo() {
    let t0 = Instant::now();
    let mc = run_mc(&model_r_scenario(SojournLaw::Exponential { rate: 1.5 }, 505)).unwrap();
    let r = &mc.report;
    let var = r.empirical_cov[(0, 0)];
    let z = r.mean_scaled_error[0] / r.mean_scaled_error_se[0];
    let pass = rel(var, 2.25) < 0.10 && z.abs() < 3.0 && r.failures == 0;
    verdict(
        5,
        "correct exponential sojourns, Monte Carlo",
        pass,
        format!("variance {var:.4} vs 2.25 (rel {:.3}), mean z {z:.2}", rel(var, 2.25)),
        t0,
    );
}

#[test]
fn criterion_06_misspecified_model_r_monte_carlo() {
    let t0 = Instant::now();
    let s = model_r_scenario(SojournLaw::Gamma { shape: 2.0, rate: 3.0 }, 606);
    let law = s.law().unwrap();
    let kl = kl_projection(&law, &s.target).unwrap();
    let sandwich = sandwich_oracle(&law, &s.target, &kl.k_star, RegimeKind::Count).unwrap().covariance[(0, 0)];
    // delta method: θ̂ = 1/Ū, Var(U) = 2/9, so 2.25² · 2/9
    let delta = 1.5_f64.powi(4) * 2.0 / 9.0;
    let mc = run_mc(&s).unwrap();
    let r = &mc.report;
    let var = r.empirical_cov[(0, 0)];
    let z = r.mean_scaled_error[0] / r.mean_scaled_error_se[0];
    let pass = (kl.k_star[0] - 1.5).abs() < 1e-8
        && (sandwich - delta).abs() < 1e-6
        && z.abs() < 3.0
        && rel(var, delta) < 0.10
        && r.failures == 0;
    verdict(
        6,
        "exponential fit to gamma sojourns, Monte Carlo",
        pass,
        format!(
            "k* {:.10}, sandwich {sandwich:.8} vs {delta}, variance {var:.4} (rel {:.3}), mean z {z:.2}",
            kl.k_star[0],
            rel(var, delta)
        ),
        t0,
    );
}

// ---------------------------------------------------------------------------

/// `K_Q` for a one-parameter tilt: the root of `Σ P₂ h − Σ π(x) E_θ[h | x]` by bisection.
fn tilt_projection_bisection(chain: &ChainKernel, fam: &ExponentialTilt, stat: &DMatrix<f64>) -> f64 {
    let n = chain.size();
    let p2 = chain.pair_law();
    let target: f64 = p2.component_mul(stat).sum();
    let pi = chain.stationary();
    let moment = |t: f64| {
        let q = fam.transition_matrix(&DVector::from_element(1, t));
        (0..n).map(|x| pi[x] * (0..n).map(|y| q[(x, y)] * stat[(x, y)]).sum::<f64>()).sum::<f64>()
    };
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn misspecified_q_scenario(regime: Regime, seed: u64) -> (Scenario, Arc<ExponentialTilt>) {
    let tilt = forward_tilt(3, -10.0, 10.0);
    let s = Scenario {
        q: three_state(),
        r: SojournKernel::point_mass(3),
        target: Target::Chain(tilt.clone()),
        regime,
        replications: 1000,
        base_seed: seed,
    };
    (s, tilt)
}

#[test]
fn criterion_07_misspecified_model_q_monte_carlo() {
    let t0 = Instant::now();
    let (s, tilt) = misspecified_q_scenario(Regime::Count { n: 50_000 }, 707);
    let law = s.law().unwrap();
    let kl = kl_projection(&law, &s.target).unwrap();
    let reference = tilt_projection_bisection(&s.q, &tilt, &forward_stat(3));
    let oracle_gap = (kl.k_star[0] - reference).abs();
    let mc = run_mc(&s).unwrap();
    let r = &mc.report;
    let var = r.empirical_cov[(0, 0)];
    let pred = r.predicted_cov[(0, 0)];
    let z = r.mean_scaled_error[0] / r.mean_scaled_error_se[0];
    let pass = oracle_gap < 1e-6 && kl.verification_gap < 1e-6 && rel(var, pred) < 0.10 && z.abs() < 3.0 && r.failures == 0;
    verdict(
        7,
        "tilt fit to a chain outside the family, Monte Carlo",
        pass,
        format!(
            "K_Q {:.8} (bisection gap {oracle_gap:.1e}, search gap {:.1e}), variance {var:.4} vs {pred:.4} (rel {:.3}), mean z {z:.2}",
            kl.k_star[0],
            kl.verification_gap,
            rel(var, pred)
        ),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_08_misspecified_model_s_monte_carlo() {
    let t0 = Instant::now();
    let sojourn = SojournKernel::by_origin(vec![
        SojournLaw::Gamma { shape: 2.0, rate: 2.0 },
        SojournLaw::Exponential { rate: 1.5 },
        SojournLaw::Gamma { shape: 0.5, rate: 1.0 },
    ])
    .unwrap();
    let shared = SModel::shared(
        forward_tilt(3, 0.01, 10.0),
        Arc::new(ExponentialRate::with_domain(ParamBox::new(vec![0.01], vec![10.0]).unwrap()).unwrap()),
    )
    .unwrap();
    let s = Scenario {
        q: three_state(),
        r: sojourn.clone(),
        target: Target::Joint(shared),
        regime: Regime::Horizon { n: 50_000.0 },
        replications: 1000,
        base_seed: 808,
    };
    let mc = run_mc(&s).unwrap();
    let r = &mc.report;

    // disjoint parameters split into the two partial fits
    let path = simulate(&s.q, &sojourn, &SimConfig::horizon(20_000.0, 88)).unwrap();
    let emp = EmpiricalMeasures::build(&path, 3).unwrap();
    let q_fam: Arc<dyn QFamily> = Arc::new(
        ExponentialTilt::new(
            uniform_base(3),
            vec![forward_stat(3), DMatrix::from_fn(3, 3, |x, y| if x == y { 1.0 } else { 0.0 })],
            ParamBox::uniform(2, -10.0, 10.0),
        )
        .unwrap(),
    );
    let r_fam: Arc<dyn RFamily> = Arc::new(GammaFamily::shape_and_rate());
    let joint = fit_s(&emp, SModel::disjoint(q_fam.clone(), r_fam.clone()), None).unwrap().theta_hat;
    let separate: Vec<f64> = fit_q(&emp, q_fam, None)
        .unwrap()
        .theta_hat
        .iter()
        .chain(fit_r(&emp, r_fam, None).unwrap().theta_hat.iter())
        .copied()
        .collect();
    let split_gap = (&joint - DVector::from_vec(separate)).amax();

    let pass = r.cov_rel_error < 0.10 && split_gap < 1e-9 && r.failures == 0;
    verdict(
        8,
        "shared-parameter joint fit with both kernels wrong, Monte Carlo",
        pass,
        format!(
            "variance {:.4} vs {:.4} (rel {:.3}), disjoint split gap {split_gap:.1e}",
            r.empirical_cov[(0, 0)],
            r.predicted_cov[(0, 0)],
            r.cov_rel_error
        ),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_09_lan_expansion() {
    let t0 = Instant::now();
    let chain = two_state();
    let sojourn = SojournKernel::exponential_by_state(&[1.0, 2.0]).unwrap();
    let g = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.5, 1.0]);
    let v_dir = PerturbationDirection::zero(2).with_pair(&chain, &g);
    let w_dir = PerturbationDirection::zero(2)
        .with_triple(&sojourn, Arc::new(|x, y, u| (1.0 + x as f64 + 0.5 * y as f64) * u))
        .unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, dir, seed) in [("v", &v_dir, 909u64), ("w", &w_dir, 910u64)] {
        let rep = lan_diagnostic(&chain, &sojourn, dir, 50_000.0, 2000, seed).unwrap();
        pass &= rep.mean_rel_error < 0.10 && rep.var_rel_error < 0.10;
        lines.push(format!(
            "{name}: mean {:.4} vs {:.4}, variance {:.4} vs {:.4}",
            rep.mean_log_ratio, rep.predicted_mean, rep.var_log_ratio, rep.predicted_variance
        ));
    }
    verdict(9, "log-likelihood ratio expansion", pass, lines.join("; "), t0);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_10_martingale_clt() {
    let t0 = Instant::now();
    let chain = three_state();
    let rates = [0.5, 1.0, 2.0];
    let sojourn = SojournKernel::exponential_by_state(&rates).unwrap();
    let rep = martingale_clt_check(&chain, &sojourn, Arc::new(|_, _, u| u), 1e5, 500, 1010).unwrap();

    // independent: f − P₃f depends on (x, u) only; its sum is a Markov-additive
    // functional of the chain, so use the series on g(x, y) = E[u | x] plus the
    // within-cell variance E[Var(u | x)].
    let pi = chain.stationary();
    let m: f64 = (0..3).map(|x| pi[x] / rates[x]).sum();
    let g = DMatrix::from_fn(3, 3, |x, _| 1.0 / rates[x]);
    let chain_part = autocovariance_series(chain.matrix(), pi, &g);
    let within: f64 = (0..3).map(|x| pi[x] / (rates[x] * rates[x])).sum();
    let reference = (chain_part + within) / m;

    let oracle_gap = rel(rep.predicted_variance, reference);
    let pass = oracle_gap < 1e-8 && rep.rel_error < 0.10;
    verdict(
        10,
        "martingale CLT for f = u",
        pass,
        format!(
            "variance {:.4} vs {:.4} (rel {:.3}), limit vs series {oracle_gap:.1e}",
            rep.empirical_variance, rep.predicted_variance, rep.rel_error
        ),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_11_plugin_consistency() {
    let t0 = Instant::now();
    let r_case = plugin_consistency(
        &model_r_scenario(SojournLaw::Gamma { shape: 2.0, rate: 3.0 }, 0),
        Regime::Count { n: 1_000_000 },
        1111,
    )
    .unwrap();
    let (q_scenario, _) = misspecified_q_scenario(Regime::Count { n: 1_000_000 }, 0);
    let q_case = plugin_consistency(&q_scenario, Regime::Count { n: 1_000_000 }, 1112).unwrap();
    let pass = r_case.rel_error < 0.10 && q_case.rel_error < 0.10;
    verdict(
        11,
        "plug-in sandwich on one long path",
        pass,
        format!("sojourn case {:.4}, chain case {:.4}", r_case.rel_error, q_case.rel_error),
        t0,
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_12_reproducible_experiment() {
    let t0 = Instant::now();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/model_r_experiment.toml");
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_smkl"))
            .args(["experiment", "--config", config, "--reps", "200", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = std::fs::read(dir.path().join("mc_report.json")).unwrap();
        let csv = std::fs::read(dir.path().join("replications.csv")).unwrap();
        (out.stdout, report, csv)
    };
    let a = run();
    let b = run();
    let pass = a == b && !a.1.is_empty();
    verdict(12, "identical experiment artifacts across runs", pass, format!("{} bytes of JSON", a.1.len()), t0);
}
