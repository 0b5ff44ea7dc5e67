//! Damped projected Newton ascent with multi-start, and golden-section search.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::ParamBox;
use crate::linalg;
use crate::measure::Evaluation;

/// A smooth objective to be maximised over a box.
pub trait Objective {
    fn domain(&self) -> &ParamBox;
    fn evaluate(&self, theta: &DVector<f64>) -> Result<Evaluation>;
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Maximum-norm tolerance on the gradient over free coordinates.
    pub grad_tol: f64,
    /// Random restarts tried after a failed run from the initial point.
    pub restarts: usize,
    pub restart_seed: u64,
    /// Coordinates held at their initial values.
    pub frozen: Vec<usize>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-9, restarts: 4, restart_seed: 0x5eed, frozen: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub theta: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn free_norm(g: &DVector<f64>, free: &[usize]) -> f64 {
    free.iter().fold(0.0_f64, |a, &i| a.max(g[i].abs()))
}

fn sub_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn sub_mat(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Ascent direction on the free coordinates: Newton when the Hessian is
/// negative definite, Levenberg-damped otherwise.
fn direction(ev: &Evaluation, free: &[usize]) -> DVector<f64> {
    let g = sub_vec(&ev.gradient, free);
    let h = linalg::symmetrize(&sub_mat(&ev.hessian, free));
    let neg = -h;
    let scale = neg.amax().max(1e-12);
    let mut lambda = 0.0;
    for _ in 0..60 {
        let m = &neg + DMatrix::identity(free.len(), free.len()) * lambda;
        if let Some(chol) = m.cholesky() {
            return chol.solve(&g);
        }
        lambda = if lambda == 0.0 { 1e-8 * scale } else { lambda * 10.0 };
    }
    g / scale
}

fn run_newton(obj: &dyn Objective, init: &DVector<f64>, opts: &NewtonOptions) -> Result<Solution> {
    let dom = obj.domain();
    let d = dom.dim();
    let free: Vec<usize> = (0..d).filter(|i| !opts.frozen.contains(i)).collect();
    let mut theta = dom.project(init);
    let mut ev = obj.evaluate(&theta)?;
    check_finite(&ev)?;
    for it in 0..=opts.max_iter {
        // coordinates pinned at a face with the gradient pointing outward
        let faces = dom.active_faces(&theta);
        let pinned: Vec<usize> = faces
            .iter()
            .copied()
            .filter(|&i| {
                let at_upper = theta[i] >= dom.upper[i] - 1e-12 * (1.0 + dom.upper[i].abs());
                if at_upper {
                    ev.gradient[i] > 0.0
                } else {
                    ev.gradient[i] < 0.0
                }
            })
            .collect();
        let moving: Vec<usize> = free.iter().copied().filter(|i| !pinned.contains(i)).collect();
        let gnorm = free_norm(&ev.gradient, &moving);
        if gnorm < opts.grad_tol {
            if let Some(&coordinate) = pinned.iter().find(|&&i| free.contains(&i)) {
                if ev.gradient[coordinate].abs() >= opts.grad_tol {
                    return Err(Error::BoundaryHit { coordinate, theta: theta.iter().copied().collect() });
                }
            }
            if pinned.is_empty() && gnorm > 0.0 {
                (theta, ev) = polish(obj, theta, ev, &moving, gnorm);
            }
            return Ok(Solution {
                grad_norm: free_norm(&ev.gradient, &free),
                theta,
                value: ev.value,
                gradient: ev.gradient,
                hessian: ev.hessian,
                iterations: it,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let step = direction(&ev, &moving);
        let floor = ev.value - 1e-13 * (1.0 + ev.value.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = theta.clone();
            for (k, &i) in moving.iter().enumerate() {
                trial[i] += t * step[k];
            }
            let trial = dom.project(&trial);
            if let Ok(tev) = obj.evaluate(&trial) {
                if tev.value.is_finite() && tev.value >= floor && check_finite(&tev).is_ok() {
                    accepted = Some((trial, tev));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((nt, nev)) => {
                let stalled = nt == theta;
                theta = nt;
                ev = nev;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, grad_norm: free_norm(&ev.gradient, &free) })
}

/// One extra full Newton step once converged, kept only if it lowers the gradient.
fn polish(obj: &dyn Objective, theta: DVector<f64>, ev: Evaluation, moving: &[usize], gnorm: f64) -> (DVector<f64>, Evaluation) {
    let step = direction(&ev, moving);
    let mut trial = theta.clone();
    for (k, &i) in moving.iter().enumerate() {
        trial[i] += step[k];
    }
    let trial = obj.domain().project(&trial);
    let floor = ev.value - 1e-13 * (1.0 + ev.value.abs());
    match obj.evaluate(&trial) {
        Ok(tev) if check_finite(&tev).is_ok() && tev.value >= floor && free_norm(&tev.gradient, moving) <= gnorm => {
            (trial, tev)
        }
        _ => (theta, ev),
    }
}

fn check_finite(ev: &Evaluation) -> Result<()> {
    if ev.value.is_finite() && ev.gradient.iter().chain(ev.hessian.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DivergentIntegral("objective not finite at start".into()))
    }
}

fn lexicographic_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Maximises `obj` from `init`. On [`Error::NoConvergence`] the run is
/// repeated from `θ = 0` (projected) and `restarts` seeded draws from the
/// box; the highest converged objective wins, exact ties going to the
/// lexicographically smallest `θ`.
pub fn maximize(obj: &dyn Objective, init: &DVector<f64>, opts: &NewtonOptions) -> Result<Solution> {
    let first = run_newton(obj, init, opts);
    let failure = match first {
        Err(e @ Error::NoConvergence { .. }) => e,
        other => return other,
    };
    let dom = obj.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.restart_seed);
    let mut starts = vec![dom.project(&DVector::zeros(dom.dim()))];
    for _ in 0..opts.restarts {
        let mut s = dom.sample(&mut rng);
        for &i in &opts.frozen {
            s[i] = init[i];
        }
        starts.push(s);
    }
    let mut best: Option<Solution> = None;
    for s in starts {
        if let Ok(sol) = run_newton(obj, &s, opts) {
            let better = match &best {
                None => true,
                Some(b) => sol.value > b.value || (sol.value == b.value && lexicographic_less(&sol.theta, &b.theta)),
            };
            if better {
                best = Some(sol);
            }
        }
    }
    best.ok_or(failure)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
