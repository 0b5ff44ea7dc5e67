//! Adaptive Gauss–Legendre quadrature and the special functions the
//! sojourn families need.
//!
//! Integrals over `(0, ∞)` against a sojourn density are computed after the
//! substitution `u = e^s`, which turns both the gamma-type singularity at
//! zero and the exponential tail into smooth, rapidly decaying integrands in
//! `s`. The integration window is chosen from the log-weight so that the
//! truncated mass is below `e^-60`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Requested absolute accuracy, scaled by `max(1, |I|)`.
pub const DEFAULT_TOL: f64 = 1e-10;
const ORDER: usize = 20;
const MAX_INTERVALS: usize = 20_000;
const MIN_WIDTH: f64 = 1e-9;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

fn rule<F>(f: &F, a: f64, b: f64, dim: usize) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let (nodes, weights) = gauss_legendre();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x);
        for (s, vi) in acc.iter_mut().zip(v) {
            *s += w * vi;
        }
    }
    acc.iter_mut().for_each(|s| *s *= half);
    acc
}

/// Integrate a vector-valued function over `[a, b]` by adaptive bisection:
/// each panel's 20-point rule is compared with the sum over its two halves.
pub fn integrate_vec<F>(f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    let width = b - a;
    let whole = rule(&f, a, b, dim);
    let scale = whole.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut total = vec![0.0; dim];
    let mut stack = vec![(a, b, whole)];
    let mut panels = 0usize;
    while let Some((lo, hi, est)) = stack.pop() {
        panels += 1;
        if panels > MAX_INTERVALS {
            return Err(Error::QuadratureFailure(format!(
                "more than {MAX_INTERVALS} panels on [{a}, {b}]"
            )));
        }
        let mid = 0.5 * (lo + hi);
        let left = rule(&f, lo, mid, dim);
        let right = rule(&f, mid, hi, dim);
        let err = est
            .iter()
            .zip(left.iter().zip(&right))
            .fold(0.0_f64, |m, (e, (l, r))| m.max((e - l - r).abs()));
        if err.is_nan() || left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        let local_tol = 0.01 * tol * scale * ((hi - lo) / width).max(1e-6);
        if err <= local_tol || (hi - lo) < MIN_WIDTH * width {
            if err > tol * scale {
                return Err(Error::QuadratureFailure(format!(
                    "panel [{lo}, {hi}] error {err:e} above tolerance"
                )));
            }
            for (t, (l, r)) in total.iter_mut().zip(left.iter().zip(&right)) {
                *t += l + r;
            }
        } else {
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
    }
    Ok(total)
}

/// Integrate `f(u)` against a density on `(0, ∞)` given by its log-density.
///
/// `center` should be a typical value of `u` (the mean works well).
pub fn integrate_positive<F, L>(f: F, log_density: L, center: f64, dim: usize, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
    L: Fn(f64) -> f64,
{
    // log-weight in s = ln u, including the Jacobian e^s
    let lw = |s: f64| log_density(s.exp()) + s;
    let s0 = center.ln();
    let mut peak = lw(s0);
    // locate the peak roughly so the cut-off is relative to it
    let mut sp = s0;
    for k in -40..=40 {
        let s = s0 + 0.25 * k as f64;
        let v = lw(s);
        if v > peak {
            peak = v;
            sp = s;
        }
    }
    if !peak.is_finite() {
        return Err(Error::QuadratureFailure("density vanishes near its mean".into()));
    }
    let cutoff = peak - 60.0;
    let expand = |dir: f64| -> Result<f64> {
        let mut step = 0.25;
        let mut s = sp;
        for _ in 0..200 {
            s += dir * step;
            let v = lw(s);
            if !(v > cutoff) {
                return Ok(s);
            }
            step *= 1.5;
        }
        Err(Error::QuadratureFailure("could not bracket the density mass".into()))
    };
    let lo = expand(-1.0)?;
    let hi = expand(1.0)?;
    integrate_vec(
        |s| {
            let w = lw(s).exp();
            let mut v = f(s.exp());
            if w == 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
            } else {
                v.iter_mut().for_each(|x| *x *= w);
            }
            v
        },
        lo,
        hi,
        dim,
        tol,
    )
}

/// Trigamma function ψ'(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Asymptotic series in Bernoulli numbers.
    let series = 1.0 / x
        + x2 / 2.0
        + x2 / x
            * (1.0 / 6.0
                + x2 * (-1.0 / 30.0 + x2 * (1.0 / 42.0 + x2 * (-1.0 / 30.0 + x2 * (5.0 / 66.0)))));
    acc + series
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_weights_sum_to_two() {
        let (nodes, weights) = gauss_legendre();
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // integrates x^38 exactly
        let exact = 2.0 / 39.0;
        let got: f64 = nodes.iter().zip(weights).map(|(x, w)| w * x.powi(38)).sum();
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn integrates_gaussian_tail() {
        let v = integrate_vec(|x| vec![(-x * x).exp()], -10.0, 10.0, 1, 1e-12).unwrap();
        assert!((v[0] - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponential_moments_by_log_substitution() {
        let lam: f64 = 4.0;
        let m = integrate_positive(
            |u| vec![1.0, u, u.ln()],
            |u| lam.ln() - lam * u,
            1.0 / lam,
            3,
            DEFAULT_TOL,
        )
        .unwrap();
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!((m[1] - 0.25).abs() < 1e-12);
        assert!((m[2] - (-EULER_GAMMA - lam.ln())).abs() < 1e-11);
    }

    #[test]
    fn trigamma_known_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-12);
        // recurrence
        let x = 3.7;
        assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-14);
    }

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-13);
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-13);
    }
}
