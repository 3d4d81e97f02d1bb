//! Adaptive Gauss–Legendre quadrature with breakpoint pre-splitting.
//!
//! The 10-point Gauss–Legendre rule (exact through degree 19) is applied
//! adaptively: an interval is accepted when the two-half refinement agrees with
//! the single-span value within the local tolerance, otherwise it is bisected.
//! Nodes and weights are computed once at startup by Newton iteration on the
//! Legendre three-term recurrence, so there are no opaque embedded tables —
//! the unit tests verify exactness on monomials directly.

use crate::error::{CoreError, Result};
use std::sync::OnceLock;

const GL_N: usize = 10;
const MAX_DEPTH: usize = 52;
const MAX_EVALS: usize = 20_000_000;

/// Quadrature outcome: value, accumulated local error estimates, and cost.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub err_est: f64,
    pub evals: usize,
}

/// Legendre polynomial value and derivative at x, by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

fn compute_gl_nodes() -> ([f64; GL_N], [f64; GL_N]) {
    let mut nodes = [0.0; GL_N];
    let mut weights = [0.0; GL_N];
    let n = GL_N;
    for i in 0..n / 2 {
        // Chebyshev-style initial guess, then Newton to machine precision.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl() -> &'static ([f64; GL_N], [f64; GL_N]) {
    static GL: OnceLock<([f64; GL_N], [f64; GL_N])> = OnceLock::new();
    GL.get_or_init(compute_gl_nodes)
}

/// Single-span n-point Gauss–Legendre sum.
fn gl_span(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive integration of f over [a, b] to absolute tolerance `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quad> {
    integrate_impl(&mut f, a, b, tol)
}

/// Single fixed-order Gauss–Legendre span value: no refinement and no error
/// control. Meant for rough magnitude estimates (e.g. apportioning tolerance
/// budgets by mass), not for certified values.
pub fn estimate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    gl_span(&mut f, a, b)
}

fn integrate_impl(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quad> {
    if !(tol > 0.0) {
        return Err(CoreError::param("tol", "must be positive"));
    }
    if a == b {
        return Ok(Quad {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
        });
    }
    if a > b {
        let q = integrate_impl(f, b, a, tol)?;
        return Ok(Quad {
            value: -q.value,
            ..q
        });
    }
    let mut evals = 0usize;
    let whole = gl_span(f, a, b);
    evals += GL_N;
    // stack entries: (a, b, previous whole-span estimate, local tolerance, depth)
    let mut stack = vec![(a, b, whole, tol, 0usize)];
    let mut value = 0.0;
    let mut err_est = 0.0;
    while let Some((lo, hi, est, loc_tol, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl_span(f, lo, mid);
        let right = gl_span(f, mid, hi);
        evals += 2 * GL_N;
        if evals > MAX_EVALS {
            return Err(CoreError::Quadrature {
                a,
                b,
                tol,
                err_est: (left + right - est).abs(),
            });
        }
        let refined = left + right;
        let disc = (refined - est).abs();
        // The rule converges at order ~20 on analytic pieces: when halves agree
        // with the whole to the local budget, the refined sum is far better
        // than the test indicates.
        if disc <= loc_tol || depth >= MAX_DEPTH || mid <= lo || mid >= hi {
            if depth >= MAX_DEPTH && disc > loc_tol {
                return Err(CoreError::Quadrature {
                    a,
                    b,
                    tol,
                    err_est: disc,
                });
            }
            value += refined;
            err_est += disc;
        } else {
            let half_tol = 0.5 * loc_tol;
            stack.push((lo, mid, left, half_tol, depth + 1));
            stack.push((mid, hi, right, half_tol, depth + 1));
        }
    }
    Ok(Quad {
        value,
        err_est,
        evals,
    })
}

/// Integrate with known interior breakpoints (e.g. joins of a piecewise
/// integrand): the span is pre-split at each breakpoint in (a, b) and each
/// sub-span integrated adaptively with a proportionate share of the tolerance.
pub fn integrate_with_breakpoints(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<Quad> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
        });
    }
    if a > b {
        let q = integrate_with_breakpoints(f, b, a, breakpoints, tol)?;
        return Ok(Quad {
            value: -q.value,
            ..q
        });
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let nspans = edges.len() - 1;
    let span_tol = tol / nspans as f64;
    let mut value = 0.0;
    let mut err_est = 0.0;
    let mut evals = 0;
    for w in edges.windows(2) {
        let q = integrate_impl(&mut f, w[0], w[1], span_tol)?;
        value += q.value;
        err_est += q.err_est;
        evals += q.evals;
    }
    Ok(Quad {
        value,
        err_est,
        evals,
    })
}
