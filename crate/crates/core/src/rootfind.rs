//! Bracketed Newton root finding for strictly monotone functions.
//!
//! Every inversion in the crate funnels through [`invert_monotone`]: given an
//! increasing map on a bracket, find the preimage of a target value. Newton
//! steps are taken when they stay inside the bracket and make progress;
//! otherwise the step falls back to bisection, so convergence is guaranteed.
//! The result is polished to within a couple of ulps — downstream identity
//! checks at 1e−9 .. 1e−12 rely on inversion residuals being at rounding
//! level, not merely below a loose tolerance.

use crate::error::{CoreError, Result};

/// Find x in [lo, hi] with f(x) = target, for f strictly increasing.
///
/// `df` supplies the derivative for Newton acceleration; it may be
/// inaccurate or even zero without harming correctness (bisection fallback).
/// Fails if the bracket does not enclose the target.
pub fn invert_monotone(
    mut f: impl FnMut(f64) -> f64,
    mut df: impl FnMut(f64) -> f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    const MAX_ITER: usize = 250;
    if !(lo < hi) {
        return Err(CoreError::RootFind {
            a: lo,
            b: hi,
            reason: "empty bracket".into(),
        });
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a) - target;
    let fb = f(b) - target;
    if fa > 0.0 || fb < 0.0 {
        return Err(CoreError::RootFind {
            a,
            b,
            reason: format!(
                "bracket does not enclose target: f(a)-t = {fa:.3e}, f(b)-t = {fb:.3e}"
            ),
        });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    // Safeguarded Newton: accept a Newton step only when it stays inside the
    // bracket and the residual is shrinking fast enough; otherwise bisect.
    // Bisection alone halves the bracket, so termination is guaranteed.
    let mut x = 0.5 * (a + b);
    let mut step = b - a;
    let mut step_old = step;
    for _ in 0..MAX_ITER {
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        // Bracket collapsed to adjacent floats: done.
        if next_after_up(a) >= b {
            // pick the endpoint with the smaller residual magnitude
            return Ok(if -fa <= f(b) - target { a } else { b });
        }
        let d = df(x);
        let newton_ok = d > 0.0 && {
            let cand = x - fx / d;
            // inside the open bracket, and the projected progress beats the
            // classic 2|f| < |Δ_old·f′| slow-convergence test
            cand > a && cand < b && 2.0 * fx.abs() < (step_old * d).abs()
        };
        step_old = step;
        if newton_ok {
            step = fx / d;
            x -= step;
            // A Newton step at rounding scale cannot be improved upon: the
            // iterate is within a couple of ulps of the root. Stopping here
            // (rather than bisecting the bracket down to adjacent floats)
            // matters when each f call is itself a small quadrature.
            if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
                return Ok(x);
            }
        } else {
            step = 0.5 * (b - a);
            x = a + step;
        }
        if x <= a || x >= b {
            x = 0.5 * (a + b);
        }
    }
    // MAX_ITER iterations with guaranteed halving every other step shrink any
    // f64 bracket to adjacent floats; reaching here means f is noisy or
    // non-monotone on the bracket. Report honestly.
    Err(CoreError::RootFind {
        a,
        b,
        reason: format!("no convergence after {MAX_ITER} iterations"),
    })
}

/// Next representable f64 strictly above x.
fn next_after_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}
