//! Continued fractions: targets of rotation built from coefficient lists.
//!
//! A rotation angle is specified by its continued-fraction expansion
//! [0; a₁, a₂, …] rather than by a float, so the arithmetic properties that
//! the staged construction depends on (how well the angle is approximated by
//! rationals) are explicit inputs. The default choice, forty 1s, pins the
//! inverse golden ratio (√5 − 1)/2 to within one ulp.

use crate::error::{CoreError, Result};

/// Convergents p/q of [0; a₁, a₂, …], in order.
pub fn convergents(coeffs: &[u32]) -> Vec<(i128, i128)> {
    let mut out = Vec::with_capacity(coeffs.len());
    // h_{-1} = 1, h_{-2} = 0; k_{-1} = 0, k_{-2} = 1; leading term a₀ = 0.
    let (mut h_prev, mut h) = (1i128, 0i128);
    let (mut k_prev, mut k) = (0i128, 1i128);
    for &a in coeffs {
        let a = a as i128;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        out.push((h, k));
        if k > (1i128 << 100) {
            break; // denominators beyond any f64 resolution
        }
    }
    out
}

/// The irrational α = [0; a₁, a₂, …], accepted once successive convergents
/// agree within `gap_tol` (floored at a few ulp — adjacent convergent ratios
/// of a number pinned to machine precision still differ by one ulp). Fails
/// with the achieved gap when the coefficient list is too short.
pub fn irrational_from_cf(coeffs: &[u32], gap_tol: f64) -> Result<f64> {
    if coeffs.is_empty() || coeffs.iter().any(|&a| a == 0) {
        return Err(CoreError::param(
            "coeffs",
            "continued-fraction coefficients must be positive",
        ));
    }
    let conv = convergents(coeffs);
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut last_gap = f64::INFINITY;
    let mut last_val = f64::NAN;
    for &(p, q) in &conv {
        let val = p as f64 / q as f64;
        if let Some(pv) = prev {
            last_gap = (val - pv).abs();
            if last_gap < gap_tol.max(4.0 * f64::EPSILON * val.abs()) {
                converged = true;
            }
        }
        prev = Some(val);
        last_val = val;
    }
    if converged {
        // return the final convergent: once the gap criterion is met, later
        // convergents only refine within the last ulp
        Ok(last_val)
    } else {
        Err(CoreError::InsufficientCoefficients {
            have: coeffs.len(),
            gap: last_gap,
            need: gap_tol,
        })
    }
}

/// The default angle: forty 1s, i.e. the inverse golden ratio.
pub fn golden_angle() -> f64 {
    irrational_from_cf(&[1; 40], 1e-16).expect("forty 1s pin the golden ratio")
}
