//! Small helpers for circle (ℝ/ℤ) arithmetic.

/// Fractional part in [0, 1).
#[inline]
pub fn frac(x: f64) -> f64 {
    let t = x - x.floor();
    // x.floor() can round such that t == 1.0 for x just below an integer.
    if t >= 1.0 {
        t - 1.0
    } else {
        t
    }
}

/// Split into (fractional part in [0,1), integer part) with x = frac + int.
#[inline]
pub fn split_unit(x: f64) -> (f64, f64) {
    let f = frac(x);
    (f, x - f)
}

/// Signed circle displacement from b to a, in [−1/2, 1/2).
///
/// Computed as r − round(r) with r = a − b, which is exact in floating point:
/// r is within a factor of two of its nearest integer (or that integer is 0),
/// so the final subtraction never rounds. Going through `frac` instead would
/// add and re-subtract 1.0 for small negative displacements, quantizing the
/// result at ulp(1) — far coarser than ulp of a small distance, and enough to
/// turn smooth bump profiles into micro-staircases that defeat adaptive
/// quadrature.
#[inline]
pub fn signed_dist(a: f64, b: f64) -> f64 {
    let r = a - b;
    let d = r - r.round();
    // round() sends half-integers away from zero; renormalize to [−1/2, 1/2).
    if d >= 0.5 {
        d - 1.0
    } else if d < -0.5 {
        d + 1.0
    } else {
        d
    }
}

/// Unsigned circle distance, in [0, 1/2].
#[inline]
pub fn dist(a: f64, b: f64) -> f64 {
    signed_dist(a, b).abs()
}

/// Distance between a point and a circle arc given by center and half-width.
/// Returns 0 if the point lies in the arc.
#[inline]
pub fn dist_to_arc(x: f64, center: f64, half_width: f64) -> f64 {
    (dist(x, center) - half_width).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_basics() {
        assert_eq!(frac(0.25), 0.25);
        assert_eq!(frac(3.25), 0.25);
        assert_eq!(frac(-0.75), 0.25);
        assert_eq!(frac(-3.0), 0.0);
        assert!(frac(-1e-18) < 1.0); // the near-integer guard
    }

    #[test]
    fn signed_dist_wraps() {
        assert!((signed_dist(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert!((signed_dist(0.9, 0.1) + 0.2).abs() < 1e-15);
        assert!((signed_dist(0.6, 0.1) + 0.5).abs() < 1e-15); // −1/2 preferred over +1/2
        assert_eq!(dist(0.25, 0.75), 0.5);
    }

    #[test]
    fn arc_distance() {
        assert_eq!(dist_to_arc(0.5, 0.5, 0.01), 0.0);
        assert!((dist_to_arc(0.55, 0.5, 0.01) - 0.04).abs() < 1e-15);
        assert!((dist_to_arc(0.99, 0.01, 0.05) - 0.0).abs() < 1e-15);
    }
}
