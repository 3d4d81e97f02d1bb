//! Standard C² bump, cutoff, and zero-mean profiles.
//!
//! All profiles are even piecewise quintics in a normalized coordinate and are
//! placed onto concrete intervals with [`PiecewisePoly::place_on`]. Plateaus
//! (regions where the profile is exactly constant) are used deliberately: a
//! quantity read off at a plateau point is immune to the ~1e−15 jitter left by
//! numerical inversion of the surrounding maps.

use crate::error::{CoreError, Result};
use crate::poly::{smoothstep5, PiecewisePoly, Poly};

/// Even profile: 1 on [−p, p], quintic-smoothstep down to 0 at ±s, 0 outside.
///
/// C² everywhere; exact integral p + s.
pub fn plateau_profile(p: f64, s: f64) -> PiecewisePoly {
    assert!(0.0 < p && p < s, "need 0 < plateau half {p} < support half {s}");
    let step = smoothstep5();
    let w = s - p;
    // rising edge on [−s, −p]: s5((x + s)/w)
    let rise = step.compose_affine(1.0 / w, s / w);
    // falling edge on [p, s]: s5((s − x)/w)
    let fall = step.compose_affine(-1.0 / w, s / w);
    PiecewisePoly::new(
        vec![-s, -p, p, s],
        vec![rise, Poly::constant(1.0), fall],
    )
}

/// The standard plateau bump on [−s, s]: plateau half-width s/2.
///
/// Exact integral (3/2)·s; for the unit-normalized case s = 1/2 the integral
/// is 3/4.
pub fn standard_plateau(s: f64) -> PiecewisePoly {
    plateau_profile(0.5 * s, s)
}

/// The unit-normalized plateau bump on [−1/2, 1/2]: value 1 on |t| ≤ 1/4,
/// smooth transition on 1/4 < |t| < 1/2. Integral exactly 3/4.
pub fn unit_plateau_bump() -> PiecewisePoly {
    standard_plateau(0.5)
}

/// Blending cutoff on [−1/2, 1/2]: exactly 1 on the central 5/8 of the patch
/// (|t| ≤ 5/16), exactly 0 outside the central 7/8 (|t| ≥ 7/16).
pub fn blend_cutoff() -> PiecewisePoly {
    plateau_profile(5.0 / 16.0, 7.0 / 16.0)
}

/// Zero-mean profile ψ_δ on [−1/2, 1/2] used to perturb derivatives by
/// 1 + e·ψ_δ. Shape:
///
/// * unit peak with plateau, centered at 0, support half-width δ/4;
/// * two troughs of depth δ on ±[1/4, 1/2].
///
/// Guarantees, exact by construction (peak mass (3/2)(δ/4) = (3/8)δ equals the
/// trough mass δ·(3/2)(1/8)·2 = (3/8)δ, split evenly between the halves):
///
/// * ψ_δ(0) = 1 with a plateau around 0;
/// * range [−δ, 1];
/// * ∫ψ_δ = 0 and both half-integrals ∫_{−1/2}^0 ψ_δ = ∫_0^{1/2} ψ_δ = 0;
/// * C² everywhere.
pub fn zero_mean_profile(delta: f64) -> Result<PiecewisePoly> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::param(
            "delta",
            format!("zero-mean profile needs 0 < delta < 1, got {delta}"),
        ));
    }
    let peak = standard_plateau(1.0).place_on(0.0, delta / 4.0);
    let trough = standard_plateau(1.0).scaled(-delta);
    let left = trough.place_on(-3.0 / 8.0, 1.0 / 8.0);
    let right = trough.place_on(3.0 / 8.0, 1.0 / 8.0);
    Ok(PiecewisePoly::concat_disjoint(vec![left, peak, right]))
}

/// Half-width of the central plateau of [`zero_mean_profile`] (the zone where
/// the profile is exactly 1).
pub fn zero_mean_plateau_half(delta: f64) -> f64 {
    delta / 8.0
}
