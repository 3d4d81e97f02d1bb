//! Synthetic circle map with a prescribed derivative cocycle along a marked
//! orbit.
//!
//! The map is f = h ∘ R_α ∘ h⁻¹ where h is a density diffeomorphism whose
//! log-derivative Φ is a train of disjoint plateau bumps centered on the
//! rotation orbit {y₀ + jα}. Writing a(j) for the amplitude at orbit index j
//! (a(0) = 0), the chain rule gives Df(x_j) = e^{a(j+1) − a(j)} exactly on the
//! plateau, so the cocycle along the marked orbit is Df^j(x₀) = e^{a(j)} — the
//! amplitude profile IS the log-cocycle, and every window/envelope quantity
//! can be dialed in directly.
//!
//! The standard profile ramps up forward (so forward products grow then
//! saturate far above 1), peaks backward at a moderate height and then settles
//! on a long low shelf (so backward products stay large over a long range while
//! their reciprocal-square sums keep accumulating). That shape yields, at
//! practical horizons: summable forward products, a backward maximum well
//! above 1, strictly met window-selection thresholds, and perturbation-step
//! closeness budgets with real margins.

use std::sync::Arc;

use crate::circle::frac;
use crate::error::{CoreError, Result};
use crate::lift::MonotoneLift;
use crate::potential::{BumpSum, PlacedBump};
use crate::rotation::golden_angle;

/// Largest allowed amplitude step between consecutive orbit indices. Keeping
/// steps at most 1 bounds the map's derivative in [e⁻¹, e] globally (bump
/// supports are aligned translates, so the profiles cancel pointwise).
pub const MAX_AMPLITUDE_STEP: f64 = 1.0;

/// Signed-index amplitude profile a(j) with a(0) = 0, finitely supported on
/// both sides, and |a(j+1) − a(j)| ≤ [`MAX_AMPLITUDE_STEP`] everywhere
/// (including the implicit zero extensions past both ends).
#[derive(Debug, Clone)]
pub struct SlopeProfile {
    /// a(1), a(2), ... (amplitudes at forward orbit indices)
    forward: Vec<f64>,
    /// a(-1), a(-2), ... (amplitudes at backward orbit indices)
    backward: Vec<f64>,
}

impl SlopeProfile {
    /// Validates step sizes and finiteness.
    pub fn new(forward: Vec<f64>, backward: Vec<f64>) -> Result<Self> {
        let profile = SlopeProfile { forward, backward };
        let lo = -(profile.backward.len() as i64) - 1;
        let hi = profile.forward.len() as i64 + 1;
        for j in lo..hi {
            let a = profile.amplitude(j);
            let b = profile.amplitude(j + 1);
            if !a.is_finite() || !b.is_finite() {
                return Err(CoreError::param("profile", "amplitudes must be finite"));
            }
            let step = (b - a).abs();
            if step > MAX_AMPLITUDE_STEP + 1e-12 {
                return Err(CoreError::InvalidParameter {
                    name: "profile",
                    reason: format!(
                        "amplitude step {step:.3} at index {j} exceeds {MAX_AMPLITUDE_STEP}"
                    ),
                });
            }
        }
        Ok(profile)
    }

    /// a(j); zero at j = 0 and outside the stored ranges.
    pub fn amplitude(&self, j: i64) -> f64 {
        if j > 0 {
            self.forward.get(j as usize - 1).copied().unwrap_or(0.0)
        } else if j < 0 {
            self.backward.get((-j) as usize - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// ln Df(x_j) predicted on the plateau: a(j+1) − a(j).
    pub fn predicted_log_slope(&self, j: i64) -> f64 {
        self.amplitude(j + 1) - self.amplitude(j)
    }

    /// Number of forward indices with stored amplitude.
    pub fn forward_len(&self) -> usize {
        self.forward.len()
    }

    /// Number of backward indices with stored amplitude.
    pub fn backward_len(&self) -> usize {
        self.backward.len()
    }
}

/// Tuned standard profile.
///
/// Forward: ramp 1..7, hold 8 through index 430, unit-step taper to 0.
/// The long hold keeps forward envelope terms c_j ≈ e^{1−16} < 10⁻⁶ out to
/// horizons near 400 even after one conjugacy step inflates them by
/// (1+e₀)(1+e₁) ≈ 2.5.
///
/// Backward: ramp to a peak of 5 (backward products reach e⁵ ≈ 148), short
/// descent, then a long shelf at 2.55 through index 400 and a taper. The
/// shelf height balances two pressures: per-term backward envelope mass
/// e^{1−5.1} ≈ 0.017 large enough to reach mass ratios τ ≈ 2–4 within the
/// stored range, and reciprocal-square terms e^{−5.1} ≈ 6·10⁻³ large enough
/// that the backward sum overtakes the forward one at horizon ≈ 250.
pub fn standard_profile() -> SlopeProfile {
    let mut forward = Vec::with_capacity(437);
    for n in 1..=437i64 {
        forward.push(match n {
            1..=7 => n as f64,
            8..=430 => 8.0,
            _ => 8.0 - (n - 430) as f64, // 431..=437 → 7, 6, ..., 1
        });
    }
    let mut backward = Vec::with_capacity(402);
    for m in 1..=402i64 {
        backward.push(match m {
            1..=5 => m as f64,
            6..=7 => 5.0,
            8 => 4.0,
            9 => 3.0,
            10..=400 => 2.55,
            _ => 2.55 - 0.85 * (m - 400) as f64, // 401, 402 → 1.7, 0.85
        });
    }
    SlopeProfile::new(forward, backward).expect("standard profile satisfies the step bound")
}

/// A built model map: the density conjugator h, the map f = h∘R_α∘h⁻¹, and
/// the marked point x₀ = h(y₀) whose orbit carries the prescribed cocycle.
#[derive(Debug, Clone)]
pub struct ModelMap {
    profile: SlopeProfile,
    h: Arc<MonotoneLift>,
    f: Arc<MonotoneLift>,
    alpha: f64,
    y0: f64,
    x0: f64,
    xi: f64,
    half_width: f64,
    min_center_gap: f64,
}

impl ModelMap {
    /// Builds the map for a profile, bump half-width, and base point y₀.
    ///
    /// Fails if any two bump supports (or a support and y₀) come closer than
    /// the disjointness margin: the exact-cancellation argument for the
    /// derivative bound needs every point to see at most one bump and its
    /// aligned translate.
    pub fn build(profile: SlopeProfile, half_width: f64, y0: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width <= 0.01) {
            return Err(CoreError::param("half_width", "must lie in (0, 0.01]"));
        }
        if !(0.0..1.0).contains(&y0) {
            return Err(CoreError::param("y0", "must lie in [0, 1)"));
        }
        let alpha = golden_angle();
        let lo = -(profile.backward.len() as i64);
        let hi = profile.forward.len() as i64;
        let mut bumps = Vec::new();
        let mut centers = vec![y0];
        for j in lo..=hi {
            let amplitude = profile.amplitude(j);
            let center = frac(y0 + j as f64 * alpha);
            if j != 0 && amplitude != 0.0 {
                bumps.push(PlacedBump {
                    center,
                    half_width,
                    amplitude,
                });
                centers.push(center);
            }
        }
        centers.sort_by(f64::total_cmp);
        let mut min_center_gap = f64::INFINITY;
        for w in centers.windows(2) {
            min_center_gap = min_center_gap.min(w[1] - w[0]);
        }
        if centers.len() > 1 {
            let wrap = centers[0] + 1.0 - centers[centers.len() - 1];
            min_center_gap = min_center_gap.min(wrap);
        }
        if !(min_center_gap > 2.0 * half_width) {
            return Err(CoreError::InvalidParameter {
                name: "profile",
                reason: format!(
                    "orbit centers come within {min_center_gap:.3e} of each other; supports of \
                     half-width {half_width:.3e} would overlap"
                ),
            });
        }
        let phi = BumpSum::new(bumps);
        let h = Arc::new(MonotoneLift::density(phi)?);
        let f = Arc::new(MonotoneLift::conjugate(
            h.clone(),
            Arc::new(MonotoneLift::rotation(alpha)),
        ));
        let x0 = frac(h.eval(y0));
        // y₀ is clear of every support, so Dh(y₀) = e⁰/ξ recovers ξ.
        let xi = 1.0 / h.deriv(y0);
        Ok(ModelMap {
            profile,
            h,
            f,
            alpha,
            y0,
            x0,
            xi,
            half_width,
            min_center_gap,
        })
    }

    /// The standard tuned map: [`standard_profile`], half-width 10⁻⁴, y₀ = ½.
    pub fn standard() -> Result<Self> {
        Self::build(standard_profile(), 1e-4, 0.5)
    }

    pub fn profile(&self) -> &SlopeProfile {
        &self.profile
    }

    /// The conjugator h (density map).
    pub fn h(&self) -> &Arc<MonotoneLift> {
        &self.h
    }

    /// The map f = h ∘ R_α ∘ h⁻¹.
    pub fn f(&self) -> &Arc<MonotoneLift> {
        &self.f
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Base point of the bump train (in the rotation coordinate).
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Marked point x₀ = h(y₀) carrying the prescribed cocycle.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Normalizer ξ = ∫₀¹ e^Φ.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Smallest circle distance between bump centers (y₀ included).
    pub fn min_center_gap(&self) -> f64 {
        self.min_center_gap
    }

    /// Half-width of the y-band around y₀ on which every orbit translate stays
    /// inside its bump plateau, so the whole derivative cocycle is literally
    /// constant across the band. The plateau spans the middle half of each
    /// support; a quarter of that absorbs center rounding with a wide margin.
    pub fn flat_band(&self) -> f64 {
        0.25 * self.half_width
    }

    /// The j-th marked orbit point x_j = h(y₀ + jα), computed directly from
    /// the rotation coordinate (no iteration error).
    pub fn marked_orbit_point(&self, j: i64) -> f64 {
        frac(self.h.eval(frac(self.y0 + j as f64 * self.alpha)))
    }

    /// Predicted Df(x_j) = e^{a(j+1) − a(j)}.
    pub fn predicted_slope(&self, j: i64) -> f64 {
        self.profile.predicted_log_slope(j).exp()
    }
}

#[cfg(test)]
pub(crate) fn shared_standard() -> &'static ModelMap {
    use std::sync::OnceLock;
    static CELL: OnceLock<ModelMap> = OnceLock::new();
    CELL.get_or_init(|| ModelMap::standard().expect("standard model map builds"))
}
