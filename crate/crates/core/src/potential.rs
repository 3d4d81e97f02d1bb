//! Circle potentials represented as weighted sums of placed plateau bumps.
//!
//! A [`BumpSum`] is a 1-periodic function Φ(x) = Σᵢ aᵢ·β((x − cᵢ)/hᵢ) where β
//! is the standard plateau profile (1 on |t| ≤ 1/2, quintic transition to 0 at
//! |t| = 1). Individual bumps may overlap; evaluation sums every bump whose
//! arc contains the point. All knot positions are exposed as breakpoints so
//! quadrature and certification can pre-split at the C² joins.

use crate::bump::standard_plateau;
use crate::circle::{dist, frac, signed_dist};
use crate::poly::PiecewisePoly;
use serde::{Deserialize, Serialize};

/// One placed bump: amplitude · β((x − center)/half_width), 1-periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedBump {
    /// Center on the circle, in [0, 1).
    pub center: f64,
    /// Support half-width (β vanishes for |x − center| ≥ half_width).
    pub half_width: f64,
    /// Multiplicative amplitude (may be any sign).
    pub amplitude: f64,
}

/// Weighted sum of placed plateau bumps; the concrete potential type used by
/// density-defined circle maps.
///
/// Bumps are stored sorted by center so evaluation can binary-search the
/// centers near a point instead of scanning the whole list; sums with many
/// hundreds of bumps sit on the innermost loops of quadrature and inversion.
#[derive(Debug, Clone)]
pub struct BumpSum {
    bumps: Vec<PlacedBump>, // sorted by (center, half_width, amplitude)
    breakpoints: Vec<f64>,
    max_half_width: f64,
    profile: PiecewisePoly,
    d_profile: PiecewisePoly,
}

impl BumpSum {
    pub fn new(mut bumps: Vec<PlacedBump>) -> Self {
        for b in &bumps {
            assert!(
                b.half_width > 0.0 && b.half_width < 0.25,
                "bump half-width {} out of range",
                b.half_width
            );
        }
        bumps.sort_by(|p, q| {
            p.center
                .total_cmp(&q.center)
                .then(p.half_width.total_cmp(&q.half_width))
                .then(p.amplitude.total_cmp(&q.amplitude))
        });
        let max_half_width = bumps.iter().map(|b| b.half_width).fold(0.0, f64::max);
        let mut breakpoints = Vec::with_capacity(4 * bumps.len());
        for b in &bumps {
            // support edges and plateau edges, wrapped to [0, 1)
            for d in [-b.half_width, -0.5 * b.half_width, 0.5 * b.half_width, b.half_width] {
                breakpoints.push(frac(b.center + d));
            }
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let profile = standard_plateau(1.0);
        let d_profile = profile.derivative();
        BumpSum {
            bumps,
            breakpoints,
            max_half_width,
            profile,
            d_profile,
        }
    }

    /// Index ranges, in ascending order, of every bump whose support can
    /// contain x. The window is the arc of radius `max_half_width` (plus an
    /// ulp-scale pad so the window test can never be stricter than the exact
    /// per-bump distance test) around x; it wraps across 0 on at most one
    /// side because half-widths stay below 1/4.
    fn window(&self, x: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let n = self.bumps.len();
        if n == 0 {
            return (0..0, 0..0);
        }
        let t = frac(x);
        let pad = self.max_half_width + 1e-12;
        let (lo, hi) = (t - pad, t + pad);
        let main = self.bumps.partition_point(|b| b.center < lo)
            ..self.bumps.partition_point(|b| b.center <= hi);
        if lo < 0.0 {
            let tail = self.bumps.partition_point(|b| b.center < lo + 1.0)..n;
            (main, tail)
        } else if hi >= 1.0 {
            let head = 0..self.bumps.partition_point(|b| b.center <= hi - 1.0);
            (head, main)
        } else {
            (main, 0..0)
        }
    }

    fn near(&self, x: f64) -> impl Iterator<Item = &PlacedBump> {
        let (a, b) = self.window(x);
        self.bumps[a].iter().chain(self.bumps[b].iter())
    }

    /// The zero potential.
    pub fn zero() -> Self {
        BumpSum::new(Vec::new())
    }

    pub fn bumps(&self) -> &[PlacedBump] {
        &self.bumps
    }

    /// Sorted knot positions in [0, 1) (support and plateau edges of every bump).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Φ(x); 1-periodic.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for b in self.near(x) {
            let d = signed_dist(x, b.center);
            if d.abs() < b.half_width {
                acc += b.amplitude * self.profile.eval(d / b.half_width);
            }
        }
        acc
    }

    /// Φ′(x); 1-periodic.
    pub fn deriv_eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for b in self.near(x) {
            let d = signed_dist(x, b.center);
            if d.abs() < b.half_width {
                acc += b.amplitude * self.d_profile.eval(d / b.half_width) / b.half_width;
            }
        }
        acc
    }

    /// Exact integral over one period: Σ aᵢ·(3/2)·hᵢ (the plateau profile on
    /// [−1, 1] has mass 3/2, and placement scales it by the half-width).
    pub fn integral(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.amplitude * 1.5 * b.half_width)
            .sum()
    }

    /// Pointwise range bounds (lo, hi) with min_x Φ ≥ lo and max_x Φ ≤ hi,
    /// computed per overlap group: on any support, Φ is at most the sum of
    /// positive amplitudes of the supports meeting it (and at least the sum
    /// of negative ones); off every support Φ = 0. Far tighter than the
    /// all-bump amplitude sum when supports are disjoint.
    pub fn range_bounds(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for b in &self.bumps {
            let (mut neg, mut pos) = (0.0, 0.0);
            // every support within max_half_width + own half-width can meet b
            let reach = b.half_width + self.max_half_width;
            for other in self.near_within(b.center, reach) {
                if dist(b.center, other.center) < b.half_width + other.half_width {
                    if other.amplitude < 0.0 {
                        neg += other.amplitude;
                    } else {
                        pos += other.amplitude;
                    }
                }
            }
            lo = lo.min(neg);
            hi = hi.max(pos);
        }
        (lo, hi)
    }

    /// Like [`Self::near`] but for an arbitrary search radius.
    fn near_within(&self, t: f64, radius: f64) -> impl Iterator<Item = &PlacedBump> {
        let n = self.bumps.len();
        let (a, b) = if n == 0 || radius >= 0.5 {
            (0..n, 0..0)
        } else {
            let (lo, hi) = (t - radius, t + radius);
            let main = self.bumps.partition_point(|b| b.center < lo)
                ..self.bumps.partition_point(|b| b.center <= hi);
            if lo < 0.0 {
                let tail = self.bumps.partition_point(|b| b.center < lo + 1.0)..n;
                (main, tail)
            } else if hi >= 1.0 {
                let head = 0..self.bumps.partition_point(|b| b.center <= hi - 1.0);
                (head, main)
            } else {
                (main, 0..0)
            }
        };
        self.bumps[a].iter().chain(self.bumps[b].iter())
    }

    /// Distance from x to the nearest bump support (0 if inside one).
    pub fn dist_to_support(&self, x: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| (dist(x, b.center) - b.half_width).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// True if x lies outside every bump support (where Φ vanishes identically).
    pub fn is_flat_at(&self, x: f64) -> bool {
        self.bumps.is_empty() || self.dist_to_support(x) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bump_matches_profile() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.5,
            half_width: 0.1,
            amplitude: 2.0,
        }]);
        assert_eq!(phi.eval(0.5), 2.0);
        assert_eq!(phi.eval(0.46), 2.0); // plateau: |d| ≤ h/2
        assert_eq!(phi.eval(0.61), 0.0);
        assert_eq!(phi.eval(0.39), 0.0);
        // transition midpoint at |d| = 3h/4
        assert!((phi.eval(0.5 + 0.075) - 1.0).abs() < 1e-14);
        assert!((phi.integral() - 2.0 * 1.5 * 0.1).abs() < 1e-15);
        assert_eq!(phi.breakpoints().len(), 4);
    }

    #[test]
    fn wrapping_bump_evaluates_across_zero() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.01,
            half_width: 0.05,
            amplitude: 1.0,
        }]);
        assert_eq!(phi.eval(0.99), 1.0); // d = −0.02, inside plateau
        assert_eq!(phi.eval(0.01), 1.0);
        assert!(phi.eval(0.965) > 0.0); // d = −0.045: transition band
        assert_eq!(phi.eval(0.955), 0.0); // d = −0.055: outside support
        assert_eq!(phi.eval(0.90), 0.0);
        // periodicity
        assert_eq!(phi.eval(1.99), phi.eval(0.99));
        assert_eq!(phi.eval(-0.01), phi.eval(0.99));
    }

    #[test]
    fn overlapping_bumps_add() {
        let phi = BumpSum::new(vec![
            PlacedBump {
                center: 0.5,
                half_width: 0.1,
                amplitude: 1.0,
            },
            PlacedBump {
                center: 0.5,
                half_width: 0.05,
                amplitude: 3.0,
            },
        ]);
        assert_eq!(phi.eval(0.5), 4.0);
        // signed_dist rounds in the last ulp, so compare with a tolerance
        let expect = 1.0 + 3.0 * phi_profile_at(0.03 / 0.05);
        assert!((phi.eval(0.47) - expect).abs() < 1e-13);
        assert!((phi.integral() - (1.5 * 0.1 + 3.0 * 1.5 * 0.05)).abs() < 1e-15);
    }

    fn phi_profile_at(t: f64) -> f64 {
        standard_plateau(1.0).eval(t)
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.3,
            half_width: 0.02,
            amplitude: 1.7,
        }]);
        let h = 1e-7;
        for &x in &[0.285, 0.295, 0.3, 0.305, 0.315] {
            let fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
            assert!(
                (phi.deriv_eval(x) - fd).abs() < 1e-5,
                "x={x}: {} vs fd {fd}",
                phi.deriv_eval(x)
            );
        }
    }

    #[test]
    fn windowed_lookup_matches_full_scan() {
        // Deterministic pseudo-random family with overlaps and wrap coverage;
        // the windowed evaluation must agree bit-for-bit with a full scan.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut unit = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut bumps = Vec::new();
        for _ in 0..200 {
            bumps.push(PlacedBump {
                center: unit(),
                half_width: 1e-4 + 0.08 * unit(),
                amplitude: 2.0 * unit() - 1.0,
            });
        }
        let phi = BumpSum::new(bumps);
        let profile = standard_plateau(1.0);
        let d_profile = profile.derivative();
        let full = |x: f64| {
            let mut acc = (0.0, 0.0);
            for b in phi.bumps() {
                let d = signed_dist(x, b.center);
                if d.abs() < b.half_width {
                    acc.0 += b.amplitude * profile.eval(d / b.half_width);
                    acc.1 += b.amplitude * d_profile.eval(d / b.half_width) / b.half_width;
                }
            }
            acc
        };
        let mut points: Vec<f64> = (0..997).map(|i| i as f64 / 997.0).collect();
        points.extend_from_slice(&[0.0, 1e-9, 0.9999999, 1.3, -0.7, 2.0]);
        points.extend(phi.breakpoints().iter().map(|&b| b + 1e-13));
        for x in points {
            let (v, dv) = full(x);
            assert_eq!(phi.eval(x), v, "value differs at {x}");
            assert_eq!(phi.deriv_eval(x), dv, "derivative differs at {x}");
        }
    }

    #[test]
    fn flatness_and_support_distance() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.2,
            half_width: 0.01,
            amplitude: 1.0,
        }]);
        assert!(phi.is_flat_at(0.5));
        assert!(!phi.is_flat_at(0.205));
        assert!((phi.dist_to_support(0.25) - 0.04).abs() < 1e-15);
        assert!(BumpSum::zero().is_flat_at(0.123));
    }
}
