//! Monotone degree-one circle lifts as an expression tree.
//!
//! A [`MonotoneLift`] represents an increasing map F: ℝ → ℝ with
//! F(x + 1) = F(x) + 1, i.e. the lift of an orientation-preserving circle
//! homeomorphism. Leaves are rigid rotations, piecewise-affine patchworks,
//! density-defined diffeomorphisms (Dh = e^Φ/ξ), and compactly supported
//! deformations; interior nodes are composition and inversion.
//!
//! Design rules enforced here:
//!
//! * **Certification at construction.** Every constructor computes derivative
//!   bounds (analytic where possible, densely sampled only for the one patch
//!   kind that needs it) and rejects maps whose derivative can reach the
//!   degeneracy floor. A value of type `MonotoneLift` is therefore always a
//!   genuine increasing lift.
//! * **Structural inversion.** Rotations, patchworks, composition, and
//!   inversion invert exactly; Newton iteration (always polished to the last
//!   bit, see [`crate::rootfind`]) is used only inside density maps and
//!   deformation patches, where brackets are supplied by cumulative tables or
//!   patch endpoints.
//! * **Breakpoint tracking.** The positions where the map is not analytic are
//!   propagated through the tree so quadrature, certification, and scan grids
//!   can refine near them.

use crate::bump::{blend_cutoff, zero_mean_profile};
use crate::circle::{frac, split_unit};
use crate::error::{CoreError, Result};
use crate::poly::PiecewisePoly;
use crate::potential::{BumpSum, PlacedBump};
use crate::quad;
use crate::rootfind::invert_monotone;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Minimum admissible derivative: certification fails below this floor.
pub const DERIV_FLOOR: f64 = 1e-10;

/// Tolerance for the construction-time cumulative table of a density map.
pub const DENSITY_TABLE_TOL: f64 = 1e-12;

/// Floor tolerance for on-demand span integrals during density evaluation.
const DENSITY_EVAL_TOL: f64 = 5e-15;

/// Relative (to local mass) tolerance for on-demand span integrals. An
/// absolute tolerance alone is unreachable where e^Φ is large — the
/// subdivision then grinds to its depth cap on every evaluation — while a
/// mass-proportional one stays shallow, and the ξ normalization brings the
/// resulting coordinate error down to the last bit.
const DENSITY_EVAL_REL: f64 = 3e-12;

/// Derivative bounds established at construction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivBounds {
    /// Guaranteed (or densely sampled) lower bound for Df.
    pub lo: f64,
    /// Guaranteed (or densely sampled) upper bound for Df.
    pub hi: f64,
    /// True when the bounds come from dense sampling rather than analysis.
    pub sampled: bool,
}

impl DerivBounds {
    fn exact(lo: f64, hi: f64) -> Self {
        DerivBounds {
            lo,
            hi,
            sampled: false,
        }
    }
}

/// Piecewise-affine increasing degree-one lift: knots (xsᵢ, ysᵢ) with the
/// wrap segment (xs₀ + 1, ys₀ + 1).
#[derive(Debug, Clone)]
pub struct Patchwork {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>, // slopes[i] = slope of segment starting at knot i (wrap for last)
}

impl Patchwork {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(CoreError::param("knots", "need equal, nonempty xs/ys"));
        }
        if !xs.iter().all(|&x| (0.0..1.0).contains(&x)) {
            return Err(CoreError::param("xs", "knots must lie in [0, 1)"));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::param("xs", "knots must be strictly increasing"));
        }
        if !ys.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::param("ys", "values must be strictly increasing"));
        }
        if *ys.last().unwrap() >= ys[0] + 1.0 {
            return Err(CoreError::param(
                "ys",
                "wrap segment needs ys[last] < ys[0] + 1",
            ));
        }
        let n = xs.len();
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let (x0, y0) = (xs[i], ys[i]);
            let (x1, y1) = if i + 1 < n {
                (xs[i + 1], ys[i + 1])
            } else {
                (xs[0] + 1.0, ys[0] + 1.0)
            };
            slopes.push((y1 - y0) / (x1 - x0));
        }
        Ok(Patchwork { xs, ys, slopes })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Segment index for t ∈ [0, 1): the wrap segment (index n−1) covers
    /// [xs[n−1], 1) ∪ [0, xs[0]).
    fn segment(&self, t: f64) -> usize {
        if t < self.xs[0] {
            return self.xs.len() - 1;
        }
        self.xs.partition_point(|&k| k <= t) - 1
    }

    fn eval(&self, x: f64) -> f64 {
        let (t, k) = split_unit(x);
        let i = self.segment(t);
        let base = if t < self.xs[0] {
            // wrap segment, approached from below the first knot
            (self.xs[i] - 1.0, self.ys[i] - 1.0)
        } else {
            (self.xs[i], self.ys[i])
        };
        base.1 + self.slopes[i] * (t - base.0) + k
    }

    fn deriv(&self, x: f64) -> f64 {
        let (t, _) = split_unit(x);
        self.slopes[self.segment(t)]
    }

    fn invert(&self, y: f64) -> f64 {
        // Reduce into the value range [ys[0], ys[0] + 1).
        let m = (y - self.ys[0]).floor();
        let t = y - m;
        // Find the last knot with ys ≤ t; t ≥ ys[0] so idx ≥ 1.
        let i = self.ys.partition_point(|&v| v <= t) - 1;
        self.xs[i] + (t - self.ys[i]) / self.slopes[i] + m
    }

    fn bounds(&self) -> DerivBounds {
        let lo = self.slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .slopes
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        DerivBounds::exact(lo, hi)
    }
}

/// Density-defined diffeomorphism: Dh(x) = e^{Φ(x)}/ξ with ξ = ∫₀¹ e^Φ,
/// normalized so h(0) = 0 (hence h(1) = 1: a degree-one lift).
#[derive(Debug, Clone)]
pub struct DensityMap {
    phi: BumpSum,
    xi: f64,
    table_x: Vec<f64>,
    table_h: Vec<f64>, // unnormalized cumulative ∫₀^{table_x[i]} e^Φ
    /// Spans on which Φ vanishes identically, where ∫ e^Φ is exactly the
    /// span width (no quadrature, no rounding from the node weights).
    zero_span: Vec<bool>,
}

impl DensityMap {
    fn new(phi: BumpSum, xi_hint: Option<f64>) -> Result<Self> {
        let mut table_x: Vec<f64> = Vec::new();
        table_x.push(0.0);
        table_x.extend(phi.breakpoints().iter().copied());
        for i in 1..128 {
            table_x.push(i as f64 / 128.0);
        }
        table_x.push(1.0);
        table_x.sort_by(f64::total_cmp);
        table_x.dedup();
        // Subdivide mass-carrying spans so the on-demand sub-span integrals
        // at evaluation time converge in one level instead of re-deriving the
        // subdivision on every call.
        let coarse = table_x;
        let mut table_x: Vec<f64> = Vec::with_capacity(coarse.len());
        for w in coarse.windows(2) {
            table_x.push(w[0]);
            if !phi.is_flat_at(0.5 * (w[0] + w[1])) {
                for i in 1..8 {
                    table_x.push(w[0] + (w[1] - w[0]) * i as f64 / 8.0);
                }
            }
        }
        table_x.push(1.0);
        table_x.dedup();
        let nspans = table_x.len() - 1;
        // Apportion the table budget by estimated span mass, scaled by the
        // total: downstream accuracy is on h = cumulative/ξ, so the tolerance
        // that matters is relative to ξ. A fixed absolute share would sit
        // below the evaluation-noise floor once the integrand reaches e^Φ ≫ 1
        // and stall the adaptive rule on ulp-level structure.
        let mut mass = Vec::with_capacity(nspans);
        let mut mass_total = 0.0;
        for w in table_x.windows(2) {
            // Support endpoints are breakpoints, so a span whose midpoint is
            // outside every support lies entirely outside them.
            let m = if phi.is_flat_at(0.5 * (w[0] + w[1])) {
                w[1] - w[0]
            } else {
                // single fixed-order estimate; only used to weight tolerances
                quad::estimate(|u| phi.eval(u).exp(), w[0], w[1])
            };
            mass.push(m);
            mass_total += m;
        }
        let budget = DENSITY_TABLE_TOL * mass_total.max(1.0);
        let floor = 1e-3 * budget / nspans as f64;
        let mut table_h = Vec::with_capacity(table_x.len());
        table_h.push(0.0);
        let mut zero_span = Vec::with_capacity(nspans);
        let mut acc = 0.0;
        for (i, w) in table_x.windows(2).enumerate() {
            let flat = phi.is_flat_at(0.5 * (w[0] + w[1]));
            zero_span.push(flat);
            if flat {
                acc += w[1] - w[0];
            } else {
                let span_tol = (budget * mass[i] / mass_total).max(floor);
                let q = quad::integrate(|u| phi.eval(u).exp(), w[0], w[1], span_tol)?;
                acc += q.value;
            }
            table_h.push(acc);
        }
        let xi = acc;
        if let Some(hint) = xi_hint {
            if (hint - xi).abs() > 1e-9 * xi.max(1.0) {
                return Err(CoreError::InvalidSpec(format!(
                    "stored normalizer {hint} disagrees with recomputed {xi}"
                )));
            }
        }
        Ok(DensityMap {
            phi,
            xi,
            table_x,
            table_h,
            zero_span,
        })
    }

    pub fn phi(&self) -> &BumpSum {
        &self.phi
    }

    /// The normalizer ξ = ∫₀¹ e^Φ.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// h on [0, 1) (values in [0, 1)).
    fn h0(&self, t: f64) -> f64 {
        let i = (self.table_x.partition_point(|&k| k <= t) - 1).min(self.zero_span.len() - 1);
        let inc = if self.zero_span[i] {
            t - self.table_x[i]
        } else {
            let a = self.table_x[i];
            let tol = (DENSITY_EVAL_REL * (t - a) * self.phi.eval(0.5 * (a + t)).exp())
                .max(DENSITY_EVAL_TOL);
            // Span [table_x[i], table_x[i+1]) is analytic; the on-demand
            // integral over a sub-span of a certified-smooth piece cannot fail.
            quad::integrate(|u| self.phi.eval(u).exp(), a, t, tol)
                .expect("span integral of a smooth density piece")
                .value
        };
        (self.table_h[i] + inc) / self.xi
    }

    fn eval(&self, x: f64) -> f64 {
        let (t, k) = split_unit(x);
        self.h0(t) + k
    }

    fn deriv(&self, x: f64) -> f64 {
        let (t, _) = split_unit(x);
        self.phi.eval(t).exp() / self.xi
    }

    fn invert(&self, y: f64) -> f64 {
        let (t, k) = split_unit(y);
        let target = t * self.xi;
        let i = self.table_h.partition_point(|&v| v <= target).max(1) - 1;
        let mut i_lo = i.min(self.table_x.len() - 2);
        let mut i_hi = i_lo + 1;
        // Table values and the division by ξ both round, so the nominal span
        // can miss the target by an ulp; widen until the bracket encloses it.
        while i_lo > 0 && self.h0(self.table_x[i_lo]) > t {
            i_lo -= 1;
        }
        while i_hi + 1 < self.table_x.len() && self.h0(self.table_x[i_hi]) < t {
            i_hi += 1;
        }
        let x = invert_monotone(
            |u| self.h0(u),
            |u| self.phi.eval(u).exp() / self.xi,
            t,
            self.table_x[i_lo],
            self.table_x[i_hi],
        )
        .expect("density inversion: cumulative table brackets the target");
        x + k
    }

    fn bounds(&self) -> DerivBounds {
        // Analytic: per overlap group of supports, Φ is bounded by the local
        // signed amplitude sums (a long train of disjoint bumps does not
        // accumulate, so the bound stays finite for large families).
        let (lo_phi, hi_phi) = self.phi.range_bounds();
        DerivBounds::exact(lo_phi.exp() / self.xi, hi_phi.exp() / self.xi)
    }
}

/// A compactly supported modification of the identity on one arc.
#[derive(Debug, Clone)]
pub struct Patch {
    lo: f64,
    hi: f64,
    kind: PatchKind,
}

#[derive(Debug, Clone)]
enum PatchKind {
    /// Dh(s) = 1 + amplitude·ψ_δ((s − c)/w): integrates to the identity at
    /// both patch ends because ψ_δ has exact zero mean.
    BumpDensity {
        amplitude: f64,
        delta: f64,
        profile: PiecewisePoly, // placed zero-mean density profile
    },
    /// h(s) = s + χ(s)·(A(f⁻ᵏ(s)) − s): forces the map toward the affine
    /// re-coordinatization A ∘ f⁻ᵏ on the plateau of the cutoff χ and blends
    /// back to the identity at the patch edges.
    Straighten {
        chain_slope: f64,
        chain_offset: f64,
        back_steps: usize,
        base: Arc<MonotoneLift>,
        cutoff: PiecewisePoly,   // placed blend cutoff
        d_cutoff: PiecewisePoly, // its derivative
    },
}

impl Patch {
    /// Derivative-bump patch on [lo, hi] with Dh = 1 + amplitude·ψ_δ.
    pub fn bump_density(lo: f64, hi: f64, amplitude: f64, delta: f64) -> Result<Patch> {
        validate_patch_interval(lo, hi)?;
        if amplitude < 0.0 {
            return Err(CoreError::param("amplitude", "must be nonnegative"));
        }
        if amplitude * delta >= 1.0 {
            return Err(CoreError::param(
                "amplitude",
                format!("amplitude·delta = {} ≥ 1 would destroy monotonicity", amplitude * delta),
            ));
        }
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let profile = zero_mean_profile(delta)?.place_on(center, half);
        Ok(Patch {
            lo,
            hi,
            kind: PatchKind::BumpDensity {
                amplitude,
                delta,
                profile,
            },
        })
    }

    /// Straightening patch on [lo, hi]: pull back k steps through `base`,
    /// then apply the affine chain A(y) = chain_slope·y + chain_offset,
    /// blended to the identity near the patch edges.
    pub fn straighten(
        lo: f64,
        hi: f64,
        chain_slope: f64,
        chain_offset: f64,
        back_steps: usize,
        base: Arc<MonotoneLift>,
    ) -> Result<Patch> {
        validate_patch_interval(lo, hi)?;
        if !(chain_slope > 0.0) {
            return Err(CoreError::param("chain_slope", "must be positive"));
        }
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        // Normalized cutoff support is |t| ≤ 7/16 of the patch width: place it
        // so it vanishes with margin inside the patch (support half = 7/8·half,
        // plateau half = 5/8·half).
        let cutoff = blend_cutoff().place_on(center, half * (7.0 / 8.0));
        let d_cutoff = cutoff.derivative();
        Ok(Patch {
            lo,
            hi,
            kind: PatchKind::Straighten {
                chain_slope,
                chain_offset,
                back_steps,
                base,
                cutoff,
                d_cutoff,
            },
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Value of the patch map at s ∈ [lo, hi].
    fn eval(&self, s: f64) -> f64 {
        match &self.kind {
            PatchKind::BumpDensity {
                amplitude, profile, ..
            } => s + amplitude * profile.cumulative(s),
            PatchKind::Straighten {
                chain_slope,
                chain_offset,
                back_steps,
                base,
                cutoff,
                ..
            } => {
                let chi = cutoff.eval(s);
                if chi == 0.0 {
                    return s;
                }
                let mut z = s;
                for _ in 0..*back_steps {
                    z = base.invert(z);
                }
                let g = chain_slope * z + chain_offset;
                s + chi * (g - s)
            }
        }
    }

    fn deriv(&self, s: f64) -> f64 {
        match &self.kind {
            PatchKind::BumpDensity {
                amplitude, profile, ..
            } => 1.0 + amplitude * profile.eval(s),
            PatchKind::Straighten {
                chain_slope,
                chain_offset,
                back_steps,
                base,
                cutoff,
                d_cutoff,
            } => {
                let chi = cutoff.eval(s);
                let dchi = d_cutoff.eval(s);
                if chi == 0.0 && dchi == 0.0 {
                    return 1.0;
                }
                let mut z = s;
                let mut dback = 1.0;
                for _ in 0..*back_steps {
                    z = base.invert(z);
                    dback /= base.deriv(z);
                }
                let g = chain_slope * z + chain_offset;
                let dg = chain_slope * dback;
                1.0 + dchi * (g - s) + chi * (dg - 1.0)
            }
        }
    }

    /// Interior knots (relative to the patch map's smooth structure).
    fn knots(&self) -> Vec<f64> {
        match &self.kind {
            PatchKind::BumpDensity { profile, .. } => profile.knots().to_vec(),
            PatchKind::Straighten { cutoff, .. } => cutoff.knots().to_vec(),
        }
    }

    fn bounds(&self) -> DerivBounds {
        match &self.kind {
            PatchKind::BumpDensity {
                amplitude, delta, ..
            } => {
                // ψ_δ has exact range [−δ, 1]
                DerivBounds::exact(1.0 - amplitude * delta, 1.0 + amplitude)
            }
            PatchKind::Straighten { .. } => {
                // Sampled: patch grid + knots, refined near the cutoff edges.
                let mut grid: Vec<f64> = Vec::new();
                let n = 257;
                for i in 0..=n {
                    grid.push(self.lo + (self.hi - self.lo) * i as f64 / n as f64);
                }
                for k in self.knots() {
                    for d in [-1e-9, -1e-6, 0.0, 1e-6, 1e-9] {
                        let s = k + d * (self.hi - self.lo);
                        if s >= self.lo && s <= self.hi {
                            grid.push(s);
                        }
                    }
                }
                let mut lo_b = f64::INFINITY;
                let mut hi_b = f64::NEG_INFINITY;
                for &s in &grid {
                    let d = self.deriv(s);
                    lo_b = lo_b.min(d);
                    hi_b = hi_b.max(d);
                }
                DerivBounds {
                    lo: lo_b,
                    hi: hi_b,
                    sampled: true,
                }
            }
        }
    }
}

fn validate_patch_interval(lo: f64, hi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lo) {
        return Err(CoreError::param("lo", "patch start must lie in [0, 1)"));
    }
    if !(hi > lo && hi < lo + 1.0) {
        return Err(CoreError::param(
            "hi",
            "patch must satisfy lo < hi < lo + 1",
        ));
    }
    Ok(())
}

/// Identity outside finitely many disjoint patches.
#[derive(Debug, Clone)]
pub struct DeformationMap {
    patches: Vec<Patch>,
}

impl DeformationMap {
    fn new(mut patches: Vec<Patch>) -> Result<Self> {
        patches.sort_by(|p, q| p.lo.total_cmp(&q.lo));
        // circle-disjointness: successive arcs must not overlap, and the last
        // must not wrap into the first
        for w in patches.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(CoreError::Construction(format!(
                    "patches overlap: [{}, {}] and [{}, {}]",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        if patches.len() >= 2 {
            let last = patches.last().unwrap();
            if last.hi > 1.0 && frac(last.hi) > patches[0].lo {
                return Err(CoreError::Construction(
                    "wrapping patch overlaps the first patch".into(),
                ));
            }
        }
        if patches.len() == 1 && patches[0].hi - patches[0].lo >= 1.0 {
            return Err(CoreError::Construction("patch covers the whole circle".into()));
        }
        Ok(DeformationMap { patches })
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    /// Representative of x (mod 1) inside a patch, if any. Patches are sorted
    /// and disjoint, so the only candidates are the last patch starting at or
    /// before t and (for t just above 0) the final patch when it wraps past 1.
    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.patches.is_empty() {
            return None;
        }
        let i = self.patches.partition_point(|p| p.lo <= t);
        if i > 0 && t <= self.patches[i - 1].hi {
            return Some((i - 1, t));
        }
        let last = self.patches.len() - 1;
        let s = t + 1.0;
        if s >= self.patches[last].lo && s <= self.patches[last].hi {
            return Some((last, s));
        }
        None
    }

    fn eval(&self, x: f64) -> f64 {
        let (t, k) = split_unit(x);
        match self.locate(t) {
            Some((i, s)) => self.patches[i].eval(s) - (s - t) + k,
            None => x,
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        let (t, _) = split_unit(x);
        match self.locate(t) {
            Some((i, s)) => self.patches[i].deriv(s),
            None => 1.0,
        }
    }

    fn invert(&self, y: f64) -> f64 {
        // Patch endpoints are fixed points, so the patch arcs are invariant:
        // y in a patch arc ⟺ its preimage is in the same arc. The patch
        // formulas continue as the identity just outside [lo, hi], so a hair
        // of slack keeps the bracket valid under endpoint rounding.
        let (t, k) = split_unit(y);
        match self.locate(t) {
            Some((i, s)) => {
                let p = &self.patches[i];
                let slack = 1e-9 * (p.hi - p.lo);
                let x = invert_monotone(
                    |u| p.eval(u),
                    |u| p.deriv(u),
                    s,
                    p.lo - slack,
                    p.hi + slack,
                )
                .expect("deformation patch inversion: endpoints bracket the target");
                x - (s - t) + k
            }
            None => y,
        }
    }

    fn bounds(&self) -> DerivBounds {
        let mut b = DerivBounds::exact(1.0, 1.0);
        for p in &self.patches {
            let pb = p.bounds();
            b.lo = b.lo.min(pb.lo);
            b.hi = b.hi.max(pb.hi);
            b.sampled |= pb.sampled;
        }
        b
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.patches {
            out.push(frac(p.lo));
            out.push(frac(p.hi));
            for k in p.knots() {
                out.push(frac(k));
            }
        }
        out
    }
}

/// Expression-tree node.
#[derive(Debug, Clone)]
pub enum LiftNode {
    Rotation { rho: f64 },
    Patchwork(Patchwork),
    Density(DensityMap),
    Deformation(DeformationMap),
    /// Compose(l, r) = l ∘ r.
    Compose(Arc<MonotoneLift>, Arc<MonotoneLift>),
    Inverse(Arc<MonotoneLift>),
}

/// Certified monotone degree-one lift. See module docs.
#[derive(Debug, Clone)]
pub struct MonotoneLift {
    node: LiftNode,
    breakpoints: Vec<f64>,
    bounds: DerivBounds,
}

impl MonotoneLift {
    /// Rigid rotation x ↦ x + ρ.
    pub fn rotation(rho: f64) -> MonotoneLift {
        MonotoneLift {
            node: LiftNode::Rotation { rho },
            breakpoints: Vec::new(),
            bounds: DerivBounds::exact(1.0, 1.0),
        }
    }

    /// The identity map (a deformation with no patches).
    pub fn identity() -> MonotoneLift {
        MonotoneLift {
            node: LiftNode::Deformation(DeformationMap {
                patches: Vec::new(),
            }),
            breakpoints: Vec::new(),
            bounds: DerivBounds::exact(1.0, 1.0),
        }
    }

    /// Piecewise-affine lift through the given knots.
    pub fn patchwork(xs: Vec<f64>, ys: Vec<f64>) -> Result<MonotoneLift> {
        let pw = Patchwork::new(xs, ys)?;
        let bounds = pw.bounds();
        let breakpoints = pw.xs.clone();
        Self::certified(LiftNode::Patchwork(pw), breakpoints, bounds)
    }

    /// Density-defined diffeomorphism Dh = e^Φ/ξ, h(0) = 0.
    pub fn density(phi: BumpSum) -> Result<MonotoneLift> {
        Self::density_with_hint(phi, None)
    }

    fn density_with_hint(phi: BumpSum, xi_hint: Option<f64>) -> Result<MonotoneLift> {
        let dm = DensityMap::new(phi, xi_hint)?;
        let bounds = dm.bounds();
        let breakpoints = dm.phi.breakpoints().to_vec();
        Self::certified(LiftNode::Density(dm), breakpoints, bounds)
    }

    /// Identity outside the given disjoint patches.
    pub fn deformation(patches: Vec<Patch>) -> Result<MonotoneLift> {
        let dm = DeformationMap::new(patches)?;
        let bounds = dm.bounds();
        let breakpoints = normalize_breakpoints(dm.breakpoints());
        Self::certified(LiftNode::Deformation(dm), breakpoints, bounds)
    }

    /// l ∘ r.
    pub fn compose(l: Arc<MonotoneLift>, r: Arc<MonotoneLift>) -> MonotoneLift {
        let mut bps = r.breakpoints.clone();
        for &b in &l.breakpoints {
            bps.push(frac(r.invert(b)));
        }
        let bounds = DerivBounds {
            lo: l.bounds.lo * r.bounds.lo,
            hi: l.bounds.hi * r.bounds.hi,
            sampled: l.bounds.sampled || r.bounds.sampled,
        };
        MonotoneLift {
            node: LiftNode::Compose(l, r),
            breakpoints: normalize_breakpoints(bps),
            bounds,
        }
    }

    /// The inverse lift.
    pub fn inverse(inner: Arc<MonotoneLift>) -> MonotoneLift {
        let bps = inner
            .breakpoints
            .iter()
            .map(|&b| frac(inner.eval(b)))
            .collect();
        let bounds = DerivBounds {
            lo: 1.0 / inner.bounds.hi,
            hi: 1.0 / inner.bounds.lo,
            sampled: inner.bounds.sampled,
        };
        MonotoneLift {
            node: LiftNode::Inverse(inner),
            breakpoints: normalize_breakpoints(bps),
            bounds,
        }
    }

    /// h ∘ f ∘ h⁻¹.
    pub fn conjugate(h: Arc<MonotoneLift>, f: Arc<MonotoneLift>) -> MonotoneLift {
        let inv = Arc::new(MonotoneLift::inverse(h.clone()));
        let inner = Arc::new(MonotoneLift::compose(f, inv));
        MonotoneLift::compose(h, inner)
    }

    fn certified(node: LiftNode, breakpoints: Vec<f64>, bounds: DerivBounds) -> Result<MonotoneLift> {
        if !(bounds.lo > DERIV_FLOOR) {
            return Err(CoreError::Degenerate {
                min_deriv: bounds.lo,
                at: f64::NAN,
                floor: DERIV_FLOOR,
            });
        }
        Ok(MonotoneLift {
            node,
            breakpoints: normalize_breakpoints(breakpoints),
            bounds,
        })
    }

    pub fn node(&self) -> &LiftNode {
        &self.node
    }

    /// Sorted breakpoints in [0, 1).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Derivative bounds certified at construction.
    pub fn deriv_bounds(&self) -> DerivBounds {
        self.bounds
    }

    /// F(x). Degree-one: F(x + 1) = F(x) + 1.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.node {
            LiftNode::Rotation { rho } => x + rho,
            LiftNode::Patchwork(pw) => pw.eval(x),
            LiftNode::Density(dm) => dm.eval(x),
            LiftNode::Deformation(dm) => dm.eval(x),
            LiftNode::Compose(l, r) => l.eval(r.eval(x)),
            LiftNode::Inverse(inner) => inner.invert(x),
        }
    }

    /// DF(x); 1-periodic and positive.
    pub fn deriv(&self, x: f64) -> f64 {
        match &self.node {
            LiftNode::Rotation { .. } => 1.0,
            LiftNode::Patchwork(pw) => pw.deriv(x),
            LiftNode::Density(dm) => dm.deriv(x),
            LiftNode::Deformation(dm) => dm.deriv(x),
            LiftNode::Compose(l, r) => l.deriv(r.eval(x)) * r.deriv(x),
            LiftNode::Inverse(inner) => 1.0 / inner.deriv(inner.invert(x)),
        }
    }

    /// F⁻¹(y). Exact for rotation/patchwork/compose/inverse and outside
    /// deformation patches; Newton polished to the last bit elsewhere.
    pub fn invert(&self, y: f64) -> f64 {
        match &self.node {
            LiftNode::Rotation { rho } => y - rho,
            LiftNode::Patchwork(pw) => pw.invert(y),
            LiftNode::Density(dm) => dm.invert(y),
            LiftNode::Deformation(dm) => dm.invert(y),
            LiftNode::Compose(l, r) => r.invert(l.invert(y)),
            LiftNode::Inverse(inner) => inner.eval(y),
        }
    }
}

fn normalize_breakpoints(mut bps: Vec<f64>) -> Vec<f64> {
    for b in &mut bps {
        *b = frac(*b);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    bps
}

// ---------------------------------------------------------------------------
// Serializable description
// ---------------------------------------------------------------------------

/// Serializable description of a lift. Reconstruction re-runs the full
/// validation and certification pipeline, so a tampered description is
/// rejected rather than trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LiftSpec {
    Rotation {
        rho: f64,
    },
    Patchwork {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
    Density {
        bumps: Vec<PlacedBump>,
        /// Stored normalizer; verified against recomputation on load.
        xi: f64,
    },
    Deformation {
        patches: Vec<PatchSpec>,
    },
    Compose(Box<LiftSpec>, Box<LiftSpec>),
    Inverse(Box<LiftSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PatchSpec {
    BumpDensity {
        lo: f64,
        hi: f64,
        amplitude: f64,
        delta: f64,
    },
    Straighten {
        lo: f64,
        hi: f64,
        chain_slope: f64,
        chain_offset: f64,
        back_steps: usize,
        base: Box<LiftSpec>,
    },
}

impl MonotoneLift {
    /// Serializable description of this lift.
    pub fn to_spec(&self) -> LiftSpec {
        match &self.node {
            LiftNode::Rotation { rho } => LiftSpec::Rotation { rho: *rho },
            LiftNode::Patchwork(pw) => LiftSpec::Patchwork {
                xs: pw.xs.clone(),
                ys: pw.ys.clone(),
            },
            LiftNode::Density(dm) => LiftSpec::Density {
                bumps: dm.phi.bumps().to_vec(),
                xi: dm.xi,
            },
            LiftNode::Deformation(dm) => LiftSpec::Deformation {
                patches: dm
                    .patches
                    .iter()
                    .map(|p| match &p.kind {
                        PatchKind::BumpDensity {
                            amplitude, delta, ..
                        } => PatchSpec::BumpDensity {
                            lo: p.lo,
                            hi: p.hi,
                            amplitude: *amplitude,
                            delta: *delta,
                        },
                        PatchKind::Straighten {
                            chain_slope,
                            chain_offset,
                            back_steps,
                            base,
                            ..
                        } => PatchSpec::Straighten {
                            lo: p.lo,
                            hi: p.hi,
                            chain_slope: *chain_slope,
                            chain_offset: *chain_offset,
                            back_steps: *back_steps,
                            base: Box::new(base.to_spec()),
                        },
                    })
                    .collect(),
            },
            LiftNode::Compose(l, r) => {
                LiftSpec::Compose(Box::new(l.to_spec()), Box::new(r.to_spec()))
            }
            LiftNode::Inverse(inner) => LiftSpec::Inverse(Box::new(inner.to_spec())),
        }
    }

    /// Rebuild (and re-certify) a lift from its description.
    pub fn from_spec(spec: &LiftSpec) -> Result<MonotoneLift> {
        let mut cache: Vec<(LiftSpec, Arc<MonotoneLift>)> = Vec::new();
        Self::from_spec_cached(spec, &mut cache)
    }

    fn from_spec_cached(
        spec: &LiftSpec,
        cache: &mut Vec<(LiftSpec, Arc<MonotoneLift>)>,
    ) -> Result<MonotoneLift> {
        Ok(match spec {
            LiftSpec::Rotation { rho } => MonotoneLift::rotation(*rho),
            LiftSpec::Patchwork { xs, ys } => MonotoneLift::patchwork(xs.clone(), ys.clone())?,
            LiftSpec::Density { bumps, xi } => {
                MonotoneLift::density_with_hint(BumpSum::new(bumps.clone()), Some(*xi))?
            }
            LiftSpec::Deformation { patches } => {
                let mut built = Vec::with_capacity(patches.len());
                for ps in patches {
                    built.push(match ps {
                        PatchSpec::BumpDensity {
                            lo,
                            hi,
                            amplitude,
                            delta,
                        } => Patch::bump_density(*lo, *hi, *amplitude, *delta)?,
                        PatchSpec::Straighten {
                            lo,
                            hi,
                            chain_slope,
                            chain_offset,
                            back_steps,
                            base,
                        } => {
                            let base_lift = Self::shared_from_spec(base, cache)?;
                            Patch::straighten(
                                *lo,
                                *hi,
                                *chain_slope,
                                *chain_offset,
                                *back_steps,
                                base_lift,
                            )?
                        }
                    });
                }
                MonotoneLift::deformation(built)?
            }
            LiftSpec::Compose(l, r) => {
                let lm = Self::shared_from_spec(l, cache)?;
                let rm = Self::shared_from_spec(r, cache)?;
                MonotoneLift::compose(lm, rm)
            }
            LiftSpec::Inverse(inner) => {
                let im = Self::shared_from_spec(inner, cache)?;
                MonotoneLift::inverse(im)
            }
        })
    }

    fn shared_from_spec(
        spec: &LiftSpec,
        cache: &mut Vec<(LiftSpec, Arc<MonotoneLift>)>,
    ) -> Result<Arc<MonotoneLift>> {
        if let Some((_, lift)) = cache.iter().find(|(s, _)| s == spec) {
            return Ok(lift.clone());
        }
        let lift = Arc::new(Self::from_spec_cached(spec, cache)?);
        cache.push((spec.clone(), lift.clone()));
        Ok(lift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_degree_one(f: &MonotoneLift, xs: &[f64]) {
        for &x in xs {
            let a = f.eval(x + 1.0);
            let b = f.eval(x) + 1.0;
            assert!((a - b).abs() < 1e-12, "degree-one at {x}: {a} vs {b}");
        }
    }

    fn assert_roundtrip(f: &MonotoneLift, xs: &[f64], tol: f64) {
        for &x in xs {
            let y = f.eval(x);
            let back = f.invert(y);
            assert!(
                (back - x).abs() < tol,
                "roundtrip at {x}: invert(eval) = {back}"
            );
        }
    }

    const SAMPLES: [f64; 9] = [0.0, 0.1, 0.25, 0.37, 0.5, 0.61, 0.75, 0.9, 0.99];

    #[test]
    fn rotation_basics() {
        let r = MonotoneLift::rotation(0.38);
        assert_eq!(r.eval(0.5), 0.88);
        assert_eq!(r.invert(0.88), 0.5);
        assert_eq!(r.deriv(0.1), 1.0);
        assert_degree_one(&r, &SAMPLES);
    }

    #[test]
    fn patchwork_eval_invert_deriv() {
        let f = MonotoneLift::patchwork(vec![0.0, 0.25, 0.5], vec![0.0, 0.5, 0.75]).unwrap();
        // slopes: [2, 1, 0.5] (wrap: (1.0 − 0.75)/(1.0 − 0.5) = 0.5)
        assert_eq!(f.deriv(0.1), 2.0);
        assert_eq!(f.deriv(0.3), 1.0);
        assert_eq!(f.deriv(0.7), 0.5);
        assert_eq!(f.eval(0.25), 0.5);
        assert!((f.eval(0.125) - 0.25).abs() < 1e-15);
        assert_degree_one(&f, &SAMPLES);
        assert_roundtrip(&f, &SAMPLES, 1e-14);
        // inverse at a knot value
        assert_eq!(f.invert(0.5), 0.25);
        // negative arguments
        assert!((f.eval(-0.75) - (f.eval(0.25) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn patchwork_with_offset_knots() {
        // first knot not at 0: wrap segment covers [0, xs[0])
        let f = MonotoneLift::patchwork(vec![0.2, 0.6], vec![0.1, 0.7]).unwrap();
        assert_degree_one(&f, &SAMPLES);
        assert_roundtrip(&f, &SAMPLES, 1e-14);
        // continuity at the first knot from below
        let eps = 1e-9;
        assert!((f.eval(0.2 - eps) - (0.1 - eps * f.deriv(0.1))).abs() < 1e-12);
    }

    #[test]
    fn patchwork_rejects_non_monotone() {
        assert!(MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.5, 0.2]).is_err());
        assert!(MonotoneLift::patchwork(vec![0.5, 0.0], vec![0.0, 0.5]).is_err());
        assert!(MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.0, 1.2]).is_err());
    }

    #[test]
    fn density_normalization_and_inversion() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.5,
            half_width: 0.1,
            amplitude: 1.0,
        }]);
        let h = MonotoneLift::density(phi).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert!((h.eval(1.0) - 1.0).abs() < 1e-12);
        assert_degree_one(&h, &SAMPLES);
        assert_roundtrip(&h, &SAMPLES, 1e-12);
        // derivative = e^Φ/ξ
        if let LiftNode::Density(dm) = h.node() {
            assert!((dm.xi() - 1.0) > 0.0, "positive bump ⇒ ξ > 1");
            let x = 0.5;
            assert!((h.deriv(x) - (1.0_f64.exp() / dm.xi())).abs() < 1e-13);
            let x = 0.2; // flat zone: Φ = 0
            assert!((h.deriv(x) - 1.0 / dm.xi()).abs() < 1e-13);
        } else {
            panic!("expected density node");
        }
    }

    #[test]
    fn density_xi_against_independent_quadrature() {
        let phi = BumpSum::new(vec![
            PlacedBump {
                center: 0.3,
                half_width: 0.05,
                amplitude: 0.7,
            },
            PlacedBump {
                center: 0.8,
                half_width: 0.02,
                amplitude: -0.4,
            },
        ]);
        let h = MonotoneLift::density(phi.clone()).unwrap();
        let q = quad::integrate_with_breakpoints(
            |u| phi.eval(u).exp(),
            0.0,
            1.0,
            phi.breakpoints(),
            1e-13,
        )
        .unwrap();
        if let LiftNode::Density(dm) = h.node() {
            assert!((dm.xi() - q.value).abs() < 1e-11);
        } else {
            unreachable!()
        }
    }

    #[test]
    fn bump_density_patch_shape() {
        let p = Patch::bump_density(0.4, 0.6, 0.5, 0.2).unwrap();
        let f = MonotoneLift::deformation(vec![p]).unwrap();
        // identity outside
        assert_eq!(f.eval(0.3), 0.3);
        assert_eq!(f.eval(0.7), 0.7);
        assert_eq!(f.deriv(0.2), 1.0);
        // endpoints fixed
        assert!((f.eval(0.4) - 0.4).abs() < 1e-15);
        assert!((f.eval(0.6) - 0.6).abs() < 1e-14);
        // center derivative = 1 + amplitude (ψ has value 1 at its center)
        assert!((f.deriv(0.5) - 1.5).abs() < 1e-13);
        // trough derivative reaches 1 − amplitude·δ somewhere
        let mut min_d = f64::INFINITY;
        for i in 0..=2000 {
            let x = 0.4 + 0.2 * i as f64 / 2000.0;
            min_d = min_d.min(f.deriv(x));
        }
        assert!((min_d - (1.0 - 0.5 * 0.2)).abs() < 1e-6);
        assert_degree_one(&f, &SAMPLES);
        assert_roundtrip(&f, &SAMPLES, 1e-12);
    }

    #[test]
    fn deformation_patch_across_wrap() {
        let p = Patch::bump_density(0.95, 1.05, 0.3, 0.1).unwrap();
        let f = MonotoneLift::deformation(vec![p]).unwrap();
        assert_eq!(f.eval(0.5), 0.5);
        // affected on both sides of the wrap
        assert!((f.deriv(0.0) - 1.3).abs() < 1e-12, "center at 1.0 ≡ 0.0");
        assert!(f.deriv(0.97) != 1.0 || f.deriv(0.99) != 1.0);
        assert_degree_one(&f, &SAMPLES);
        assert_roundtrip(&f, &SAMPLES, 1e-12);
    }

    #[test]
    fn deformation_rejects_overlap() {
        let a = Patch::bump_density(0.1, 0.3, 0.2, 0.1).unwrap();
        let b = Patch::bump_density(0.25, 0.5, 0.2, 0.1).unwrap();
        assert!(MonotoneLift::deformation(vec![a, b]).is_err());
        let c = Patch::bump_density(0.9, 1.15, 0.2, 0.1).unwrap();
        let d = Patch::bump_density(0.1, 0.3, 0.2, 0.1).unwrap();
        assert!(MonotoneLift::deformation(vec![c, d]).is_err());
    }

    #[test]
    fn straighten_patch_on_rotation_base() {
        // base f = R_α; A(y) = y + kα reproduces the identity exactly:
        // G(s) = A(f⁻ᵏ(s)) = s, so the patch must be the identity map.
        let alpha = 0.38;
        let base = Arc::new(MonotoneLift::rotation(alpha));
        let k = 3;
        let p = Patch::straighten(0.4, 0.5, 1.0, k as f64 * alpha, k, base.clone()).unwrap();
        let f = MonotoneLift::deformation(vec![p]).unwrap();
        for &x in &SAMPLES {
            assert!((f.eval(x) - x).abs() < 1e-13, "identity at {x}");
            assert!((f.deriv(x) - 1.0).abs() < 1e-10);
        }

        // A nontrivial chain: G(s) = 1.05·(s − 3α) + c with c chosen to fix
        // the patch center; h blends G in and out across the patch.
        let center = 0.45;
        let offset = center - 1.05 * (center - k as f64 * alpha);
        let p = Patch::straighten(0.4, 0.5, 1.05, offset, k, base).unwrap();
        let f = MonotoneLift::deformation(vec![p]).unwrap();
        // fixed endpoints and center
        assert!((f.eval(0.4) - 0.4).abs() < 1e-13);
        assert!((f.eval(0.5) - 0.5).abs() < 1e-13);
        assert!((f.eval(center) - center).abs() < 1e-13);
        // derivative equals the chain slope on the cutoff plateau
        // (plateau = central 5/8 of the patch: |s − 0.45| ≤ 0.03125)
        assert!((f.deriv(0.45) - 1.05).abs() < 1e-12);
        assert!((f.deriv(0.43) - 1.05).abs() < 1e-12);
        // identity regained outside
        assert_eq!(f.eval(0.39), 0.39);
        assert_eq!(f.eval(0.51), 0.51);
        assert_roundtrip(&f, &SAMPLES, 1e-12);
        assert_degree_one(&f, &SAMPLES);
    }

    #[test]
    fn compose_rotations_add() {
        let a = Arc::new(MonotoneLift::rotation(0.2));
        let b = Arc::new(MonotoneLift::rotation(0.3));
        let c = MonotoneLift::compose(a, b);
        for &x in &SAMPLES {
            assert!((c.eval(x) - (x + 0.5)).abs() < 1e-15);
        }
        assert_roundtrip(&c, &SAMPLES, 1e-14);
    }

    #[test]
    fn compose_and_inverse_collapse() {
        let f = Arc::new(
            MonotoneLift::patchwork(vec![0.0, 0.3, 0.7], vec![0.1, 0.45, 0.8]).unwrap(),
        );
        let finv = Arc::new(MonotoneLift::inverse(f.clone()));
        let id = MonotoneLift::compose(f.clone(), finv.clone());
        for &x in &SAMPLES {
            assert!((id.eval(x) - x).abs() < 1e-13, "f∘f⁻¹ at {x}");
            // chain rule: D(f∘f⁻¹) = 1
            assert!((id.deriv(x) - 1.0).abs() < 1e-11);
        }
        // derivative of the inverse at a mapped point
        let x = 0.42;
        let y = f.eval(x);
        assert!((finv.deriv(y) - 1.0 / f.deriv(x)).abs() < 1e-12);
    }

    #[test]
    fn conjugate_builds_h_f_hinv() {
        let h = Arc::new(
            MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.0, 0.7]).unwrap(),
        );
        let f = Arc::new(MonotoneLift::rotation(0.25));
        let g = MonotoneLift::conjugate(h.clone(), f.clone());
        for &x in &SAMPLES {
            let expect = h.eval(f.eval(h.invert(x)));
            assert!((g.eval(x) - expect).abs() < 1e-13);
        }
        assert_degree_one(&g, &SAMPLES);
        assert_roundtrip(&g, &SAMPLES, 1e-12);
    }

    #[test]
    fn compose_breakpoints_pull_back() {
        let l = Arc::new(
            MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.0, 0.5]).unwrap(), // identity, knots {0, 0.5}
        );
        let r = Arc::new(MonotoneLift::rotation(0.2));
        let c = MonotoneLift::compose(l, r);
        // r has no breakpoints; l's pull back through r⁻¹: {−0.2, 0.3} → {0.8, 0.3}
        assert_eq!(c.breakpoints().len(), 2);
        assert!((c.breakpoints()[0] - 0.3).abs() < 1e-15);
        assert!((c.breakpoints()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn certified_bounds_bracket_actual_derivative() {
        let f = Arc::new(
            MonotoneLift::patchwork(vec![0.0, 0.25, 0.5], vec![0.0, 0.5, 0.75]).unwrap(),
        );
        let g = Arc::new(MonotoneLift::rotation(0.1));
        let c = MonotoneLift::compose(f.clone(), g);
        let b = c.deriv_bounds();
        for &x in &SAMPLES {
            let d = c.deriv(x);
            assert!(d >= b.lo - 1e-12 && d <= b.hi + 1e-12);
        }
        assert_eq!(f.deriv_bounds().lo, 0.5);
        assert_eq!(f.deriv_bounds().hi, 2.0);
    }

    #[test]
    fn degenerate_patchwork_rejected() {
        // slope of the middle segment ≈ 4e−11 < floor
        let e = 1e-11;
        let r = MonotoneLift::patchwork(vec![0.0, 0.25, 0.5], vec![0.0, 0.5, 0.5 + e]);
        assert!(matches!(r, Err(CoreError::Degenerate { .. })));
    }

    #[test]
    fn spec_roundtrip_preserves_values() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.25,
            half_width: 0.05,
            amplitude: 0.6,
        }]);
        let h = Arc::new(MonotoneLift::density(phi).unwrap());
        let r = Arc::new(MonotoneLift::rotation(0.38));
        let f = MonotoneLift::conjugate(h, r);
        let spec = f.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let spec2: LiftSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, spec2);
        let f2 = MonotoneLift::from_spec(&spec2).unwrap();
        for &x in &SAMPLES {
            assert!(
                (f.eval(x) - f2.eval(x)).abs() < 1e-12,
                "respec eval at {x}"
            );
        }
        // re-serialization is byte-identical
        assert_eq!(json, serde_json::to_string(&f2.to_spec()).unwrap());
    }

    #[test]
    fn spec_rejects_tampered_normalizer() {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.25,
            half_width: 0.05,
            amplitude: 0.6,
        }]);
        let h = MonotoneLift::density(phi).unwrap();
        let mut spec = h.to_spec();
        if let LiftSpec::Density { xi, .. } = &mut spec {
            *xi += 0.01;
        }
        assert!(matches!(
            MonotoneLift::from_spec(&spec),
            Err(CoreError::InvalidSpec(_))
        ));
    }

    #[test]
    fn shared_base_is_deduplicated() {
        let base = Arc::new(MonotoneLift::rotation(0.38));
        let p1 = Patch::straighten(0.1, 0.2, 1.0, 0.38, 1, base.clone()).unwrap();
        let p2 = Patch::straighten(0.4, 0.5, 1.0, 0.76, 2, base).unwrap();
        let f = MonotoneLift::deformation(vec![p1, p2]).unwrap();
        let spec = f.to_spec();
        let f2 = MonotoneLift::from_spec(&spec).unwrap();
        for &x in &SAMPLES {
            assert!((f.eval(x) - f2.eval(x)).abs() < 1e-13);
        }
    }
}
