//! Local affine normalization along a marked orbit.
//!
//! Given a circle lift f and a marked point x, [`build_linearizer`] produces a
//! conjugacy h — a compactly supported deformation of the identity — such that
//! the conjugated map h∘f∘h⁻¹ is exactly affine on a family of pairwise
//! disjoint intervals I_j surrounding the orbit points x_j = f^j(x) for
//! j ∈ [−n′, n+1]. Two regimes are handled:
//!
//! * **identity path** — when f is already affine on a neighborhood of every
//!   x_j (detected via breakpoint-free enlarged intervals plus a sampled
//!   derivative-spread test), the conjugacy is the identity and the intervals
//!   are small enough iterated images of a base interval I₀;
//! * **straightening path** — otherwise, each I_j with j ≠ 0 carries a patch
//!   that blends the map A_j ∘ f^{−j} into the identity near ∂I_j, where
//!   A_j(z) = x_j + B_j·(z − x₀) and B_j = Df^j(x₀) is the measured derivative
//!   cocycle. On the central plateau of each patch the conjugated map becomes
//!   the exact affine transition A_{j+1} ∘ A_j⁻¹, whose slope is the one-step
//!   derivative b_j = Df(x_j).
//!
//! The base interval is halved until the family is disjoint and one of the
//! regimes verifies. Halving is driven by cheap geometric tests first: while
//! intervals overlap, or a breakpoint of f sits inside an enlarged interval,
//! shrinking can only help, so no patches are built. Once the intervals are
//! breakpoint-free but the derivative spread shows smooth curvature that
//! cannot flatten above the width floor, the straightening path takes over —
//! restarted from the largest disjoint width, because downstream probing
//! wants the intervals as large as the derivative budget sup|Dh − 1| < δ
//! allows.
//!
//! In both regimes the result carries verified cores I′_j ⊆ I_j: the iterated
//! images of a centered core I′₀ on which the conjugated map is affine with
//! the predicted slopes. Core endpoints map to core endpoints and midpoints
//! to midpoints — downstream constructions rely on that exact alignment.

use std::sync::Arc;

use crate::circle::{dist, frac};
use crate::error::{CoreError, Result};
use crate::lift::{MonotoneLift, Patch};
use crate::orbit::OrbitTable;

/// Sample count for the derivative-spread affinity detector (per interval).
const AFFINE_DETECT_SAMPLES: usize = 17;
/// Uniform sample count per interval for the sup|Dh − 1| verification.
const DELTA_SAMPLES_PER_ARC: usize = 1000;
/// Sample count per core for the slope postcondition.
const CORE_SLOPE_SAMPLES: usize = 33;
/// The conjugacy must fix every marked orbit point to this accuracy.
const CENTER_FIX_TOL: f64 = 1e-12;
/// Marked orbits with a circular gap below this are treated as periodic.
const MIN_ORBIT_GAP: f64 = 1e-13;
/// Intervals are enlarged by this factor for the affinity detector, so the
/// certified-affine zone has margin around each interval.
const ENLARGE: f64 = 1.25;
/// Blocked-breakpoint events allowed before the identity path is abandoned;
/// each event jumps directly to the predicted clearing width, so repeated
/// blockage means the prediction is not converging.
const BLOCKED_RETRIES: u32 = 6;

/// Tunable policy for [`build_linearizer`].
#[derive(Debug, Clone)]
pub struct LinearizerConfig {
    /// Budget for sup|Dh − 1| over the patched intervals; must lie in (0, 1).
    pub delta: f64,
    /// Starting half-width of I₀. Capped at a quarter of the minimal circular
    /// gap of the marked orbit; `None` starts at that cap.
    pub initial_half_width: Option<f64>,
    /// Maximum number of times I₀ may be halved before giving up.
    pub max_halvings: u32,
    /// Hard floor for the half-width of I₀.
    pub width_floor: f64,
    /// Relative tolerance for the affine-slope postcondition on the cores.
    pub slope_tol: f64,
    /// Relative derivative-spread threshold for the affinity detector.
    pub affinity_tol: f64,
    /// Candidate core sizes as fractions of the I₀ half-width, tried in
    /// order; the first fraction whose iterated cores verify affine wins.
    pub core_fractions: Vec<f64>,
    /// The straightening path is only attempted while the total pull-back
    /// depth Σ|j| stays at or below this cap; above it the builder keeps
    /// shrinking I₀ toward locally affine zones instead.
    pub chain_cost_cap: usize,
}

impl Default for LinearizerConfig {
    fn default() -> Self {
        LinearizerConfig {
            delta: 0.1,
            initial_half_width: None,
            max_halvings: 40,
            width_floor: 1e-12,
            slope_tol: 1e-12,
            affinity_tol: 1e-12,
            core_fractions: vec![0.75, 0.625, 0.5, 0.45, 0.375, 0.3125, 0.25],
            chain_cost_cap: 2048,
        }
    }
}

/// Result of [`build_linearizer`]: the conjugacy, the conjugated map, and the
/// verified interval family. Intervals are stored in lift coordinates around
/// the lift orbit x_j = F^j(x₀), with x_j strictly inside (lo_j, hi_j).
#[derive(Debug, Clone)]
pub struct Linearizer {
    base: Arc<MonotoneLift>,
    conjugacy: Arc<MonotoneLift>,
    map: Arc<MonotoneLift>,
    j_min: i64,
    j_max: i64,
    centers: Vec<f64>,
    arcs: Vec<(f64, f64)>,
    cores: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    chain: Vec<f64>,
    half_width: f64,
    core_fraction: f64,
    halvings: u32,
    identity_conjugacy: bool,
    orbit_gap: f64,
}

impl Linearizer {
    /// The map that was linearized.
    pub fn base(&self) -> &Arc<MonotoneLift> {
        &self.base
    }

    /// The conjugacy h (identity outside the interval family).
    pub fn conjugacy(&self) -> &Arc<MonotoneLift> {
        &self.conjugacy
    }

    /// The conjugated map h∘f∘h⁻¹, affine on every core.
    pub fn map(&self) -> &Arc<MonotoneLift> {
        &self.map
    }

    /// Smallest orbit index in the family.
    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    /// Largest orbit index in the family.
    pub fn j_max(&self) -> i64 {
        self.j_max
    }

    #[inline]
    fn idx(&self, j: i64) -> usize {
        debug_assert!(j >= self.j_min && j <= self.j_max, "index {j} out of range");
        (j - self.j_min) as usize
    }

    /// Lift coordinate of the marked orbit point x_j.
    pub fn center(&self, j: i64) -> f64 {
        self.centers[self.idx(j)]
    }

    /// Interval I_j in lift coordinates (lo < x_j < hi).
    pub fn arc(&self, j: i64) -> (f64, f64) {
        self.arcs[self.idx(j)]
    }

    /// Verified-affine core I′_j in lift coordinates.
    pub fn core(&self, j: i64) -> (f64, f64) {
        self.cores[self.idx(j)]
    }

    /// Core I′_j in patch convention: lo ∈ [0, 1), hi = lo + width.
    pub fn core_rep(&self, j: i64) -> (f64, f64) {
        let (lo, hi) = self.core(j);
        let k = lo.floor();
        (lo - k, hi - k)
    }

    /// Interval I_j in patch convention: lo ∈ [0, 1), hi = lo + width.
    pub fn arc_rep(&self, j: i64) -> (f64, f64) {
        let (lo, hi) = self.arc(j);
        let k = lo.floor();
        (lo - k, hi - k)
    }

    /// One-step slope b_j = Df(x_j); on the cores the conjugated map is
    /// affine with exactly this slope from I′_j onto I′_{j+1}.
    pub fn slope(&self, j: i64) -> f64 {
        self.slopes[self.idx(j)]
    }

    /// Derivative cocycle B_j = Df^j(x₀).
    pub fn chain(&self, j: i64) -> f64 {
        self.chain[self.idx(j)]
    }

    /// Final half-width of the base interval I₀.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Core half-width as a fraction of the I₀ half-width.
    pub fn core_fraction(&self) -> f64 {
        self.core_fraction
    }

    /// Number of halvings applied to reach the final width.
    pub fn halvings(&self) -> u32 {
        self.halvings
    }

    /// True when the map was already affine near the orbit and the conjugacy
    /// is the identity.
    pub fn is_identity(&self) -> bool {
        self.identity_conjugacy
    }

    /// Minimal circular gap of the marked orbit over the widened horizon
    /// used to seed the interval width.
    pub fn orbit_gap(&self) -> f64 {
        self.orbit_gap
    }
}

/// Shared state of the width-halving search.
struct Search<'a> {
    f: &'a Arc<MonotoneLift>,
    orbit: &'a OrbitTable,
    j_min: i64,
    j_max: i64,
    config: &'a LinearizerConfig,
    /// Widths tried so far (initial attempt counts as 1).
    tried: u32,
    /// Smallest sup|Dh − 1| seen among rejected straightening attempts.
    best_delta: f64,
    /// Most recent rejection, for error reporting.
    last_reject: Option<Reject>,
}

/// Why an attempt at the current interval width was rejected.
enum Reject {
    Overlap(String),
    NotAffine(String),
    Delta,
    Core(String),
}

/// Verdict of the affinity detector over the whole interval family.
enum Affinity {
    /// Every enlarged interval is breakpoint-free with flat derivative.
    Affine,
    /// A breakpoint of f sits inside an enlarged interval; shrinking the
    /// family can free it.
    Blocked(String),
    /// Breakpoint-free but genuinely curved; the worst relative derivative
    /// spread is reported for reachability extrapolation.
    Curved { spread_rel: f64 },
}

/// Build the linearizing conjugacy for the orbit family j ∈ [−n′, n+1].
///
/// See the module docs for the construction. Fails with
/// [`CoreError::DeltaUnreachable`] when the derivative budget cannot be met
/// within the halving allowance, [`CoreError::EmptyCore`] when no centered
/// core verifies affine, and [`CoreError::Construction`] when the interval
/// family cannot be made disjoint or affine (for example on a near-periodic
/// orbit).
pub fn build_linearizer(
    f: Arc<MonotoneLift>,
    x: f64,
    n: usize,
    n_prime: usize,
    config: &LinearizerConfig,
) -> Result<Linearizer> {
    if !x.is_finite() {
        return Err(CoreError::param("x", "marked point must be finite"));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(CoreError::param("delta", "must lie in (0, 1)"));
    }
    if n + n_prime == 0 {
        return Err(CoreError::param(
            "n_prime",
            "orbit family must extend beyond the base interval",
        ));
    }
    if config.core_fractions.is_empty() {
        return Err(CoreError::param("core_fractions", "must be nonempty"));
    }
    if config.core_fractions.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(CoreError::param(
            "core_fractions",
            "fractions must lie in (0, 1)",
        ));
    }
    if !(config.width_floor > 0.0) {
        return Err(CoreError::param("width_floor", "must be positive"));
    }

    let j_min = -(n_prime as i64);
    let j_max = n as i64 + 1;
    // Widened horizon: later probing around the family must stay clear of
    // nearby orbit points, so the seed width respects a gap measured well
    // beyond the family itself.
    let horizon = (2 * n_prime).max(n + 1) as i64;
    let orbit = OrbitTable::build(&f, frac(x), -horizon, horizon);
    let gap = circular_min_gap(orbit.points());
    if gap < MIN_ORBIT_GAP {
        return Err(CoreError::Construction(format!(
            "marked orbit is nearly periodic: minimal circular gap {gap:.3e} \
             over horizon ±{horizon}"
        )));
    }

    let w_top = match config.initial_half_width {
        Some(v) if v > 0.0 => v.min(0.25 * gap),
        Some(_) => return Err(CoreError::param("initial_half_width", "must be positive")),
        None => 0.25 * gap,
    };

    let mut search = Search {
        f: &f,
        orbit: &orbit,
        j_min,
        j_max,
        config,
        tried: 0,
        best_delta: f64::INFINITY,
        last_reject: None,
    };

    let outcome = seek_identity_width(&mut search, w_top)?;
    let found = match outcome {
        IdentityOutcome::Found(found) => Some(found),
        IdentityOutcome::TryStraighten { widest_disjoint } => {
            straighten_at(&mut search, widest_disjoint)?
        }
    };

    let halvings = search.tried.saturating_sub(1);
    match found {
        Some(found) => {
            let centers = (j_min..=j_max).map(|j| orbit.point(j)).collect();
            let slopes = (j_min..=j_max).map(|j| orbit.one_step(j)).collect();
            let chain = (j_min..=j_max).map(|j| orbit.cocycle(j)).collect();
            Ok(Linearizer {
                base: f,
                conjugacy: found.conjugacy,
                map: found.map,
                j_min,
                j_max,
                centers,
                arcs: found.arcs,
                cores: found.cores,
                slopes,
                chain,
                half_width: found.half_width,
                core_fraction: found.core_fraction,
                halvings,
                identity_conjugacy: found.identity,
                orbit_gap: gap,
            })
        }
        None => Err(exhaustion_error(&search)),
    }
}

/// A verified construction at some width.
struct Found {
    conjugacy: Arc<MonotoneLift>,
    map: Arc<MonotoneLift>,
    identity: bool,
    arcs: Vec<(f64, f64)>,
    cores: Vec<(f64, f64)>,
    half_width: f64,
    core_fraction: f64,
}

enum IdentityOutcome {
    Found(Found),
    /// The identity path is hopeless; straightening should restart from the
    /// recorded width (the widest with a disjoint family), if any.
    TryStraighten { widest_disjoint: Option<f64> },
}

/// Phase one: halve toward a width where f is affine on the whole family.
/// Only cheap tests run here — no patches are built.
fn seek_identity_width(search: &mut Search, w_top: f64) -> Result<IdentityOutcome> {
    let mut w = w_top;
    let mut widest_disjoint = None;
    let mut blocked_events = 0u32;
    // Distance from each marked point to the nearest breakpoint of the map.
    // These are width-independent, so when a breakpoint blocks an interval the
    // width at which every interval clears its blockers can be predicted
    // directly: interval widths scale linearly with the half-width.
    let bp_dist: Vec<f64> = (search.j_min..=search.j_max)
        .map(|j| nearest_breakpoint_distance(search.f.breakpoints(), search.orbit.point(j)))
        .collect();
    while search.tried <= search.config.max_halvings && w >= search.config.width_floor {
        search.tried += 1;
        let arcs = family_arcs(search.f, search.orbit, search.j_min, search.j_max, w)?;
        if let Some(detail) = family_overlap(&arcs) {
            search.last_reject = Some(Reject::Overlap(detail));
            w *= 0.5;
            continue;
        }
        if widest_disjoint.is_none() {
            widest_disjoint = Some(w);
        }
        match family_affinity(search.f, &arcs, search.config.affinity_tol) {
            Affinity::Affine => {
                match select_affine_core(
                    search.f,
                    search.orbit,
                    search.j_min,
                    search.j_max,
                    &arcs,
                    w,
                    search.config,
                ) {
                    Ok((q, cores)) => {
                        return Ok(IdentityOutcome::Found(Found {
                            conjugacy: Arc::new(MonotoneLift::identity()),
                            map: search.f.clone(),
                            identity: true,
                            arcs,
                            cores,
                            half_width: w,
                            core_fraction: q,
                        }));
                    }
                    Err(detail) => {
                        search.last_reject = Some(Reject::Core(detail));
                        w *= 0.5;
                        continue;
                    }
                }
            }
            Affinity::Blocked(detail) => {
                blocked_events += 1;
                // Predict the half-width at which every enlarged interval
                // frees its nearest breakpoint. The enlarged edge sits at most
                // ENLARGE * max(c - lo, hi - c) from the marked point c, and
                // that extent scales linearly with the half-width.
                let mut ratio = f64::INFINITY;
                for (idx, &(lo, hi)) in arcs.iter().enumerate() {
                    let c = search.orbit.point(search.j_min + idx as i64);
                    let extent = ENLARGE * (hi - c).max(c - lo);
                    if extent > 0.0 {
                        ratio = ratio.min(bp_dist[idx] / extent);
                    }
                }
                let w_clear = 0.9 * w * ratio;
                search.last_reject = Some(Reject::NotAffine(detail));
                if !(w_clear >= search.config.width_floor) || blocked_events > BLOCKED_RETRIES {
                    // A breakpoint pinned (numerically) to a marked point can
                    // never be freed by shrinking — straighten instead.
                    return Ok(IdentityOutcome::TryStraighten { widest_disjoint });
                }
                w = w_clear.min(0.5 * w);
                continue;
            }
            Affinity::Curved { spread_rel } => {
                // First-order model: the spread shrinks linearly with the
                // width, so the width needed for the detector to pass is
                // predictable. Below the floor it is hopeless — straighten.
                let w_req = w * search.config.affinity_tol / spread_rel;
                if w_req < search.config.width_floor {
                    search.last_reject = Some(Reject::NotAffine(format!(
                        "derivative spread {spread_rel:.3e} cannot flatten \
                         above the width floor"
                    )));
                    return Ok(IdentityOutcome::TryStraighten { widest_disjoint });
                }
                search.last_reject = Some(Reject::NotAffine(format!(
                    "derivative spread {spread_rel:.3e} at half-width {w:.3e}"
                )));
                w *= 0.5;
                continue;
            }
        }
    }
    // Budget or floor exhausted without an affine family; straightening may
    // still succeed within the remaining budget.
    Ok(IdentityOutcome::TryStraighten { widest_disjoint })
}

/// Phase two: straightening patches, restarted from the widest disjoint
/// width and halved under the derivative budget until the cores verify.
fn straighten_at(search: &mut Search, widest_disjoint: Option<f64>) -> Result<Option<Found>> {
    let chain_cost: usize = (search.j_min..=search.j_max)
        .map(|j| j.unsigned_abs() as usize)
        .sum();
    if chain_cost > search.config.chain_cost_cap {
        return Ok(None); // reported by exhaustion_error
    }
    let Some(mut w) = widest_disjoint else {
        return Ok(None);
    };

    // Inverse lift for backward pull-backs; constructing it maps every
    // breakpoint of f through f once.
    let inv_f = Arc::new(MonotoneLift::inverse(search.f.clone()));

    while search.tried <= search.config.max_halvings && w >= search.config.width_floor {
        search.tried += 1;
        let arcs = family_arcs(search.f, search.orbit, search.j_min, search.j_max, w)?;
        if let Some(detail) = family_overlap(&arcs) {
            search.last_reject = Some(Reject::Overlap(detail));
            w *= 0.5;
            continue;
        }
        let patches = straighten_patches(search.f, &inv_f, search.orbit, search.j_min, &arcs)?;
        let h = match MonotoneLift::deformation(patches) {
            Ok(h) => Arc::new(h),
            Err(CoreError::Degenerate { min_deriv, .. }) => {
                // Monotonicity certification failed: at this width the blend
                // between the chain and the identity is too steep. The sampled
                // minimum gives a lower bound on sup |Dh − 1|; shrink and retry.
                search.best_delta = search.best_delta.min((1.0 - min_deriv).abs());
                search.last_reject = Some(Reject::Delta);
                w *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };

        if let Some(sup) = conjugacy_excess(&h, &arcs, search.config.delta) {
            search.best_delta = search.best_delta.min(sup);
            search.last_reject = Some(Reject::Delta);
            w *= 0.5;
            continue;
        }
        for (idx, j) in (search.j_min..=search.j_max).enumerate() {
            let c = search.orbit.point(j);
            let fix = (h.eval(c) - c).abs();
            if fix > CENTER_FIX_TOL {
                return Err(CoreError::Construction(format!(
                    "straightening failed to fix orbit point {j} \
                     (index {idx}): |h(x_j) − x_j| = {fix:.3e}"
                )));
            }
        }
        let g = Arc::new(MonotoneLift::conjugate(h.clone(), search.f.clone()));
        match select_affine_core(
            &g,
            search.orbit,
            search.j_min,
            search.j_max,
            &arcs,
            w,
            search.config,
        ) {
            Ok((q, cores)) => {
                return Ok(Some(Found {
                    conjugacy: h,
                    map: g,
                    identity: false,
                    arcs,
                    cores,
                    half_width: w,
                    core_fraction: q,
                }));
            }
            Err(detail) => {
                search.last_reject = Some(Reject::Core(detail));
                w *= 0.5;
                continue;
            }
        }
    }
    Ok(None)
}

/// Terminal error once every width attempt is spent.
fn exhaustion_error(search: &Search) -> CoreError {
    let halvings = search.tried.saturating_sub(1);
    match &search.last_reject {
        Some(Reject::Delta) => CoreError::DeltaUnreachable {
            requested: search.config.delta,
            best: search.best_delta,
            halvings,
            floor: search.config.width_floor,
        },
        Some(Reject::Core(detail)) => CoreError::EmptyCore(detail.clone()),
        Some(Reject::Overlap(detail)) | Some(Reject::NotAffine(detail)) => {
            CoreError::Construction(format!(
                "no admissible interval family after {halvings} halvings: {detail}"
            ))
        }
        None => CoreError::Construction(
            "no interval width was admissible before the floor".into(),
        ),
    }
}

/// Iterated images I_j of I₀ = [x₀ − w, x₀ + w] in lift coordinates,
/// j ∈ [j_min, j_max], forward via eval and backward via invert.
fn family_arcs(
    f: &MonotoneLift,
    orbit: &OrbitTable,
    j_min: i64,
    j_max: i64,
    w: f64,
) -> Result<Vec<(f64, f64)>> {
    let x0 = orbit.point(0);
    let len = (j_max - j_min + 1) as usize;
    let zero = (-j_min) as usize;
    let mut arcs = vec![(0.0, 0.0); len];
    arcs[zero] = (x0 - w, x0 + w);
    let (mut lo, mut hi) = arcs[zero];
    for j in 1..=j_max {
        lo = f.eval(lo);
        hi = f.eval(hi);
        arcs[zero + j as usize] = (lo, hi);
    }
    let (mut lo, mut hi) = arcs[zero];
    for j in 1..=(-j_min) {
        lo = f.invert(lo);
        hi = f.invert(hi);
        arcs[zero - j as usize] = (lo, hi);
    }
    for (idx, &(lo, hi)) in arcs.iter().enumerate() {
        let c = orbit.point(j_min + idx as i64);
        if !(lo < c && c < hi) {
            return Err(CoreError::Construction(format!(
                "iterated interval {idx} lost its center: \
                 [{lo:.17}, {hi:.17}] vs {c:.17}"
            )));
        }
    }
    Ok(arcs)
}

/// Some(description) when two intervals of the family touch or overlap on the
/// circle.
fn family_overlap(arcs: &[(f64, f64)]) -> Option<String> {
    let mut reps: Vec<(f64, f64)> = arcs
        .iter()
        .map(|&(lo, hi)| {
            let k = lo.floor();
            (lo - k, hi - lo)
        })
        .collect();
    reps.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in reps.windows(2) {
        let gap = pair[1].0 - (pair[0].0 + pair[0].1);
        if gap <= 0.0 {
            return Some(format!(
                "intervals overlap near {:.6}: gap {gap:.3e}",
                pair[0].0
            ));
        }
    }
    if reps.len() >= 2 {
        let first = &reps[0];
        let last = &reps[reps.len() - 1];
        let gap = first.0 + 1.0 - (last.0 + last.1);
        if gap <= 0.0 {
            return Some(format!(
                "intervals overlap across the wrap near {:.6}: gap {gap:.3e}",
                last.0
            ));
        }
    }
    None
}

/// Affinity detector over the whole family. Breakpoint blockage is reported
/// before curvature, because shrinking resolves the former geometrically.
fn family_affinity(f: &MonotoneLift, arcs: &[(f64, f64)], tol: f64) -> Affinity {
    for &(lo, hi) in arcs {
        let pad = 0.5 * (ENLARGE - 1.0) * (hi - lo);
        if has_breakpoint_in(f.breakpoints(), lo - pad, (hi - lo) + 2.0 * pad) {
            return Affinity::Blocked(format!(
                "breakpoint of the map inside the enlarged interval \
                 [{:.6}, {:.6}]",
                lo - pad,
                hi + pad
            ));
        }
    }
    let mut worst: f64 = 0.0;
    for &(lo, hi) in arcs {
        let pad = 0.5 * (ENLARGE - 1.0) * (hi - lo);
        let (a, b) = (lo - pad, hi + pad);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..AFFINE_DETECT_SAMPLES {
            let t = i as f64 / (AFFINE_DETECT_SAMPLES - 1) as f64;
            let d = f.deriv(a + t * (b - a));
            min = min.min(d);
            max = max.max(d);
        }
        worst = worst.max((max - min) / max);
    }
    if worst <= tol {
        Affinity::Affine
    } else {
        Affinity::Curved { spread_rel: worst }
    }
}

/// True when a sorted breakpoint list (values in [0, 1)) meets the circular
/// interval starting at `lo` (any lift coordinate) of the given width < 1.
fn has_breakpoint_in(bps: &[f64], lo: f64, width: f64) -> bool {
    if bps.is_empty() {
        return false;
    }
    let t = frac(lo);
    let in_range = |a: f64, b: f64| {
        let i = bps.partition_point(|&p| p < a);
        i < bps.len() && bps[i] <= b
    };
    if t + width <= 1.0 {
        in_range(t, t + width)
    } else {
        in_range(t, 1.0) || in_range(0.0, t + width - 1.0)
    }
}

/// Circular distance from a point (any lift coordinate) to the nearest entry
/// of a sorted breakpoint list with values in [0, 1). Infinite when the list
/// is empty, so it never constrains breakpoint-free maps.
fn nearest_breakpoint_distance(bps: &[f64], point: f64) -> f64 {
    if bps.is_empty() {
        return f64::INFINITY;
    }
    let t = frac(point);
    let i = bps.partition_point(|&p| p < t);
    let before = if i == 0 { bps[bps.len() - 1] } else { bps[i - 1] };
    let after = if i == bps.len() { bps[0] } else { bps[i] };
    dist(t, before).min(dist(t, after))
}

/// Straightening patches for every j ≠ 0 in the family. The patch on I_j
/// blends h(s) = A_j(f^{−j}(s)) into the identity near ∂I_j, with
/// A_j(z) = x_j + B_j·(z − x₀) expressed in the patch's [0, 1) coordinates.
fn straighten_patches(
    f: &Arc<MonotoneLift>,
    inv_f: &Arc<MonotoneLift>,
    orbit: &OrbitTable,
    j_min: i64,
    arcs: &[(f64, f64)],
) -> Result<Vec<Patch>> {
    let x0 = orbit.point(0);
    let mut patches = Vec::with_capacity(arcs.len().saturating_sub(1));
    for (idx, &(lo, hi)) in arcs.iter().enumerate() {
        let j = j_min + idx as i64;
        if j == 0 {
            continue;
        }
        let k = lo.floor();
        let b_chain = orbit.cocycle(j);
        // Patch coordinates are lift coordinates shifted by the exact integer
        // k, so the chain becomes s ↦ (x_j − k) + B_j·(f^{−j}(s) − (x₀ − k))
        // with f^{−j} applied in patch coordinates.
        let offset = (orbit.point(j) - k) - b_chain * (x0 - k);
        let (base, steps) = if j > 0 {
            (f.clone(), j as usize)
        } else {
            (inv_f.clone(), (-j) as usize)
        };
        patches.push(Patch::straighten(
            lo - k,
            hi - k,
            b_chain,
            offset,
            steps,
            base,
        )?);
    }
    Ok(patches)
}

/// Some(sup|Dh − 1|) when the conjugacy exceeds its derivative budget on the
/// interval family; sampled at a uniform grid plus the breakpoints of h.
fn conjugacy_excess(h: &MonotoneLift, arcs: &[(f64, f64)], delta: f64) -> Option<f64> {
    let mut sup: f64 = 0.0;
    for &(lo, hi) in arcs {
        for i in 0..=DELTA_SAMPLES_PER_ARC {
            let t = i as f64 / DELTA_SAMPLES_PER_ARC as f64;
            sup = sup.max((h.deriv(lo + t * (hi - lo)) - 1.0).abs());
            if sup >= delta {
                return Some(sup); // any exceedance rejects the width
            }
        }
        for &bp in h.breakpoints() {
            // lift representative of bp inside [lo, hi], if any
            let s = bp + (lo - bp).ceil();
            if s <= hi {
                sup = sup.max((h.deriv(s) - 1.0).abs());
                if sup >= delta {
                    return Some(sup);
                }
            }
        }
    }
    if sup < delta {
        None
    } else {
        Some(sup)
    }
}

/// Find the largest candidate core I′₀ = x₀ ± q·w whose iterates under the
/// conjugated map stay inside the interval family and are affine with the
/// measured one-step slopes. Returns the fraction and the cores; Err carries
/// a description of the last failure.
fn select_affine_core(
    map: &Arc<MonotoneLift>,
    orbit: &OrbitTable,
    j_min: i64,
    j_max: i64,
    arcs: &[(f64, f64)],
    w: f64,
    config: &LinearizerConfig,
) -> std::result::Result<(f64, Vec<(f64, f64)>), String> {
    let x0 = orbit.point(0);
    let mut last = String::from("no core candidates were tried");
    'candidates: for &q in &config.core_fractions {
        let cores = match iterate_interval(map, x0 - q * w, x0 + q * w, j_min, j_max) {
            Ok(c) => c,
            Err(e) => {
                last = format!("core fraction {q}: iteration failed: {e}");
                continue;
            }
        };
        for (idx, core) in cores.iter().enumerate() {
            let (alo, ahi) = arcs[idx];
            if !(core.0 > alo && core.1 < ahi) {
                last = format!(
                    "core fraction {q}: iterate {idx} escapes its interval \
                     ([{:.3e}, {:.3e}] vs [{alo:.3e}, {ahi:.3e}])",
                    core.0, core.1
                );
                continue 'candidates;
            }
        }
        for (idx, &(clo, chi)) in cores.iter().enumerate() {
            let j = j_min + idx as i64;
            if j == j_max {
                continue; // the last core has no outgoing slope to verify
            }
            let b = orbit.one_step(j);
            for i in 0..CORE_SLOPE_SAMPLES {
                let t = i as f64 / (CORE_SLOPE_SAMPLES - 1) as f64;
                let d = map.deriv(clo + t * (chi - clo));
                if (d - b).abs() > config.slope_tol * b {
                    last = format!(
                        "core fraction {q}: slope on core {j} deviates \
                         ({d:.17} vs {b:.17})"
                    );
                    continue 'candidates;
                }
            }
        }
        return Ok((q, cores));
    }
    Err(last)
}

/// Iterated images of [lo, hi] under the conjugated map, j ∈ [j_min, j_max].
fn iterate_interval(
    map: &MonotoneLift,
    lo0: f64,
    hi0: f64,
    j_min: i64,
    j_max: i64,
) -> Result<Vec<(f64, f64)>> {
    let len = (j_max - j_min + 1) as usize;
    let zero = (-j_min) as usize;
    let mut out = vec![(0.0, 0.0); len];
    out[zero] = (lo0, hi0);
    let (mut lo, mut hi) = out[zero];
    for j in 1..=j_max {
        lo = map.eval(lo);
        hi = map.eval(hi);
        out[zero + j as usize] = (lo, hi);
    }
    let (mut lo, mut hi) = out[zero];
    for j in 1..=(-j_min) {
        lo = map.invert(lo);
        hi = map.invert(hi);
        out[zero - j as usize] = (lo, hi);
    }
    for &(lo, hi) in &out {
        if !(lo < hi) {
            return Err(CoreError::Construction(format!(
                "iterated interval degenerated: [{lo:.17}, {hi:.17}]"
            )));
        }
    }
    Ok(out)
}

/// Minimal circular gap between distinct points of a lift-orbit segment.
fn circular_min_gap(points: &[f64]) -> f64 {
    let mut reps: Vec<f64> = points.iter().map(|&p| frac(p)).collect();
    reps.sort_by(f64::total_cmp);
    let mut gap = f64::INFINITY;
    for w in reps.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    if reps.len() >= 2 {
        gap = gap.min(reps[0] + 1.0 - reps[reps.len() - 1]);
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::shared_standard;
    use crate::potential::{BumpSum, PlacedBump};

    /// Map with genuine curvature on part of the marked orbit: one wide
    /// density bump conjugating the golden rotation.
    fn curved_map() -> Arc<MonotoneLift> {
        let phi = BumpSum::new(vec![PlacedBump {
            center: 0.3,
            half_width: 0.22,
            amplitude: 0.9,
        }]);
        let h = Arc::new(MonotoneLift::density(phi).unwrap());
        let r = Arc::new(MonotoneLift::rotation(crate::rotation::golden_angle()));
        Arc::new(MonotoneLift::conjugate(h, r))
    }

    #[test]
    fn flat_orbit_zones_take_the_identity_path() {
        let model = shared_standard();
        let lin = build_linearizer(
            model.f().clone(),
            model.x0(),
            3,
            20,
            &LinearizerConfig::default(),
        )
        .unwrap();

        assert!(lin.is_identity());
        assert!(Arc::ptr_eq(lin.map(), model.f()));
        assert!(lin.conjugacy().breakpoints().is_empty());
        assert!(lin.halvings() <= 12, "halvings {}", lin.halvings());

        // cores scale exactly with the derivative cocycle
        let (l0, h0) = lin.core(0);
        let w0 = h0 - l0;
        for j in [-20i64, -7, -1, 1, 2, 4] {
            let (lo, hi) = lin.core(j);
            let ratio = (hi - lo) / w0;
            let b = lin.chain(j);
            assert!(
                ((ratio - b) / b).abs() < 1e-9,
                "core width ratio at {j}: {ratio} vs {b}"
            );
        }

        // slopes are the designed one-step derivatives
        for j in [-5i64, 1, 3] {
            let b = lin.slope(j);
            let predicted = model.predicted_slope(j);
            assert!(
                ((b - predicted) / predicted).abs() < 1e-11,
                "slope at {j}: {b} vs {predicted}"
            );
        }

        // cores sit strictly inside their intervals, centered on the orbit
        for j in lin.j_min()..=lin.j_max() {
            let (alo, ahi) = lin.arc(j);
            let (clo, chi) = lin.core(j);
            assert!(alo < clo && chi < ahi, "nesting at {j}");
            let c = lin.center(j);
            assert!(clo < c && c < chi, "center containment at {j}");
        }
    }

    #[test]
    fn curved_map_engages_the_straightening_chain() {
        let f = curved_map();
        let config = LinearizerConfig {
            delta: 0.05,
            ..LinearizerConfig::default()
        };
        let lin = build_linearizer(f.clone(), 0.05, 1, 3, &config).unwrap();

        assert!(!lin.is_identity());

        // derivative budget holds at fresh sample points
        let h = lin.conjugacy();
        for j in lin.j_min()..=lin.j_max() {
            let (lo, hi) = lin.arc(j);
            for i in 0..=313 {
                let s = lo + (hi - lo) * i as f64 / 313.0;
                let d = h.deriv(s);
                assert!(
                    (d - 1.0).abs() < config.delta,
                    "|Dh − 1| = {:.3e} at interval {j}",
                    (d - 1.0).abs()
                );
            }
        }

        // marked orbit points are fixed
        for j in lin.j_min()..=lin.j_max() {
            let c = lin.center(j);
            assert!(
                (h.eval(c) - c).abs() <= 1e-12,
                "orbit point {j} moved by {:.3e}",
                (h.eval(c) - c).abs()
            );
        }

        // the conjugated map is affine with the measured slopes on the cores
        let g = lin.map();
        for j in lin.j_min()..lin.j_max() {
            let (clo, chi) = lin.core(j);
            let b = lin.slope(j);
            for i in 0..=64 {
                let s = clo + (chi - clo) * i as f64 / 64.0;
                let d = g.deriv(s);
                assert!(
                    ((d - b) / b).abs() < 1e-11,
                    "core slope at {j}: {d:.17} vs {b:.17}"
                );
            }
        }

        // the conjugacy is the identity between the intervals
        let mut reps: Vec<(f64, f64)> = (lin.j_min()..=lin.j_max())
            .map(|j| lin.arc_rep(j))
            .collect();
        reps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in reps.windows(2) {
            let mid = 0.5 * (pair[0].1 + pair[1].0);
            assert_eq!(h.eval(mid), mid, "identity between intervals");
        }
    }

    #[test]
    fn arcs_and_cores_are_disjoint_and_nested() {
        let f = curved_map();
        let lin = build_linearizer(f, 0.05, 1, 5, &LinearizerConfig::default()).unwrap();

        // brute-force pairwise circular disjointness
        let arcs: Vec<(f64, f64)> = (lin.j_min()..=lin.j_max())
            .map(|j| lin.arc_rep(j))
            .collect();
        for (a, &(lo_a, hi_a)) in arcs.iter().enumerate() {
            for &(lo_b, hi_b) in arcs.iter().skip(a + 1) {
                let ((a1, b1), (a2, b2)) = if lo_a <= lo_b {
                    ((lo_a, hi_a), (lo_b, hi_b))
                } else {
                    ((lo_b, hi_b), (lo_a, hi_a))
                };
                assert!(
                    b1 <= a2 && b2 <= a1 + 1.0,
                    "intervals intersect: [{a1}, {b1}] vs [{a2}, {b2}]"
                );
            }
        }

        // core midpoints track the orbit
        for j in lin.j_min()..=lin.j_max() {
            let (clo, chi) = lin.core(j);
            let mid = 0.5 * (clo + chi);
            assert!(
                (mid - lin.center(j)).abs() < 1e-10,
                "core midpoint drift at {j}: {:.3e}",
                (mid - lin.center(j)).abs()
            );
        }
    }

    #[test]
    fn tight_budget_reports_delta_unreachable() {
        let f = curved_map();
        let config = LinearizerConfig {
            delta: 1e-15,
            max_halvings: 10,
            ..LinearizerConfig::default()
        };
        let err = build_linearizer(f, 0.05, 1, 3, &config).unwrap_err();
        match err {
            CoreError::DeltaUnreachable {
                requested,
                best,
                halvings,
                ..
            } => {
                assert_eq!(requested, 1e-15);
                assert_eq!(halvings, 10);
                assert!(best > 1e-15, "best {best}");
            }
            other => panic!("expected DeltaUnreachable, got {other:?}"),
        }
    }

    #[test]
    fn periodic_orbits_are_rejected() {
        let f = Arc::new(MonotoneLift::rotation(3.0 / 7.0));
        let err = build_linearizer(f, 0.1, 1, 6, &LinearizerConfig::default()).unwrap_err();
        assert!(
            matches!(err, CoreError::Construction(ref m) if m.contains("periodic")),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn parameter_validation() {
        let f = Arc::new(MonotoneLift::rotation(crate::rotation::golden_angle()));
        let bad_delta = LinearizerConfig {
            delta: 0.0,
            ..LinearizerConfig::default()
        };
        assert!(matches!(
            build_linearizer(f.clone(), 0.1, 1, 3, &bad_delta),
            Err(CoreError::InvalidParameter { name: "delta", .. })
        ));

        let too_big = LinearizerConfig {
            delta: 1.0,
            ..LinearizerConfig::default()
        };
        assert!(matches!(
            build_linearizer(f.clone(), 0.1, 1, 3, &too_big),
            Err(CoreError::InvalidParameter { name: "delta", .. })
        ));

        assert!(matches!(
            build_linearizer(f.clone(), 0.1, 0, 0, &LinearizerConfig::default()),
            Err(CoreError::InvalidParameter {
                name: "n_prime",
                ..
            })
        ));

        let no_cores = LinearizerConfig {
            core_fractions: Vec::new(),
            ..LinearizerConfig::default()
        };
        assert!(matches!(
            build_linearizer(f, 0.1, 1, 3, &no_cores),
            Err(CoreError::InvalidParameter {
                name: "core_fractions",
                ..
            })
        ));
    }
}
