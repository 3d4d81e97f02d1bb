//! One derivative-drop perturbation step.
//!
//! Around a marked point x the map is conjugated so that its derivative at x
//! drops by a controlled amount while the symmetrized derivative
//! D(g + g⁻¹) moves only slightly. The construction:
//!
//! 1. measure the derivative cocycle along the orbit of x and assemble the
//!    envelope schedule e_j over a window family j ∈ [−N′, N+1]
//!    ([`CocycleSchedule`]);
//! 2. straighten the map on a family of disjoint intervals I_j around the
//!    orbit so the conjugated map f′ is exactly affine on nested cores I′_j
//!    ([`build_linearizer`]);
//! 3. insert a zero-mean derivative bump of relative height e_j on every
//!    core ([`build_bump_conjugacy`]), giving a conjugacy h with
//!    Dh = 1 + e_j·ψ on I′_j, equal to the identity elsewhere;
//! 4. return g = h ∘ f′ ∘ h⁻¹ together with a [`StepReport`] that certifies
//!    closeness, the derivative drop at x, and a two-scale ratio probe.
//!
//! Because the cores are exact f′-iterates of I′₀ and the bump profiles are
//! placed in aligned affine charts, the perturbation's effect on the
//! symmetrized derivative collapses to an explicit envelope residual on each
//! core; [`apply_step`] checks that identity pointwise.

use std::sync::Arc;

use serde::Serialize;

use crate::circle::frac;
use crate::diagnostics::{
    delta_stat, refined_grid, sym_c1_distance, CocycleProfile, SummabilityCheck,
};
use crate::error::{CoreError, Result};
use crate::lift::{MonotoneLift, Patch};
use crate::linearize::{build_linearizer, Linearizer, LinearizerConfig};
use crate::orbit::OrbitTable;
use crate::schedule::{CocycleSchedule, CocycleTable, WindowPolicy};

/// Uniform sample count for the off-support equality scan.
const SUPPORT_SAMPLES: usize = 1000;
/// Budget for |g − f| away from the perturbation support.
const SUPPORT_TOL: f64 = 1e-12;
/// Smallest micro scale the probe scan will try.
const PROBE_MICRO_FLOOR: f64 = 1e-13;
/// Samples per interval for the C⁰ conjugacy scan.
const C0_SAMPLES_PER_ARC: usize = 64;
/// Coarse global samples added to the C⁰ conjugacy scan.
const C0_GLOBAL_SAMPLES: usize = 256;
/// Uniform base grid for the regularity bound precheck.
const REGULARITY_GRID: usize = 512;

/// Bump shape parameter: the width fraction δ of the zero-mean profile,
/// capped so that 1 − sup_j e_j · δ stays well above 1/2.
pub fn bump_delta(cap: f64, sup_envelope: f64) -> f64 {
    cap.min(0.25 / (1.0 + sup_envelope))
}

/// Deformation h with Dh = 1 + e_j·ψ_δ on the core I′_j of every family
/// index j whose envelope value is nonzero, identity elsewhere. The profile
/// ψ_δ has unit peak at the core center and zero mean and zero half-mass, so
/// h fixes every core endpoint and center and Dh(center) = 1 + e_j.
pub fn build_bump_conjugacy(
    lin: &Linearizer,
    schedule: &CocycleSchedule,
    delta: f64,
) -> Result<Arc<MonotoneLift>> {
    let n = schedule.n() as i64;
    let n_prime = schedule.n_prime() as i64;
    if lin.j_min() != -n_prime || lin.j_max() != n + 1 {
        return Err(CoreError::param(
            "linearizer",
            format!(
                "interval family [{}, {}] does not match the schedule window [{}, {}]",
                lin.j_min(),
                lin.j_max(),
                -n_prime,
                n + 1
            ),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::param("delta", "must lie in (0, 1)"));
    }
    if schedule.sup_e() * delta > 0.5 {
        return Err(CoreError::param(
            "delta",
            format!(
                "sup e_j · δ = {:.3} > 1/2 leaves no derivative margin",
                schedule.sup_e() * delta
            ),
        ));
    }
    let mut patches = Vec::new();
    for j in lin.j_min()..=lin.j_max() {
        let e = schedule.e(j);
        if e == 0.0 {
            continue;
        }
        let (lo, hi) = lin.core_rep(j);
        patches.push(Patch::bump_density(lo, hi, e, delta)?);
    }
    if patches.is_empty() {
        return Err(CoreError::Construction(
            "envelope schedule is identically zero on the interval family".into(),
        ));
    }
    Ok(Arc::new(MonotoneLift::deformation(patches)?))
}

/// Gate on the finite-horizon summability profile at the marked point.
#[derive(Debug, Clone, Serialize)]
pub struct ProxyPolicy {
    /// Orbit horizon for the summability profile.
    pub horizon: usize,
    /// Threshold the backward cocycle maximum M₋ must exceed.
    pub growth_threshold: f64,
    /// Abort the step when the profile fails; when false the outcome is
    /// recorded in the report but not enforced.
    pub enforce: bool,
}

impl Default for ProxyPolicy {
    fn default() -> Self {
        ProxyPolicy {
            horizon: 256,
            growth_threshold: 10.0,
            enforce: true,
        }
    }
}

/// Dyadic scan policy for the two-scale ratio probe.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeConfig {
    /// The ratio must exceed 1 + margin · ε₀ to count as a witness.
    pub margin: f64,
    /// Hard cap on the macro scale v.
    pub macro_cap: f64,
    /// Halvings of the micro scale below the core width.
    pub max_halvings: u32,
    /// Doublings of the macro scale above the interval width.
    pub max_doublings: u32,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            margin: 0.25,
            macro_cap: 0.25,
            max_halvings: 48,
            max_doublings: 48,
        }
    }
}

/// Tunable policy for [`apply_step`].
#[derive(Debug, Clone)]
pub struct StepConfig {
    /// Window-pair selection thresholds for the envelope schedule.
    pub policy: WindowPolicy,
    /// Cocycle-table horizon.
    pub horizon: usize,
    /// Cap on the envelope start value e₀; `None` accepts any e₀ and budgets
    /// the drop threshold from the value found.
    pub envelope_budget: Option<f64>,
    /// Cap on the bump shape parameter δ.
    pub delta_cap: f64,
    /// Policy for the straightening conjugacy.
    pub linearizer: LinearizerConfig,
    /// Uniform base points of the refined grid for the symmetrized-C¹ scan.
    pub grid_points: usize,
    /// Samples per core for the pointwise residual-identity check.
    pub identity_samples: usize,
    /// Budget for the pointwise residual identity.
    pub identity_tol: f64,
    /// Two-scale probe policy.
    pub probe: ProbeConfig,
    /// Summability gate at the marked point.
    pub proxy: ProxyPolicy,
    /// Shrink-and-retry attempts when a closeness budget is missed.
    pub max_retries: u32,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            policy: WindowPolicy::default(),
            horizon: 300,
            envelope_budget: None,
            delta_cap: 0.1,
            linearizer: LinearizerConfig::default(),
            grid_points: 10_000,
            identity_samples: 1000,
            identity_tol: 1e-8,
            probe: ProbeConfig::default(),
            proxy: ProxyPolicy::default(),
            max_retries: 2,
        }
    }
}

/// A two-scale ratio witness at the marked point: the micro scale u, the
/// macro scale v, and the ratio of the macro difference quotient to the
/// micro difference quotient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Probe {
    /// Base point of both difference quotients.
    pub x: f64,
    /// Micro scale (dyadic fraction of the core width).
    pub u: f64,
    /// Macro scale (dyadic multiple of the interval width).
    pub v: f64,
    /// (u/v)·(g(x+v) − g(x)) / (g(x+u) − g(x)).
    pub ratio: f64,
}

/// Certified measurements of one perturbation step. Every recorded number
/// is recomputable from the returned maps and the step inputs.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    /// Requested closeness budget ε.
    pub epsilon: f64,
    /// Drop threshold ε₀ = 1/(C(1+C′)) from the schedule budgets.
    pub epsilon0: f64,
    /// Bump shape parameter δ actually used.
    pub delta: f64,
    /// Forward window size N.
    pub n: usize,
    /// Backward window size N′.
    pub n_prime: usize,
    /// Backward run-off mass ratio τ.
    pub tau: f64,
    /// Envelope start value e₀.
    pub e0: f64,
    /// Largest envelope value sup_j e_j.
    pub sup_envelope: f64,
    /// Half-width of the base interval I₀.
    pub half_width: f64,
    /// Width of the base core I′₀.
    pub core_width: f64,
    /// Measured sup of D(f + f⁻¹) on the precheck grid.
    pub sym_bound: f64,
    /// Forward summability sum S₊ at the marked point.
    pub proxy_s_plus: f64,
    /// Backward summability sum S₋ at the marked point.
    pub proxy_s_minus: f64,
    /// Backward cocycle maximum M₋ at the marked point.
    pub proxy_m_minus: f64,
    /// Whether all three summability gates passed.
    pub proxy_pass: bool,
    /// sup |H(y) − y| of the combined conjugacy H over the support family.
    pub conjugacy_c0: f64,
    /// |H(x) − x| at the marked point.
    pub fixed_point_shift: f64,
    /// sup |D(g + g⁻¹) − D(f + f⁻¹)| over the refined grid.
    pub sym_c1_defect: f64,
    /// Largest deviation of the measured symmetrized-derivative change from
    /// the envelope-residual prediction over the per-core sample set.
    pub identity_sup: f64,
    /// Samples per core used for the residual-identity check.
    pub identity_samples: usize,
    /// identity_sup ≤ identity_tol.
    pub identity_pass: bool,
    /// Largest |g − f| found away from the support family.
    pub support_leak: f64,
    /// Measured Dg(x) − Df(x).
    pub drop_measured: f64,
    /// Predicted drop −b₀/(1 + e₀).
    pub drop_predicted: f64,
    /// |drop_measured − drop_predicted|.
    pub drop_mismatch: f64,
    /// Two-scale witness, when one exceeded the threshold.
    pub probe: Option<Probe>,
    /// Best ratio seen in the probe scan.
    pub probe_best: f64,
    /// Threshold 1 + margin·ε₀ the probe had to exceed.
    pub probe_threshold: f64,
    /// Shrink-and-retry attempts consumed.
    pub retries: u32,
}

/// Product of one perturbation step: the perturbed map, the conjugacies that
/// produced it, the interval family, and the certified report.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The perturbed map g = h ∘ f′ ∘ h⁻¹.
    pub map: Arc<MonotoneLift>,
    /// Combined conjugacy H with g = H ∘ f ∘ H⁻¹ (bump after straightening).
    pub conjugacy: Arc<MonotoneLift>,
    /// The bump deformation h alone.
    pub bump: Arc<MonotoneLift>,
    /// Straightened interval family around the orbit.
    pub linearizer: Linearizer,
    /// Envelope schedule the bump amplitudes came from.
    pub schedule: CocycleSchedule,
    /// Bump shape parameter δ actually used.
    pub delta: f64,
    /// Certified measurements.
    pub report: StepReport,
}

impl StepOutcome {
    /// The support family I_j in patch convention (lo ∈ [0,1), hi > lo).
    pub fn supports(&self) -> Vec<(f64, f64)> {
        (self.linearizer.j_min()..=self.linearizer.j_max())
            .map(|j| self.linearizer.arc_rep(j))
            .collect()
    }
}

/// Perturb `f` near the marked point `x`: conjugate by a straightening and a
/// zero-mean derivative bump so that Dg(x) = Df(x) − b₀(e₀ − e₁)/(1 + e₀)
/// while sup|D(g + g⁻¹) − D(f + f⁻¹)| and the C⁰ size of the conjugacy stay
/// below `epsilon`.
///
/// `regularity` is the budget C for sup D(f + f⁻¹); together with the
/// envelope budget it fixes the drop threshold ε₀ = 1/(C(1+C′)).
///
/// When a closeness budget is missed the interval family and bump width are
/// shrunk and the step retried, up to `config.max_retries` times; a final
/// miss returns [`CoreError::ClosenessFailure`]. A missing probe witness is
/// reported, not fatal.
pub fn apply_step(
    f: &Arc<MonotoneLift>,
    x: f64,
    regularity: f64,
    epsilon: f64,
    config: &StepConfig,
) -> Result<StepOutcome> {
    if !x.is_finite() {
        return Err(CoreError::param("x", "marked point must be finite"));
    }
    if !(epsilon > 0.0) {
        return Err(CoreError::param("epsilon", "closeness budget must be positive"));
    }
    if !(regularity > 0.0) {
        return Err(CoreError::param("regularity", "budget must be positive"));
    }

    // Regularity precheck: sup D(f + f⁻¹) on a refined grid, computed via the
    // substitution y = f(z) so no inversions are needed.
    let grid0 = refined_grid(&[f], REGULARITY_GRID);
    let mut sym_bound: f64 = 0.0;
    for &z in &grid0 {
        let s = f.deriv(f.eval(z)) + 1.0 / f.deriv(z);
        sym_bound = sym_bound.max(s);
    }
    if sym_bound >= regularity {
        return Err(CoreError::ClosenessFailure {
            quantity: "sup D(f + f⁻¹) against the regularity budget",
            measured: sym_bound,
            budget: regularity,
        });
    }

    // Summability profile at the marked point.
    let ph = config.proxy.horizon.max(2);
    let orbit = OrbitTable::build(f, x, -(ph as i64), ph as i64);
    let profile = CocycleProfile::from_table(&orbit, ph);
    let proxy = SummabilityCheck::evaluate(&profile, regularity, config.proxy.growth_threshold);
    if config.proxy.enforce && !proxy.all() {
        return Err(CoreError::Construction(format!(
            "summability profile fails at x = {x}: S+ = {:.6} (budget {}), M- = {:.3e} \
             (threshold {}), S- = {:.6}",
            profile.s_plus,
            regularity,
            profile.m_minus,
            config.proxy.growth_threshold,
            profile.s_minus
        )));
    }

    // Envelope schedule over the chosen window pair.
    let table = CocycleTable::compute(f, x, config.horizon)?;
    let schedule =
        CocycleSchedule::from_policy(&table, &config.policy, regularity, config.envelope_budget)?;
    let epsilon0 = schedule.drop_threshold();

    let mut lin_cfg = config.linearizer.clone();
    let mut delta = bump_delta(config.delta_cap, schedule.sup_e());
    let mut worst: Option<(&'static str, f64)> = None;
    let mut retries = 0;
    loop {
        let lin = build_linearizer(f.clone(), x, schedule.n(), schedule.n_prime(), &lin_cfg)?;
        let bump = build_bump_conjugacy(&lin, &schedule, delta)?;
        let conjugacy = if lin.is_identity() {
            bump.clone()
        } else {
            Arc::new(MonotoneLift::compose(bump.clone(), lin.conjugacy().clone()))
        };
        let g = Arc::new(MonotoneLift::conjugate(bump.clone(), lin.map().clone()));

        let m = measure_step(f, &g, &bump, &conjugacy, &lin, &schedule, config)?;

        // Structural invariant, not a tunable budget: any change to the map
        // away from the interval family means the conjugacy leaked.
        if m.support_leak > SUPPORT_TOL {
            return Err(CoreError::ClosenessFailure {
                quantity: "map change away from the support family",
                measured: m.support_leak,
                budget: SUPPORT_TOL,
            });
        }

        if m.conjugacy_c0 < epsilon && m.sym_c1_defect < epsilon {
            let (probe, probe_best) = find_uv(
                &g,
                x,
                core_width(&lin, 0),
                arc_width(&lin, 0),
                epsilon0,
                &config.probe,
            );
            let report = StepReport {
                epsilon,
                epsilon0,
                delta,
                n: schedule.n(),
                n_prime: schedule.n_prime(),
                tau: schedule.tau(),
                e0: schedule.e0(),
                sup_envelope: schedule.sup_e(),
                half_width: lin.half_width(),
                core_width: core_width(&lin, 0),
                sym_bound,
                proxy_s_plus: profile.s_plus,
                proxy_s_minus: profile.s_minus,
                proxy_m_minus: profile.m_minus,
                proxy_pass: proxy.all(),
                conjugacy_c0: m.conjugacy_c0,
                fixed_point_shift: m.fixed_point_shift,
                sym_c1_defect: m.sym_c1_defect,
                identity_sup: m.identity_sup,
                identity_samples: config.identity_samples,
                identity_pass: m.identity_sup <= config.identity_tol,
                support_leak: m.support_leak,
                drop_measured: m.drop_measured,
                drop_predicted: m.drop_predicted,
                drop_mismatch: (m.drop_measured - m.drop_predicted).abs(),
                probe,
                probe_best,
                probe_threshold: 1.0 + config.probe.margin * epsilon0,
                retries,
            };
            return Ok(StepOutcome {
                map: g,
                conjugacy,
                bump,
                linearizer: lin,
                schedule,
                delta,
                report,
            });
        }

        let (quantity, measured) = if m.conjugacy_c0 >= epsilon {
            ("conjugacy C0 distance from the identity", m.conjugacy_c0)
        } else {
            ("symmetrized C1 defect", m.sym_c1_defect)
        };
        worst = Some(match worst {
            Some((q, w)) if w <= measured => (q, w),
            _ => (quantity, measured),
        });
        if retries >= config.max_retries {
            let (quantity, measured) = worst.unwrap();
            return Err(CoreError::ClosenessFailure {
                quantity,
                measured,
                budget: epsilon,
            });
        }
        retries += 1;
        lin_cfg.initial_half_width = Some(0.25 * lin.half_width());
        delta *= 0.5;
    }
}

fn core_width(lin: &Linearizer, j: i64) -> f64 {
    let (lo, hi) = lin.core(j);
    hi - lo
}

fn arc_width(lin: &Linearizer, j: i64) -> f64 {
    let (lo, hi) = lin.arc(j);
    hi - lo
}

/// Raw measurements of one candidate step.
struct Measurements {
    conjugacy_c0: f64,
    fixed_point_shift: f64,
    sym_c1_defect: f64,
    identity_sup: f64,
    support_leak: f64,
    drop_measured: f64,
    drop_predicted: f64,
}

fn measure_step(
    f: &Arc<MonotoneLift>,
    g: &Arc<MonotoneLift>,
    bump: &Arc<MonotoneLift>,
    conjugacy: &Arc<MonotoneLift>,
    lin: &Linearizer,
    schedule: &CocycleSchedule,
    config: &StepConfig,
) -> Result<Measurements> {
    let x = schedule.x();

    // (a) C⁰ size of the combined conjugacy: dense samples on every support
    // interval plus a coarse global scan (H is the identity elsewhere).
    let mut conjugacy_c0: f64 = 0.0;
    for j in lin.j_min()..=lin.j_max() {
        let (lo, hi) = lin.arc(j);
        for i in 0..=C0_SAMPLES_PER_ARC {
            let y = lo + (hi - lo) * i as f64 / C0_SAMPLES_PER_ARC as f64;
            conjugacy_c0 = conjugacy_c0.max((conjugacy.eval(y) - y).abs());
        }
    }
    for i in 0..C0_GLOBAL_SAMPLES {
        let y = (i as f64 + 0.5) / C0_GLOBAL_SAMPLES as f64;
        conjugacy_c0 = conjugacy_c0.max((conjugacy.eval(y) - y).abs());
    }
    let fixed_point_shift = (conjugacy.eval(x) - x).abs();

    // (b) Symmetrized C¹ defect over a refined grid seeded with both maps'
    // breakpoints, so the support family is resolved even when it sits far
    // below the uniform spacing.
    let grid = refined_grid(&[f, g], config.grid_points);
    let sym_c1_defect = sym_c1_distance(f, g, &grid);

    // (b′) Pointwise residual identity on every core: with κ the bump
    // profile height at the sample and r_j the envelope residual
    // (e_{j+1} − e_j)·b_j·b_{j−1} + (e_{j−1} − e_j), the symmetrized
    // derivative change at the displaced sample must equal
    // κ·r_j / ((1 + e_j·κ)·b_{j−1}).
    let fp = lin.map();
    let fp_inv = Arc::new(MonotoneLift::inverse(fp.clone()));
    let g_inv = Arc::new(MonotoneLift::inverse(g.clone()));
    let mut identity_sup: f64 = 0.0;
    for j in lin.j_min()..=lin.j_max() {
        let (lo, hi) = lin.core(j);
        let e_here = schedule.e(j);
        let residual = schedule.residual(j);
        let b_prev = schedule.b(j - 1);
        for i in 0..config.identity_samples {
            let z = lo + (hi - lo) * (i as f64 + 0.5) / config.identity_samples as f64;
            let kappa = if e_here != 0.0 {
                (bump.deriv(z) - 1.0) / e_here
            } else if j == lin.j_max() {
                // Zero-envelope top core: read the profile height through the
                // chart alignment from the predecessor core.
                (bump.deriv(fp.invert(z)) - 1.0) / schedule.e(j - 1)
            } else {
                // Zero-envelope bottom core: read it from the successor core.
                (bump.deriv(fp.eval(z)) - 1.0) / schedule.e(j + 1)
            };
            let w = bump.eval(z);
            let measured =
                (g.deriv(w) + g_inv.deriv(w)) - (fp.deriv(w) + fp_inv.deriv(w));
            let predicted = kappa * residual / ((1.0 + e_here * kappa) * b_prev);
            identity_sup = identity_sup.max((measured - predicted).abs());
        }
    }

    // Support invariance: g must agree with f wherever neither the point nor
    // its image meets the interval family.
    let supports: Vec<(f64, f64)> = (lin.j_min()..=lin.j_max())
        .map(|j| lin.arc_rep(j))
        .collect();
    let mut support_leak: f64 = 0.0;
    for i in 0..SUPPORT_SAMPLES {
        let y = (i as f64 + 0.5) / SUPPORT_SAMPLES as f64;
        if in_family(y, &supports) || in_family(frac(f.eval(y)), &supports) {
            continue;
        }
        support_leak = support_leak.max((g.eval(y) - f.eval(y)).abs());
    }

    // (c) Derivative drop at the marked point.
    let drop_measured = g.deriv(x) - f.deriv(x);
    let drop_predicted = -schedule.b(0) / (1.0 + schedule.e0());

    Ok(Measurements {
        conjugacy_c0,
        fixed_point_shift,
        sym_c1_defect,
        identity_sup,
        support_leak,
        drop_measured,
        drop_predicted,
    })
}

/// Membership of a circle point in a family of patch-convention arcs.
fn in_family(t: f64, arcs: &[(f64, f64)]) -> bool {
    arcs.iter()
        .any(|&(lo, hi)| (t >= lo && t <= hi) || (t + 1.0 >= lo && t + 1.0 <= hi))
}

/// Scan dyadic scale pairs for a two-scale ratio witness at x: micro scales
/// u halve down from the core width, macro scales v double up from the
/// interval width (capped), and the returned pair maximizes the ratio
/// (u/v)·(g(x+v) − g(x))/(g(x+u) − g(x)).
///
/// Returns the witness when the best ratio exceeds 1 + margin·ε₀, together
/// with the best ratio seen either way.
pub fn find_uv(
    g: &MonotoneLift,
    x: f64,
    core_width: f64,
    arc_width: f64,
    epsilon0: f64,
    config: &ProbeConfig,
) -> (Option<Probe>, f64) {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut u = core_width;
    for _ in 0..=config.max_halvings {
        if u < PROBE_MICRO_FLOOR {
            break;
        }
        let mut v = arc_width;
        for _ in 0..=config.max_doublings {
            if v > config.macro_cap || v >= 0.5 {
                break;
            }
            if v > u {
                if let Ok(ratio) = delta_stat(g, x, v, u) {
                    if best.map_or(true, |(_, _, r)| ratio > r) {
                        best = Some((u, v, ratio));
                    }
                }
            }
            v *= 2.0;
        }
        u *= 0.5;
    }
    let best_ratio = best.map_or(0.0, |(_, _, r)| r);
    let threshold = 1.0 + config.margin * epsilon0;
    match best {
        Some((u, v, ratio)) if ratio > threshold => {
            (Some(Probe { x, u, v, ratio }), best_ratio)
        }
        _ => (None, best_ratio),
    }
}

/// Per-sample gates of the regularity-transfer diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct TransferPolicy {
    /// Orbit horizon for the summability sums.
    pub horizon: usize,
    /// Split index: the tail beyond m must be small and the orbit must avoid
    /// the support family up to time m.
    pub m: usize,
    /// Derivative budget Λ for the conjugacy distortion; must dominate the
    /// envelope sup.
    pub big_lambda: f64,
    /// Slack λ reserved inside the regularity budget.
    pub lambda: f64,
    /// Regularity budget C.
    pub regularity: f64,
    /// Envelope sup of the step being checked (validates Λ).
    pub sup_envelope: f64,
}

/// Outcome of [`transfer_check`]: how many sample points keep a usable
/// summability profile after the perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    /// Number of sample points tested.
    pub total: usize,
    /// Samples passing all three gates.
    pub passing: usize,
    /// passing / total.
    pub fraction: f64,
    /// Samples whose full summability sum stays below C − λ.
    pub sum_ok: usize,
    /// Samples whose tail beyond m stays below λ/Λ.
    pub tail_ok: usize,
    /// Samples whose orbit avoids the support family up to time m.
    pub avoid_ok: usize,
    /// Measured sup of the conjugacy derivative over the support family.
    pub conjugacy_deriv_sup: f64,
}

/// Diagnostic: at each sample point, check that the summability profile of
/// the unperturbed map is strong enough to survive the conjugacy distortion,
/// by the three per-sample gates of [`TransferPolicy`]. Purely informative —
/// nothing fails; the caller reads the passing fraction.
pub fn transfer_check(
    f: &MonotoneLift,
    g: &MonotoneLift,
    conjugacy: &MonotoneLift,
    samples: &[f64],
    supports: &[(f64, f64)],
    policy: &TransferPolicy,
) -> Result<TransferReport> {
    if !(policy.lambda > 0.0) {
        return Err(CoreError::param("lambda", "slack must be positive"));
    }
    if !(policy.big_lambda > policy.sup_envelope) {
        return Err(CoreError::param(
            "big_lambda",
            format!(
                "distortion budget {} must exceed the envelope sup {}",
                policy.big_lambda, policy.sup_envelope
            ),
        ));
    }
    if policy.m >= policy.horizon {
        return Err(CoreError::param("m", "split index must precede the horizon"));
    }

    let mut passing = 0;
    let mut sum_ok_n = 0;
    let mut tail_ok_n = 0;
    let mut avoid_ok_n = 0;
    for &y in samples {
        let orbit = OrbitTable::build(f, y, 0, policy.horizon as i64);
        let mut sum = 0.0;
        let mut tail = 0.0;
        for n in 0..policy.horizon {
            let term = orbit.cocycle(n as i64).powi(-2);
            sum += term;
            if n >= policy.m {
                tail += term;
            }
        }
        let sum_ok = sum < policy.regularity - policy.lambda;
        let tail_ok = tail < policy.lambda / policy.big_lambda;
        let mut avoid_ok = true;
        let mut z = y;
        for _ in 0..=policy.m {
            if in_family(frac(z), supports) {
                avoid_ok = false;
                break;
            }
            z = g.eval(z);
        }
        sum_ok_n += sum_ok as usize;
        tail_ok_n += tail_ok as usize;
        avoid_ok_n += avoid_ok as usize;
        passing += (sum_ok && tail_ok && avoid_ok) as usize;
    }

    let mut conjugacy_deriv_sup: f64 = 0.0;
    for &(lo, hi) in supports {
        for i in 0..=C0_SAMPLES_PER_ARC {
            let y = lo + (hi - lo) * i as f64 / C0_SAMPLES_PER_ARC as f64;
            conjugacy_deriv_sup = conjugacy_deriv_sup.max(conjugacy.deriv(y));
        }
    }
    for i in 0..C0_GLOBAL_SAMPLES {
        let y = (i as f64 + 0.5) / C0_GLOBAL_SAMPLES as f64;
        conjugacy_deriv_sup = conjugacy_deriv_sup.max(conjugacy.deriv(y));
    }

    let total = samples.len();
    Ok(TransferReport {
        total,
        passing,
        fraction: if total == 0 {
            0.0
        } else {
            passing as f64 / total as f64
        },
        sum_ok: sum_ok_n,
        tail_ok: tail_ok_n,
        avoid_ok: avoid_ok_n,
        conjugacy_deriv_sup,
    })
}

/// Step plan tuned for the standard staircase model: tight window thresholds,
/// regularity budget 8, envelope budget 1.5 (drop threshold 0.05), and a
/// residual-identity tolerance sized to the alignment noise of the model's
/// sub-micron cores.
#[derive(Debug, Clone)]
pub struct StepPlan {
    /// Regularity budget C.
    pub regularity: f64,
    /// Closeness budget ε.
    pub epsilon: f64,
    /// Full step policy.
    pub config: StepConfig,
}

/// Plan for one step on [`crate::model::ModelMap::standard`] at its marked
/// point.
pub fn standard_plan() -> StepPlan {
    let mut config = StepConfig::default();
    config.policy = WindowPolicy {
        smallness: 0.02,
        largeness: 2.0,
        ..WindowPolicy::default()
    };
    config.horizon = 300;
    config.envelope_budget = Some(1.5);
    config.identity_samples = 100;
    config.identity_tol = 1e-6;
    StepPlan {
        regularity: 8.0,
        epsilon: 0.025,
        config,
    }
}

#[cfg(test)]
pub(crate) fn shared_standard_step() -> &'static StepOutcome {
    use std::sync::OnceLock;
    static CELL: OnceLock<StepOutcome> = OnceLock::new();
    CELL.get_or_init(|| {
        let model = crate::model::shared_standard();
        let plan = standard_plan();
        let mut config = plan.config.clone();
        // Trimmed sampling keeps the unit suite fast; the full-density scan
        // runs in the acceptance suite.
        config.grid_points = 2000;
        config.identity_samples = 48;
        apply_step(model.f(), model.x0(), plan.regularity, plan.epsilon, &config)
            .expect("standard model step")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::shared_standard;

    #[test]
    fn standard_step_drop_matches_envelope_prediction() {
        let step = shared_standard_step();
        let r = &step.report;
        assert!(
            r.drop_mismatch <= 1e-9,
            "drop mismatch {:.3e}",
            r.drop_mismatch
        );
        assert!(
            r.drop_measured < -r.epsilon0,
            "drop {} vs threshold {}",
            r.drop_measured,
            r.epsilon0
        );
        // b₀ = e and e₀ = 1 + e⁻² + e⁻⁴ + e⁻⁶ for the staircase model.
        let e0 = 1.0 + (-2.0f64).exp() + (-4.0f64).exp() + (-6.0f64).exp();
        let predicted = -1.0f64.exp() / (1.0 + e0);
        assert!(
            (r.drop_predicted - predicted).abs() < 2e-3,
            "predicted drop {} vs staircase value {}",
            r.drop_predicted,
            predicted
        );
        assert!((r.epsilon0 - 0.05).abs() < 1e-12, "epsilon0 {}", r.epsilon0);
    }

    #[test]
    fn standard_step_symmetrized_defect_is_small() {
        let step = shared_standard_step();
        let r = &step.report;
        assert!(
            r.sym_c1_defect < 0.01,
            "symmetrized defect {:.3e}",
            r.sym_c1_defect
        );
        assert!(
            r.sym_c1_defect > 5e-4,
            "defect {:.3e} suspiciously small: grid missed the support family",
            r.sym_c1_defect
        );
        assert!(r.conjugacy_c0 < 1e-4, "C0 size {:.3e}", r.conjugacy_c0);
        assert!(
            r.fixed_point_shift <= 1e-10,
            "marked point moved by {:.3e}",
            r.fixed_point_shift
        );
        assert!(r.sym_bound < 8.0, "sym bound {}", r.sym_bound);
        assert!(r.proxy_pass, "summability gates failed");
    }

    #[test]
    fn standard_step_pointwise_defect_identity() {
        let step = shared_standard_step();
        let r = &step.report;
        assert!(
            r.identity_sup <= 1e-6,
            "residual identity deviation {:.3e}",
            r.identity_sup
        );
        assert!(r.identity_pass);
    }

    #[test]
    fn standard_step_probe_exceeds_threshold() {
        let step = shared_standard_step();
        let r = &step.report;
        let probe = r.probe.expect("probe witness");
        assert!(probe.ratio > r.probe_threshold);
        assert!(probe.u < probe.v);
        // The plateau ratio of the staircase model is
        // (1 + e₀)/(1 + e₁) ≈ 1.865; band-edge droop on the macro side can
        // only lower the measured value.
        assert!(
            probe.ratio > 1.5 && probe.ratio < 1.95,
            "probe ratio {}",
            probe.ratio
        );
        // Independent recomputation of the recorded ratio.
        let again = delta_stat(&step.map, probe.x, probe.v, probe.u).unwrap();
        assert!(
            (again - probe.ratio).abs() <= 1e-12,
            "recorded {} recomputed {}",
            probe.ratio,
            again
        );
    }

    #[test]
    fn standard_step_keeps_map_fixed_off_supports() {
        let step = shared_standard_step();
        assert!(
            step.report.support_leak <= SUPPORT_TOL,
            "support leak {:.3e}",
            step.report.support_leak
        );
    }

    #[test]
    fn bump_conjugacy_fixes_centers_and_endpoints() {
        let step = shared_standard_step();
        let lin = &step.linearizer;
        for j in lin.j_min()..=lin.j_max() {
            if step.schedule.e(j) == 0.0 {
                continue;
            }
            let (lo, hi) = lin.core_rep(j);
            let c = 0.5 * (lo + hi);
            assert!((step.bump.eval(lo) - lo).abs() <= 1e-13, "endpoint at j={j}");
            assert!((step.bump.eval(hi) - hi).abs() <= 1e-13, "endpoint at j={j}");
            assert!((step.bump.eval(c) - c).abs() <= 1e-13, "center at j={j}");
            let want = 1.0 + step.schedule.e(j);
            let got = step.bump.deriv(c);
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "center derivative at j={j}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn unperturbed_map_shows_no_probe() {
        let step = shared_standard_step();
        let model = shared_standard();
        let lin = &step.linearizer;
        let (probe, best) = find_uv(
            model.f(),
            model.x0(),
            core_width(lin, 0),
            arc_width(lin, 0),
            step.report.epsilon0,
            &ProbeConfig::default(),
        );
        assert!(probe.is_none(), "unperturbed map produced a witness");
        assert!(best < 1.05, "best ratio {best} on the unperturbed map");
    }

    #[test]
    fn probe_scan_is_deterministic_and_maximal_on_spot_checks() {
        let step = shared_standard_step();
        let r = &step.report;
        let probe = r.probe.unwrap();
        let (again, best) = find_uv(
            &step.map,
            probe.x,
            core_width(&step.linearizer, 0),
            arc_width(&step.linearizer, 0),
            r.epsilon0,
            &ProbeConfig::default(),
        );
        let again = again.unwrap();
        assert_eq!(again.u.to_bits(), probe.u.to_bits());
        assert_eq!(again.v.to_bits(), probe.v.to_bits());
        assert_eq!(again.ratio.to_bits(), probe.ratio.to_bits());
        assert_eq!(best.to_bits(), r.probe_best.to_bits());
        // Spot-check maximality against nearby dyadic pairs.
        for (ku, kv) in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)] {
            let u = probe.u * f64::powi(2.0, ku);
            let v = probe.v * f64::powi(2.0, kv);
            if v <= u {
                continue;
            }
            if let Ok(other) = delta_stat(&step.map, probe.x, v, u) {
                assert!(
                    other <= probe.ratio + 1e-12,
                    "pair ({u:.3e}, {v:.3e}) beats the recorded maximum"
                );
            }
        }
    }

    #[test]
    fn regularity_budget_must_dominate_symmetrized_derivative() {
        let model = shared_standard();
        let plan = standard_plan();
        let err = apply_step(model.f(), model.x0(), 2.0, plan.epsilon, &plan.config)
            .expect_err("budget below the measured bound");
        assert!(matches!(err, CoreError::ClosenessFailure { .. }), "{err}");
    }

    #[test]
    fn proxy_enforcement_rejects_rotation() {
        let rot = Arc::new(MonotoneLift::rotation(crate::rotation::golden_angle()));
        let plan = standard_plan();
        let err = apply_step(&rot, 0.25, plan.regularity, plan.epsilon, &plan.config)
            .expect_err("rotation has a flat cocycle");
        assert!(matches!(err, CoreError::Construction(_)), "{err}");
    }

    #[test]
    fn transfer_check_flags_orbit_hits_and_passes_ring_points() {
        let step = shared_standard_step();
        let model = shared_standard();
        let x0 = model.x0();
        // Points at a circle distance beyond the support half-width but
        // inside the affine plateau keep the marked orbit's profile forever
        // (the conjugated rotation preserves distances), so they pass.
        let ring = [x0 + 2.8e-7, x0 - 2.8e-7, x0 + 3.0e-7, x0 - 3.0e-7];
        let mut samples = ring.to_vec();
        samples.push(x0); // inside I₀: fails avoidance at time 0
        samples.push(0.37); // generic point: summability blows up
        let supports = step.supports();
        let policy = TransferPolicy {
            horizon: 256,
            m: 8,
            big_lambda: 3.0,
            lambda: 1.0,
            regularity: 8.0,
            sup_envelope: step.schedule.sup_e(),
        };
        let report = transfer_check(
            model.f(),
            &step.map,
            &step.conjugacy,
            &samples,
            &supports,
            &policy,
        )
        .unwrap();
        assert_eq!(report.total, 6);
        assert_eq!(report.passing, 4, "{report:?}");
        assert_eq!(report.avoid_ok, 5, "{report:?}");
        assert!(report.fraction > 0.6 && report.fraction < 0.7);
        // Conjugacy distortion stays below (1 + δ)(1 + sup e).
        let bound = (1.0 + step.delta) * (1.0 + step.schedule.sup_e());
        assert!(
            report.conjugacy_deriv_sup < bound,
            "distortion {} vs budget {}",
            report.conjugacy_deriv_sup,
            bound
        );
    }
}
