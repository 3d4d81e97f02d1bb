//! Cocycle tables along an orbit and the envelope staircase driving one
//! perturbation step.
//!
//! For a marked point x with orbit x_j = f^j(x) and one-step derivatives
//! b_j = Df(x_j), the table c_j solves the two-sided recurrence
//! c_j·b_j·b_{j−1} = c_{j−1} with c₀ = 1 (equivalently, in closed form,
//! c_j = Df(x)/(Df^j(x)·Df^{j+1}(x))). Summability of the forward c_j and
//! divergence of the backward c_j are exactly the asymmetry the step exploits:
//! a window pair N < N′ is chosen so that the staircase
//!
//! * e_j = Σ_{j ≤ i ≤ N} c_i on the inner window |j| ≤ N (suffix sums),
//! * e_j = (Σ_{−N′ ≤ i < j} c_i)/τ on the run-off −N′ ≤ j < −N (prefix sums),
//! * e_j = 0 outside,
//!
//! is nonnegative and closes up: τ = (Σ_{−N′ ≤ j < −N} c_j)/e_{−N} makes both
//! definitions meet at j = −N up to rounding. The discrete residual
//! r_j = (e_{j+1} − e_j)·b_j·b_{j−1} + (e_{j−1} − e_j) then vanishes
//! identically except at the three seams j ∈ {−N′, −N, N+1}, which is what
//! confines the later derivative defect of the perturbed map to the seam
//! intervals.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::lift::MonotoneLift;
use crate::orbit::OrbitTable;

/// Tolerance for the structural identities of an assembled schedule
/// (recurrence, staircase closure, interior residuals).
pub const SCHEDULE_TOL: f64 = 1e-12;

/// Guaranteed derivative drop 1/(C·(1 + C′)) for maps with symmetrized
/// derivative bound C and envelope budget C′. Exact for exactly representable
/// inputs: drop_threshold(2, 3) = 1/8.
pub fn drop_threshold(regularity: f64, envelope: f64) -> f64 {
    1.0 / (regularity * (1.0 + envelope))
}

/// Two-sided cocycle table around a marked point: b_j and c_j for
/// j ∈ [−(horizon+1), horizon+1].
#[derive(Debug, Clone)]
pub struct CocycleTable {
    x: f64,
    horizon: usize,
    lo: i64,
    points: Option<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    cocycle: Vec<f64>,
}

impl CocycleTable {
    /// Measure the table along the orbit of x under f.
    pub fn compute(f: &MonotoneLift, x: f64, horizon: usize) -> Result<CocycleTable> {
        if horizon == 0 {
            return Err(CoreError::param("horizon", "must be at least 1"));
        }
        let h = horizon as i64;
        let table = OrbitTable::build(f, x, -(h + 1), h + 1);
        let points = (-(h + 1)..=h + 1).map(|j| table.point(j)).collect();
        let b: Vec<f64> = (-(h + 1)..=h + 1).map(|j| table.one_step(j)).collect();
        let cocycle = (-(h + 1)..=h + 1).map(|j| table.cocycle(j)).collect();
        Self::from_parts(x, horizon, Some(points), b, cocycle)
    }

    /// Synthetic table from a prescribed slope sequence b_j (no underlying
    /// map); used by tests and by closed-form examples. The cocycle products
    /// are accumulated with the same chain rule an orbit table uses.
    pub fn from_slopes(
        x: f64,
        horizon: usize,
        slope: impl Fn(i64) -> f64,
    ) -> Result<CocycleTable> {
        if horizon == 0 {
            return Err(CoreError::param("horizon", "must be at least 1"));
        }
        let h = horizon as i64;
        let b: Vec<f64> = (-(h + 1)..=h + 1).map(&slope).collect();
        let lo = -(h + 1);
        let len = b.len();
        let zero = (-lo) as usize;
        let mut cocycle = vec![1.0; len];
        for i in zero..len - 1 {
            cocycle[i + 1] = cocycle[i] * b[i];
        }
        for i in (0..zero).rev() {
            cocycle[i] = cocycle[i + 1] / b[i];
        }
        Self::from_parts(x, horizon, None, b, cocycle)
    }

    fn from_parts(
        x: f64,
        horizon: usize,
        points: Option<Vec<f64>>,
        b: Vec<f64>,
        cocycle: Vec<f64>,
    ) -> Result<CocycleTable> {
        if let Some(&bad) = b.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(CoreError::param(
                "slopes",
                format!("one-step derivative {bad} is not a positive finite number"),
            ));
        }
        let h = horizon as i64;
        let lo = -(h + 1);
        // c by the two-sided recurrence from c₀ = 1.
        let len = b.len();
        let zero = (-lo) as usize;
        let mut c = vec![0.0; len];
        c[zero] = 1.0;
        for i in zero + 1..len {
            // c_j = c_{j−1}/(b_j·b_{j−1})
            c[i] = c[i - 1] / (b[i] * b[i - 1]);
        }
        for i in (0..zero).rev() {
            // c_{j−1} = c_j·b_j·b_{j−1}
            c[i] = c[i + 1] * b[i + 1] * b[i];
        }
        Ok(CocycleTable {
            x,
            horizon,
            lo,
            points,
            b,
            c,
            cocycle,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Smallest stored index, −(horizon+1); the largest is horizon+1.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.b.len() as i64 - 1
    }

    #[inline]
    fn idx(&self, j: i64) -> usize {
        assert!(
            j >= self.lo && j <= self.hi(),
            "index {j} outside stored range [{}, {}]",
            self.lo,
            self.hi()
        );
        (j - self.lo) as usize
    }

    /// b_j = Df(f^j x).
    pub fn b(&self, j: i64) -> f64 {
        self.b[self.idx(j)]
    }

    /// c_j from the two-sided recurrence.
    pub fn c(&self, j: i64) -> f64 {
        self.c[self.idx(j)]
    }

    /// Df^j(x); for synthetic tables, the chain-rule product of the slopes.
    pub fn cocycle(&self, j: i64) -> f64 {
        self.cocycle[self.idx(j)]
    }

    /// Orbit point f^j(x) (None for synthetic tables).
    pub fn point(&self, j: i64) -> Option<f64> {
        self.points.as_ref().map(|p| p[self.idx(j)])
    }

    /// Largest forward c_j over the last six indices before the horizon:
    /// the decay certificate for the forward envelope.
    pub fn forward_tail(&self) -> f64 {
        let h = self.horizon as i64;
        (h - 5..=h)
            .filter(|&j| j >= 1)
            .map(|j| self.c(j))
            .fold(0.0, f64::max)
    }
}

/// Selection thresholds for the window pair (N, N′).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowPolicy {
    /// Threshold the window-edge c values should fall below.
    pub smallness: f64,
    /// Lower bound demanded of the run-off mass ratio τ.
    pub largeness: f64,
    /// If false, N minimizes max(c_N, c_{−N}) instead of requiring the
    /// smallness threshold, and the backward threshold at −N′ is waived;
    /// the τ > largeness requirement is never waived.
    pub enforce_smallness: bool,
    /// Decay demanded of the forward c_j near the horizon.
    pub forward_tail_bound: f64,
    /// If false, the forward-tail decay check is recorded but not enforced.
    pub enforce_forward_tail: bool,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            smallness: 0.05,
            largeness: 5.0,
            enforce_smallness: true,
            forward_tail_bound: 1e-6,
            enforce_forward_tail: true,
        }
    }
}

impl WindowPolicy {
    /// Best-effort policy: thresholds are recorded but only τ > largeness is
    /// enforced. Used for maps whose backward envelope grows too slowly at
    /// finite depth to clear the strict thresholds.
    pub fn relaxed(largeness: f64) -> Self {
        WindowPolicy {
            largeness,
            enforce_smallness: false,
            enforce_forward_tail: false,
            ..WindowPolicy::default()
        }
    }
}

/// A chosen window pair with its mass ratio and the record of which
/// thresholds were genuinely met.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Windows {
    pub n: usize,
    pub n_prime: usize,
    /// τ = (Σ_{−N′ ≤ j < −N} c_j) / e_{−N}.
    pub tau: f64,
    /// max(c_N, c_{−N}) < smallness threshold.
    pub smallness_met: bool,
    /// c_{−N′} < smallness threshold.
    pub backward_smallness_met: bool,
    /// Largest forward c_j near the horizon.
    pub forward_tail: f64,
    pub forward_tail_met: bool,
}

/// Sum of c_j over an inclusive index range, accumulated in ascending order.
fn sum_c(table: &CocycleTable, from: i64, to: i64) -> f64 {
    (from..=to).map(|j| table.c(j)).sum()
}

fn tau_for(table: &CocycleTable, n: usize, n_prime: usize) -> f64 {
    let e_minus_n = sum_c(table, -(n as i64), n as i64);
    sum_c(table, -(n_prime as i64), -(n as i64) - 1) / e_minus_n
}

/// Choose the window pair (N, N′) for a cocycle table under a policy.
///
/// N is the smallest index with max(c_N, c_{−N}) below the smallness
/// threshold (or, relaxed, the index minimizing that quantity); N′ > N is the
/// smallest index whose run-off mass ratio τ exceeds the largeness threshold
/// and (strict only) whose backward value c_{−N′} is below the smallness
/// threshold. Fails with a window-search error when the horizon is exhausted.
pub fn choose_windows(table: &CocycleTable, policy: &WindowPolicy) -> Result<Windows> {
    let h = table.horizon();
    let forward_tail = table.forward_tail();
    let forward_tail_met = forward_tail < policy.forward_tail_bound;
    if policy.enforce_forward_tail && !forward_tail_met {
        return Err(CoreError::WindowSearch {
            horizon: h,
            reason: format!(
                "forward c_j near the horizon reach {forward_tail:.3e}, above the decay bound {:.1e}",
                policy.forward_tail_bound
            ),
        });
    }

    let edge = |n: usize| table.c(n as i64).max(table.c(-(n as i64)));
    let n = if policy.enforce_smallness {
        match (1..=h).find(|&n| edge(n) < policy.smallness) {
            Some(n) => n,
            None => {
                let (best_n, best) = (1..=h)
                    .map(|n| (n, edge(n)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("horizon ≥ 1");
                return Err(CoreError::WindowSearch {
                    horizon: h,
                    reason: format!(
                        "no inner window: best max(c_N, c_{{−N}}) = {best:.3e} at N = {best_n}, \
                         above smallness {:.3e}",
                        policy.smallness
                    ),
                });
            }
        }
    } else {
        (1..=h)
            .map(|n| (n, edge(n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("horizon ≥ 1")
            .0
    };
    let smallness_met = edge(n) < policy.smallness;

    let mut best_tau = f64::NEG_INFINITY;
    let mut chosen = None;
    for n_prime in n + 1..=h {
        let tau = tau_for(table, n, n_prime);
        best_tau = best_tau.max(tau);
        let backward_ok =
            !policy.enforce_smallness || table.c(-(n_prime as i64)) < policy.smallness;
        if backward_ok && tau > policy.largeness {
            chosen = Some((n_prime, tau));
            break;
        }
    }
    let Some((n_prime, tau)) = chosen else {
        return Err(CoreError::WindowSearch {
            horizon: h,
            reason: format!(
                "no run-off window above N = {n}: best τ = {best_tau:.3e} \
                 never exceeded largeness {:.3e}",
                policy.largeness
            ),
        });
    };

    Ok(Windows {
        n,
        n_prime,
        tau,
        smallness_met,
        backward_smallness_met: table.c(-(n_prime as i64)) < policy.smallness,
        forward_tail,
        forward_tail_met,
    })
}

/// Fully assembled step schedule: windows, slope and cocycle tables restricted
/// to [−N′−1, N+1], the envelope staircase, and the drop threshold derived
/// from the regularity and envelope budgets.
#[derive(Debug, Clone, Serialize)]
pub struct CocycleSchedule {
    x: f64,
    n: usize,
    n_prime: usize,
    tau: f64,
    lo: i64,
    b: Vec<f64>,
    c: Vec<f64>,
    e: Vec<f64>,
    sup_e: f64,
    e0: f64,
    /// C: bound assumed on sup(Df + Df⁻¹).
    regularity_budget: f64,
    /// C′: budget for e₀ (validated: e₀ < C′).
    envelope_budget: f64,
    drop_threshold: f64,
    /// Mismatch of the two staircase legs at the seam j = −N (rounding only).
    closure_defect: f64,
    windows: Windows,
}

impl CocycleSchedule {
    /// Assemble with windows chosen by policy.
    pub fn from_policy(
        table: &CocycleTable,
        policy: &WindowPolicy,
        regularity_budget: f64,
        envelope_budget: Option<f64>,
    ) -> Result<CocycleSchedule> {
        let windows = choose_windows(table, policy)?;
        Self::assemble(table, windows, regularity_budget, envelope_budget)
    }

    /// Assemble with an explicitly prescribed window pair. The threshold
    /// record in `windows` is re-derived against the default policy.
    pub fn with_windows(
        table: &CocycleTable,
        n: usize,
        n_prime: usize,
        regularity_budget: f64,
        envelope_budget: Option<f64>,
    ) -> Result<CocycleSchedule> {
        if n == 0 || n_prime <= n {
            return Err(CoreError::param(
                "windows",
                format!("need 0 < N < N′, got N = {n}, N′ = {n_prime}"),
            ));
        }
        if n_prime > table.horizon() {
            return Err(CoreError::param(
                "windows",
                format!(
                    "N′ = {n_prime} exceeds the table horizon {}",
                    table.horizon()
                ),
            ));
        }
        let defaults = WindowPolicy::default();
        let edge = table.c(n as i64).max(table.c(-(n as i64)));
        let windows = Windows {
            n,
            n_prime,
            tau: tau_for(table, n, n_prime),
            smallness_met: edge < defaults.smallness,
            backward_smallness_met: table.c(-(n_prime as i64)) < defaults.smallness,
            forward_tail: table.forward_tail(),
            forward_tail_met: table.forward_tail() < defaults.forward_tail_bound,
        };
        Self::assemble(table, windows, regularity_budget, envelope_budget)
    }

    fn assemble(
        table: &CocycleTable,
        windows: Windows,
        regularity_budget: f64,
        envelope_budget: Option<f64>,
    ) -> Result<CocycleSchedule> {
        if !(regularity_budget > 0.0) {
            return Err(CoreError::param("regularity_budget", "must be positive"));
        }
        let (n, np) = (windows.n as i64, windows.n_prime as i64);
        let lo = -np - 1;
        let hi = n + 1;
        let b: Vec<f64> = (lo..=hi).map(|j| table.b(j)).collect();
        let c: Vec<f64> = (lo..=hi).map(|j| table.c(j)).collect();
        let tau = windows.tau;
        if !(tau > 0.0) {
            return Err(CoreError::Construction(format!(
                "run-off mass ratio τ = {tau} is not positive"
            )));
        }

        // Staircase: suffix sums of c on [−N, N+1] (exact zero at N+1),
        // prefix sums divided by τ on [−N′, −N−1] (exact zero at −N′),
        // zero beyond. The two legs meet at −N up to rounding; the mismatch
        // is recorded and sits inside the exempt seam residual there.
        let len = (hi - lo + 1) as usize;
        let at = |j: i64| (j - lo) as usize;
        let mut e = vec![0.0; len];
        for j in (-n..=n).rev() {
            e[at(j)] = e[at(j + 1)] + table.c(j);
        }
        let mut prefix = 0.0;
        for j in -np..-n {
            e[at(j)] = prefix / tau;
            prefix += table.c(j);
        }
        let lower_leg_top = prefix / tau;
        let closure_defect = (lower_leg_top - e[at(-n)]).abs();

        for (i, &v) in e.iter().enumerate() {
            if v < 0.0 {
                return Err(CoreError::NegativeEnvelope {
                    index: lo + i as i64,
                    value: v,
                });
            }
        }
        let sup_e = e.iter().copied().fold(0.0, f64::max);
        let e0 = e[at(0)];
        let envelope_budget = match envelope_budget {
            Some(v) => v,
            None => budget_above(e0),
        };
        if !(e0 < envelope_budget) {
            return Err(CoreError::param(
                "envelope_budget",
                format!("e₀ = {e0} must stay below the budget C′ = {envelope_budget}"),
            ));
        }

        let schedule = CocycleSchedule {
            x: table.x(),
            n: windows.n,
            n_prime: windows.n_prime,
            tau,
            lo,
            b,
            c,
            e,
            sup_e,
            e0,
            regularity_budget,
            envelope_budget,
            drop_threshold: drop_threshold(regularity_budget, envelope_budget),
            closure_defect,
            windows,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Structural identities at SCHEDULE_TOL: c₀ = 1, the c recurrence,
    /// staircase closure, and vanishing interior residuals.
    fn validate(&self) -> Result<()> {
        if self.c(0) != 1.0 {
            return Err(CoreError::Construction(format!(
                "c₀ = {} is not exactly 1",
                self.c(0)
            )));
        }
        for j in self.lo + 1..=self.hi() {
            let defect = (self.c(j) * self.b(j) * self.b(j - 1) - self.c(j - 1)).abs();
            let scale = self.c(j - 1).max(1.0);
            if defect > SCHEDULE_TOL * scale {
                return Err(CoreError::Construction(format!(
                    "cocycle recurrence defect {defect:.3e} at j = {j}"
                )));
            }
        }
        if self.closure_defect > SCHEDULE_TOL {
            return Err(CoreError::Construction(format!(
                "staircase legs meet at −N with defect {:.3e}",
                self.closure_defect
            )));
        }
        let (n, np) = (self.n as i64, self.n_prime as i64);
        for j in -np..=n + 1 {
            if j == -np || j == -n || j == n + 1 {
                continue;
            }
            let r = self.residual(j);
            if r.abs() > SCHEDULE_TOL * self.sup_e.max(1.0) {
                return Err(CoreError::Construction(format!(
                    "interior residual r_{j} = {r:.3e} does not vanish"
                )));
            }
        }
        Ok(())
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Smallest stored index, −N′−1; the largest is N+1.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.b.len() as i64 - 1
    }

    #[inline]
    fn idx(&self, j: i64) -> usize {
        assert!(
            j >= self.lo && j <= self.hi(),
            "index {j} outside schedule range [{}, {}]",
            self.lo,
            self.hi()
        );
        (j - self.lo) as usize
    }

    pub fn b(&self, j: i64) -> f64 {
        self.b[self.idx(j)]
    }

    pub fn c(&self, j: i64) -> f64 {
        self.c[self.idx(j)]
    }

    /// Envelope value; identically zero outside the stored window.
    pub fn e(&self, j: i64) -> f64 {
        if j < self.lo || j > self.hi() {
            0.0
        } else {
            self.e[self.idx(j)]
        }
    }

    /// sup_j e_j (attained at j = −N).
    pub fn sup_e(&self) -> f64 {
        self.sup_e
    }

    /// e₀ = Σ_{0 ≤ j ≤ N} c_j.
    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// C: assumed bound on sup(Df + Df⁻¹).
    pub fn regularity_budget(&self) -> f64 {
        self.regularity_budget
    }

    /// C′: validated budget for e₀.
    pub fn envelope_budget(&self) -> f64 {
        self.envelope_budget
    }

    /// 1/(C·(1 + C′)): the guaranteed derivative drop at the marked point.
    pub fn drop_threshold(&self) -> f64 {
        self.drop_threshold
    }

    /// Rounding mismatch between the staircase legs at j = −N.
    pub fn closure_defect(&self) -> f64 {
        self.closure_defect
    }

    pub fn windows(&self) -> &Windows {
        &self.windows
    }

    /// Discrete residual r_j = (e_{j+1} − e_j)·b_j·b_{j−1} + (e_{j−1} − e_j)
    /// for j ∈ [−N′, N+1]; zero except at the three seams.
    pub fn residual(&self, j: i64) -> f64 {
        assert!(
            j >= -(self.n_prime as i64) && j <= self.n as i64 + 1,
            "residual index {j} outside [−N′, N+1]"
        );
        let e_next = self.e(j + 1);
        let e_here = self.e(j);
        let e_prev = self.e(j - 1);
        (e_next - e_here) * self.b(j) * self.b(j - 1) + (e_prev - e_here)
    }

    /// The three seams with their closed-form residuals:
    /// r_{N+1} = c_N, r_{−N} = −c_{−N−1}(1 + 1/τ), r_{−N′} = c_{−N′−1}/τ.
    pub fn seam_residuals(&self) -> [(i64, f64); 3] {
        let (n, np) = (self.n as i64, self.n_prime as i64);
        [
            (n + 1, self.c(n)),
            (-n, -self.c(-n - 1) * (1.0 + 1.0 / self.tau)),
            (-np, self.c(-np - 1) / self.tau),
        ]
    }

    /// Rows (j, b_j, c_j, e_j, r_j) for export; the residual column is NaN at
    /// the two border indices where r is not defined.
    pub fn rows(&self) -> Vec<ScheduleRow> {
        (self.lo..=self.hi())
            .map(|j| ScheduleRow {
                j,
                b: self.b(j),
                c: self.c(j),
                e: self.e(j),
                residual: if j > self.lo && j < self.hi() {
                    // defined on [−N′, N+1] and lo = −N′−1, hi = N+1
                    if j <= self.n as i64 + 1 {
                        self.residual(j)
                    } else {
                        f64::NAN
                    }
                } else if j == self.hi() {
                    self.residual(j)
                } else {
                    f64::NAN
                },
            })
            .collect()
    }
}

/// One export row of a schedule table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScheduleRow {
    pub j: i64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub residual: f64,
}

/// Smallest three-significant-digit decimal strictly above v, with at least
/// relative 1e−9 headroom so later recomputations of v cannot cross it (used
/// as the default envelope budget C′ when none is supplied).
pub fn budget_above(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let exp = v.log10().floor() as i32 - 2;
    let scale = 10f64.powi(exp);
    let mut q = (v / scale).ceil() * scale;
    while q <= v * (1.0 + 1e-9) {
        q += scale;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::MonotoneLift;
    use crate::stage::Stage;
    use crate::tree::{IntervalTree, TreeConfig};
    use crate::tree::{Letter, Word};
    use std::sync::Arc;

    #[test]
    fn rotation_table_is_flat() {
        let f = MonotoneLift::rotation(0.6180339887498949);
        let t = CocycleTable::compute(&f, 0.2, 6).unwrap();
        for j in -7..=7 {
            assert_eq!(t.b(j), 1.0);
            assert_eq!(t.c(j), 1.0);
            assert_eq!(t.cocycle(j), 1.0);
        }
        assert_eq!(t.forward_tail(), 1.0);
    }

    #[test]
    fn constant_slope_two_gives_exact_powers_of_four() {
        let t = CocycleTable::from_slopes(0.0, 5, |_| 2.0).unwrap();
        for j in -6i64..=6 {
            assert_eq!(t.c(j), 4f64.powi(-j as i32), "c at {j}");
        }
        assert_eq!(t.c(-1), 4.0);
        assert_eq!(t.c(-2), 16.0);
        assert!(t.point(0).is_none());
    }

    #[test]
    fn recurrence_matches_closed_form_on_a_stage_map() {
        let tree = Arc::new(IntervalTree::build(&TreeConfig::default()).unwrap());
        let s3 = Stage::build(tree, 3).unwrap();
        let x = s3.base_point(&Word::repeated(Letter::L, 3)).unwrap();
        let t = CocycleTable::compute(s3.f(), x, 8).unwrap();
        for j in -8i64..=8 {
            let oracle = t.b(0) / (t.cocycle(j) * t.cocycle(j + 1));
            let got = t.c(j);
            assert!(
                (got - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
                "j = {j}: recurrence {got} vs closed form {oracle}"
            );
        }
    }

    #[test]
    fn toy_staircase_matches_hand_values() {
        let t = CocycleTable::from_slopes(0.0, 4, |_| 2.0).unwrap();
        let s = CocycleSchedule::with_windows(&t, 1, 3, 2.0, Some(3.0)).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.n_prime(), 3);
        assert_eq!(s.e(2), 0.0);
        assert_eq!(s.e(1), 0.25);
        assert_eq!(s.e(0), 1.25);
        assert_eq!(s.e(-1), 5.25);
        let tau_expect = (16.0 + 64.0) / 5.25;
        assert!((s.tau() - tau_expect).abs() < 1e-12, "τ = {}", s.tau());
        assert!((s.e(-2) - 4.2).abs() < 1e-12);
        assert_eq!(s.e(-3), 0.0);
        assert_eq!(s.e(-4), 0.0);
        assert_eq!(s.e(7), 0.0);
        assert_eq!(s.sup_e(), 5.25);
        assert_eq!(s.e0(), 1.25);
        assert!(s.closure_defect() <= 1e-15);

        // interior residuals vanish; seams match their closed forms
        for j in [-2i64, 0, 1] {
            assert!(s.residual(j).abs() <= 1e-12, "r_{j} = {}", s.residual(j));
        }
        let seams = s.seam_residuals();
        assert_eq!(seams[0].0, 2);
        assert!((s.residual(2) - s.c(1)).abs() < 1e-12);
        assert!((s.residual(-1) - (-s.c(-2)) * (1.0 + 1.0 / s.tau())).abs() < 1e-12);
        assert!((s.residual(-3) - s.c(-4) / s.tau()).abs() < 1e-12);
        for (j, closed) in seams {
            assert!(
                (s.residual(j) - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                "seam r_{j}: {} vs {closed}",
                s.residual(j)
            );
        }

        assert_eq!(s.drop_threshold(), 0.125);
    }

    #[test]
    fn drop_threshold_is_exact_for_representable_budgets() {
        assert_eq!(drop_threshold(2.0, 3.0), 0.125);
        assert_eq!(drop_threshold(4.0, 1.0), 0.125);
        assert!(drop_threshold(13.0, 2.63) < drop_threshold(13.0, 1.0));
    }

    #[test]
    fn strict_windows_reject_growing_backward_values() {
        // constant slope 2: c_{−n} = 4^n grows, so no inner window exists at
        // any horizon once the forward tail has decayed
        let t = CocycleTable::from_slopes(0.0, 16, |_| 2.0).unwrap();
        let policy = WindowPolicy {
            smallness: 0.01,
            ..WindowPolicy::default()
        };
        match choose_windows(&t, &policy) {
            Err(CoreError::WindowSearch { reason, .. }) => {
                assert!(reason.contains("no inner window"), "reason: {reason}");
            }
            other => panic!("expected window-search failure, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_decay_exhausts_the_mass_ratio() {
        // c_j = 4^{−|j|}: both sides summable, so the run-off mass ratio τ
        // stays far below any honest largeness threshold.
        let slope = |j: i64| {
            if j >= 0 {
                2.0
            } else if j % 2 != 0 {
                0.125
            } else {
                2.0
            }
        };
        let t = CocycleTable::from_slopes(0.0, 16, slope).unwrap();
        for j in -6i64..=6 {
            assert_eq!(t.c(j), 4f64.powi(-(j.abs() as i32)), "c at {j}");
        }
        match choose_windows(&t, &WindowPolicy::default()) {
            Err(CoreError::WindowSearch { reason, .. }) => {
                assert!(reason.contains("τ"), "reason: {reason}");
            }
            other => panic!("expected τ-bounded failure, got {other:?}"),
        }
    }

    #[test]
    fn relaxed_policy_selects_and_reports_unmet_thresholds() {
        // single forward jump: c_j = 1/4 for j ≥ 1, c_j = 4 for j ≤ −1
        let slope = |j: i64| if j == 0 { 4.0 } else { 1.0 };
        let t = CocycleTable::from_slopes(0.5, 12, slope).unwrap();
        assert_eq!(t.c(1), 0.25);
        assert_eq!(t.c(3), 0.25);
        assert_eq!(t.c(-1), 4.0);
        assert_eq!(t.c(-5), 4.0);

        assert!(choose_windows(&t, &WindowPolicy::default()).is_err());

        let w = choose_windows(&t, &WindowPolicy::relaxed(2.0)).unwrap();
        assert_eq!(w.n, 1, "argmin with ties resolves to the smallest index");
        assert!(!w.smallness_met);
        assert!(!w.backward_smallness_met);
        assert!(!w.forward_tail_met);
        // e_{−1} = 4 + 1 + 1/4 = 5.25; τ(n′) = 4(n′−1)/5.25 > 2 ⇒ n′ = 4
        assert_eq!(w.n_prime, 4);
        assert!((w.tau - 12.0 / 5.25).abs() < 1e-12);

        let s = CocycleSchedule::from_policy(&t, &WindowPolicy::relaxed(2.0), 6.0, None).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.n_prime(), 4);
        assert!(s.e(-4) == 0.0 && s.e(2) == 0.0);
        assert!(s.sup_e() >= s.e(-1));
    }

    #[test]
    fn envelope_budget_is_validated_and_defaulted() {
        let t = CocycleTable::from_slopes(0.0, 4, |_| 2.0).unwrap();
        // e₀ = 1.25: an explicit budget below it must be rejected
        assert!(CocycleSchedule::with_windows(&t, 1, 3, 2.0, Some(1.0)).is_err());
        // the default budget is the next three-digit decimal above e₀
        let s = CocycleSchedule::with_windows(&t, 1, 3, 2.0, None).unwrap();
        assert!((s.envelope_budget() - 1.26).abs() < 1e-12);
        assert!(s.e0() < s.envelope_budget());
    }

    #[test]
    fn budget_above_rounds_to_three_digits() {
        for (v, want) in [(1.25, 1.26), (1.234, 1.24), (0.999, 1.0), (12.0, 12.1)] {
            let got = budget_above(v);
            assert!((got - want).abs() < 1e-12, "budget_above({v}) = {got}");
            assert!(got > v * (1.0 + 1e-9));
        }
        assert!(budget_above(3.0) > 3.0);
    }

    #[test]
    fn rotation_schedule_is_uniform() {
        let f = MonotoneLift::rotation(0.41);
        let t = CocycleTable::compute(&f, 0.0, 4).unwrap();
        let s = CocycleSchedule::with_windows(&t, 1, 3, 4.0, None).unwrap();
        assert_eq!(s.e(1), 1.0);
        assert_eq!(s.e(0), 2.0);
        assert_eq!(s.e(-1), 3.0);
        assert!((s.tau() - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.e(-2) - 1.5).abs() < 1e-15);
        assert_eq!(s.e(-3), 0.0);
        for j in [-2i64, 0, 1] {
            assert!(s.residual(j).abs() <= 1e-12);
        }
    }

    #[test]
    fn windows_need_room_in_the_table() {
        let t = CocycleTable::from_slopes(0.0, 3, |_| 2.0).unwrap();
        assert!(CocycleSchedule::with_windows(&t, 2, 2, 2.0, None).is_err());
        assert!(CocycleSchedule::with_windows(&t, 0, 2, 2.0, None).is_err());
        assert!(CocycleSchedule::with_windows(&t, 1, 4, 2.0, None).is_err());
        assert!(CocycleSchedule::with_windows(&t, 1, 3, 2.0, None).is_ok());
    }

    #[test]
    fn schedule_rows_cover_the_window_with_residuals() {
        let t = CocycleTable::from_slopes(0.0, 4, |_| 2.0).unwrap();
        let s = CocycleSchedule::with_windows(&t, 1, 3, 2.0, Some(3.0)).unwrap();
        let rows = s.rows();
        assert_eq!(rows.len(), (s.hi() - s.lo() + 1) as usize);
        assert_eq!(rows[0].j, -4);
        assert!(rows[0].residual.is_nan(), "no residual at the lower border");
        let last = rows.last().unwrap();
        assert_eq!(last.j, 2);
        assert!((last.residual - s.c(1)).abs() < 1e-12);
    }
}
