//! Verification statistics: two-scale difference-quotient ratios, summability
//! profiles of derivative cocycles, and C⁰/C¹ distances on refined grids.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lift::MonotoneLift;
use crate::orbit::OrbitTable;

/// Guard for difference-quotient denominators.
pub const DELTA_DENOM_FLOOR: f64 = 1e-15;

/// Two-scale ratio Δ(f; x, u, v) = (v/u)·(f(x+u) − f(x))/(f(x+v) − f(x)).
///
/// For f differentiable at x, Δ → 1 as u, v → 0; a value bounded away from 1
/// on matched scale pairs witnesses non-differentiability. Δ(u, v)·Δ(v, u) = 1.
pub fn delta_stat(f: &MonotoneLift, x: f64, u: f64, v: f64) -> Result<f64> {
    if u == 0.0 || v == 0.0 {
        return Err(CoreError::param("u", "scales must be nonzero"));
    }
    let fx = f.eval(x);
    let du = f.eval(x + u) - fx;
    let dv = f.eval(x + v) - fx;
    if dv.abs() < DELTA_DENOM_FLOOR {
        return Err(CoreError::param(
            "v",
            format!("denominator f(x+v) − f(x) = {dv:.3e} below guard"),
        ));
    }
    Ok((v / u) * (du / dv))
}

/// Finite-horizon summability profile of the derivative cocycle at a point:
/// the quantities that witness (within a finite horizon) how strongly the
/// forward cocycle grows and the backward cocycle decays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleProfile {
    /// Horizon K.
    pub horizon: usize,
    /// S₊ = Σ_{0 ≤ n < K} (Df^n)⁻².
    pub s_plus: f64,
    /// S₋ = Σ_{−K < n < 0} (Df^n)⁻².
    pub s_minus: f64,
    /// M₋ = max_{−K < n < 0} Df^n.
    pub m_minus: f64,
    /// Individual forward terms (Df^n)⁻², n = 0 .. K−1 (for tail inspection).
    pub forward_terms: Vec<f64>,
}

impl CocycleProfile {
    /// Requires the table to span at least [−(K−1), K−1].
    pub fn from_table(table: &OrbitTable, horizon: usize) -> CocycleProfile {
        let k = horizon as i64;
        assert!(
            table.lo() <= -(k - 1) && table.hi() >= k - 1,
            "orbit table too short for horizon {horizon}"
        );
        let forward_terms: Vec<f64> = (0..k)
            .map(|n| {
                let d = table.cocycle(n);
                1.0 / (d * d)
            })
            .collect();
        let s_plus = forward_terms.iter().sum();
        let mut s_minus = 0.0;
        let mut m_minus = f64::NEG_INFINITY;
        for n in (-(k - 1))..0 {
            let d = table.cocycle(n);
            s_minus += 1.0 / (d * d);
            m_minus = m_minus.max(d);
        }
        CocycleProfile {
            horizon,
            s_plus,
            s_minus,
            m_minus,
            forward_terms,
        }
    }

    /// Largest forward term (Df^n)⁻² with n ≥ start.
    pub fn max_forward_increment_from(&self, start: usize) -> f64 {
        self.forward_terms[start.min(self.forward_terms.len())..]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Outcome of the three-part summability test at a point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SummabilityCheck {
    pub s_plus_ok: bool,
    pub growth_ok: bool,
    pub asymmetry_ok: bool,
}

impl SummabilityCheck {
    /// S₊ < bound, M₋ > growth_threshold, S₋ > S₊.
    pub fn evaluate(profile: &CocycleProfile, bound: f64, growth_threshold: f64) -> Self {
        SummabilityCheck {
            s_plus_ok: profile.s_plus < bound,
            growth_ok: profile.m_minus > growth_threshold,
            asymmetry_ok: profile.s_minus > profile.s_plus,
        }
    }

    pub fn all(&self) -> bool {
        self.s_plus_ok && self.growth_ok && self.asymmetry_ok
    }
}

/// Evaluation grid: `n_uniform` equispaced points of [0, 1) together with all
/// breakpoints of the given maps and local refinements of every short
/// breakpoint gap (so features far below the uniform spacing are still seen).
pub fn refined_grid(maps: &[&MonotoneLift], n_uniform: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..n_uniform)
        .map(|i| i as f64 / n_uniform as f64)
        .collect();
    let mut bps: Vec<f64> = Vec::new();
    for m in maps {
        bps.extend_from_slice(m.breakpoints());
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    grid.extend_from_slice(&bps);
    let coarse = 1.0 / n_uniform as f64;
    for w in bps.windows(2) {
        let gap = w[1] - w[0];
        if gap < coarse {
            // interior samples resolve extrema of the smooth piece between joins
            for i in 1..8 {
                grid.push(w[0] + gap * i as f64 / 8.0);
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// sup |f − g| over the grid.
pub fn c0_distance(f: &MonotoneLift, g: &MonotoneLift, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| (f.eval(x) - g.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// sup |Df − Dg| over the grid.
pub fn c1_distance(f: &MonotoneLift, g: &MonotoneLift, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| (f.deriv(x) - g.deriv(x)).abs())
        .fold(0.0, f64::max)
}

/// Derivative of the symmetrized map f + f⁻¹ at x:
/// Df(x) + 1/Df(f⁻¹(x)).
pub fn sym_deriv(f: &MonotoneLift, x: f64) -> f64 {
    f.deriv(x) + 1.0 / f.deriv(f.invert(x))
}

/// sup |D(f + f⁻¹) − D(g + g⁻¹)| over the grid: the C¹ distance of the
/// symmetrized maps, the quantity kept small across perturbation steps.
pub fn sym_c1_distance(f: &MonotoneLift, g: &MonotoneLift, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| (sym_deriv(f, x) - sym_deriv(g, x)).abs())
        .fold(0.0, f64::max)
}
