//! Orbits, rotation numbers, and derivative cocycles of circle lifts.

use crate::lift::MonotoneLift;

/// f^n(x): composition power, with negative n through the inverse.
pub fn iterate(f: &MonotoneLift, x: f64, n: i64) -> f64 {
    let mut y = x;
    if n >= 0 {
        for _ in 0..n {
            y = f.eval(y);
        }
    } else {
        for _ in 0..(-n) {
            y = f.invert(y);
        }
    }
    y
}

/// Birkhoff estimate (Fⁿ(x) − x)/n of the rotation number. The error against
/// the true rotation number is at most 1/n for any x.
pub fn rotation_number(f: &MonotoneLift, x: f64, n: u64) -> f64 {
    let n = n.max(1);
    (iterate(f, x, n as i64) - x) / n as f64
}

/// Two-sided orbit segment with one-step derivatives and the derivative
/// cocycle, indexed by j ∈ [lo, hi] around a marked point x₀ = point(0).
///
/// * `point(j)` = f^j(x₀) (as lift values in ℝ);
/// * `one_step(j)` = Df(f^j(x₀)): the local stretching entering step j → j+1;
/// * `cocycle(j)` = Df^j(x₀), with the chain-rule normalization Df⁰ = 1 and
///   the backward values given by Df^{j−1} = Df^j / Df(f^{j−1} x₀).
#[derive(Debug, Clone)]
pub struct OrbitTable {
    lo: i64,
    points: Vec<f64>,
    one_step: Vec<f64>,
    cocycle: Vec<f64>,
}

impl OrbitTable {
    pub fn build(f: &MonotoneLift, x0: f64, lo: i64, hi: i64) -> OrbitTable {
        assert!(lo <= 0 && hi >= 0, "index range must contain 0");
        let len = (hi - lo + 1) as usize;
        let mut points = vec![0.0; len];
        let zero = (-lo) as usize;
        points[zero] = x0;
        let mut y = x0;
        for j in 1..=hi {
            y = f.eval(y);
            points[zero + j as usize] = y;
        }
        let mut y = x0;
        for j in 1..=(-lo) {
            y = f.invert(y);
            points[zero - j as usize] = y;
        }
        let one_step: Vec<f64> = points.iter().map(|&p| f.deriv(p)).collect();
        let mut cocycle = vec![1.0; len];
        for idx in zero..len - 1 {
            cocycle[idx + 1] = cocycle[idx] * one_step[idx];
        }
        for idx in (0..zero).rev() {
            cocycle[idx] = cocycle[idx + 1] / one_step[idx];
        }
        OrbitTable {
            lo,
            points,
            one_step,
            cocycle,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.points.len() as i64 - 1
    }

    #[inline]
    fn idx(&self, j: i64) -> usize {
        debug_assert!(j >= self.lo && j <= self.hi(), "index {j} out of range");
        (j - self.lo) as usize
    }

    /// f^j(x₀).
    pub fn point(&self, j: i64) -> f64 {
        self.points[self.idx(j)]
    }

    /// Df(f^j(x₀)).
    pub fn one_step(&self, j: i64) -> f64 {
        self.one_step[self.idx(j)]
    }

    /// Df^j(x₀).
    pub fn cocycle(&self, j: i64) -> f64 {
        self.cocycle[self.idx(j)]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::MonotoneLift;
    use std::sync::Arc;

    #[test]
    fn rotation_number_of_rotation_is_exact() {
        let f = MonotoneLift::rotation(0.3819);
        let rho = rotation_number(&f, 0.25, 100);
        assert!((rho - 0.3819).abs() < 1e-13);
    }

    #[test]
    fn rotation_number_is_conjugation_invariant() {
        let h = Arc::new(MonotoneLift::patchwork(vec![0.0, 0.3, 0.6], vec![0.0, 0.45, 0.7]).unwrap());
        let alpha = 0.6180339887498949;
        let r = Arc::new(MonotoneLift::rotation(alpha));
        let f = MonotoneLift::conjugate(h, r);
        let n = 4000;
        let rho = rotation_number(&f, 0.1, n);
        assert!(
            (rho - alpha).abs() < 1.0 / n as f64 + 1e-12,
            "rho {rho} vs alpha {alpha}"
        );
    }

    #[test]
    fn iterate_inverts_cleanly() {
        let h = Arc::new(MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.0, 0.62]).unwrap());
        let r = Arc::new(MonotoneLift::rotation(0.41));
        let f = MonotoneLift::conjugate(h, r);
        let x = 0.37;
        let fwd = iterate(&f, x, 7);
        assert!((iterate(&f, fwd, -7) - x).abs() < 1e-11);
    }

    #[test]
    fn orbit_table_consistency() {
        let h = Arc::new(MonotoneLift::patchwork(vec![0.0, 0.25, 0.5], vec![0.0, 0.4, 0.65]).unwrap());
        let r = Arc::new(MonotoneLift::rotation(0.6180339887498949));
        let f = MonotoneLift::conjugate(h, r);
        let t = OrbitTable::build(&f, 0.2, -12, 12);
        assert_eq!(t.lo(), -12);
        assert_eq!(t.hi(), 12);
        assert_eq!(t.point(0), 0.2);
        // forward and backward orbit points satisfy f(x_j) = x_{j+1}
        for j in -12..12 {
            assert!(
                (f.eval(t.point(j)) - t.point(j + 1)).abs() < 1e-10,
                "orbit step at {j}"
            );
        }
        // cocycle chain rule: Df^{j+1}(x) = Df(f^j x)·Df^j(x)
        for j in -12..12 {
            let lhs = t.cocycle(j + 1);
            let rhs = t.one_step(j) * t.cocycle(j);
            assert!(
                ((lhs - rhs) / rhs).abs() < 1e-12,
                "cocycle recurrence at {j}"
            );
        }
        assert_eq!(t.cocycle(0), 1.0);
    }

    #[test]
    fn cocycle_matches_product_both_directions() {
        let h = Arc::new(MonotoneLift::patchwork(vec![0.0, 0.5], vec![0.0, 0.58]).unwrap());
        let r = Arc::new(MonotoneLift::rotation(0.377));
        let f = MonotoneLift::conjugate(h, r);
        let x0 = 0.11;
        let t = OrbitTable::build(&f, x0, -6, 6);
        // forward: product of one-step derivatives
        let mut prod = 1.0;
        for j in 0..5 {
            prod *= t.one_step(j);
        }
        assert!(((t.cocycle(5) - prod) / prod).abs() < 1e-13);
        // backward: Df^{-n}(x) = 1/Df^n(f^{-n} x)
        let tn = OrbitTable::build(&f, t.point(-4), 0, 4);
        let expect = 1.0 / tn.cocycle(4);
        assert!(
            ((t.cocycle(-4) - expect) / expect).abs() < 1e-10,
            "{} vs {expect}",
            t.cocycle(-4)
        );
    }

    #[test]
    fn rotation_cocycle_is_flat() {
        let f = MonotoneLift::rotation(0.55);
        let t = OrbitTable::build(&f, 0.0, -50, 50);
        for j in -50..=50 {
            assert_eq!(t.cocycle(j), 1.0);
            assert_eq!(t.one_step(j), 1.0);
        }
    }
}
