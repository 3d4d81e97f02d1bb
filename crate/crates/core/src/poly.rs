//! Dense univariate polynomials and compactly supported piecewise polynomials.
//!
//! These are the exact-arithmetic backbone for every bump, cutoff, and potential
//! profile in the crate: values, derivatives, and integrals of piecewise
//! polynomials are all closed-form, so shape invariants (zero mean, plateau
//! values, smooth joins) hold to rounding error rather than to a quadrature
//! tolerance.
//!
//! Polynomials are stored in *centered-scaled* form: p(x) = Σ cₖ uᵏ with
//! u = (x − center)/scale. Affine composition only rewrites `center` and
//! `scale`, never the coefficients, so placing a normalized profile on an
//! interval of width 1e−9 costs no precision — the naive expanded form would
//! amplify rounding by scale⁻ᵈᵉᵍ.

/// Polynomial in centered-scaled form. `coeffs` are in ascending degree order
/// over the normalized variable u = (x − center)/scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
    center: f64,
    scale: f64,
}

impl Poly {
    /// Plain polynomial in x (center 0, scale 1), ascending coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        Poly {
            coeffs,
            center: 0.0,
            scale: 1.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    #[inline]
    fn u(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    /// Horner evaluation in the normalized variable.
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.u(x);
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// Formal derivative d/dx (chain rule through the normalization).
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly {
                coeffs: vec![0.0],
                center: self.center,
                scale: self.scale,
            };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c / self.scale)
            .collect();
        Poly {
            coeffs,
            center: self.center,
            scale: self.scale,
        }
    }

    /// Antiderivative in x, zero at x = center.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs.push(c * self.scale / (k as f64 + 1.0));
        }
        Poly {
            coeffs,
            center: self.center,
            scale: self.scale,
        }
    }

    /// Exact integral over [a, b].
    pub fn integral_on(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// The polynomial x ↦ p(a·x + b); lossless on coefficients.
    pub fn compose_affine(&self, a: f64, b: f64) -> Poly {
        assert!(a != 0.0, "affine scale must be nonzero");
        // (a·x + b − center)/scale = (x − center')/scale'
        Poly {
            coeffs: self.coeffs.clone(),
            center: (self.center - b) / a,
            scale: self.scale / a,
        }
    }

    /// Pointwise scaling of values.
    pub fn scaled(&self, k: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
            center: self.center,
            scale: self.scale,
        }
    }
}

/// Quintic smoothstep s(t) = 6t⁵ − 15t⁴ + 10t³.
///
/// s(0) = 0, s(1) = 1, and both s′ and s″ vanish at the endpoints, so profiles
/// glued from it are C² at every join. ∫₀¹ s = 1/2 exactly.
pub fn smoothstep5() -> Poly {
    Poly::new(vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
}

/// Piecewise polynomial with value 0 outside its support `[knots[0], knots[last]]`.
///
/// `knots` has exactly one more entry than `pieces`; piece `i` applies on
/// `[knots[i], knots[i+1])` (last piece is closed on the right).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    knots: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewisePoly {
    pub fn new(knots: Vec<f64>, pieces: Vec<Poly>) -> Self {
        assert_eq!(knots.len(), pieces.len() + 1, "knot/piece count mismatch");
        assert!(
            knots.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly increasing"
        );
        PiecewisePoly { knots, pieces }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn piece_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return None;
        }
        // partition_point gives the count of knots ≤ x; clamp to the last piece
        // so the right support edge evaluates through its final polynomial.
        let idx = self.knots.partition_point(|&k| k <= x);
        Some(idx.saturating_sub(1).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].eval(x),
            None => 0.0,
        }
    }

    pub fn deriv_eval(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].derivative().eval(x),
            None => 0.0,
        }
    }

    /// Piecewise formal derivative (valid where the function is C¹, which all
    /// profiles in this crate are).
    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly {
            knots: self.knots.clone(),
            pieces: self.pieces.iter().map(Poly::derivative).collect(),
        }
    }

    /// Exact integral over the whole support.
    pub fn integral(&self) -> f64 {
        self.pieces
            .iter()
            .zip(self.knots.windows(2))
            .map(|(p, w)| p.integral_on(w[0], w[1]))
            .sum()
    }

    /// Exact integral of the function (extended by 0) over (−∞, x].
    pub fn cumulative(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        let stop = x.min(hi);
        let mut acc = 0.0;
        for (p, w) in self.pieces.iter().zip(self.knots.windows(2)) {
            if w[0] >= stop {
                break;
            }
            acc += p.integral_on(w[0], stop.min(w[1]));
        }
        acc
    }

    /// Exact integral over [a, b] (function extended by 0 outside support).
    pub fn integral_on(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// The function x ↦ φ(a·x + b). Requires a ≠ 0; reverses orientation for a < 0.
    pub fn compose_affine(&self, a: f64, b: f64) -> PiecewisePoly {
        assert!(a != 0.0, "affine scale must be nonzero");
        let mapped: Vec<f64> = self.knots.iter().map(|&k| (k - b) / a).collect();
        let composed: Vec<Poly> = self
            .pieces
            .iter()
            .map(|p| p.compose_affine(a, b))
            .collect();
        if a > 0.0 {
            PiecewisePoly::new(mapped, composed)
        } else {
            let knots: Vec<f64> = mapped.into_iter().rev().collect();
            let pieces: Vec<Poly> = composed.into_iter().rev().collect();
            PiecewisePoly::new(knots, pieces)
        }
    }

    /// Place a profile with support [−s, s] so its support becomes
    /// [center − half_width, center + half_width].
    pub fn place_on(&self, center: f64, half_width: f64) -> PiecewisePoly {
        let (lo, hi) = self.support();
        assert!(
            (lo + hi).abs() < 1e-15 && hi > 0.0,
            "place_on requires a symmetric profile"
        );
        let a = hi / half_width;
        self.compose_affine(a, -center * a)
    }

    /// Pointwise scaling of values.
    pub fn scaled(&self, k: f64) -> PiecewisePoly {
        PiecewisePoly {
            knots: self.knots.clone(),
            pieces: self.pieces.iter().map(|p| p.scaled(k)).collect(),
        }
    }

    /// Concatenate profiles with pairwise disjoint supports into one function,
    /// filling gaps with zero pieces.
    pub fn concat_disjoint(mut parts: Vec<PiecewisePoly>) -> PiecewisePoly {
        assert!(!parts.is_empty());
        parts.sort_by(|p, q| p.support().0.total_cmp(&q.support().0));
        for w in parts.windows(2) {
            assert!(
                w[0].support().1 <= w[1].support().0 + 1e-15,
                "supports must be disjoint"
            );
        }
        let mut knots = Vec::new();
        let mut pieces = Vec::new();
        for part in parts {
            let (lo, _) = part.support();
            match knots.last().copied() {
                None => knots.push(lo),
                Some(prev) if lo > prev => {
                    pieces.push(Poly::constant(0.0));
                    knots.push(lo);
                }
                Some(_) => {} // touching supports: continue directly
            }
            for (p, w) in part.pieces.iter().zip(part.knots.windows(2)) {
                pieces.push(p.clone());
                knots.push(w[1]);
            }
        }
        PiecewisePoly::new(knots, pieces)
    }
}
