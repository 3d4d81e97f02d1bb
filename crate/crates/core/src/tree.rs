//! Nested circle intervals addressed by binary words, with certified
//! translate clearance.
//!
//! Level n holds 2ⁿ intervals of dyadic width 2^{−m_n}, each parent containing
//! two children placed at the 3/8 and 5/8 points of its span. The build
//! certifies, exhaustively over a per-level range of k, that every interval
//! translated by k·α stays clear of every same-level interval, and that
//! same-level intervals are pairwise disjoint. On a clearance failure the
//! offending level's scale exponent is increased by 2 and the tree is rebuilt,
//! up to a hard escalation cap.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::circle::{frac, signed_dist};
use crate::error::{CoreError, Result};
use crate::rotation::irrational_from_cf;

/// Largest admissible scale exponent: widths below 2^{−48} leave no room
/// between the clearance margin and double-precision spacing.
pub const MAX_SCALE_EXPONENT: u32 = 48;

/// One branching digit of an interval address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    L,
    R,
}

impl Letter {
    /// Position of this child inside the parent span, as a fraction of it.
    fn span_fraction(self) -> f64 {
        match self {
            Letter::L => 3.0 / 8.0,
            Letter::R => 5.0 / 8.0,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::L => "l",
            Letter::R => "r",
        })
    }
}

/// Center of the child selected by `letter` inside the span [a, b].
pub fn child_point(a: f64, b: f64, letter: Letter) -> f64 {
    a + letter.span_fraction() * (b - a)
}

/// A finite binary address; the empty word addresses the root interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    /// The empty address.
    pub fn root() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    /// Parse from a string of `l`/`r` characters; empty means the root.
    pub fn parse(s: &str) -> Result<Word> {
        s.chars()
            .map(|c| match c {
                'l' => Ok(Letter::L),
                'r' => Ok(Letter::R),
                other => Err(CoreError::param(
                    "word",
                    format!("unexpected character {other:?}; expected 'l' or 'r'"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// This address extended by one digit.
    pub fn child(&self, letter: Letter) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    /// Index of this word among same-length words, digits read as bits
    /// (l = 0, r = 1, leftmost digit most significant).
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &letter| {
            acc * 2 + usize::from(letter == Letter::R)
        })
    }

    /// The `index`-th word of length `len` (inverse of [`Word::index`]).
    pub fn from_index(len: usize, index: usize) -> Word {
        let letters = (0..len)
            .rev()
            .map(|bit| {
                if (index >> bit) & 1 == 1 {
                    Letter::R
                } else {
                    Letter::L
                }
            })
            .collect();
        Word(letters)
    }

    /// The word repeating one letter, e.g. `lll` for depth 3.
    pub fn repeated(letter: Letter, len: usize) -> Word {
        Word(vec![letter; len])
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for letter in &self.0 {
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

/// A circle interval given by its center (as an unwrapped real) and half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleInterval {
    pub center: f64,
    pub half_width: f64,
}

impl CircleInterval {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    /// True when the circle point x (any unwrapped representative) lies inside.
    pub fn contains(&self, x: f64) -> bool {
        signed_dist(x, self.center).abs() <= self.half_width
    }
}

/// Build parameters for the interval hierarchy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Continued-fraction coefficients of the rotation angle α ∈ (0, 1).
    pub alpha_coeffs: Vec<u32>,
    /// Convergence gap demanded of the coefficient list.
    pub cf_gap_tol: f64,
    /// Scale exponents m₀ < m₁ < …, one per level (length depth + 1);
    /// level n intervals have width 2^{−m_n}.
    pub m_seq: Vec<u32>,
    /// Deepest level built.
    pub depth: usize,
    /// Translate clearances below this margin count as intersections.
    pub clearance_margin: f64,
    /// Maximum number of scale escalations before giving up.
    pub escalation_cap: u32,
    /// Hard ceiling on the per-level translate range.
    pub recurrence_cap: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            alpha_coeffs: vec![1; 40],
            cf_gap_tol: 1e-16,
            m_seq: vec![10, 14, 18, 24],
            depth: 3,
            clearance_margin: 1e-13,
            escalation_cap: 40,
            recurrence_cap: 100_000,
        }
    }
}

/// Result of the translate scan at one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelScan {
    pub level: usize,
    /// Translates 1 ≤ k ≤ k_max were checked (negative k follows by symmetry).
    pub k_max: u64,
    /// True when the hard ceiling cut the nominal doubly-exponential range.
    pub capped: bool,
    /// Smallest gap observed between a translate and a same-level interval,
    /// including the k = 0 scan over distinct pairs.
    pub min_clearance: f64,
}

/// Certification record produced by a successful build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub scans: Vec<LevelScan>,
    pub escalations: u32,
    /// Final scale exponents (equal to the configured ones when no escalation fired).
    pub m_seq: Vec<u32>,
}

/// The certified interval hierarchy.
#[derive(Debug, Clone)]
pub struct IntervalTree {
    alpha: f64,
    alpha_coeffs: Vec<u32>,
    m_seq: Vec<u32>,
    depth: usize,
    /// Interval centers, indexed `[level][Word::index]`, as unwrapped reals
    /// near 0 (the root is centered on 0).
    centers: Vec<Vec<f64>>,
    report: RecurrenceReport,
}

impl IntervalTree {
    /// Build and certify the hierarchy, escalating scale exponents as needed.
    pub fn build(config: &TreeConfig) -> Result<IntervalTree> {
        if config.depth < 1 {
            return Err(CoreError::param("depth", "must be at least 1"));
        }
        if config.m_seq.len() != config.depth + 1 {
            return Err(CoreError::param(
                "m_seq",
                format!(
                    "needs one exponent per level: expected {} entries, got {}",
                    config.depth + 1,
                    config.m_seq.len()
                ),
            ));
        }
        if !config.m_seq.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::param(
                "m_seq",
                "scale exponents must be strictly increasing",
            ));
        }
        if !(config.clearance_margin > 0.0) {
            return Err(CoreError::param("clearance_margin", "must be positive"));
        }
        let alpha = irrational_from_cf(&config.alpha_coeffs, config.cf_gap_tol)?;

        let mut m_seq = config.m_seq.clone();
        let mut escalations = 0u32;
        loop {
            if let Some(&m) = m_seq.iter().find(|&&m| m > MAX_SCALE_EXPONENT) {
                return Err(CoreError::EscalationCap {
                    level: m_seq.iter().position(|&v| v == m).unwrap_or(0),
                    cap: config.escalation_cap,
                    reason: format!(
                        "scale exponent {m} exceeds the float-safe bound {MAX_SCALE_EXPONENT}"
                    ),
                });
            }
            match try_build(alpha, &m_seq, config.depth, config) {
                Ok((centers, scans)) => {
                    return Ok(IntervalTree {
                        alpha,
                        alpha_coeffs: config.alpha_coeffs.clone(),
                        m_seq: m_seq.clone(),
                        depth: config.depth,
                        centers,
                        report: RecurrenceReport {
                            scans,
                            escalations,
                            m_seq,
                        },
                    });
                }
                Err(err @ (CoreError::Recurrence { .. } | CoreError::SiblingOverlap { .. })) => {
                    let level = match &err {
                        CoreError::Recurrence { level, .. } => *level,
                        CoreError::SiblingOverlap { level, .. } => *level,
                        _ => unreachable!(),
                    };
                    if escalations >= config.escalation_cap {
                        return Err(CoreError::EscalationCap {
                            level,
                            cap: config.escalation_cap,
                            reason: err.to_string(),
                        });
                    }
                    m_seq[level] += 2;
                    // Restore strict separation of scales below the bumped level.
                    for i in level..config.depth {
                        if m_seq[i + 1] < m_seq[i] + 3 {
                            m_seq[i + 1] = m_seq[i] + 3;
                        }
                    }
                    escalations += 1;
                }
                Err(other) => return Err(other),
            }
        }
    }

    /// The rotation angle (derived from its continued fraction).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_coeffs(&self) -> &[u32] {
        &self.alpha_coeffs
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Final scale exponents, one per level.
    pub fn m_seq(&self) -> &[u32] {
        &self.m_seq
    }

    /// Width 2^{−m_n} of level-n intervals.
    pub fn width(&self, level: usize) -> f64 {
        (-(f64::from(self.m_seq[level]))).exp2()
    }

    pub fn report(&self) -> &RecurrenceReport {
        &self.report
    }

    /// The interval addressed by `word`.
    pub fn interval(&self, word: &Word) -> Result<CircleInterval> {
        let level = word.len();
        if level > self.depth {
            return Err(CoreError::param(
                "word",
                format!("length {} exceeds tree depth {}", level, self.depth),
            ));
        }
        Ok(CircleInterval {
            center: self.centers[level][word.index()],
            half_width: self.width(level) / 2.0,
        })
    }

    /// Midpoint of the addressed interval: the canonical finite-stage
    /// representative of a point of the nested intersection.
    pub fn k_point(&self, word: &Word) -> Result<f64> {
        Ok(self.interval(word)?.center)
    }

    /// All words of the given length, in index order.
    pub fn words(&self, level: usize) -> impl Iterator<Item = Word> {
        (0..(1usize << level)).map(move |i| Word::from_index(level, i))
    }

    /// Number of translates checked at `level` under this configuration's cap.
    pub fn k_max(level: usize, cap: u64) -> u64 {
        let exponent = 1u64 << level;
        if level <= 3 {
            1u64 << exponent
        } else if exponent >= 63 {
            cap
        } else {
            (1u64 << exponent).min(cap)
        }
    }
}

/// One build attempt at fixed scales: places all centers, then certifies
/// separation and translate clearance level by level.
fn try_build(
    alpha: f64,
    m_seq: &[u32],
    depth: usize,
    config: &TreeConfig,
) -> Result<(Vec<Vec<f64>>, Vec<LevelScan>)> {
    let width = |level: usize| (-(f64::from(m_seq[level]))).exp2();

    let mut centers: Vec<Vec<f64>> = vec![vec![0.0]];
    for level in 1..=depth {
        let parent_w = width(level - 1);
        let mut row = Vec::with_capacity(1 << level);
        for &c in &centers[level - 1] {
            let a = c - parent_w / 2.0;
            let b = c + parent_w / 2.0;
            row.push(child_point(a, b, Letter::L));
            row.push(child_point(a, b, Letter::R));
        }
        centers.push(row);
    }

    let margin = config.clearance_margin;
    let mut scans = Vec::with_capacity(depth + 1);
    for level in 0..=depth {
        let w = width(level);
        let row = &centers[level];

        // Children must be strictly narrower than a quarter of their parent
        // (which also keeps them inside the parent and apart from each other).
        if level > 0 {
            let parent_w = width(level - 1);
            if !(4.0 * w < parent_w) {
                return Err(CoreError::SiblingOverlap {
                    level,
                    detail: format!(
                        "width 2^-{} is not below a quarter of the parent width 2^-{}",
                        m_seq[level],
                        m_seq[level - 1]
                    ),
                });
            }
            for (i, &c) in row.iter().enumerate() {
                let parent = centers[level - 1][i / 2];
                let reach = (c - parent).abs() + w / 2.0;
                if reach > parent_w / 2.0 {
                    return Err(CoreError::SiblingOverlap {
                        level,
                        detail: format!(
                            "child {} reaches {reach:.3e} from the parent center, past half-width {:.3e}",
                            Word::from_index(level, i),
                            parent_w / 2.0
                        ),
                    });
                }
            }
        }

        let mut min_clearance = f64::INFINITY;

        // Distinct same-level intervals must be disjoint.
        for i in 0..row.len() {
            for j in (i + 1)..row.len() {
                let clearance = signed_dist(row[i], row[j]).abs() - w;
                min_clearance = min_clearance.min(clearance);
                if clearance < margin {
                    return Err(CoreError::SiblingOverlap {
                        level,
                        detail: format!(
                            "intervals {} and {} leave clearance {clearance:.3e} < margin {margin:.1e}",
                            Word::from_index(level, i),
                            Word::from_index(level, j)
                        ),
                    });
                }
            }
        }

        // Translates by k·α, 1 ≤ k ≤ k_max, must avoid every same-level
        // interval. Scanning all ordered pairs covers negative k as well:
        // I_ω − kα meeting I_ω′ is the same event as I_ω′ + kα meeting I_ω.
        let k_max = IntervalTree::k_max(level, config.recurrence_cap);
        let capped = {
            let exponent = 1u64 << level;
            exponent >= 63 || k_max < (1u64 << exponent)
        };
        for k in 1..=k_max {
            let shift = frac(k as f64 * alpha);
            for (i, &ci) in row.iter().enumerate() {
                for (j, &cj) in row.iter().enumerate() {
                    let clearance = signed_dist(ci + shift, cj).abs() - w;
                    min_clearance = min_clearance.min(clearance);
                    if clearance < margin {
                        return Err(CoreError::Recurrence {
                            level,
                            word: Word::from_index(level, i).to_string(),
                            other: Word::from_index(level, j).to_string(),
                            k: k as i64,
                            clearance,
                            margin,
                        });
                    }
                }
            }
        }

        scans.push(LevelScan {
            level,
            k_max,
            capped,
            min_clearance,
        });
    }

    Ok((centers, scans))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_config(depth: usize, m_seq: Vec<u32>) -> TreeConfig {
        TreeConfig {
            m_seq,
            depth,
            ..TreeConfig::default()
        }
    }

    #[test]
    fn child_points_of_unit_span() {
        assert_eq!(child_point(0.0, 1.0, Letter::L), 0.375);
        assert_eq!(child_point(0.0, 1.0, Letter::R), 0.625);
    }

    #[test]
    fn word_round_trip_and_order() {
        let w = Word::parse("llr").unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.index(), 1);
        assert_eq!(Word::from_index(3, 1), w);
        assert_eq!(w.to_string(), "llr");
        assert_eq!(Word::root().to_string(), "");
        assert_eq!(Word::repeated(Letter::R, 2).index(), 3);
        assert!(Word::parse("lx").is_err());
    }

    #[test]
    fn depth_one_interval_arithmetic_is_exact() {
        let tree = IntervalTree::build(&golden_config(1, vec![10, 14])).unwrap();
        let root = tree.interval(&Word::root()).unwrap();
        assert_eq!(root.lo(), -(2f64.powi(-11)));
        assert_eq!(root.hi(), 2f64.powi(-11));
        // a + (3/8)(b − a) with a = −2⁻¹¹, b = 2⁻¹¹ is exactly −2⁻¹³.
        let left = tree.interval(&Word::parse("l").unwrap()).unwrap();
        assert_eq!(left.center, -(2f64.powi(-13)));
        assert_eq!(left.half_width, 2f64.powi(-15));
        let right = tree.interval(&Word::parse("r").unwrap()).unwrap();
        assert_eq!(right.center, 2f64.powi(-13));
    }

    #[test]
    fn k_points_are_interval_centers() {
        let tree = IntervalTree::build(&TreeConfig::default()).unwrap();
        assert_eq!(tree.k_point(&Word::root()).unwrap(), 0.0);
        assert_eq!(
            tree.k_point(&Word::parse("l").unwrap()).unwrap(),
            -(2f64.powi(-13))
        );
        let deep: Vec<f64> = tree
            .words(3)
            .map(|w| tree.k_point(&w).unwrap())
            .collect();
        for pair in deep.windows(2) {
            assert!(pair[0] != pair[1]);
        }
        assert!(tree.k_point(&Word::repeated(Letter::L, 4)).is_err());
    }

    #[test]
    fn golden_depth_two_passes_without_escalation() {
        let tree = IntervalTree::build(&golden_config(2, vec![10, 14, 18])).unwrap();
        let report = tree.report();
        assert_eq!(report.escalations, 0);
        assert_eq!(report.m_seq, vec![10, 14, 18]);
        let k_maxes: Vec<u64> = report.scans.iter().map(|s| s.k_max).collect();
        assert_eq!(k_maxes, vec![2, 4, 16]);
        assert!(report.scans.iter().all(|s| !s.capped));
        assert!(report.scans.iter().all(|s| s.min_clearance > 1e-13));
    }

    #[test]
    fn default_depth_three_build_is_stable() {
        let tree = IntervalTree::build(&TreeConfig::default()).unwrap();
        let report = tree.report();
        assert_eq!(report.escalations, 0, "default scales should need no escalation");
        assert_eq!(report.m_seq, vec![10, 14, 18, 24]);
        assert_eq!(
            report.scans.iter().map(|s| s.k_max).collect::<Vec<_>>(),
            vec![2, 4, 16, 256]
        );
        // Every scan keeps a clearance far above the certification margin
        // (the tightest, 8.9e−7, is at level 3 where 256 translates of 64
        // width-2⁻²⁴ intervals are checked).
        for scan in &report.scans {
            assert!(
                scan.min_clearance > 5e-7,
                "level {} clearance {:.3e}",
                scan.level,
                scan.min_clearance
            );
        }
    }

    #[test]
    fn deep_centers_sit_in_every_ancestor_core() {
        // The middle half of each interval is where the placed profiles are
        // flat; deeper midpoints must stay inside it for every ancestor.
        let tree = IntervalTree::build(&TreeConfig::default()).unwrap();
        for word in tree.words(3) {
            let c = tree.k_point(&word).unwrap();
            for level in 0..3 {
                let ancestor = Word::new(word.letters()[..level].to_vec());
                let anc = tree.interval(&ancestor).unwrap();
                assert!(
                    (c - anc.center).abs() < anc.half_width / 2.0,
                    "word {word} leaves the core of its level-{level} ancestor"
                );
            }
        }
    }

    #[test]
    fn too_wide_children_escalate_to_admissible_scales() {
        // 2^-11 is not below a quarter of 2^-10, so level 1 must escalate once.
        let tree = IntervalTree::build(&golden_config(1, vec![10, 11])).unwrap();
        assert_eq!(tree.report().escalations, 1);
        assert_eq!(tree.report().m_seq, vec![10, 13]);
    }

    /// An angle within 3.4e−7 of 1/3: k = 3 nearly closes the circle, so
    /// translates by 3α collide with wide intervals.
    fn near_third_coeffs() -> Vec<u32> {
        let mut coeffs = vec![3, 1_000_000];
        coeffs.extend(std::iter::repeat(1).take(30));
        coeffs
    }

    #[test]
    fn near_rational_angle_forces_escalation() {
        let config = TreeConfig {
            alpha_coeffs: near_third_coeffs(),
            m_seq: vec![10, 14, 18],
            depth: 2,
            ..TreeConfig::default()
        };
        let tree = IntervalTree::build(&config).unwrap();
        let report = tree.report();
        assert!(report.escalations > 0);
        assert!(
            report.m_seq[1] >= 22,
            "level-1 width must shrink below the k = 3 return distance, got {:?}",
            report.m_seq
        );
        // Width at the escalated scale clears the ~3.3e−7 return distance.
        assert!(report.scans[1].min_clearance > 1e-13);
    }

    #[test]
    fn escalation_cap_is_enforced() {
        let config = TreeConfig {
            alpha_coeffs: near_third_coeffs(),
            m_seq: vec![10, 14, 18],
            depth: 2,
            escalation_cap: 2,
            ..TreeConfig::default()
        };
        match IntervalTree::build(&config) {
            Err(CoreError::EscalationCap { cap: 2, .. }) => {}
            other => panic!("expected escalation-cap failure, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_malformed_scales() {
        let bad_len = TreeConfig {
            m_seq: vec![10, 14],
            ..TreeConfig::default()
        };
        assert!(IntervalTree::build(&bad_len).is_err());
        let not_increasing = TreeConfig {
            m_seq: vec![10, 14, 14, 24],
            ..TreeConfig::default()
        };
        assert!(IntervalTree::build(&not_increasing).is_err());
        let shallow = TreeConfig {
            depth: 0,
            m_seq: vec![10],
            ..TreeConfig::default()
        };
        assert!(IntervalTree::build(&shallow).is_err());
    }

    #[test]
    fn translate_ranges_follow_the_doubling_rule() {
        assert_eq!(IntervalTree::k_max(0, 100_000), 2);
        assert_eq!(IntervalTree::k_max(1, 100_000), 4);
        assert_eq!(IntervalTree::k_max(2, 100_000), 16);
        assert_eq!(IntervalTree::k_max(3, 100_000), 256);
        assert_eq!(IntervalTree::k_max(4, 100_000), 65_536);
        assert_eq!(IntervalTree::k_max(5, 100_000), 100_000);
        assert_eq!(IntervalTree::k_max(8, 100_000), 100_000);
    }
}
