//! The properly embedded trivalent tree, navigated lazily.
//!
//! No tree data structure is ever built. A [`VertexState`] is a Markoff
//! triple together with the rational slopes of the three regions meeting the
//! vertex; crossing an edge rewrites one coordinate (by the color involution)
//! and one slope (by Farey reflection). Regions are identified by slope.

use crate::algebra::{apply_theta, Color, MarkoffTriple, MuParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    /// Navigation exceeded the step budget (pathological target slope).
    #[error("navigation exceeded {0} steps")]
    StepBudgetExceeded(usize),
}

/// Hard cap on navigation length in [`trace_at_slope`].
pub const NAVIGATION_STEP_BUDGET: usize = 1_000_000;

/// A rational slope `num/den` in lowest terms, or infinity as `(1, 0)`.
/// Finite slopes are normalized with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slope {
    pub num: i64,
    pub den: i64,
}

impl Slope {
    /// Normalize sign and reduce to lowest terms. Panics on (0, 0).
    pub fn new(num: i64, den: i64) -> Slope {
        assert!(num != 0 || den != 0, "slope 0/0");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 || (d == 0 && n < 0) {
            n = -n;
            d = -d;
        }
        Slope { num: n, den: d }
    }

    pub const ZERO: Slope = Slope { num: 0, den: 1 };
    pub const INFINITY: Slope = Slope { num: 1, den: 0 };
    pub const MINUS_ONE: Slope = Slope { num: -1, den: 1 };

    pub fn is_infinite(&self) -> bool {
        self.den == 0
    }

    /// Farey mediant; `None` on integer overflow.
    fn mediant(a: Slope, b: Slope) -> Option<Slope> {
        let num = a.num.checked_add(b.num)?;
        let den = a.den.checked_add(b.den)?;
        Some(Slope::new(num, den))
    }

    /// The other Farey completion of the edge `{a, b}`.
    fn reflection(a: Slope, b: Slope) -> Option<Slope> {
        let num = a.num.checked_sub(b.num)?;
        let den = a.den.checked_sub(b.den)?;
        if num == 0 && den == 0 {
            return None;
        }
        Some(Slope::new(num, den))
    }

    /// `a.num * b.den - b.num * a.den`, the projective cross determinant.
    fn cross(a: Slope, b: Slope) -> Option<i64> {
        let lhs = a.num.checked_mul(b.den)?;
        let rhs = b.num.checked_mul(a.den)?;
        lhs.checked_sub(rhs)
    }

    /// True when the two slopes are Farey neighbors (|cross| = 1).
    pub fn is_farey_neighbor(a: Slope, b: Slope) -> bool {
        Slope::cross(a, b).map(|c| c.abs() == 1).unwrap_or(false)
    }
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if a == 0 && b == 0 {
        return 1;
    }
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Cyclic orientation of three points of the rational circle. Invariant
/// under projective rescaling of each argument.
fn orient(a: Slope, b: Slope, c: Slope) -> Option<i64> {
    let ab = Slope::cross(a, b)?;
    let bc = Slope::cross(b, c)?;
    let ca = Slope::cross(c, a)?;
    Some((ab.signum()) * (bc.signum()) * (ca.signum()))
}

/// A tree vertex: the triple of trace values plus the slope labels of the
/// three adjacent regions, indexed by color.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexState {
    pub triple: MarkoffTriple,
    pub slopes: [Slope; 3],
    pub mu: MuParams,
}

impl VertexState {
    pub fn slope(&self, color: Color) -> Slope {
        self.slopes[color.index()]
    }

    pub fn value(&self, color: Color) -> Complex64 {
        self.triple.coord(color)
    }

    /// The three slopes pairwise satisfy the Farey neighbor condition.
    pub fn is_farey_triangle(&self) -> bool {
        Slope::is_farey_neighbor(self.slopes[0], self.slopes[1])
            && Slope::is_farey_neighbor(self.slopes[1], self.slopes[2])
            && Slope::is_farey_neighbor(self.slopes[0], self.slopes[2])
    }
}

/// One directed edge at a vertex: the region being replaced (near side), the
/// replacement value across the edge (far side), and the two face regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedEdgeInfo {
    pub color: Color,
    pub near_value: Complex64,
    pub far_value: Complex64,
    /// The two regions sharing the edge, in color order.
    pub faces: [(Color, Complex64, Slope); 2],
}

/// The base vertex: slopes `(0, inf, -1)` for colors `(1, 2, 3)`.
pub fn base_state(t: MarkoffTriple, mu: MuParams) -> VertexState {
    VertexState {
        triple: t,
        slopes: [Slope::ZERO, Slope::INFINITY, Slope::MINUS_ONE],
        mu,
    }
}

/// Edge data for crossing the edge of the given color at this vertex.
pub fn edge_info(s: &VertexState, color: Color) -> DirectedEdgeInfo {
    let moved = apply_theta(s.triple, s.mu, color);
    let (c1, c2) = (color.next(), color.prev());
    let (c1, c2) = if c1.index() < c2.index() {
        (c1, c2)
    } else {
        (c2, c1)
    };
    DirectedEdgeInfo {
        color,
        near_value: s.triple.coord(color),
        far_value: moved.coord(color),
        faces: [
            (c1, s.triple.coord(c1), s.slope(c1)),
            (c2, s.triple.coord(c2), s.slope(c2)),
        ],
    }
}

/// Cross the unique edge of the given color: involution on both the triple
/// (conjugate root) and the slope (Farey reflection). Returns `None` if the
/// slope arithmetic overflows `i64`.
pub fn try_step(s: &VertexState, color: Color) -> Option<VertexState> {
    let kept1 = s.slope(color.next());
    let kept2 = s.slope(color.prev());
    let old = s.slope(color);
    let med = Slope::mediant(kept1, kept2)?;
    let refl = Slope::reflection(kept1, kept2)?;
    let new = if old == med { refl } else { med };
    let mut slopes = s.slopes;
    slopes[color.index()] = new;
    Some(VertexState {
        triple: apply_theta(s.triple, s.mu, color),
        slopes,
        mu: s.mu,
    })
}

/// Like [`try_step`] but panics on slope overflow (reachable only at Farey
/// depth near 90).
pub fn step(s: &VertexState, color: Color) -> VertexState {
    try_step(s, color).expect("slope arithmetic overflow")
}

/// Color to cross so that the new triangle moves toward `target`, or `None`
/// when `target` is already one of the vertex slopes.
pub fn color_toward(s: &VertexState, target: Slope) -> Option<Color> {
    for color in Color::ALL {
        if s.slope(color) == target {
            return None;
        }
    }
    for color in Color::ALL {
        // Crossing `color` keeps the other two slopes; the new triangle
        // covers the arc between them on the far side from the old slope.
        let kept1 = s.slope(color.next());
        let kept2 = s.slope(color.prev());
        let old = s.slope(color);
        let side_target = orient(kept1, target, kept2).expect("slope overflow");
        let side_old = orient(kept1, old, kept2).expect("slope overflow");
        if side_target != 0 && side_target == -side_old {
            return Some(color);
        }
    }
    unreachable!("target slope is in none of the three arcs")
}

/// Trace value of the region with the given slope, reached by walking the
/// unique simple path from the base vertex.
pub fn trace_at_slope(
    t: MarkoffTriple,
    mu: MuParams,
    target: Slope,
) -> Result<Complex64, TreeError> {
    let mut state = base_state(t, mu);
    for _ in 0..NAVIGATION_STEP_BUDGET {
        match color_toward(&state, target) {
            None => {
                for color in Color::ALL {
                    if state.slope(color) == target {
                        return Ok(state.value(color));
                    }
                }
                unreachable!()
            }
            Some(color) => {
                state = try_step(&state, color)
                    .ok_or(TreeError::StepBudgetExceeded(NAVIGATION_STEP_BUDGET))?;
            }
        }
    }
    Err(TreeError::StepBudgetExceeded(NAVIGATION_STEP_BUDGET))
}

/// Weight of the region of slope `p/q` for the base edge between the slopes
/// 0 and infinity: 1 on those two regions, additive over Farey parents,
/// closed form `|p| + |q|` everywhere.
pub fn fibonacci_weight(target: Slope) -> u64 {
    target.num.unsigned_abs() + target.den.unsigned_abs()
}
