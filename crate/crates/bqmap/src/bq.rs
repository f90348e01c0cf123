//! The acceptance decision for a character: descend to a sink, then expand
//! breadth-first behind certified escape edges.
//!
//! The two conditions being decided are: no region value touches the real
//! segment `[-2, 2]`, and only finitely many regions have modulus at most
//! `L`. The search realizes them operationally:
//!
//! - any value within tolerance of the segment, or of the degenerate locus
//!   (where neighbor orbits stall at a bounded center), rejects the map;
//! - an edge both of whose faces exceed `L`, with the arrow pointing back
//!   at the explored side, certifies that nothing beyond it can re-enter
//!   the `L` sub-level set, so the branch is pruned;
//! - along the boundary of a region whose own value is at most `L`, the
//!   closed form of the neighbor orbit certifies the tail once both modes
//!   have established exponential growth past `L`.
//!
//! If the frontier of uncertified edges empties, the map is accepted and
//! the explored sub-level set is exactly the finite region set of the
//! second condition.

use crate::algebra::{
    derived_constants, residual_scale, vertex_residual, Color, MarkoffTriple, MuParams,
};
use crate::dynamics::{conic_center, orbit_coefficients, twist_spectrum, SpectrumKind};
use crate::quartic::QuarticError;
use crate::tree::{base_state, edge_info, try_step, DirectedEdgeInfo, Slope, VertexState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BqError {
    #[error("vertex residual {residual:e} exceeds 1e-6 of scale {scale:e}")]
    ResidualTooLarge { residual: f64, scale: f64 },
    #[error("map was not accepted; sub-level sets are only defined for accepted maps")]
    NotBqAccepted,
    #[error("degenerate locus computation failed: {0}")]
    DegenerateRoots(#[from] QuarticError),
}

/// Numerical tolerances of the decision procedure. All zeros are legal;
/// the defaults are what the test suite runs with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Rejection distance to the real segment [-2, 2].
    pub eps_segment: f64,
    /// Rejection distance to the degenerate locus.
    pub eps_degenerate: f64,
    /// Slack in arrow comparisons; 0 means strict.
    pub eps_tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_segment: 1e-8,
            eps_degenerate: 1e-8,
            eps_tie: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_descent_steps: usize,
    pub max_vertices: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_descent_steps: 10_000,
            max_vertices: 20_000,
        }
    }
}

/// A region together with its trace value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionValue {
    pub slope: Slope,
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    SegmentHit,
    DegenerateHit,
    SmallRay,
}

/// Diagnostics of the explored attracting core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractingTreeStats {
    /// Slope labels of the sink vertex, when one was reached.
    pub sink_slopes: Option<[Slope; 3]>,
    /// Edges crossed during the expansion phase (interior of the core).
    pub edges_in_t0: usize,
    /// Explored regions with modulus at most 2 + alpha.
    pub regions_le_2alpha: Vec<RegionValue>,
    /// True when every pruned edge had its arrow pointing back inward.
    pub arrows_inward_checked: bool,
    /// Vertices seen with two or more outgoing arrows whose smallest
    /// coordinate modulus exceeded 2 + alpha. Zero on every sound run.
    pub fork_bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BqVerdict {
    Accepted {
        /// All explored regions with modulus at most the search level,
        /// i.e. the finite sub-level set certifying the second condition.
        omega_l: Vec<RegionValue>,
        stats: AttractingTreeStats,
    },
    Rejected {
        reason: RejectReason,
        witness: RegionValue,
        /// Degenerate-locus rejections are tolerance-based and may clip
        /// maps that merely pass very close to the locus.
        degenerate_tolerance_caveat: bool,
    },
    Undetermined {
        vertices_used: usize,
        frontier_size: usize,
    },
}

impl BqVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, BqVerdict::Accepted { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DescentOutcome {
    Sink(VertexState, AttractingTreeStats),
    Rejected {
        reason: RejectReason,
        witness: RegionValue,
    },
    BudgetExceeded(AttractingTreeStats),
}

/// Full search output; `explored_vertices` supports adjacency queries on
/// the region set (two regions are adjacent when they co-occur at a vertex)
/// and `pruned_edges` exposes every certificate the run relied on.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub verdict: BqVerdict,
    pub vertices_used: usize,
    pub explored_vertices: Vec<[Slope; 3]>,
    /// Every region seen, with its value (not only the sub-level set).
    pub explored_regions: Vec<RegionValue>,
    /// Frontier edges pruned by a certificate, as (vertex, crossing color).
    pub pruned_edges: Vec<(VertexState, Color)>,
}

/// Distance from a point to the real segment [-2, 2].
pub fn dist_to_segment(z: Complex64) -> f64 {
    if z.re < -2.0 {
        (z - Complex64::new(-2.0, 0.0)).norm()
    } else if z.re > 2.0 {
        (z - Complex64::new(2.0, 0.0)).norm()
    } else {
        z.im.abs()
    }
}

/// An edge is certified when both faces exceed the level and the arrow
/// points back at the explored near side. Nothing beyond such an edge can
/// carry a value of modulus at most the level, nor meet the segment.
pub fn certify_escape(edge: &DirectedEdgeInfo, level: f64) -> bool {
    edge.faces.iter().all(|(_, v, _)| v.norm() > level)
        && edge.far_value.norm() >= edge.near_value.norm()
}

struct SearchCtx {
    mu: MuParams,
    tol: Tolerances,
    budget: SearchBudget,
    level: f64,
    alpha: f64,
    locus: Vec<Complex64>,
    regions: BTreeMap<Slope, Complex64>,
    explored_vertices: Vec<[Slope; 3]>,
    fork_bound_violations: usize,
    arrows_inward: bool,
}

impl SearchCtx {
    fn hit(&self, region: RegionValue) -> Option<(RejectReason, RegionValue)> {
        if dist_to_segment(region.value) <= self.tol.eps_segment {
            return Some((RejectReason::SegmentHit, region));
        }
        if self
            .locus
            .iter()
            .any(|s| (region.value - s).norm() <= self.tol.eps_degenerate)
        {
            return Some((RejectReason::DegenerateHit, region));
        }
        None
    }

    fn record_region(&mut self, region: RegionValue) {
        self.regions.entry(region.slope).or_insert(region.value);
    }

    fn record_vertex(&mut self, s: &VertexState) {
        self.explored_vertices.push(s.slopes);
        // fork bound: two or more strictly outgoing arrows force a small
        // coordinate at the vertex
        let mut outgoing = 0;
        for color in Color::ALL {
            let e = edge_info(s, color);
            if e.far_value.norm() < e.near_value.norm() - self.tol.eps_tie {
                outgoing += 1;
            }
        }
        if outgoing >= 2 {
            let min = s
                .triple
                .coords()
                .iter()
                .map(|c| c.norm())
                .fold(f64::INFINITY, f64::min);
            if min > 2.0 + self.alpha + 1e-9 {
                self.fork_bound_violations += 1;
            }
        }
    }

    fn report(&self, verdict: BqVerdict, pruned: Vec<(VertexState, Color)>) -> SearchReport {
        SearchReport {
            verdict,
            vertices_used: self.explored_vertices.len(),
            explored_vertices: self.explored_vertices.clone(),
            explored_regions: self
                .regions
                .iter()
                .map(|(s, v)| RegionValue {
                    slope: *s,
                    value: *v,
                })
                .collect(),
            pruned_edges: pruned,
        }
    }

    fn stats(&self, sink: Option<[Slope; 3]>, edges_in_t0: usize) -> AttractingTreeStats {
        AttractingTreeStats {
            sink_slopes: sink,
            edges_in_t0,
            regions_le_2alpha: self
                .regions
                .iter()
                .filter(|(_, v)| v.norm() <= 2.0 + self.alpha)
                .map(|(s, v)| RegionValue {
                    slope: *s,
                    value: *v,
                })
                .collect(),
            arrows_inward_checked: self.arrows_inward,
            fork_bound_violations: self.fork_bound_violations,
        }
    }
}

/// Steepest descent along outgoing arrows: repeatedly cross the edge whose
/// far value is strictly smaller, choosing the crossing that minimizes the
/// largest coordinate modulus of the new vertex (ties by color order).
/// Halts at a sink, rejects on a segment or degenerate hit or on a long
/// strictly-decreasing ray that dips below modulus 2.
pub fn descend(
    start: &VertexState,
    tol: Tolerances,
    budget: SearchBudget,
) -> Result<DescentOutcome, BqError> {
    let consts = derived_constants(start.mu)?;
    let locus = crate::algebra::degenerate_locus(start.mu)?;
    let mut ctx = SearchCtx {
        mu: start.mu,
        tol,
        budget,
        level: consts.big_l,
        alpha: consts.alpha,
        locus,
        regions: BTreeMap::new(),
        explored_vertices: Vec::new(),
        fork_bound_violations: 0,
        arrows_inward: true,
    };
    Ok(descend_inner(start, &mut ctx))
}

fn descend_inner(start: &VertexState, ctx: &mut SearchCtx) -> DescentOutcome {
    let mut state = *start;
    ctx.record_vertex(&state);
    let mut min_seen = RegionValue {
        slope: state.slopes[0],
        value: state.triple.x,
    };
    for color in Color::ALL {
        let region = RegionValue {
            slope: state.slope(color),
            value: state.value(color),
        };
        ctx.record_region(region);
        if region.value.norm() < min_seen.value.norm() {
            min_seen = region;
        }
        if let Some((reason, witness)) = ctx.hit(region) {
            return DescentOutcome::Rejected { reason, witness };
        }
    }

    for _ in 0..ctx.budget.max_descent_steps {
        let mut best: Option<(Color, f64)> = None;
        for color in Color::ALL {
            let e = edge_info(&state, color);
            if e.far_value.norm() < e.near_value.norm() - ctx.tol.eps_tie {
                let new_max = Color::ALL
                    .iter()
                    .map(|c| {
                        if *c == color {
                            e.far_value.norm()
                        } else {
                            state.value(*c).norm()
                        }
                    })
                    .fold(0.0, f64::max);
                if best.map_or(true, |(_, m)| new_max < m) {
                    best = Some((color, new_max));
                }
            }
        }
        let Some((color, _)) = best else {
            // all three arrows point inward
            return DescentOutcome::Sink(state, ctx.stats(Some(state.slopes), 0));
        };
        let Some(next) = try_step(&state, color) else {
            return DescentOutcome::BudgetExceeded(ctx.stats(None, 0));
        };
        state = next;
        ctx.record_vertex(&state);
        let region = RegionValue {
            slope: state.slope(color),
            value: state.value(color),
        };
        ctx.record_region(region);
        if region.value.norm() < min_seen.value.norm() {
            min_seen = region;
        }
        if let Some((reason, witness)) = ctx.hit(region) {
            return DescentOutcome::Rejected { reason, witness };
        }
    }
    if min_seen.value.norm() < 2.0 {
        // a long strictly decreasing ray that reaches small values is
        // either not accepted or indistinguishable from such a map
        DescentOutcome::Rejected {
            reason: RejectReason::SmallRay,
            witness: min_seen,
        }
    } else {
        DescentOutcome::BudgetExceeded(ctx.stats(None, 0))
    }
}

/// Certifies that the whole neighbor tail of a small-valued face stays
/// above `level`, using minorants of the two exponential modes from the
/// first tail index on. Conservative: returns false whenever growth is not
/// yet established.
fn tail_escapes(
    x: Complex64,
    pair: (Complex64, Complex64),
    mu: MuParams,
    face_color: Color,
    forward: bool,
    level: f64,
) -> bool {
    let spec = twist_spectrum(x);
    if spec.kind != SpectrumKind::Loxodromic {
        return false;
    }
    let Ok(center) = conic_center(x, mu, face_color) else {
        return false;
    };
    let Ok(oc) = orbit_coefficients(x, pair.0, pair.1, mu, face_color) else {
        return false;
    };
    let la = spec.cap_lambda.norm();
    let (a, b) = (oc.a_coef.norm(), oc.b_coef.norm());
    // Mode magnitudes in the chosen direction at tail index k >= 1:
    //   u: a * rho^k and b / rho^k, with rho the A-mode growth
    //   v: same with an extra factor |L| on A and 1/|L| on B
    let rho = if forward { la * la } else { 1.0 / (la * la) };
    let (va, vb) = if forward { (a * la, b / la) } else { (a / la, b * la) };
    let low_u = if rho > 1.0 {
        a * rho - b / rho
    } else {
        b / rho - a * rho
    };
    let low_v = if rho > 1.0 {
        va * rho - vb / rho
    } else {
        vb / rho - va * rho
    };
    low_u - center.frak_y.norm() > level && low_v - center.frak_z.norm() > level
}

/// Decide whether the frontier edge can be pruned: the generic two-big-face
/// certificate, or the boundary-tail certificate when exactly one face is
/// small. Returns (prune, arrow_inward).
fn can_prune(state: &VertexState, color: Color, ctx: &SearchCtx) -> (bool, bool) {
    let e = edge_info(state, color);
    let arrow_inward = e.far_value.norm() >= e.near_value.norm() - ctx.tol.eps_tie;
    if certify_escape(&e, ctx.level) {
        return (true, arrow_inward);
    }
    let small: Vec<&(Color, Complex64, Slope)> = e
        .faces
        .iter()
        .filter(|(_, v, _)| v.norm() <= ctx.level)
        .collect();
    if small.len() != 1 || e.far_value.norm() <= ctx.level {
        return (false, arrow_inward);
    }
    let (face_color, face_value, _) = *small[0];
    // Values of the two non-face regions at the far vertex, in the color
    // order (face.next, face.prev) used by the neighbor recurrence.
    let far_state = state.triple.with_coord(color, e.far_value);
    let pair = (
        far_state.coord(face_color.next()),
        far_state.coord(face_color.prev()),
    );
    // Walking away from the near vertex next replaces the other face; the
    // recurrence runs forward when that face is the next color.
    let other_face_color = e
        .faces
        .iter()
        .map(|(c, _, _)| *c)
        .find(|c| *c != face_color)
        .expect("two faces");
    let forward = other_face_color == face_color.next();
    (
        tail_escapes(face_value, pair, ctx.mu, face_color, forward, ctx.level),
        arrow_inward,
    )
}

/// Run the full decision at a sub-level threshold of at least `min_level`
/// (the derived constant `L` when `min_level` is smaller).
pub fn bq_search(
    t: MarkoffTriple,
    mu: MuParams,
    tol: Tolerances,
    budget: SearchBudget,
    min_level: f64,
) -> Result<SearchReport, BqError> {
    let residual = vertex_residual(t, mu).norm();
    let scale = residual_scale(t, mu);
    if residual > 1e-6 * scale {
        return Err(BqError::ResidualTooLarge { residual, scale });
    }
    let consts = derived_constants(mu)?;
    let locus = crate::algebra::degenerate_locus(mu)?;
    let mut ctx = SearchCtx {
        mu,
        tol,
        budget,
        level: consts.big_l.max(min_level),
        alpha: consts.alpha,
        locus,
        regions: BTreeMap::new(),
        explored_vertices: Vec::new(),
        fork_bound_violations: 0,
        arrows_inward: true,
    };

    let start = base_state(t, mu);
    let sink = match descend_inner(&start, &mut ctx) {
        DescentOutcome::Sink(sink, _) => sink,
        DescentOutcome::Rejected { reason, witness } => {
            let caveat = reason == RejectReason::DegenerateHit;
            let verdict = BqVerdict::Rejected {
                reason,
                witness,
                degenerate_tolerance_caveat: caveat,
            };
            return Ok(ctx.report(verdict, Vec::new()));
        }
        DescentOutcome::BudgetExceeded(_) => {
            let verdict = BqVerdict::Undetermined {
                vertices_used: ctx.explored_vertices.len(),
                frontier_size: 0,
            };
            return Ok(ctx.report(verdict, Vec::new()));
        }
    };

    // Breadth-first expansion from the sink behind certified edges.
    let mut frontier: VecDeque<(VertexState, Color)> = VecDeque::new();
    for color in Color::ALL {
        frontier.push_back((sink, color));
    }
    let mut crossed = 0usize;
    let mut pruned: Vec<(VertexState, Color)> = Vec::new();

    while let Some((state, color)) = frontier.pop_front() {
        let (prune, arrow_inward) = can_prune(&state, color, &ctx);
        if prune {
            ctx.arrows_inward &= arrow_inward;
            pruned.push((state, color));
            continue;
        }
        let overflow = ctx.explored_vertices.len() >= ctx.budget.max_vertices;
        let next = if overflow { None } else { try_step(&state, color) };
        let Some(next) = next else {
            frontier.push_front((state, color));
            let verdict = BqVerdict::Undetermined {
                vertices_used: ctx.explored_vertices.len(),
                frontier_size: frontier.len(),
            };
            return Ok(ctx.report(verdict, pruned));
        };
        crossed += 1;
        ctx.record_vertex(&next);
        let region = RegionValue {
            slope: next.slope(color),
            value: next.value(color),
        };
        ctx.record_region(region);
        if let Some((reason, witness)) = ctx.hit(region) {
            let caveat = reason == RejectReason::DegenerateHit;
            let verdict = BqVerdict::Rejected {
                reason,
                witness,
                degenerate_tolerance_caveat: caveat,
            };
            return Ok(ctx.report(verdict, pruned));
        }
        for out in Color::ALL {
            if out != color {
                frontier.push_back((next, out));
            }
        }
    }

    let omega_l = ctx
        .regions
        .iter()
        .filter(|(_, v)| v.norm() <= ctx.level)
        .map(|(s, v)| RegionValue {
            slope: *s,
            value: *v,
        })
        .collect();
    let stats = ctx.stats(Some(sink.slopes), crossed);
    Ok(ctx.report(BqVerdict::Accepted { omega_l, stats }, pruned))
}

/// The acceptance decision at the derived level `L`.
pub fn bq_test(
    t: MarkoffTriple,
    mu: MuParams,
    tol: Tolerances,
    budget: SearchBudget,
) -> Result<BqVerdict, BqError> {
    Ok(bq_search(t, mu, tol, budget, 0.0)?.verdict)
}

/// All regions with modulus at most `k`, for an accepted map. The search
/// runs at level `max(k, L)` so the listing is complete.
pub fn omega_k(
    t: MarkoffTriple,
    mu: MuParams,
    k: f64,
    tol: Tolerances,
    budget: SearchBudget,
) -> Result<Vec<RegionValue>, BqError> {
    let report = bq_search(t, mu, tol, budget, k)?;
    match report.verdict {
        BqVerdict::Accepted { omega_l, .. } => Ok(omega_l
            .into_iter()
            .filter(|r| r.value.norm() <= k)
            .collect()),
        _ => Err(BqError::NotBqAccepted),
    }
}
