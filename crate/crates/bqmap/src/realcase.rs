//! Real boundary data: topology of the real relative character variety,
//! the ergodicity criterion, and construction of accepted real seeds.

use crate::algebra::{gt_map, vertex_residual, BoundaryTraces, MarkoffTriple, MuParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RealError {
    #[error("boundary traces must be real")]
    NonRealInput,
    #[error("seed construction unavailable: {0}")]
    SeedNotAvailable(String),
}

/// The six topological types of the real slice, by the number `n` of
/// boundary traces inside [-2, 2] and the sign of `abcd` when n = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RealCase {
    QuadruplyPuncturedSphere,
    TriplyPuncturedTorusPlusDisc,
    TriplyPuncturedSpherePlusDisc,
    AnnulusPlusTwoDiscs,
    FourDiscs,
    FourDiscsPlusSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTopology {
    pub n_in_segment: u8,
    pub case: RealCase,
    pub euler_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErgodicVerdict {
    ErgodicWholeSlice,
    HasDomainOfDiscontinuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityDecision {
    pub verdict: ErgodicVerdict,
    pub p: Complex64,
    pub q: Complex64,
    pub r: Complex64,
    pub s: Complex64,
    pub rationale: String,
}

/// Topology of the real slice for real boundary traces. Entries exactly at
/// +/-2 count as in-segment.
pub fn classify_real(tau: BoundaryTraces) -> Result<RealTopology, RealError> {
    if !tau.is_real() {
        return Err(RealError::NonRealInput);
    }
    let entries = tau.entries();
    let n = entries.iter().filter(|e| e.re.abs() <= 2.0).count() as u8;
    let prod: f64 = entries.iter().map(|e| e.re).product();
    let (case, euler_note) = match n {
        0 => {
            if prod < 0.0 {
                (
                    RealCase::QuadruplyPuncturedSphere,
                    "relative Euler class +1 or -1".to_string(),
                )
            } else {
                (
                    RealCase::TriplyPuncturedTorusPlusDisc,
                    "disc component: maximal relative Euler class +2 or -2 \
                     (hyperbolic structures with geodesic boundary); \
                     triply punctured torus component: relative Euler class 0"
                        .to_string(),
                )
            }
        }
        1 => (RealCase::TriplyPuncturedSpherePlusDisc, String::new()),
        2 => (RealCase::AnnulusPlusTwoDiscs, String::new()),
        3 => (RealCase::FourDiscs, String::new()),
        _ => (RealCase::FourDiscsPlusSphere, String::new()),
    };
    Ok(RealTopology {
        n_in_segment: n,
        case,
        euler_note,
    })
}

/// The mapping class group action is ergodic on the whole real slice
/// exactly when `p = q = r = 0` and `s` lies in the closed interval
/// `[4, 20]`; otherwise an open domain of discontinuity exists.
pub fn ergodicity_decision(tau: BoundaryTraces) -> Result<ErgodicityDecision, RealError> {
    if !tau.is_real() {
        return Err(RealError::NonRealInput);
    }
    let mu = gt_map(tau);
    let pqr_zero = mu.p.norm() <= 1e-12 && mu.q.norm() <= 1e-12 && mu.r.norm() <= 1e-12;
    let s = mu.s.re;
    let ergodic = pqr_zero && mu.s.im.abs() <= 1e-12 && (4.0..=20.0).contains(&s);
    if ergodic {
        // p = q = r = 0 forces |a|=|b|=|c|=|d| with abcd <= 0, or three
        // entries zero; cheap consistency check on the input.
        let e = tau.entries().map(|v| v.re);
        let all_equal_mod = e.iter().all(|v| (v.abs() - e[0].abs()).abs() <= 1e-9);
        let zeros = e.iter().filter(|v| v.abs() <= 1e-9).count();
        let prod: f64 = e.iter().product();
        debug_assert!(
            (all_equal_mod && prod <= 1e-9) || zeros >= 3,
            "p=q=r=0 without the characteristic trace pattern: {e:?}"
        );
    }
    let rationale = if ergodic {
        format!("p = q = r = 0 and s = {s} lies in [4, 20] (closed-interval criterion): ergodic on the whole real slice")
    } else if !pqr_zero {
        "(p, q, r) != (0, 0, 0): an accepted real seed exists, so an open domain of discontinuity is non-empty".to_string()
    } else {
        format!("p = q = r = 0 but s = {s} lies outside [4, 20]: a domain of discontinuity exists")
    };
    Ok(ErgodicityDecision {
        verdict: if ergodic {
            ErgodicVerdict::ErgodicWholeSlice
        } else {
            ErgodicVerdict::HasDomainOfDiscontinuity
        },
        p: mu.p,
        q: mu.q,
        r: mu.r,
        s: mu.s,
        rationale,
    })
}

/// Simultaneous cyclic relabeling of coordinates and parameters; a symmetry
/// of the vertex equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorPerm {
    Identity,
    /// (x,y,z) -> (y,z,x), (p,q,r) -> (q,r,p)
    Rotate1,
    /// (x,y,z) -> (z,x,y), (p,q,r) -> (r,p,q)
    Rotate2,
}

impl ColorPerm {
    pub fn apply_mu(self, mu: MuParams) -> MuParams {
        match self {
            ColorPerm::Identity => mu,
            ColorPerm::Rotate1 => mu.cycled(),
            ColorPerm::Rotate2 => mu.cycled().cycled(),
        }
    }

    pub fn apply_triple(self, t: MarkoffTriple) -> MarkoffTriple {
        match self {
            ColorPerm::Identity => t,
            ColorPerm::Rotate1 => MarkoffTriple::new(t.y, t.z, t.x),
            ColorPerm::Rotate2 => MarkoffTriple::new(t.z, t.x, t.y),
        }
    }

    pub fn inverse(self) -> ColorPerm {
        match self {
            ColorPerm::Identity => ColorPerm::Identity,
            ColorPerm::Rotate1 => ColorPerm::Rotate2,
            ColorPerm::Rotate2 => ColorPerm::Rotate1,
        }
    }
}

/// An explicit accepted seed on a real slice. The triple and parameters are
/// in the working frame where the two same-signed parameters occupy the
/// `(q, r)` slots; when `mirrored`, the construction internally flipped
/// their common positive sign and the reported triple has the last two
/// coordinates negated accordingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSeed {
    pub triple: MarkoffTriple,
    pub mu: MuParams,
    pub perm: ColorPerm,
    pub mirrored: bool,
    pub y: f64,
    pub epsilon: f64,
}

impl RealSeed {
    /// The seed triple expressed against the original unpermuted parameters.
    pub fn triple_in_original_frame(&self) -> MarkoffTriple {
        self.perm.inverse().apply_triple(self.triple)
    }
}

/// Pick the working frame: a cyclic relabeling placing two weakly
/// same-signed, not-both-zero parameters into the (q, r) slots, plus a
/// mirror flag when their shared sign is positive.
fn working_frame(mu: MuParams) -> Option<(ColorPerm, bool)> {
    let vals = [mu.p.re, mu.q.re, mu.r.re];
    let pairs = [
        (vals[1], vals[2], ColorPerm::Identity),
        (vals[0], vals[1], ColorPerm::Rotate2),
        (vals[2], vals[0], ColorPerm::Rotate1),
    ];
    for (a, b, perm) in pairs {
        if a <= 0.0 && b <= 0.0 && (a != 0.0 || b != 0.0) {
            return Some((perm, false));
        }
    }
    for (a, b, perm) in pairs {
        if a >= 0.0 && b >= 0.0 && (a != 0.0 || b != 0.0) {
            return Some((perm, true));
        }
    }
    None
}

/// The minus-sign root of the quadratic (in epsilon) that puts
/// `(-2 - epsilon, y, y)` on the variety.
fn epsilon_minus(mu: MuParams, y: f64) -> Option<f64> {
    let (p, q, r, s) = (mu.p.re, mu.q.re, mu.r.re, mu.s.re);
    let disc = y.powi(4) - 8.0 * y * y - 2.0 * p * y * y + 4.0 * (q + r) * y + (p * p + 4.0 * s);
    if disc < 0.0 {
        return None;
    }
    let eps = 0.5 * ((y * y - p - 4.0) - disc.sqrt());
    (eps.is_finite() && eps > 0.0).then_some(eps)
}

/// Build the seed triple `(-2 - eps(y), y, y)` in the working frame for the
/// given `y`. Fails when no frame exists (`p = q = r = 0`), when the
/// epsilon quadratic has no usable root at this `y`, or when the residual
/// check does not pass.
pub fn construct_real_seed(mu: MuParams, y: f64) -> Result<RealSeed, RealError> {
    if ![mu.p, mu.q, mu.r, mu.s].iter().all(|v| v.im == 0.0) {
        return Err(RealError::NonRealInput);
    }
    if mu.p.norm() == 0.0 && mu.q.norm() == 0.0 && mu.r.norm() == 0.0 {
        return Err(RealError::SeedNotAvailable(
            "requires (p, q, r) != (0, 0, 0)".to_string(),
        ));
    }
    if !(y.is_finite() && y > 0.0) {
        return Err(RealError::SeedNotAvailable(format!("invalid y = {y}")));
    }
    let (perm, mirrored) = working_frame(mu)
        .ok_or_else(|| RealError::SeedNotAvailable("no same-signed parameter pair".to_string()))?;
    let permuted = perm.apply_mu(mu);
    let working = if mirrored {
        MuParams::new(permuted.p, -permuted.q, -permuted.r, permuted.s)
    } else {
        permuted
    };
    let eps = epsilon_minus(working, y).ok_or_else(|| {
        RealError::SeedNotAvailable(format!("epsilon root not in (0, inf) at y = {y}"))
    })?;
    let seed_working = MarkoffTriple::real(-2.0 - eps, y, y);
    let residual = vertex_residual(seed_working, working).norm();
    if residual > 1e-9 * y * y {
        return Err(RealError::SeedNotAvailable(format!(
            "residual {residual:e} exceeds 1e-9 * y^2"
        )));
    }
    // report in the permuted frame: the mirror is undone by negating the
    // last two coordinates, which solves the permuted equation
    let triple = if mirrored {
        MarkoffTriple::real(-2.0 - eps, -y, -y)
    } else {
        seed_working
    };
    debug_assert!(vertex_residual(triple, permuted).norm() <= 1e-9 * y * y);
    Ok(RealSeed {
        triple,
        mu: permuted,
        perm,
        mirrored,
        y,
        epsilon: eps,
    })
}

/// [`construct_real_seed`] with the default schedule for `y`:
/// `max(33, 10 (1 + |p| + |q| + |r| + |s|))`, doubled until the
/// construction succeeds (at most 60 doublings).
pub fn construct_real_seed_auto(mu: MuParams) -> Result<RealSeed, RealError> {
    let mut y = 33f64.max(10.0 * (1.0 + mu.p.norm() + mu.q.norm() + mu.r.norm() + mu.s.norm()));
    let mut last = RealError::SeedNotAvailable("not attempted".to_string());
    for _ in 0..=60 {
        match construct_real_seed(mu, y) {
            Ok(seed) => return Ok(seed),
            Err(e) => last = e,
        }
        y *= 2.0;
    }
    Err(last)
}
