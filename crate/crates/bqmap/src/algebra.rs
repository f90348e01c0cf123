//! Trace algebra on the relative character variety of the four-holed sphere.
//!
//! Everything here is a pure function of its arguments. The central object is
//! the vertex equation
//!
//! ```text
//! x^2 + y^2 + z^2 + xyz = p x + q y + r z + s
//! ```
//!
//! whose solutions are the Markoff triples for the parameter quadruple
//! `mu = (p, q, r, s)`. Boundary trace data `(a, b, c, d)` reaches `mu`
//! through [`gt_map`].

use crate::quartic::{self, QuarticError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Color index for the three coordinates / region families of the tree.
/// Coordinates `x, y, z` carry colors 1, 2, 3 respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    One,
    Two,
    Three,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::One, Color::Two, Color::Three];

    pub fn index(self) -> usize {
        match self {
            Color::One => 0,
            Color::Two => 1,
            Color::Three => 2,
        }
    }

    pub fn from_index(i: usize) -> Color {
        Color::ALL[i % 3]
    }

    /// The next color in cyclic order 1 -> 2 -> 3 -> 1.
    pub fn next(self) -> Color {
        Color::from_index(self.index() + 1)
    }

    pub fn prev(self) -> Color {
        Color::from_index(self.index() + 2)
    }
}

impl std::fmt::Display for Color {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Parameter quadruple of the vertex equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuParams {
    pub p: Complex64,
    pub q: Complex64,
    pub r: Complex64,
    pub s: Complex64,
}

impl MuParams {
    pub fn new(p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> MuParams {
        MuParams { p, q, r, s }
    }

    pub fn real(p: f64, q: f64, r: f64, s: f64) -> MuParams {
        MuParams::new(
            Complex64::new(p, 0.0),
            Complex64::new(q, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(s, 0.0),
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.p, self.q, self.r, self.s]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Cyclic relabeling (p,q,r) -> (q,r,p), the parameter half of the color
    /// rotation that sends coordinates (x,y,z) -> (y,z,x).
    pub fn cycled(&self) -> MuParams {
        MuParams::new(self.q, self.r, self.p, self.s)
    }

    /// The parameter of the linear term attached to a color.
    pub fn linear_coeff(&self, color: Color) -> Complex64 {
        match color {
            Color::One => self.p,
            Color::Two => self.q,
            Color::Three => self.r,
        }
    }
}

/// Boundary traces `(a, b, c, d)` of the four boundary curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTraces {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl BoundaryTraces {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> BoundaryTraces {
        BoundaryTraces { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> BoundaryTraces {
        BoundaryTraces::new(
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        )
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_real(&self) -> bool {
        self.entries().iter().all(|z| z.im == 0.0)
    }
}

/// An ordered triple `(x, y, z)`. Order matters: the coordinates carry the
/// colors 1, 2, 3 and a permuted triple solves a different equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkoffTriple {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl MarkoffTriple {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> MarkoffTriple {
        MarkoffTriple { x, y, z }
    }

    pub fn real(x: f64, y: f64, z: f64) -> MarkoffTriple {
        MarkoffTriple::new(
            Complex64::new(x, 0.0),
            Complex64::new(y, 0.0),
            Complex64::new(z, 0.0),
        )
    }

    pub fn coord(&self, color: Color) -> Complex64 {
        match color {
            Color::One => self.x,
            Color::Two => self.y,
            Color::Three => self.z,
        }
    }

    pub fn with_coord(&self, color: Color, v: Complex64) -> MarkoffTriple {
        let mut t = *self;
        match color {
            Color::One => t.x = v,
            Color::Two => t.y = v,
            Color::Three => t.z = v,
        }
        t
    }

    pub fn coords(&self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.coords()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// The constants alpha, m, M, L derived from a parameter quadruple.
///
/// `big_l` is the sub-level threshold of the finiteness condition: a map
/// passes when only finitely many regions have trace modulus below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub m: f64,
    pub big_m: f64,
    pub big_l: f64,
}

/// The degenerate quartic of one color and its roots. The roots, over all
/// three colors, are the trace values at which the neighbor conic around a
/// region collapses to a line pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateData {
    pub color: Color,
    /// Coefficients, `quartic[k]` multiplying x^k.
    pub quartic: [Complex64; 5],
    pub roots: [Complex64; 4],
    /// Roots within 1e-8 of +2 or -2; excluded from center maxima because
    /// the center formula has 4 - x^2 in its denominator.
    pub exclusions: Vec<Complex64>,
}

/// Distance of a root to the nearest of +2 and -2 under which it is treated
/// as sitting on the parabolic locus.
pub const PARABOLIC_EXCLUSION_TOL: f64 = 1e-8;

/// `(a,b,c,d) -> (ab+cd, ad+bc, ac+bd, 4 - a^2 - b^2 - c^2 - d^2 - abcd)`.
pub fn gt_map(tau: BoundaryTraces) -> MuParams {
    let BoundaryTraces { a, b, c, d } = tau;
    MuParams::new(
        a * b + c * d,
        a * d + b * c,
        a * c + b * d,
        4.0 - a * a - b * b - c * c - d * d - a * b * c * d,
    )
}

/// Left side minus right side of the vertex equation; zero exactly on
/// Markoff triples for `mu`.
pub fn vertex_residual(t: MarkoffTriple, mu: MuParams) -> Complex64 {
    let MarkoffTriple { x, y, z } = t;
    x * x + y * y + z * z + x * y * z - mu.p * x - mu.q * y - mu.r * z - mu.s
}

/// Magnitude scale of the vertex equation at `t`, for relative residual
/// comparisons.
pub fn residual_scale(t: MarkoffTriple, mu: MuParams) -> f64 {
    let MarkoffTriple { x, y, z } = t;
    1.0 + x.norm() * x.norm()
        + y.norm() * y.norm()
        + z.norm() * z.norm()
        + (x * y * z).norm()
        + (mu.p * x).norm()
        + (mu.q * y).norm()
        + (mu.r * z).norm()
        + mu.s.norm()
}

/// Replace the coordinate of `color` by the conjugate root of the vertex
/// quadratic in that coordinate. Self-inverse, preserves the residual.
pub fn apply_theta(t: MarkoffTriple, mu: MuParams, color: Color) -> MarkoffTriple {
    let MarkoffTriple { x, y, z } = t;
    match color {
        Color::One => t.with_coord(color, mu.p - y * z - x),
        Color::Two => t.with_coord(color, mu.q - x * z - y),
        Color::Three => t.with_coord(color, mu.r - x * y - z),
    }
}

/// The three Dehn twist generators, as compositions of two involutions.
/// `Theta23` applies the color-3 move first, then color-2; the others are
/// the cyclic relabelings of that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Twist {
    Theta23,
    Theta31,
    Theta12,
}

impl Twist {
    /// (first, second) in application order.
    fn moves(self) -> (Color, Color) {
        match self {
            Twist::Theta23 => (Color::Three, Color::Two),
            Twist::Theta31 => (Color::One, Color::Three),
            Twist::Theta12 => (Color::Two, Color::One),
        }
    }
}

/// Iterate a Dehn twist `power` times (inverse composition for negative
/// powers). Power 0 is the identity.
pub fn apply_twist(t: MarkoffTriple, mu: MuParams, twist: Twist, power: i64) -> MarkoffTriple {
    let (first, second) = twist.moves();
    let mut cur = t;
    if power >= 0 {
        for _ in 0..power {
            cur = apply_theta(apply_theta(cur, mu, first), mu, second);
        }
    } else {
        for _ in 0..(-power) {
            cur = apply_theta(apply_theta(cur, mu, second), mu, first);
        }
    }
    cur
}

/// Coefficients of the color-1 degenerate quartic
/// `-x^4 + p x^3 + (4+s) x^2 + (qr - 4p) x - (q^2 + r^2 + 4s)`.
fn degenerate_quartic_coeffs(mu: MuParams) -> [Complex64; 5] {
    let MuParams { p, q, r, s } = mu;
    [
        -(q * q + r * r + 4.0 * s),
        q * r - 4.0 * p,
        s + 4.0,
        p,
        Complex64::new(-1.0, 0.0),
    ]
}

fn mu_for_color(mu: MuParams, color: Color) -> MuParams {
    match color {
        Color::One => mu,
        Color::Two => mu.cycled(),
        Color::Three => mu.cycled().cycled(),
    }
}

/// The degenerate quartic of the given color, its four roots, and the roots
/// flagged as parabolic exclusions.
pub fn degenerate_data(mu: MuParams, color: Color) -> Result<DegenerateData, QuarticError> {
    let quartic = degenerate_quartic_coeffs(mu_for_color(mu, color));
    let roots = quartic::solve_quartic(quartic)?;
    let exclusions = roots
        .iter()
        .copied()
        .filter(|x| {
            (x - Complex64::new(2.0, 0.0)).norm() < PARABOLIC_EXCLUSION_TOL
                || (x + Complex64::new(2.0, 0.0)).norm() < PARABOLIC_EXCLUSION_TOL
        })
        .collect();
    Ok(DegenerateData {
        color,
        quartic,
        roots,
        exclusions,
    })
}

/// All twelve degenerate trace values: the roots of the three per-color
/// quartics.
pub fn degenerate_locus(mu: MuParams) -> Result<Vec<Complex64>, QuarticError> {
    let mut out = Vec::with_capacity(12);
    for color in Color::ALL {
        out.extend(degenerate_data(mu, color)?.roots);
    }
    Ok(out)
}

/// alpha, m, M, L for the parameter quadruple.
///
/// `m` is a constructive sink bound: large enough that every fraction term
/// in the sink estimate is below 1/12. Any larger constant defines the same
/// acceptance set, so the specific form only has to be valid, not minimal.
pub fn derived_constants(mu: MuParams) -> Result<DerivedConstants, QuarticError> {
    let pqr_max = mu.p.norm().max(mu.q.norm()).max(mu.r.norm());
    let alpha = pqr_max / 2.0;
    let m = 12f64
        .max(pqr_max)
        .max((12.0 * pqr_max).sqrt())
        .max((12.0 * mu.s.norm()).cbrt());

    let mut big_m = 0.0f64;
    let params = [mu.p, mu.q, mu.r];
    for x in degenerate_locus(mu)? {
        let two = Complex64::new(2.0, 0.0);
        if (x - two).norm() < PARABOLIC_EXCLUSION_TOL || (x + two).norm() < PARABOLIC_EXCLUSION_TOL
        {
            continue;
        }
        let denom = (4.0 - x * x).norm();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let center = (2.0 * params[i] - x * params[j]).norm() / denom;
                big_m = big_m.max(center);
            }
        }
    }

    let big_l = (2.0 + alpha).max(m).max(big_m + 1.0);
    Ok(DerivedConstants {
        alpha,
        m,
        big_m,
        big_l,
    })
}

/// `kappa_{u,v}(x) = x^2 - uv x + u^2 + v^2 - 4`. The color-1 quartic equals
/// minus the product of the kappa polynomials of the two boundary pairings
/// `{a,b}` and `{c,d}`; this is the factorization oracle used in tests.
pub fn kappa(u: Complex64, v: Complex64, x: Complex64) -> Complex64 {
    x * x - u * v * x + u * u + v * v - 4.0
}
