//! Neighbor sequences around a fixed region.
//!
//! Fix a region with trace value `x` and color `c`. Its neighbors form two
//! bi-infinite sequences, one per remaining color, coupled by the affine
//! recurrence
//!
//! ```text
//! u_{n+1} = q - x v_n - u_n,     v_{n+1} = r - x u_{n+1} - v_n,
//! ```
//!
//! written here for color 1 (`u` of color 2, `v` of color 3); the other
//! colors are the cyclic relabelings. The linear part has determinant one
//! and trace `x^2 - 2`, so the orbit is elliptic, parabolic or loxodromic
//! according to `x`, and for `x != +/-2` it revolves around the fixed point
//! of the affine map, the center of the vertex conic.

use crate::algebra::{Color, MuParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    /// The conic center is undefined at x = +/-2.
    #[error("conic center undefined at x = +/-2")]
    ParabolicCenterUndefined,
    /// Orbit coefficients require x outside the real segment [-2, 2].
    #[error("orbit coefficients require loxodromic x")]
    NotLoxodromic,
}

/// Conjugacy class of the linear part of the neighbor recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

/// Eigendata of the recurrence matrix: `lambda + 1/lambda = x^2 - 2`, and
/// `cap_lambda = (x + delta)/2` is a square root of `lambda`, with `delta`
/// the principal square root of `x^2 - 4` (branch cut on the negative real
/// axis, so results are reproducible bit for bit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSpectrum {
    pub x: Complex64,
    pub delta: Complex64,
    pub lambda: Complex64,
    pub lambda_inv: Complex64,
    pub cap_lambda: Complex64,
    pub cap_lambda_inv: Complex64,
    pub kind: SpectrumKind,
}

/// Fixed point of the affine recurrence; the center of the vertex conic in
/// the two neighbor coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicCenter {
    pub frak_y: Complex64,
    pub frak_z: Complex64,
}

/// Coefficients of the loxodromic closed form
/// `u_n = A L^{2n} + B L^{-2n} + frak_y`,
/// `v_n = -(A L^{2n+1} + B L^{-2n-1}) + frak_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitCoefficients {
    pub a_coef: Complex64,
    pub b_coef: Complex64,
}

/// The set of indices `n` with both `|u_n| <= r` and `|v_n| <= r`.
/// `Finite` reports the envelope `[n1, n2]` of the membership set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundedWindow {
    Finite { n1: i64, n2: i64 },
    UnboundedBoth,
    UnboundedPlus,
    UnboundedMinus,
    Constant,
    /// No index qualifies (possible when the orbit never enters the radius).
    Empty,
}

pub fn twist_spectrum(x: Complex64) -> TwistSpectrum {
    let delta = (x * x - 4.0).sqrt();
    let cap_lambda = (x + delta) / 2.0;
    let cap_lambda_inv = (x - delta) / 2.0;
    let kind = if x.im == 0.0 && x.re.abs() < 2.0 {
        SpectrumKind::Elliptic
    } else if x.im == 0.0 && x.re.abs() == 2.0 {
        SpectrumKind::Parabolic
    } else {
        SpectrumKind::Loxodromic
    };
    TwistSpectrum {
        x,
        delta,
        lambda: cap_lambda * cap_lambda,
        lambda_inv: cap_lambda_inv * cap_lambda_inv,
        cap_lambda,
        cap_lambda_inv,
        kind,
    }
}

/// Linear coefficients seen from a region of the given color: `(own, u, v)`
/// where `u` belongs to the next color and `v` to the previous one.
fn coeffs_for(mu: MuParams, color: Color) -> (Complex64, Complex64, Complex64) {
    (
        mu.linear_coeff(color),
        mu.linear_coeff(color.next()),
        mu.linear_coeff(color.prev()),
    )
}

pub fn conic_center(
    x: Complex64,
    mu: MuParams,
    color: Color,
) -> Result<ConicCenter, DynamicsError> {
    let denom = 4.0 - x * x;
    if denom.norm() < 1e-12 {
        return Err(DynamicsError::ParabolicCenterUndefined);
    }
    let (_, q, r) = coeffs_for(mu, color);
    Ok(ConicCenter {
        frak_y: (2.0 * q - x * r) / denom,
        frak_z: (2.0 * r - x * q) / denom,
    })
}

/// One forward application of the neighbor recurrence.
pub fn forward_step(
    x: Complex64,
    u: Complex64,
    v: Complex64,
    mu: MuParams,
    color: Color,
) -> (Complex64, Complex64) {
    let (_, q, r) = coeffs_for(mu, color);
    let u1 = q - x * v - u;
    let v1 = r - x * u1 - v;
    (u1, v1)
}

/// One backward application (exact inverse of [`forward_step`]).
pub fn backward_step(
    x: Complex64,
    u: Complex64,
    v: Complex64,
    mu: MuParams,
    color: Color,
) -> (Complex64, Complex64) {
    let (_, q, r) = coeffs_for(mu, color);
    let v0 = r - x * u - v;
    let u0 = q - x * v0 - u;
    (u0, v0)
}

pub fn orbit_coefficients(
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
) -> Result<OrbitCoefficients, DynamicsError> {
    let spec = twist_spectrum(x);
    if spec.kind != SpectrumKind::Loxodromic {
        return Err(DynamicsError::NotLoxodromic);
    }
    let center = conic_center(x, mu, color)?;
    let du = y0 - center.frak_y;
    let dv = z0 - center.frak_z;
    Ok(OrbitCoefficients {
        a_coef: -(spec.cap_lambda_inv * du + dv) / spec.delta,
        b_coef: (spec.cap_lambda * du + dv) / spec.delta,
    })
}

/// The product `A B` as a function of `x` alone (it does not depend on the
/// starting pair): the closed formula used to cross-check
/// [`orbit_coefficients`] and the degenerate quartic.
pub fn ab_product_formula(x: Complex64, mu: MuParams, color: Color) -> Complex64 {
    let (p, q, r) = coeffs_for(mu, color);
    let denom = 4.0 - x * x;
    (p * x + mu.s - x * x + (q * q + r * r - x * r * q) / denom) / denom
}

fn int_pow(base: Complex64, n: i64) -> Complex64 {
    let mut e = n.unsigned_abs();
    let mut b = if n < 0 { 1.0 / base } else { base };
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// `(u_n, v_n)` of the bi-infinite neighbor sequence with `(u_0, v_0) =
/// (y0, z0)`. Loxodromic inputs use the closed form; elliptic and parabolic
/// inputs iterate the recurrence exactly.
pub fn neighbor_sequence(
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
    n: i64,
) -> (Complex64, Complex64) {
    if n == 0 {
        return (y0, z0);
    }
    let spec = twist_spectrum(x);
    if spec.kind == SpectrumKind::Loxodromic {
        let center = conic_center(x, mu, color).expect("loxodromic x is never +/-2");
        let OrbitCoefficients { a_coef, b_coef } =
            orbit_coefficients(x, y0, z0, mu, color).expect("kind checked");
        let lp = int_pow(spec.cap_lambda, 2 * n);
        let lm = int_pow(spec.cap_lambda_inv, 2 * n);
        let u = a_coef * lp + b_coef * lm + center.frak_y;
        let v = -(a_coef * lp * spec.cap_lambda + b_coef * lm * spec.cap_lambda_inv)
            + center.frak_z;
        (u, v)
    } else {
        let (mut u, mut v) = (y0, z0);
        if n >= 0 {
            for _ in 0..n {
                (u, v) = forward_step(x, u, v, mu, color);
            }
        } else {
            for _ in 0..(-n) {
                (u, v) = backward_step(x, u, v, mu, color);
            }
        }
        (u, v)
    }
}

/// Scan horizon for window endpoint searches; orbits that have not escaped
/// the radius by this depth are reported unbounded in that direction.
const WINDOW_SCAN_CAP: i64 = 100_000;

fn scan_window(
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
    r: f64,
    lo: i64,
    hi: i64,
) -> BoundedWindow {
    let member = |u: Complex64, v: Complex64| u.norm() <= r && v.norm() <= r;
    let mut n1 = i64::MAX;
    let mut n2 = i64::MIN;
    let (mut u, mut v) = (y0, z0);
    for n in 0..=hi {
        if member(u, v) {
            n1 = n1.min(n);
            n2 = n2.max(n);
        }
        (u, v) = forward_step(x, u, v, mu, color);
    }
    let (mut u, mut v) = (y0, z0);
    for n in (lo..0).rev() {
        (u, v) = backward_step(x, u, v, mu, color);
        if member(u, v) {
            n1 = n1.min(n);
            n2 = n2.max(n);
        }
    }
    if n1 > n2 {
        BoundedWindow::Empty
    } else {
        BoundedWindow::Finite { n1, n2 }
    }
}

/// Steps after which an exponential mode with ratio `g > 1` starting at
/// `amp` outgrows `bound`, clamped to the scan cap.
fn escape_steps(amp: f64, g: f64, bound: f64) -> i64 {
    if amp <= 0.0 || g <= 1.0 {
        return WINDOW_SCAN_CAP;
    }
    let n = ((bound / amp).ln() / g.ln()).ceil();
    if !n.is_finite() || n >= WINDOW_SCAN_CAP as f64 {
        WINDOW_SCAN_CAP
    } else {
        (n as i64).max(0) + 2
    }
}

/// The indices whose neighbor pair stays within modulus `r`.
///
/// Loxodromic orbits with both coefficients nonzero always yield a finite
/// (possibly empty) window; degenerate loxodromic orbits converge to the
/// center in one direction; elliptic orbits are bounded and reported
/// unbounded on both sides; parabolic orbits grow polynomially and are
/// scanned against their exact polynomial envelope.
pub fn bounded_window(
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
    r: f64,
) -> BoundedWindow {
    let spec = twist_spectrum(x);
    match spec.kind {
        SpectrumKind::Elliptic => BoundedWindow::UnboundedBoth,
        SpectrumKind::Parabolic => parabolic_window(x, y0, z0, mu, color, r),
        SpectrumKind::Loxodromic => loxodromic_window(&spec, x, y0, z0, mu, color, r),
    }
}

fn parabolic_window(
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
    r: f64,
) -> BoundedWindow {
    // The orbit is an exact quadratic polynomial in n; fit it from three
    // consecutive values.
    let (u1, v1) = forward_step(x, y0, z0, mu, color);
    let (um, vm) = backward_step(x, y0, z0, mu, color);
    let fit = |prev: Complex64, here: Complex64, next: Complex64| {
        let c2 = (next - 2.0 * here + prev) / 2.0;
        let c1 = (next - prev) / 2.0;
        (c2, c1, here)
    };
    let (u2, u1c, u0) = fit(um, y0, u1);
    let (v2, v1c, v0) = fit(vm, z0, v1);
    let scale = 1.0 + y0.norm() + z0.norm() + u0.norm() + v0.norm();
    let flat = |c: Complex64| c.norm() <= 1e-12 * scale;
    if flat(u2) && flat(v2) && flat(u1c) && flat(v1c) {
        return if y0.norm() <= r && z0.norm() <= r {
            BoundedWindow::Constant
        } else {
            BoundedWindow::Empty
        };
    }
    // |c2| n^2 - |c1| n - |c0| > r certifies non-membership; bound via the
    // fastest-growing of the two sequences.
    let horizon = |c2: Complex64, c1: Complex64, c0: Complex64| -> Option<i64> {
        if c2.norm() > 1e-12 * scale {
            let disc = c1.norm() + (c1.norm() * c1.norm()
                + 4.0 * c2.norm() * (c0.norm() + r + 1.0))
                .sqrt();
            Some(((disc / (2.0 * c2.norm())).ceil() as i64) + 2)
        } else if c1.norm() > 1e-12 * scale {
            Some((((r + c0.norm() + 1.0) / c1.norm()).ceil() as i64) + 2)
        } else {
            None
        }
    };
    let n = horizon(u2, u1c, u0)
        .into_iter()
        .chain(horizon(v2, v1c, v0))
        .min()
        .unwrap_or(WINDOW_SCAN_CAP)
        .min(WINDOW_SCAN_CAP);
    scan_window(x, y0, z0, mu, color, r, -n, n)
}

fn loxodromic_window(
    spec: &TwistSpectrum,
    x: Complex64,
    y0: Complex64,
    z0: Complex64,
    mu: MuParams,
    color: Color,
    r: f64,
) -> BoundedWindow {
    let center = conic_center(x, mu, color).expect("loxodromic");
    let OrbitCoefficients { a_coef, b_coef } =
        orbit_coefficients(x, y0, z0, mu, color).expect("loxodromic");
    let (na, nb) = (a_coef.norm(), b_coef.norm());
    let dev = (y0 - center.frak_y).norm() + (z0 - center.frak_z).norm();
    let center_norm = center.frak_y.norm().max(center.frak_z.norm());
    let both_zero = na + nb <= 1e-12 * (1.0 + dev);
    let a_zero = !both_zero && na <= 1e-10 * (na + nb);
    let b_zero = !both_zero && nb <= 1e-10 * (na + nb);

    if both_zero {
        return if center_norm <= r {
            BoundedWindow::Constant
        } else {
            BoundedWindow::Empty
        };
    }

    // g > 1 is the modulus growth of the mode that expands as n -> +inf.
    let l2 = spec.cap_lambda.norm_sqr();
    let (g, plus_coeff, minus_coeff) = if l2 > 1.0 {
        (l2, na, nb)
    } else {
        (1.0 / l2, nb, na)
    };

    if a_zero || b_zero {
        // One mode only: the orbit converges to the center in one direction
        // and escapes in the other.
        let live = na.max(nb);
        let converges_plus = (a_zero && l2 > 1.0) || (b_zero && l2 < 1.0);
        if center_norm <= r {
            return if converges_plus {
                BoundedWindow::UnboundedPlus
            } else {
                BoundedWindow::UnboundedMinus
            };
        }
        // Center outside the radius: membership dies once the deviation
        // drops below the gap, and the escaping side is bounded as usual.
        let gap = (center_norm - r).max(1e-300);
        let lam_span = spec.cap_lambda.norm().max(spec.cap_lambda_inv.norm());
        let settle = escape_steps(gap / (live * (1.0 + lam_span)).max(1e-300), g, 1.0);
        let escape = escape_steps(live, g, r + center_norm + 1.0);
        let n = settle.max(escape).min(WINDOW_SCAN_CAP);
        return scan_window(x, y0, z0, mu, color, r, -n, n);
    }

    // Generic case: both modes alive, finite window. No member survives
    // once the dominant mode alone exceeds r + |center| + |other mode|.
    let bound = r + center_norm + plus_coeff + minus_coeff + 1.0;
    let n_plus = escape_steps(plus_coeff, g, bound);
    let n_minus = escape_steps(minus_coeff, g, bound);
    if n_plus >= WINDOW_SCAN_CAP || n_minus >= WINDOW_SCAN_CAP {
        // Near-parabolic growth beyond the scan horizon.
        let w = scan_window(
            x,
            y0,
            z0,
            mu,
            color,
            r,
            -WINDOW_SCAN_CAP,
            WINDOW_SCAN_CAP,
        );
        return match w {
            BoundedWindow::Finite { n1, n2 } => {
                let open_plus = n2 >= WINDOW_SCAN_CAP - 1;
                let open_minus = n1 <= -(WINDOW_SCAN_CAP - 1);
                match (open_minus, open_plus) {
                    (true, true) => BoundedWindow::UnboundedBoth,
                    (true, false) => BoundedWindow::UnboundedMinus,
                    (false, true) => BoundedWindow::UnboundedPlus,
                    (false, false) => BoundedWindow::Finite { n1, n2 },
                }
            }
            other => other,
        };
    }
    scan_window(x, y0, z0, mu, color, r, -n_minus, n_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::vertex_residual;
    use crate::algebra::MarkoffTriple;
    use crate::quartic::solve_quadratic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectrum_examples() {
        let s = twist_spectrum(cx(0.0, 0.0));
        assert_eq!(s.kind, SpectrumKind::Elliptic);
        assert!((s.delta - cx(0.0, 2.0)).norm() < 1e-15);
        assert!((s.lambda - cx(-1.0, 0.0)).norm() < 1e-15);
        assert!((s.cap_lambda - cx(0.0, 1.0)).norm() < 1e-15);

        let s = twist_spectrum(cx(2.0, 0.0));
        assert_eq!(s.kind, SpectrumKind::Parabolic);
        assert!((s.lambda - cx(1.0, 0.0)).norm() < 1e-15);

        let s = twist_spectrum(cx(3.0, 0.0));
        assert_eq!(s.kind, SpectrumKind::Loxodromic);
        let phi = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((s.cap_lambda - cx(phi, 0.0)).norm() < 1e-12);
        assert!((s.lambda - cx((7.0 + 3.0 * 5f64.sqrt()) / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spectral_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let x = cx(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let s = twist_spectrum(x);
            assert!((s.lambda * s.lambda_inv - cx(1.0, 0.0)).norm() < 1e-12);
            assert!((s.cap_lambda * s.cap_lambda - s.lambda).norm() < 1e-12 * (1.0 + s.lambda.norm()));
            assert!((s.delta - (s.cap_lambda - s.cap_lambda_inv)).norm() < 1e-12 * (1.0 + s.delta.norm()));
        }
    }

    #[test]
    fn center_examples() {
        let mu = MuParams::real(0.0, 0.0, 0.0, 4.0);
        let c = conic_center(cx(3.0, 0.0), mu, Color::One).unwrap();
        assert_eq!(c.frak_y, cx(0.0, 0.0));
        assert_eq!(c.frak_z, cx(0.0, 0.0));

        let mu = MuParams::real(0.5, 1.0, -2.0, 4.0);
        let c = conic_center(cx(0.0, 0.0), mu, Color::One).unwrap();
        assert!((c.frak_y - cx(0.5, 0.0)).norm() < 1e-15); // q/2
        assert!((c.frak_z - cx(-1.0, 0.0)).norm() < 1e-15); // r/2

        assert_eq!(
            conic_center(cx(2.0, 0.0), mu, Color::One),
            Err(DynamicsError::ParabolicCenterUndefined)
        );
    }

    #[test]
    fn center_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..500 {
            let mu = MuParams::new(
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            );
            let x = cx(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if (4.0 - x * x).norm() < 0.1 {
                continue;
            }
            for color in Color::ALL {
                let c = conic_center(x, mu, color).unwrap();
                let (u, v) = forward_step(x, c.frak_y, c.frak_z, mu, color);
                let scale = 1.0 + c.frak_y.norm() + c.frak_z.norm();
                assert!((u - c.frak_y).norm() < 1e-10 * scale);
                assert!((v - c.frak_z).norm() < 1e-10 * scale);
            }
        }
    }

    /// Random on-conic pair for given x: pick u, solve the vertex equation
    /// for v as a quadratic.
    fn on_conic_pair(
        rng: &mut ChaCha8Rng,
        x: Complex64,
        mu: MuParams,
    ) -> (Complex64, Complex64) {
        let u = cx(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        // z^2 + (xu - r) z + (x^2 + u^2 - p x - q u - s) = 0
        let b = x * u - mu.r;
        let c = x * x + u * u - mu.p * x - mu.q * u - mu.s;
        let roots = solve_quadratic(b, c);
        (u, roots[if rng.gen_bool(0.5) { 0 } else { 1 }])
    }

    #[test]
    fn centered_orbit_has_zero_coefficients() {
        let mu = MuParams::real(1.0, -2.0, 0.5, 3.0);
        let x = cx(2.5, 0.5);
        let c = conic_center(x, mu, Color::One).unwrap();
        let oc = orbit_coefficients(x, c.frak_y, c.frak_z, mu, Color::One).unwrap();
        assert!(oc.a_coef.norm() < 1e-12);
        assert!(oc.b_coef.norm() < 1e-12);
    }

    #[test]
    fn ab_product_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut done = 0;
        while done < 300 {
            let mu = MuParams::new(
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            );
            let x = cx(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            if twist_spectrum(x).kind != SpectrumKind::Loxodromic || (4.0 - x * x).norm() < 0.3 {
                continue;
            }
            let (u0, v0) = on_conic_pair(&mut rng, x, mu);
            let res = vertex_residual(MarkoffTriple::new(x, u0, v0), mu);
            assert!(res.norm() < 1e-8 * (1.0 + x.norm() + u0.norm() + v0.norm()).powi(3));
            let oc = orbit_coefficients(x, u0, v0, mu, Color::One).unwrap();
            let ab = oc.a_coef * oc.b_coef;
            let formula = ab_product_formula(x, mu, Color::One);
            assert!(
                (ab - formula).norm() < 1e-9 * (1.0 + formula.norm()),
                "AB {ab} vs formula {formula}"
            );
            // the per-color formula is the color-1 formula of the cycled mu
            for (color, cycled) in [(Color::Two, mu.cycled()), (Color::Three, mu.cycled().cycled())]
            {
                let a = ab_product_formula(x, mu, color);
                let b = ab_product_formula(x, cycled, Color::One);
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            }
            done += 1;
        }
    }

    #[test]
    fn twz_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for s in [cx(4.0, 0.0), cx(20.0, 0.0), cx(-7.0, 3.0)] {
            let mu = MuParams::new(cx(0.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), s);
            for _ in 0..50 {
                let x = cx(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                if twist_spectrum(x).kind != SpectrumKind::Loxodromic
                    || (4.0 - x * x).norm() < 0.3
                {
                    continue;
                }
                let expected = (x * x - s) / (x * x - 4.0);
                let got = ab_product_formula(x, mu, Color::One);
                assert!((got - expected).norm() < 1e-9 * (1.0 + expected.norm()));
            }
        }
    }

    #[test]
    fn sequence_identity_at_zero_and_parabolic_fixed_vector() {
        let mu = MuParams::real(0.0, 0.0, 0.0, 4.0);
        let (u, v) = neighbor_sequence(cx(2.5, 0.0), cx(1.0, 0.0), cx(2.0, 0.0), mu, Color::One, 0);
        assert_eq!(u, cx(1.0, 0.0));
        assert_eq!(v, cx(2.0, 0.0));

        // (1, -1) spans the eigenvalue-1 direction at x = 2
        let (mut u, mut v) = (cx(1.0, 0.0), cx(-1.0, 0.0));
        for _ in 0..10_000 {
            (u, v) = forward_step(cx(2.0, 0.0), u, v, mu, Color::One);
            assert_eq!(u, cx(1.0, 0.0));
            assert_eq!(v, cx(-1.0, 0.0));
        }
    }

    #[test]
    fn closed_form_matches_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let mut done = 0;
        while done < 200 {
            let mu = MuParams::new(
                cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            let x = cx(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if twist_spectrum(x).kind != SpectrumKind::Loxodromic || (4.0 - x * x).norm() < 0.5 {
                continue;
            }
            let color = Color::from_index(rng.gen_range(0..3));
            let y0 = cx(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let z0 = cx(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let (mut u, mut v) = (y0, z0);
            for n in 1..=50 {
                (u, v) = forward_step(x, u, v, mu, color);
                let (cu, cv) = neighbor_sequence(x, y0, z0, mu, color, n);
                let scale = 1.0 + u.norm() + v.norm();
                assert!(
                    (cu - u).norm() < 1e-8 * scale && (cv - v).norm() < 1e-8 * scale,
                    "n={n}: closed ({cu},{cv}) vs recurrence ({u},{v})"
                );
            }
            done += 1;
        }
    }

    #[test]
    fn recurrence_consistency_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mu = MuParams::real(0.3, -0.7, 1.1, 2.0);
        for x in [cx(1.0, 0.0), cx(2.0, 0.0), cx(-2.0, 0.0), cx(2.7, 0.4)] {
            for _ in 0..20 {
                let y0 = cx(rng.gen_range(-3.0..3.0), 0.0);
                let z0 = cx(rng.gen_range(-3.0..3.0), 0.0);
                for n in -6..6 {
                    let (u, v) = neighbor_sequence(x, y0, z0, mu, Color::One, n);
                    let (u1, v1) = neighbor_sequence(x, y0, z0, mu, Color::One, n + 1);
                    let (fu, fv) = forward_step(x, u, v, mu, Color::One);
                    let scale = 1.0 + u1.norm() + v1.norm();
                    assert!((fu - u1).norm() < 1e-10 * scale);
                    assert!((fv - v1).norm() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn elliptic_window_unbounded() {
        let mu = MuParams::real(0.0, 0.0, 0.0, 4.0);
        let w = bounded_window(cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), mu, Color::One, 3.0);
        assert_eq!(w, BoundedWindow::UnboundedBoth);
    }

    #[test]
    fn generic_window_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let mut done = 0;
        while done < 100 {
            let mu = MuParams::real(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let x = cx(rng.gen_range(-3.5..3.5), rng.gen_range(-1.0..1.0));
            let spec = twist_spectrum(x);
            let growth = spec.cap_lambda.norm_sqr().max(1.0 / spec.cap_lambda.norm_sqr());
            if spec.kind != SpectrumKind::Loxodromic
                || (4.0 - x * x).norm() < 0.5
                || growth < 1.2
                || ab_product_formula(x, mu, Color::One).norm() < 1e-3
            {
                continue;
            }
            let (y0, z0) = on_conic_pair(&mut rng, x, mu);
            let r = rng.gen_range(10.0..100.0);
            let w = bounded_window(x, y0, z0, mu, Color::One, r);

            // brute-force oracle over [-200, 200]
            let mut members = Vec::new();
            let (mut u, mut v) = (y0, z0);
            if u.norm() <= r && v.norm() <= r {
                members.push(0i64);
            }
            for n in 1..=200 {
                (u, v) = forward_step(x, u, v, mu, Color::One);
                if u.norm() <= r && v.norm() <= r {
                    members.push(n);
                }
            }
            let (mut u, mut v) = (y0, z0);
            for n in 1..=200 {
                (u, v) = backward_step(x, u, v, mu, Color::One);
                if u.norm() <= r && v.norm() <= r {
                    members.push(-n);
                }
            }
            match w {
                BoundedWindow::Finite { n1, n2 } => {
                    let lo = *members.iter().min().unwrap();
                    let hi = *members.iter().max().unwrap();
                    assert_eq!((n1, n2), (lo, hi), "window mismatch");
                    // membership holds across the whole reported window and
                    // fails just outside it
                    for n in n1..=n2 {
                        let (u, v) = neighbor_sequence(x, y0, z0, mu, Color::One, n);
                        assert!(
                            u.norm() <= r * (1.0 + 1e-9) && v.norm() <= r * (1.0 + 1e-9),
                            "non-member {n} inside window"
                        );
                    }
                    let (u, v) = neighbor_sequence(x, y0, z0, mu, Color::One, n1 - 1);
                    assert!(u.norm() > r || v.norm() > r);
                    let (u, v) = neighbor_sequence(x, y0, z0, mu, Color::One, n2 + 1);
                    assert!(u.norm() > r || v.norm() > r);
                }
                BoundedWindow::Empty => assert!(members.is_empty()),
                other => panic!("expected finite or empty window, got {other:?}"),
            }
            done += 1;
        }
    }

    #[test]
    fn degenerate_window_follows_recurrence_oracle() {
        // x a root of the degenerate quartic for mu = (0,0,1,20); on-conic
        // real seed. One closed-form mode vanishes, so one direction
        // converges to the center.
        let mu = MuParams::real(0.0, 0.0, 1.0, 20.0);
        let x = cx(-(12.0 - 3.0 * 7f64.sqrt()).sqrt(), 0.0);
        // y = z = t on the conic: (2+x) t^2 - t + x^2 - 20 = 0
        let two_x = 2.0 + x.re;
        let disc = (1.0 - 4.0 * two_x * (x.re * x.re - 20.0)).sqrt();
        let t = (1.0 - disc) / (2.0 * two_x); // the larger-modulus root
        let seed = cx(t, 0.0);
        let c = conic_center(x, mu, Color::One).unwrap();
        let r = c.frak_y.norm().max(c.frak_z.norm()) + 5.0;
        let w = bounded_window(x, seed, seed, mu, Color::One, r);

        // oracle: which direction converges?
        let (mut u, mut v) = (seed, seed);
        for _ in 0..500 {
            (u, v) = backward_step(x, u, v, mu, Color::One);
        }
        let back_converged = (u - c.frak_y).norm() < 1.0;
        if back_converged {
            assert_eq!(w, BoundedWindow::UnboundedMinus);
        } else {
            assert_eq!(w, BoundedWindow::UnboundedPlus);
        }
    }
}
