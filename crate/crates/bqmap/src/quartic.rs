//! Polynomial root finding over the complex numbers, up to degree four.
//!
//! The quartic path is Ferrari's method driven by a resolvent cubic, with a
//! few Schröder polish steps per root so that multiple roots (which show up
//! for degenerate parameter choices) still come out sharp.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuarticError {
    /// The leading coefficient vanished; the input is not a quartic.
    #[error("leading coefficient is zero or non-finite")]
    NotAQuartic,
    /// Root refinement failed to bring the residual within tolerance.
    #[error("quartic root refinement did not converge")]
    DegenerateRootFailure,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Roots of the monic quadratic t^2 + b t + c, ordered so the larger-modulus
/// root comes first. Cancellation-free: the small root is c over the big one.
pub fn solve_quadratic(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let sd = (b * b - 4.0 * c).sqrt();
    // Pick the sign that does not cancel against b.
    let q = if (b + sd).norm() >= (b - sd).norm() {
        -(b + sd) * 0.5
    } else {
        -(b - sd) * 0.5
    };
    let small = if q.norm() > 0.0 { c / q } else { ZERO };
    [q, small]
}

/// All roots of the monic cubic u^3 + a u^2 + b u + c (Cardano).
fn solve_cubic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;

    if p.norm() == 0.0 && q.norm() == 0.0 {
        return [-shift; 3];
    }

    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let mut big = -q / 2.0 + disc;
    if big.norm() < (q / 2.0 + disc).norm() {
        big = -q / 2.0 - disc;
    }
    let croot = big.powf(1.0 / 3.0);

    let omega = Complex64::new(-0.5, 0.75f64.sqrt());
    let mut roots = [ZERO; 3];
    let mut w = Complex64::new(1.0, 0.0);
    for r in roots.iter_mut() {
        let cw = croot * w;
        *r = if cw.norm() > 0.0 {
            cw - p / (3.0 * cw) - shift
        } else {
            -shift
        };
        w *= omega;
    }
    roots
}

fn eval(coeffs: &[Complex64; 5], x: Complex64) -> Complex64 {
    // coeffs[k] multiplies x^k
    (((coeffs[4] * x + coeffs[3]) * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0]
}

fn eval_d1(coeffs: &[Complex64; 5], x: Complex64) -> Complex64 {
    ((4.0 * coeffs[4] * x + 3.0 * coeffs[3]) * x + 2.0 * coeffs[2]) * x + coeffs[1]
}

fn eval_d2(coeffs: &[Complex64; 5], x: Complex64) -> Complex64 {
    (12.0 * coeffs[4] * x + 6.0 * coeffs[3]) * x + 2.0 * coeffs[2]
}

/// Schröder's iteration: like Newton but with a multiplicity estimate, so
/// quadruple roots still converge quadratically.
fn polish(coeffs: &[Complex64; 5], mut x: Complex64) -> Complex64 {
    for _ in 0..6 {
        let f = eval(coeffs, x);
        if f.norm() == 0.0 {
            break;
        }
        let d1 = eval_d1(coeffs, x);
        let d2 = eval_d2(coeffs, x);
        let denom = d1 * d1 - f * d2;
        let step = if denom.norm() > 0.0 {
            f * d1 / denom
        } else if d1.norm() > 0.0 {
            f / d1
        } else {
            break;
        };
        let next = x - step;
        if !is_finite(next) {
            break;
        }
        if eval(coeffs, next).norm() >= f.norm() && step.norm() < 1e-14 * (1.0 + x.norm()) {
            break;
        }
        x = next;
    }
    x
}

/// Backward-error scale for residual acceptance at a candidate root.
fn residual_scale(coeffs: &[Complex64; 5], x: Complex64) -> f64 {
    let ax = x.norm();
    let mut s = 1.0;
    let mut pw = 1.0;
    for c in coeffs.iter() {
        s += c.norm() * pw;
        pw *= ax;
    }
    s
}

/// The four roots of coeffs[4] x^4 + ... + coeffs[0] = 0.
pub fn solve_quartic(coeffs: [Complex64; 5]) -> Result<[Complex64; 4], QuarticError> {
    let lead = coeffs[4];
    if lead.norm() == 0.0 || !coeffs.iter().all(|c| is_finite(*c)) {
        return Err(QuarticError::NotAQuartic);
    }
    let b = coeffs[3] / lead;
    let c = coeffs[2] / lead;
    let d = coeffs[1] / lead;
    let e = coeffs[0] / lead;

    // Depressed quartic t^4 + p t^2 + q t + r, x = t - b/4.
    let shift = b / 4.0;
    let p = c - 3.0 * b * b / 8.0;
    let q = d - b * c / 2.0 + b * b * b / 8.0;
    let r = e - b * d / 4.0 + b * b * c / 16.0 - 3.0 * b * b * b * b / 256.0;

    let x_char = p.norm().sqrt().max(r.norm().powf(0.25)).max(1.0);
    let q_tol = 1e-13 * x_char * x_char * x_char;

    let mut roots = [ZERO; 4];
    if q.norm() <= q_tol {
        // Biquadratic: u^2 + p u + r with u = t^2.
        let us = solve_quadratic(p, r);
        let mut k = 0;
        for u in us {
            let t = u.sqrt();
            roots[k] = t - shift;
            roots[k + 1] = -t - shift;
            k += 2;
        }
    } else {
        // Resolvent cubic 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0, monic form.
        let ms = solve_cubic(p, (2.0 * p * p - 8.0 * r) / 8.0, -(q * q) / 8.0);
        let m = ms
            .into_iter()
            .max_by(|a, z| a.norm().total_cmp(&z.norm()))
            .unwrap();
        if m.norm() == 0.0 {
            return Err(QuarticError::DegenerateRootFailure);
        }
        let w = (2.0 * m).sqrt();
        let half = p / 2.0 + m;
        let corr = q / (2.0 * w);
        // (t^2 + w t + half - corr)(t^2 - w t + half + corr)
        let first = solve_quadratic(w, half - corr);
        let second = solve_quadratic(-w, half + corr);
        roots = [
            first[0] - shift,
            first[1] - shift,
            second[0] - shift,
            second[1] - shift,
        ];
    }

    for root in roots.iter_mut() {
        *root = polish(&coeffs, *root);
        if !is_finite(*root) {
            return Err(QuarticError::DegenerateRootFailure);
        }
        let res = eval(&coeffs, *root).norm();
        if res > 1e-8 * residual_scale(&coeffs, *root) {
            return Err(QuarticError::DegenerateRootFailure);
        }
    }
    Ok(roots)
}
