//! Scalar root finding for the saddlepoint equations and the finite-difference
//! helpers shared by the approximation modules.

use crate::cgf::{CgfModel, EPS_STRIP};
use crate::error::{Error, Result};

/// Residual tolerance, relative to `1 + |y|`.
pub const TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;

/// Step for central first differences, relative to `max(1, |x|)`.
pub const FIRST_DIFF_STEP: f64 = 6.055_454_452_393_343e-6; // eps^(1/3)
/// Step for central second differences, relative to `max(1, |x|)`.
pub const SECOND_DIFF_STEP: f64 = 1.220_703_125e-4; // eps^(1/4)

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleRoot {
    pub root: f64,
    pub residual: f64,
    /// Sign-change bracket the iteration started from.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug)]
pub(crate) enum RootFailure {
    /// `g` has no sign change on the interval.
    NoBracket,
    Solver(Error),
}

/// Successive points from `x0` towards `edge` (exclusive).
pub(crate) fn approach(x0: f64, edge: f64, k: i32) -> f64 {
    if edge.is_finite() {
        edge - (edge - x0) * 0.5f64.powi(k)
    } else {
        x0 + edge.signum() * x0.abs().max(1.0) * 2f64.powi(k - 1)
    }
}

/// Root of a strictly increasing `g` on the open interval `(lo, hi)`.
///
/// `g` returns the value and derivative. A sign-change bracket is found by
/// walking from `start` geometrically towards the relevant endpoint; the root
/// is then polished by Newton steps safeguarded with bisection.
pub(crate) fn root_increasing<G>(mut g: G, lo: f64, hi: f64, start: f64, tol: f64) -> std::result::Result<SaddleRoot, RootFailure>
where
    G: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo < start && start < hi);
    let (g0, _) = g(start);
    if g0 == 0.0 {
        return Ok(SaddleRoot { root: start, residual: 0.0, bracket: (start, start), iterations: 0 });
    }
    if g0.is_nan() {
        return Err(RootFailure::NoBracket);
    }
    let edge = if g0 > 0.0 { lo } else { hi };
    let (mut prev, mut prev_g) = (start, g0);
    let mut found = None;
    for k in 1..=1100 {
        let x = approach(start, edge, k);
        if !(x > lo && x < hi) || x == prev || !x.is_finite() {
            break;
        }
        let (gx, _) = g(x);
        if gx.is_nan() {
            break;
        }
        if gx == 0.0 {
            return Ok(SaddleRoot { root: x, residual: 0.0, bracket: (x, x), iterations: 0 });
        }
        if (gx > 0.0) != (g0 > 0.0) {
            found = Some((prev, prev_g, x, gx));
            break;
        }
        prev = x;
        prev_g = gx;
    }
    let (p, gp, q, gq) = found.ok_or(RootFailure::NoBracket)?;
    let (a, b) = if gp < 0.0 { (p, q) } else { (q, p) };
    let x0 = if gp.abs() < gq.abs() { p } else { q };
    polish(g, a, b, x0, tol).map_err(RootFailure::Solver)
}

/// Safeguarded Newton on `[a, b]` with `g(a) < 0 < g(b)`.
pub(crate) fn polish<G>(mut g: G, mut a: f64, mut b: f64, x0: f64, tol: f64) -> Result<SaddleRoot>
where
    G: FnMut(f64) -> (f64, f64),
{
    let bracket = (a.min(b), a.max(b));
    let mut x = x0;
    let mut last = f64::INFINITY;
    let mut force_bisect = false;
    for it in 1..=MAX_ITERATIONS {
        let (gx, dg) = g(x);
        if gx.is_nan() {
            return Err(Error::NonFiniteStencil { x });
        }
        if gx.abs() <= tol {
            return Ok(SaddleRoot { root: x, residual: gx, bracket, iterations: it });
        }
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            // Bracket has collapsed to adjacent floating-point numbers.
            return Ok(SaddleRoot { root: x, residual: gx, bracket, iterations: it });
        }
        let newton = x - gx / dg;
        let ok = !force_bisect && dg.is_finite() && dg > 0.0 && newton > a.min(b) && newton < a.max(b);
        force_bisect = gx.abs() > 0.5 * last;
        last = gx.abs();
        x = if ok { newton } else { mid };
    }
    let (gx, _) = g(x);
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: gx })
}

/// Solves `K0'(t) = y` inside the convergence strip.
pub fn solve_saddlepoint(model: &dyn CgfModel, y: f64) -> Result<SaddleRoot> {
    if !y.is_finite() {
        return Err(Error::OutOfRange { y });
    }
    let strip = model.strip();
    let tol = TOLERANCE * (1.0 + y.abs());
    let g = |t: f64| {
        let d = model.derivatives(t);
        (d[1] - y, d[2])
    };
    root_increasing(g, strip.lower + EPS_STRIP, strip.upper - EPS_STRIP, 0.0, tol).map_err(|e| match e {
        RootFailure::NoBracket => Error::OutOfRange { y },
        RootFailure::Solver(e) => e,
    })
}

/// Solves `K0'(s) + 1/(theta - s) = y` on the requested side of the pole.
///
/// `branch` 1 looks for `s < theta`, branch 2 for `s > theta`; in both cases
/// `s` must lie in the convergence strip.
pub fn solve_convolution_saddlepoint(model: &dyn CgfModel, theta: f64, y: f64, branch: u8) -> Result<SaddleRoot> {
    let strip = model.strip();
    let (lo_s, hi_s) = (strip.lower + EPS_STRIP, strip.upper - EPS_STRIP);
    let (lo, hi) = match branch {
        1 => (lo_s, hi_s.min(theta)),
        2 => (lo_s.max(theta), hi_s),
        _ => return Err(Error::InvalidParameter(format!("branch must be 1 or 2, got {branch}"))),
    };
    let no_root = || Error::NoRootInBranch { branch, theta, y };
    if !(lo < hi) || !theta.is_finite() || !y.is_finite() {
        return Err(no_root());
    }
    let d0 = 1e-3 * (1.0 + theta.abs());
    let start = if branch == 1 { hi - d0 } else { lo + d0 };
    let start = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    let g = |s: f64| {
        let d = model.derivatives(s);
        let r = 1.0 / (theta - s);
        (d[1] + r - y, d[2] + r * r)
    };
    let root = root_increasing(g, lo, hi, start, TOLERANCE * (1.0 + y.abs())).map_err(|e| match e {
        RootFailure::NoBracket => no_root(),
        RootFailure::Solver(e) => e,
    })?;
    let ordered = if branch == 1 { root.root < theta } else { root.root > theta };
    if !ordered {
        return Err(no_root());
    }
    Ok(root)
}

/// A finite-difference estimate paired with a step-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

/// Stencil half-width at `x`, clipped so that `x +- h` stays in `(lo, hi)`.
pub fn clipped_step(rel: f64, x: f64, domain: (f64, f64)) -> f64 {
    let h = rel * x.abs().max(1.0);
    h.min(0.5 * (x - domain.0)).min(0.5 * (domain.1 - x))
}

fn finite_at(x: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteStencil { x })
    }
}

/// `(f(x+h) - 2 f(x) + f(x-h)) / h^2`, with the error estimated from `h/2`.
pub fn central_second_derivative<F>(mut f: F, x: f64, domain: (f64, f64)) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = clipped_step(SECOND_DIFF_STEP, x, domain);
    if !(h > 0.0) {
        return Err(Error::NonFiniteStencil { x });
    }
    let f0 = finite_at(x, f(x)?)?;
    let mut d2 = |h: f64| -> Result<f64> {
        let p = finite_at(x + h, f(x + h)?)?;
        let m = finite_at(x - h, f(x - h)?)?;
        Ok((p - 2.0 * f0 + m) / (h * h))
    };
    let value = d2(h)?;
    let half = d2(0.5 * h)?;
    Ok(Derivative { value, error: (value - half).abs() })
}

/// Central second difference without the error estimate; three evaluations
/// given `f(x)`.
pub(crate) fn second_difference<F>(mut f: F, x: f64, fx: f64, domain: (f64, f64)) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = clipped_step(SECOND_DIFF_STEP, x, domain);
    let p = finite_at(x + h, f(x + h)?)?;
    let m = finite_at(x - h, f(x - h)?)?;
    finite_at(x, (p - 2.0 * fx + m) / (h * h))
}

/// Central first difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_first_derivative<F>(mut f: F, x: f64, domain: (f64, f64)) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = clipped_step(FIRST_DIFF_STEP, x, domain);
    let p = finite_at(x + h, f(x + h)?)?;
    let m = finite_at(x - h, f(x - h)?)?;
    Ok((p - m) / (2.0 * h))
}
