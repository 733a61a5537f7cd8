//! Saddlepoint inversion of arbitrary CGF evaluators: the first-order density
//! and the Lugannani-Rice CDF.

use std::cell::Cell;
use std::sync::Arc;

use crate::cgf::{CgfModel, Distribution, EPS_STRIP};
use crate::error::{Error, Result};
use crate::solve::{approach, polish, TOLERANCE};
use crate::special::{norm_cdf, norm_pdf, LN_SQRT_2PI};
use crate::window::TruncCgfEval;

/// `(K, K', K'')` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfTriple {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
}

impl From<TruncCgfEval> for CgfTriple {
    fn from(e: TruncCgfEval) -> Self {
        Self { k: e.k, k1: e.k1, k2: e.k2 }
    }
}

/// Anything that produces a CGF with two derivatives on an interval around 0.
pub trait CgfEvaluator: Send + Sync {
    fn eval(&self, theta: f64) -> Result<CgfTriple>;

    /// Open interval on which `eval` is defined.
    fn domain(&self) -> (f64, f64);
}

impl CgfEvaluator for Distribution {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        let e = CgfModel::eval(self, theta)?;
        Ok(CgfTriple { k: e.k, k1: e.k1, k2: e.k2 })
    }

    fn domain(&self) -> (f64, f64) {
        let s = self.strip();
        (s.lower + EPS_STRIP, s.upper - EPS_STRIP)
    }
}

impl<T: CgfEvaluator + ?Sized> CgfEvaluator for Box<T> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        (**self).eval(theta)
    }

    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

impl<T: CgfEvaluator + ?Sized> CgfEvaluator for Arc<T> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        (**self).eval(theta)
    }

    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

impl<T: CgfEvaluator + ?Sized> CgfEvaluator for &T {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        (**self).eval(theta)
    }

    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

/// CGF of a sum of independent variables.
pub struct SumCgf {
    parts: Vec<Box<dyn CgfEvaluator>>,
    domain: (f64, f64),
}

impl SumCgf {
    pub fn new(parts: Vec<Box<dyn CgfEvaluator>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Empty);
        }
        let domain = parts.iter().map(|p| p.domain()).fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (a, b)| (lo.max(a), hi.min(b)));
        if !(domain.0 < 0.0 && domain.1 > 0.0) {
            return Err(Error::EmptyDomain);
        }
        Ok(Self { parts, domain })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl CgfEvaluator for SumCgf {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        let mut acc = CgfTriple { k: 0.0, k1: 0.0, k2: 0.0 };
        for p in &self.parts {
            let e = p.eval(theta)?;
            acc.k += e.k;
            acc.k1 += e.k1;
            acc.k2 += e.k2;
        }
        Ok(acc)
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Domain with a relative margin of `1e-6` removed at finite ends.
fn shrunk(domain: (f64, f64)) -> (f64, f64) {
    let m = |x: f64| 1e-6 * x.abs().max(1.0);
    let lo = if domain.0.is_finite() { domain.0 + m(domain.0) } else { domain.0 };
    let hi = if domain.1.is_finite() { domain.1 - m(domain.1) } else { domain.1 };
    (lo, hi)
}

/// Solves `K'(theta) = x`, refusing non-monotone or non-convex evaluators.
pub fn solve_evaluator(cgf: &dyn CgfEvaluator, x: f64) -> Result<(f64, CgfTriple)> {
    if !x.is_finite() {
        return Err(Error::OutOfRange { y: x });
    }
    let (lo, hi) = shrunk(cgf.domain());
    let e0 = cgf.eval(0.0)?;
    if !(e0.k2 > 0.0) {
        return Err(Error::NonConvex { theta: 0.0, k2: e0.k2 });
    }
    let g0 = e0.k1 - x;
    if g0 == 0.0 {
        return finish(cgf, 0.0, e0);
    }
    let edge = if g0 < 0.0 { hi } else { lo };
    let (mut prev, mut prev_g) = (0.0, g0);
    let mut bracket = None;
    for k in 1..=1100 {
        let th = approach(0.0, edge, k);
        if !(th > lo && th < hi) || th == prev || !th.is_finite() {
            break;
        }
        let Ok(e) = cgf.eval(th) else { break };
        let g = e.k1 - x;
        if (g - prev_g) * (th - prev) <= 0.0 || !(e.k2 > 0.0) {
            return Err(Error::NonMonotone { from: prev, to: th });
        }
        if g == 0.0 {
            return finish(cgf, th, e);
        }
        if (g > 0.0) != (g0 > 0.0) {
            bracket = Some((prev, prev_g, th, g));
            break;
        }
        prev = th;
        prev_g = g;
    }
    let (p, gp, q, gq) = bracket.ok_or(Error::OutOfRange { y: x })?;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let f = |th: f64| match cgf.eval(th) {
        Ok(e) => (e.k1 - x, e.k2),
        Err(err) => {
            failure.set(Some(err));
            (f64::NAN, f64::NAN)
        }
    };
    let (a, b) = if gp < 0.0 { (p, q) } else { (q, p) };
    let x0 = if gp.abs() < gq.abs() { p } else { q };
    let root = polish(f, a, b, x0, TOLERANCE * (1.0 + x.abs()));
    if let Some(err) = failure.take() {
        return Err(err);
    }
    let root = root?;
    finish(cgf, root.root, cgf.eval(root.root)?)
}

fn finish(_cgf: &dyn CgfEvaluator, theta: f64, e: CgfTriple) -> Result<(f64, CgfTriple)> {
    if !(e.k2 > 0.0) {
        return Err(Error::NonConvex { theta, k2: e.k2 });
    }
    Ok((theta, e))
}

/// First-order saddlepoint density at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlepointDensity {
    pub density: f64,
    pub ln_density: f64,
    pub saddlepoint: f64,
}

/// `f(x) ~ (2 pi K''(t))^(-1/2) exp(K(t) - t x)` with `K'(t) = x`.
pub fn saddlepoint_density(cgf: &dyn CgfEvaluator, x: f64) -> Result<SaddlepointDensity> {
    let (t, e) = solve_evaluator(cgf, x)?;
    let ln_density = -LN_SQRT_2PI - 0.5 * e.k2.ln() + e.k - t * x;
    Ok(SaddlepointDensity { density: ln_density.exp(), ln_density, saddlepoint: t })
}

fn lr_formula(t: f64, e: CgfTriple, y: f64) -> f64 {
    let w = t.signum() * (2.0 * (t * y - e.k)).max(0.0).sqrt();
    let u = t * e.k2.sqrt();
    norm_cdf(w) + norm_pdf(w) * (1.0 / w - 1.0 / u)
}

/// Lugannani-Rice approximation to `P(Y <= y)` from the CGF of `Y`.
///
/// When the saddlepoint is within `|u| < 1e-3` of zero the formula is replaced
/// by linear interpolation in `y` between two nearby well-conditioned levels.
pub fn lr_tail_probability(cgf: &dyn CgfEvaluator, y: f64) -> Result<f64> {
    let (t, e) = solve_evaluator(cgf, y)?;
    if (t * e.k2.sqrt()).abs() >= 1e-3 {
        return Ok(lr_formula(t, e, y));
    }
    let e0 = cgf.eval(0.0)?;
    let h = 2e-3 / e0.k2.sqrt();
    let (em, ep) = (cgf.eval(-h)?, cgf.eval(h)?);
    let (fm, fp) = (lr_formula(-h, em, em.k1), lr_formula(h, ep, ep.k1));
    Ok(fm + (fp - fm) * (y - em.k1) / (ep.k1 - em.k1))
}
