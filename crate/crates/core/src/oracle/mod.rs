//! Ground truth for the approximations: quadrature of exponential moments of
//! the density, and seeded Monte-Carlo sampling.

pub mod mc;
pub mod quad;

pub use mc::{mc_sample, mc_sample_truncated, mc_sample_truncated_with};

use crate::cgf::{CgfModel, EPS_STRIP};
use crate::conv::Branch;
use crate::error::{Error, Result};
use crate::invert::{CgfEvaluator, CgfTriple};
use crate::window::{Method, TruncCgfEval, Window};

pub const ABS_TOL: f64 = 1e-14;
pub const REL_TOL: f64 = 1e-10;

/// `ln int e^{theta x} f0(x) dx` over a range, with the tilted mean and
/// variance when requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMoments {
    pub ln_mass: f64,
    pub mean: f64,
    pub var: f64,
}

/// Exponential moments over `(lo, hi)` intersected with the support.
///
/// The integrand is shifted by its value at a point near the tilted mode, so
/// `ln_mass` stays representable far into the tails.
pub fn exp_moments(model: &dyn CgfModel, theta: f64, lo: f64, hi: f64, moments: bool) -> Result<ExpMoments> {
    let (slo, shi) = model.support();
    let (lo, hi) = (lo.max(slo), hi.min(shi));
    if !(lo < hi) {
        return Err(Error::DegenerateWindow { a: lo, b: hi, reason: "empty intersection with the support".into() });
    }
    let strip = model.strip();
    let in_strip = strip.contains(theta);
    if !in_strip && ((theta > 0.0 && !hi.is_finite()) || (theta < 0.0 && !lo.is_finite()) || theta == 0.0) {
        return Err(Error::OutsideStrip { theta, lower: strip.lower, upper: strip.upper });
    }
    if model.ln_density(0.5 * (lo.max(-1.0) + hi.min(1.0))).is_none() {
        return Err(Error::MissingDensity(model.name()));
    }
    let ln_f = |x: f64| model.ln_density(x).unwrap_or(f64::NEG_INFINITY);
    let (mut c, scale) = if in_strip {
        let d = model.derivatives(theta);
        (d[1].clamp(lo, hi), d[2].sqrt().clamp(1e-6, 1e6))
    } else if theta > 0.0 {
        (hi, 1.0 / theta)
    } else {
        (lo, 1.0 / theta.abs())
    };
    // Move the anchor inwards until the density is positive there.
    let width = if (hi - lo).is_finite() { hi - lo } else { scale };
    let mut anchor = ln_f(c);
    let inward = if c >= hi { -1.0 } else { 1.0 };
    let mut step = 1e-6 * width;
    while !anchor.is_finite() && step < width {
        let x = c + inward * step;
        if x > lo && x < hi {
            anchor = ln_f(x);
            if anchor.is_finite() {
                c = x;
            }
        }
        step *= 4.0;
    }
    if !anchor.is_finite() {
        return Err(Error::Underflow(format!("density vanishes near {c}")));
    }
    // A tilted mean beyond the window leaves the mass piled against the end,
    // decaying at the slope of the log-integrand there.
    let mut scale = scale;
    if c <= lo || c >= hi {
        let dx = 1e-6 * width.min(scale);
        let x = c + inward * dx;
        let slope = (theta * (x - c) + ln_f(x) - anchor).abs() / dx;
        if slope.is_finite() && slope > 0.0 {
            scale = scale.min(1.0 / slope).max(1e-6);
        }
    }
    let g = |x: f64| (theta * (x - c) + ln_f(x) - anchor).exp();
    let m0 = quad::integrate_split(g, lo, hi, &[c], scale, ABS_TOL, REL_TOL)?.value;
    if !(m0 > 0.0) {
        return Err(Error::Underflow(format!("exponential moment vanishes at theta = {theta}")));
    }
    let ln_mass = theta * c + anchor + m0.ln();
    if !moments {
        return Ok(ExpMoments { ln_mass, mean: f64::NAN, var: f64::NAN });
    }
    let tol = 1e-12 * m0 * scale;
    let m1 = quad::integrate_split(|x| (x - c) * g(x), lo, hi, &[c], scale, tol, REL_TOL)?.value;
    let mean = c + m1 / m0;
    let m2 = quad::integrate_split(|x| (x - mean).powi(2) * g(x), lo, hi, &[c], scale, tol * scale, REL_TOL)?.value;
    Ok(ExpMoments { ln_mass, mean, var: m2 / m0 })
}

/// `ln Xi_j(theta, y)` by quadrature; `-inf` when `y` cuts off the whole
/// support.
pub fn exact_ln_xi(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch) -> Result<f64> {
    let (s_lo, s_hi) = model.support();
    let empty = match branch {
        Branch::Lower => y <= s_lo,
        Branch::Upper => y >= s_hi,
    };
    if empty {
        model.strip().check(theta)?;
        return Ok(f64::NEG_INFINITY);
    }
    let (lo, hi) = match branch {
        Branch::Lower => (f64::NEG_INFINITY, y),
        Branch::Upper => (y, f64::INFINITY),
    };
    Ok(exp_moments(model, theta, lo, hi, false)?.ln_mass)
}

/// `Xi_1(theta, y) = int_{-inf}^y e^{theta x} dF0` or `Xi_2`, the integral over `(y, inf)`.
pub fn exact_xi(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch) -> Result<f64> {
    Ok(exact_ln_xi(model, theta, y, branch)?.exp())
}

/// `M0(theta)` by quadrature over the whole support.
pub fn exact_mgf(model: &dyn CgfModel, theta: f64) -> Result<f64> {
    Ok(exp_moments(model, theta, f64::NEG_INFINITY, f64::INFINITY, false)?.ln_mass.exp())
}

/// Tilted CDF `F_theta(y) = Xi_1(theta, y) / M0(theta)` by quadrature.
pub fn tilted_cdf(model: &dyn CgfModel, theta: f64, y: f64) -> Result<f64> {
    let lower = exact_ln_xi(model, theta, y, Branch::Lower)?;
    let full = exp_moments(model, theta, f64::NEG_INFINITY, f64::INFINITY, false)?.ln_mass;
    Ok((lower - full).exp())
}

/// Truncated CGF by quadrature.
#[derive(Debug, Clone)]
pub struct ExactTruncation<M> {
    model: M,
    window: Window,
    lo: f64,
    hi: f64,
    ln_mass0: f64,
}

impl<M: CgfModel> ExactTruncation<M> {
    pub fn new(model: M, window: Window) -> Result<Self> {
        let (slo, shi) = model.support();
        let lo = window.a.max(slo);
        let hi = window.b.min(shi);
        let window = window.normalized(model.support())?;
        let ln_mass0 = exp_moments(&model, 0.0, lo, hi, false)?.ln_mass;
        Ok(Self { model, window, lo, hi, ln_mass0 })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `theta` range on which the truncated MGF is finite.
    pub fn domain(&self) -> (f64, f64) {
        let s = self.model.strip();
        let lower = if self.lo.is_finite() { f64::NEG_INFINITY } else { s.lower + EPS_STRIP };
        let upper = if self.hi.is_finite() { f64::INFINITY } else { s.upper - EPS_STRIP };
        (lower, upper)
    }

    /// `ln(F0(b) - F0(a))`.
    pub fn ln_mass(&self) -> f64 {
        self.ln_mass0
    }

    pub fn k(&self, theta: f64) -> Result<f64> {
        Ok(exp_moments(&self.model, theta, self.lo, self.hi, false)?.ln_mass - self.ln_mass0)
    }

    pub fn eval(&self, theta: f64) -> Result<TruncCgfEval> {
        let m = exp_moments(&self.model, theta, self.lo, self.hi, true)?;
        Ok(TruncCgfEval {
            theta,
            k: if theta == 0.0 { 0.0 } else { m.ln_mass - self.ln_mass0 },
            k1: m.mean,
            k2: m.var,
            method: Method::Exact,
            hybrid: false,
            theta_domain: self.domain(),
        })
    }

    /// Truncated MGF `M_(a,b)(theta)`.
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        Ok(self.k(theta)?.exp())
    }
}

impl<M: CgfModel> CgfEvaluator for ExactTruncation<M> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        ExactTruncation::eval(self, theta).map(Into::into)
    }

    fn domain(&self) -> (f64, f64) {
        ExactTruncation::domain(self)
    }
}

/// Truncated MGF by quadrature.
pub fn exact_truncated_mgf(model: &dyn CgfModel, window: Window, theta: f64) -> Result<f64> {
    let (slo, shi) = model.support();
    let (lo, hi) = (window.a.max(slo), window.b.min(shi));
    let num = exp_moments(model, theta, lo, hi, false)?.ln_mass;
    let den = exp_moments(model, 0.0, lo, hi, false)?.ln_mass;
    Ok((num - den).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::Distribution;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_window_closed_form() {
        let e = Distribution::exponential(1.0).unwrap();
        let v = exact_truncated_mgf(&e, Window::new(0.0, 2.0).unwrap(), 0.5).unwrap();
        let expected = ((1.0 - (-1.0f64).exp()) / 0.5) / (1.0 - (-2.0f64).exp());
        assert_relative_eq!(v, expected, max_relative = 1e-10);
        assert_relative_eq!(v, 1.462_12, max_relative = 1e-5);
    }

    #[test]
    fn full_window_is_mgf() {
        let g = Distribution::gamma(2.0, 1.0).unwrap();
        for theta in [-2.0, 0.3, 0.8] {
            let v = exact_truncated_mgf(&g, Window::full(), theta).unwrap();
            assert_relative_eq!(v, (-2.0 * (1.0f64 - theta).ln()).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn normal_reflection() {
        let n = Distribution::standard_normal();
        let v = exact_truncated_mgf(&n, Window::new(-1.0, 2.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(v, 0.5f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn xi_at_zero_is_cdf() {
        let g = Distribution::gumbel(0.0, 1.0).unwrap();
        assert_relative_eq!(exact_xi(&g, 0.0, 0.7, Branch::Lower).unwrap(), g.cdf(0.7).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn xi_outside_branch_domain() {
        let e = Distribution::exponential(1.0).unwrap();
        assert!(exact_xi(&e, 3.0, 1.0, Branch::Lower).is_ok());
        assert!(matches!(exact_xi(&e, 3.0, 1.0, Branch::Upper), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn exact_eval_moments() {
        let e = Distribution::exponential(1.0).unwrap();
        let x = ExactTruncation::new(e, Window::new(0.0, 2.0).unwrap()).unwrap();
        assert_eq!(x.domain(), (f64::NEG_INFINITY, f64::INFINITY));
        let v = x.eval(3.0).unwrap();
        // Truncated to (0, 2), tilted density is proportional to e^{2x}.
        let mean = 2.0 / (1.0 - (-4.0f64).exp()) - 0.5;
        assert_relative_eq!(v.k1, mean, max_relative = 1e-9);
        let fd = (x.k(3.0 + 1e-5).unwrap() - x.k(3.0 - 1e-5).unwrap()) / 2e-5;
        assert_relative_eq!(v.k1, fd, max_relative = 1e-7);
        assert_eq!(x.eval(0.0).unwrap().k, 0.0);
    }

    #[test]
    fn missing_density() {
        #[derive(Debug)]
        struct Bare;
        impl CgfModel for Bare {
            fn name(&self) -> String {
                "bare".into()
            }
            fn strip(&self) -> crate::cgf::ConvergenceStrip {
                crate::cgf::ConvergenceStrip::real_line()
            }
            fn derivatives(&self, t: f64) -> [f64; 5] {
                [0.5 * t * t, t, 1.0, 0.0, 0.0]
            }
        }
        assert!(matches!(exact_mgf(&Bare, 0.1), Err(Error::MissingDensity(_))));
    }
}
