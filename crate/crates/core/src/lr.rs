//! Truncated CGFs through the tilted representation, with Lugannani-Rice
//! approximations to the tilted CDFs.
//!
//! For an endpoint `y` with saddlepoint `t` (`K0'(t) = y`) the tilted CDF is
//!
//! ```text
//! F_theta(y) ~ Phi(w) + phi(w) (1/w - 1/u)
//! w = sgn(t - theta) sqrt(2 [(t - theta) y - K0(t) + K0(theta)])
//! u = (t - theta) sqrt(K0''(t))
//! ```
//!
//! Only `t` depends on `y`, so one root per endpoint serves every `theta`.
//!
//! Near `theta = t` both `w` and `u` vanish and the textbook expressions
//! cancel catastrophically. There the differences `u^2 - w^2`,
//! `y - K0'(theta)` and friends are written as integrals of `K0''` and `K0'''`
//! over `[t, theta]` and evaluated by Gauss-Legendre, which keeps full
//! relative accuracy down to `u = 0`. Tail masses are carried in log space so
//! that windows far out in a tilted tail do not underflow.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::cgf::{CgfModel, ConvergenceStrip, EPS_STRIP};
use crate::error::{Error, Result};
use crate::invert::{CgfEvaluator, CgfTriple};
use crate::solve::{second_difference, solve_saddlepoint};
use crate::special::{gauss_legendre10_multi, ln_1m_exp, ln_norm_pdf, mills_ratio, norm_cdf, norm_pdf};
use crate::window::{Method, TruncCgfEval, Window};

/// Half-width of the `u` band around `theta = t` in which the derivative is
/// interpolated linearly (about `eps^(1/3)`).
const U_BAND: f64 = 6e-6;

/// Below this `|u|`, `1/w - 1/u` is replaced by its limit.
const U_LIMIT: f64 = 1e-14;

/// The saddlepoint ingredients at one `(theta, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrIngredients {
    pub t_y: f64,
    pub w: f64,
    pub u: f64,
    pub k2_at_ty: f64,
}

/// An endpoint with its saddlepoint solved once.
#[derive(Debug, Clone, Copy)]
struct Endpoint {
    y: f64,
    t: f64,
    k_t: f64,
    k2_t: f64,
    sqrt_k2_t: f64,
    /// Limit of `1/w - 1/u` as `theta -> t`.
    c0: f64,
}

/// `F` and `dF/dtheta` at one `theta`, scaled by `phi(w)`.
#[derive(Debug, Clone, Copy)]
struct Tilted {
    w: f64,
    /// `1/w - 1/u`.
    c: f64,
    /// `(dF/dtheta) / phi(w)`.
    gs: f64,
}

impl Tilted {
    fn ln_phi(&self) -> f64 {
        ln_norm_pdf(self.w)
    }

    fn cdf(&self) -> f64 {
        norm_cdf(self.w) + norm_pdf(self.w) * self.c
    }

    /// `ln F`, accurate when `w` is negative.
    fn ln_lower(&self) -> Option<f64> {
        let s = mills_ratio(-self.w) + self.c;
        (s > 0.0).then(|| self.ln_phi() + s.ln())
    }

    /// `ln (1 - F)`, accurate when `w` is positive.
    fn ln_upper(&self) -> Option<f64> {
        let s = mills_ratio(self.w) - self.c;
        (s > 0.0).then(|| self.ln_phi() + s.ln())
    }

    fn derivative(&self) -> f64 {
        norm_pdf(self.w) * self.gs
    }
}

impl Endpoint {
    fn new(model: &dyn CgfModel, y: f64) -> Result<Self> {
        let root = solve_saddlepoint(model, y)?;
        let d = model.derivatives(root.root);
        let sqrt_k2_t = d[2].sqrt();
        Ok(Self { y, t: root.root, k_t: d[0], k2_t: d[2], sqrt_k2_t, c0: d[3] / (6.0 * d[2] * sqrt_k2_t) })
    }

    fn tilted(&self, model: &dyn CgfModel, strip: ConvergenceStrip, theta: f64, k_theta: &[f64; 5]) -> Tilted {
        let delta = self.t - theta;
        let u = delta * self.sqrt_k2_t;
        if u == 0.0 {
            return Tilted { w: 0.0, c: self.c0, gs: self.band_derivative(model, strip, theta, 0.0) };
        }
        let edge_dist = if theta > self.t { strip.upper - self.t } else { self.t - strip.lower };
        if u.abs() < 1.0 && delta.abs() <= 0.5 * edge_dist {
            // [r, u^2 - w^2, y - K0'(theta), y - K0'(theta) - delta K0''(t)]
            let [r, gap, m, mm] = gauss_legendre10_multi(self.t, theta, |v| {
                let d = model.derivatives(v);
                [(theta - v) * d[2], -(theta - v).powi(2) * d[3], -d[2], d[3] * (v - theta)]
            });
            let w = delta.signum() * (2.0 * r).max(0.0).sqrt();
            let c = if u.abs() < U_LIMIT || w == 0.0 { self.c0 } else { gap / (u * w * (u + w)) };
            let gs = if u.abs() < U_BAND {
                self.band_derivative(model, strip, theta, w)
            } else {
                let mu = mm / (delta * self.k2_t);
                let q = gap / (u * u);
                let bracket = mu + (1.0 + mu) * (-1.5 * (-q).ln_1p()).exp_m1();
                -m / u + self.sqrt_k2_t / (u * u) * bracket
            };
            Tilted { w, c, gs }
        } else {
            let r = k_theta[0] - self.k_t - (theta - self.t) * self.y;
            let w = delta.signum() * (2.0 * r).max(0.0).sqrt();
            let m = self.y - k_theta[1];
            let c = 1.0 / w - 1.0 / u;
            let gs = m * (w.powi(-3) - 1.0 / u) - 1.0 / (delta * delta * self.sqrt_k2_t);
            Tilted { w, c, gs }
        }
    }

    /// `dF/dtheta / phi(w)` for `|u| < U_BAND`, by linear interpolation
    /// between the band edges.
    fn band_derivative(&self, model: &dyn CgfModel, strip: ConvergenceStrip, theta: f64, w: f64) -> f64 {
        let step = 1.01 * U_BAND / self.sqrt_k2_t;
        let (lo, hi) = (self.t - step, self.t + step);
        let g = |x: f64| self.tilted(model, strip, x, &model.derivatives(x)).derivative();
        let (g_lo, g_hi) = (g(lo), g(hi));
        let value = g_lo + (g_hi - g_lo) * (theta - lo) / (hi - lo);
        value / norm_pdf(w)
    }
}

fn check_strip(strip: ConvergenceStrip, theta: f64) -> Result<()> {
    strip.check(theta)
}

/// Lugannani-Rice approximation to the tilted CDF `F_theta(y)`.
pub fn lr_cdf(model: &dyn CgfModel, theta: f64, y: f64) -> Result<f64> {
    let strip = model.strip();
    check_strip(strip, theta)?;
    let ep = Endpoint::new(model, y)?;
    Ok(ep.tilted(model, strip, theta, &model.derivatives(theta)).cdf())
}

/// Partial derivative of [`lr_cdf`] with respect to `theta`.
pub fn lr_cdf_dtheta(model: &dyn CgfModel, theta: f64, y: f64) -> Result<f64> {
    let strip = model.strip();
    check_strip(strip, theta)?;
    let ep = Endpoint::new(model, y)?;
    Ok(ep.tilted(model, strip, theta, &model.derivatives(theta)).derivative())
}

pub fn lr_ingredients(model: &dyn CgfModel, theta: f64, y: f64) -> Result<LrIngredients> {
    let strip = model.strip();
    check_strip(strip, theta)?;
    let ep = Endpoint::new(model, y)?;
    let tl = ep.tilted(model, strip, theta, &model.derivatives(theta));
    Ok(LrIngredients { t_y: ep.t, w: tl.w, u: (ep.t - theta) * ep.sqrt_k2_t, k2_at_ty: ep.k2_t })
}

/// Tilted-representation approximation to the truncated CGF on one window.
#[derive(Debug)]
pub struct LrTruncation<M> {
    model: M,
    window: Window,
    lower: Option<Endpoint>,
    upper: Option<Endpoint>,
    ln_mass0: f64,
    rejected: AtomicUsize,
}

impl<M: CgfModel> LrTruncation<M> {
    pub fn new(model: M, window: Window) -> Result<Self> {
        let window = window.normalized(model.support())?;
        let lower = window.has_lower().then(|| Endpoint::new(&model, window.a)).transpose()?;
        let upper = window.has_upper().then(|| Endpoint::new(&model, window.b)).transpose()?;
        let mut this = Self { model, window, lower, upper, ln_mass0: 0.0, rejected: AtomicUsize::new(0) };
        this.ln_mass0 = this.ln_mass_and_slope(0.0)?.0;
        Ok(this)
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Open interval of valid `theta` (the convergence strip less its margin).
    pub fn domain(&self) -> (f64, f64) {
        let s = self.model.strip();
        (s.lower + EPS_STRIP, s.upper - EPS_STRIP)
    }

    /// Number of evaluations refused because `theta` was outside the strip.
    pub fn rejected_calls(&self) -> usize {
        self.rejected.load(Ordering::Relaxed)
    }

    /// `ln(F(b) - F(a))` and `K0'(theta) + d/dtheta` of it.
    fn ln_mass_and_slope(&self, theta: f64) -> Result<(f64, f64, f64)> {
        let strip = self.model.strip();
        if let Err(e) = strip.check(theta) {
            self.rejected.fetch_add(1, Ordering::Relaxed);
            return Err(e);
        }
        let kt = self.model.derivatives(theta);
        let lo = self.lower.map(|e| e.tilted(&self.model, strip, theta, &kt));
        let hi = self.upper.map(|e| e.tilted(&self.model, strip, theta, &kt));
        let (a, b) = (self.window.a, self.window.b);
        let degenerate = |reason: &str| Error::DegenerateWindow { a, b, reason: format!("{reason} at theta = {theta}") };
        let ln_mass = match (lo, hi) {
            (None, None) => 0.0,
            (None, Some(h)) => {
                if h.w <= 0.0 {
                    h.ln_lower().ok_or_else(|| degenerate("non-positive approximate CDF"))?
                } else {
                    let up = h.ln_upper().ok_or_else(|| degenerate("approximate CDF above one"))?;
                    if up >= 0.0 {
                        return Err(degenerate("non-positive approximate CDF"));
                    }
                    ln_1m_exp(up)
                }
            }
            (Some(l), None) => {
                if l.w >= 0.0 {
                    l.ln_upper().ok_or_else(|| degenerate("approximate CDF above one"))?
                } else {
                    let low = l.ln_lower().ok_or_else(|| degenerate("negative approximate CDF"))?;
                    if low >= 0.0 {
                        return Err(degenerate("approximate CDF above one"));
                    }
                    ln_1m_exp(low)
                }
            }
            (Some(l), Some(h)) => {
                if h.w <= 0.0 {
                    let fb = h.ln_lower().ok_or_else(|| degenerate("non-positive approximate CDF"))?;
                    let fa = l.ln_lower().unwrap_or(f64::NEG_INFINITY);
                    if fa >= fb {
                        return Err(degenerate("non-positive approximate mass"));
                    }
                    fb + ln_1m_exp(fa - fb)
                } else if l.w >= 0.0 {
                    let ua = l.ln_upper().ok_or_else(|| degenerate("approximate CDF above one"))?;
                    let ub = h.ln_upper().unwrap_or(f64::NEG_INFINITY);
                    if ub >= ua {
                        return Err(degenerate("non-positive approximate mass"));
                    }
                    ua + ln_1m_exp(ub - ua)
                } else {
                    let mass = h.cdf() - l.cdf();
                    if !(mass > 0.0) {
                        return Err(degenerate("non-positive approximate mass"));
                    }
                    mass.ln()
                }
            }
        };
        let mut slope = kt[1];
        if let Some(h) = hi {
            slope += (h.ln_phi() - ln_mass).exp() * h.gs;
        }
        if let Some(l) = lo {
            slope -= (l.ln_phi() - ln_mass).exp() * l.gs;
        }
        Ok((ln_mass, slope, kt[0]))
    }

    /// `K(theta)` and `K'(theta)`.
    pub fn k_k1(&self, theta: f64) -> Result<(f64, f64)> {
        let (ln_mass, k1, k0) = self.ln_mass_and_slope(theta)?;
        let k = k0 + (ln_mass - self.ln_mass0);
        if !k.is_finite() || !k1.is_finite() {
            return Err(Error::Breakdown { theta, reason: "non-finite LR value".into() });
        }
        Ok((k, k1))
    }

    pub fn k(&self, theta: f64) -> Result<f64> {
        Ok(self.k_k1(theta)?.0)
    }

    pub fn eval(&self, theta: f64) -> Result<TruncCgfEval> {
        let (k, k1) = self.k_k1(theta)?;
        let k2 = second_difference(|x| self.k(x), theta, k, self.domain())?;
        Ok(TruncCgfEval { theta, k, k1, k2, method: Method::Lr, hybrid: false, theta_domain: self.domain() })
    }
}

impl<M: CgfModel> CgfEvaluator for LrTruncation<M> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        LrTruncation::eval(self, theta).map(Into::into)
    }

    fn domain(&self) -> (f64, f64) {
        LrTruncation::domain(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::Distribution;
    use crate::solve::central_first_derivative;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn n01() -> Distribution {
        Distribution::standard_normal()
    }

    #[test]
    fn normal_cdf_is_exact() {
        assert_relative_eq!(lr_cdf(&n01(), 0.0, 2.0).unwrap(), norm_cdf(2.0), max_relative = 1e-14);
        assert_relative_eq!(lr_cdf(&n01(), 0.7, -1.3).unwrap(), norm_cdf(-2.0), max_relative = 1e-12);
    }

    #[test]
    fn limit_at_saddlepoint() {
        let g = Distribution::gamma(2.0, 1.0).unwrap();
        let y = 3.0;
        let t = solve_saddlepoint(&g, y).unwrap().root;
        let d = g.derivatives(t);
        let limit = 0.5 + d[3] / (6.0 * (2.0 * std::f64::consts::PI).sqrt() * d[2].powf(1.5));
        assert_relative_eq!(lr_cdf(&g, t, y).unwrap(), limit, max_relative = 1e-12);
        let avg = 0.5 * (lr_cdf(&g, t + 1e-4, y).unwrap() + lr_cdf(&g, t - 1e-4, y).unwrap());
        assert_relative_eq!(avg, limit, max_relative = 1e-7);
    }

    #[test]
    fn exponential_cdf_accuracy() {
        let e = Distribution::exponential(1.0).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((lr_cdf(&e, 0.0, 1.0).unwrap() / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn dtheta_matches_finite_differences() {
        for (m, y, theta) in [(n01(), 2.0, 0.0), (n01(), 0.0, 0.0), (n01(), 0.0, 1e-7)] {
            let fd = central_first_derivative(|x| lr_cdf(&m, x, y), theta, (-10.0, 10.0)).unwrap();
            let an = lr_cdf_dtheta(&m, theta, y).unwrap();
            assert!((fd - an).abs() < 1e-6, "y={y} theta={theta}: {fd} vs {an}");
        }
        let g = Distribution::gamma(2.0, 1.0).unwrap();
        let t = solve_saddlepoint(&g, 3.0).unwrap().root;
        for theta in [t, t + 1e-7, t - 3e-6, t + 1e-3, t - 0.3, 0.0, -2.0] {
            let fd = central_first_derivative(|x| lr_cdf(&g, x, 3.0), theta, (-10.0, 1.0)).unwrap();
            let an = lr_cdf_dtheta(&g, theta, 3.0).unwrap();
            assert!((fd - an).abs() < 1e-6, "theta={theta}: {fd} vs {an}");
        }
    }

    #[test]
    fn dtheta_sign_in_upper_tail() {
        assert!(lr_cdf_dtheta(&n01(), 0.0, 8.0).unwrap() < 0.0);
    }

    #[test]
    fn ingredients_signs() {
        let g = Distribution::gamma(2.0, 1.0).unwrap();
        let i = lr_ingredients(&g, -0.5, 3.0).unwrap();
        assert!(i.w > 0.0 && i.u > 0.0 && i.t_y > -0.5);
        let i = lr_ingredients(&g, 0.5, 1.0).unwrap();
        assert!(i.w < 0.0 && i.u < 0.0);
    }

    #[test]
    fn normal_window_value() {
        let lr = LrTruncation::new(n01(), Window::new(-1.0, 2.0).unwrap()).unwrap();
        assert_relative_eq!(lr.k(1.0).unwrap(), 0.5, epsilon = 1e-13);
        assert_eq!(lr.k(0.0).unwrap(), 0.0);
    }

    #[test]
    fn untruncated_window_reproduces_k0() {
        let g = Distribution::gumbel(0.0, 1.0).unwrap();
        let lr = LrTruncation::new(g, Window::full()).unwrap();
        for theta in [-3.0, 0.2, 0.9] {
            let e = lr.eval(theta).unwrap();
            let d = g.derivatives(theta);
            assert_eq!(e.k, d[0]);
            assert_eq!(e.k1, d[1]);
        }
    }

    #[test]
    fn refuses_outside_strip() {
        let e = Distribution::exponential(1.0).unwrap();
        let lr = LrTruncation::new(e, Window::new(0.0, 2.0).unwrap()).unwrap();
        assert!(matches!(lr.eval(3.0), Err(Error::OutsideStrip { .. })));
        assert_eq!(lr.rejected_calls(), 1);
    }

    proptest! {
        #[test]
        fn k1_matches_difference_of_k(theta in -4.0f64..0.9, a in 0.1f64..1.5, width in 0.2f64..3.0) {
            let g = Distribution::gamma(2.0, 1.0).unwrap();
            let lr = LrTruncation::new(g, Window::new(a, a + width).unwrap()).unwrap();
            let (_, k1) = lr.k_k1(theta).unwrap();
            let fd = central_first_derivative(|x| lr.k(x), theta, lr.domain()).unwrap();
            prop_assert!((k1 - fd).abs() <= 1e-6 * k1.abs().max(1.0), "{} vs {}", k1, fd);
        }
    }
}
