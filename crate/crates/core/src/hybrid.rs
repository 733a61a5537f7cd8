//! Rule-of-thumb dispatch between the tilted (LR) and convolution
//! approximations, and the tail-condition diagnostics.
//!
//! The right tail is `theta >= 0` and the left tail `theta < 0`. In a tail
//! where the window extends the domain past a finite strip endpoint (`b`
//! finite and the strip bounded above, or `a` finite and the strip bounded
//! below) the convolution branch defined there is used; otherwise LR.

use crate::cgf::{CgfModel, ConvergenceStrip, EPS_STRIP};
use crate::conv::{Branch, ConvTruncation, Order};
use crate::error::Result;
use crate::invert::{CgfEvaluator, CgfTriple};
use crate::lr::LrTruncation;
use crate::window::{Method, TruncCgfEval, Window};

#[derive(Debug, Clone, PartialEq)]
pub struct MethodChoice {
    pub method: Method,
    pub reason: &'static str,
}

/// Picks the approximation for `theta`. The window should already be
/// normalized against the model support.
pub fn select_method(strip: ConvergenceStrip, window: Window, theta: f64) -> MethodChoice {
    if theta >= 0.0 {
        if strip.has_finite_upper() && window.has_upper() {
            MethodChoice { method: Method::Conv1, reason: "right tail: finite b extends a bounded strip" }
        } else {
            MethodChoice { method: Method::Lr, reason: "right tail: no domain extension" }
        }
    } else if strip.has_finite_lower() && window.has_lower() {
        MethodChoice { method: Method::Conv2, reason: "left tail: finite a extends a bounded strip" }
    } else {
        MethodChoice { method: Method::Lr, reason: "left tail: no domain extension" }
    }
}

/// Piecewise approximation following [`select_method`].
#[derive(Debug)]
pub struct HybridTruncation<M> {
    window: Window,
    strip: ConvergenceStrip,
    lr: Option<LrTruncation<M>>,
    conv1: Option<ConvTruncation<M>>,
    conv2: Option<ConvTruncation<M>>,
}

impl<M: CgfModel + Clone> HybridTruncation<M> {
    /// Convolution pieces use [`Order::default_for`] the window.
    pub fn new(model: M, window: Window) -> Result<Self> {
        let window = window.normalized(model.support())?;
        Self::with_order(model, window, Order::default_for(&window))
    }

    pub fn with_order(model: M, window: Window, order: Order) -> Result<Self> {
        let window = window.normalized(model.support())?;
        let strip = model.strip();
        let right = select_method(strip, window, 0.0).method;
        let left = select_method(strip, window, -1.0).method;
        let lr = (right == Method::Lr || left == Method::Lr).then(|| LrTruncation::new(model.clone(), window)).transpose()?;
        let conv1 = (right == Method::Conv1).then(|| ConvTruncation::new(model.clone(), window, Branch::Lower, order)).transpose()?;
        let conv2 = (left == Method::Conv2).then(|| ConvTruncation::new(model.clone(), window, Branch::Upper, order)).transpose()?;
        Ok(Self { window, strip, lr, conv1, conv2 })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn domain(&self) -> (f64, f64) {
        let lo = if self.conv2.is_some() { f64::NEG_INFINITY } else { self.strip.lower + EPS_STRIP };
        let hi = if self.conv1.is_some() { f64::INFINITY } else { self.strip.upper - EPS_STRIP };
        (lo, hi)
    }

    pub fn choice(&self, theta: f64) -> MethodChoice {
        select_method(self.strip, self.window, theta)
    }

    /// Evaluations the LR piece refused for lying outside the strip.
    pub fn lr_rejections(&self) -> usize {
        self.lr.as_ref().map_or(0, |l| l.rejected_calls())
    }

    pub fn eval(&self, theta: f64) -> Result<TruncCgfEval> {
        let mut e = match self.choice(theta).method {
            Method::Conv1 => self.conv1.as_ref().expect("built when selected").eval(theta)?,
            Method::Conv2 => self.conv2.as_ref().expect("built when selected").eval(theta)?,
            _ => self.lr.as_ref().expect("built when selected").eval(theta)?,
        };
        e.hybrid = true;
        e.theta_domain = self.domain();
        Ok(e)
    }

    pub fn k(&self, theta: f64) -> Result<f64> {
        match self.choice(theta).method {
            Method::Conv1 => self.conv1.as_ref().expect("built when selected").k(theta),
            Method::Conv2 => self.conv2.as_ref().expect("built when selected").k(theta),
            _ => self.lr.as_ref().expect("built when selected").k(theta),
        }
    }

    pub fn k_k1(&self, theta: f64) -> Result<(f64, f64)> {
        match self.choice(theta).method {
            Method::Conv1 => self.conv1.as_ref().expect("built when selected").k_k1(theta),
            Method::Conv2 => self.conv2.as_ref().expect("built when selected").k_k1(theta),
            _ => self.lr.as_ref().expect("built when selected").k_k1(theta),
        }
    }
}

impl<M: CgfModel + Clone> CgfEvaluator for HybridTruncation<M> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        HybridTruncation::eval(self, theta).map(Into::into)
    }

    fn domain(&self) -> (f64, f64) {
        HybridTruncation::domain(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One grid point of the tail diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub s: f64,
    /// `K0''/K0'^2`.
    pub k2_over_k1sq: f64,
    /// `K0''/K0'`.
    pub k2_over_k1: f64,
    /// `K0''''/K0'^3`.
    pub k4_over_k1cube: f64,
    /// `max(|K0''|, |K0'''|, |K0''''|)`.
    pub max_higher: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailDiagnostics {
    pub side: Side,
    pub edge: f64,
    pub points: Vec<TailPoint>,
    /// `K0''/K0'^2 -> 0`.
    pub ratio_condition: Verdict,
    /// `K0''/K0' -> 0` and `K0''''/K0'^3 -> 0`.
    pub derivative_condition: Verdict,
    /// Every `K0^(j)`, `j >= 2`, stays bounded.
    pub bounded_condition: Verdict,
}

fn tends_to_zero(v: &[f64]) -> bool {
    let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let last = *a.last().unwrap_or(&0.0);
    if last == 0.0 {
        return true;
    }
    let peak = a.iter().cloned().fold(0.0, f64::max);
    let tail = &a[a.len().saturating_sub(5)..];
    last < 1e-2 * peak && tail.windows(2).all(|w| w[1] < w[0])
}

fn stays_bounded(v: &[f64]) -> bool {
    let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let (first, last) = (a[0], *a.last().unwrap_or(&0.0));
    let tail = &a[a.len().saturating_sub(5)..];
    let growing = tail.windows(2).all(|w| w[1] > w[0]);
    !(last.is_infinite() || (growing && last > 1e2 * first.max(1.0)))
}

/// Ratios of `K0` derivatives along a geometric approach to one strip edge.
///
/// Finite edges are approached as `edge -+ 2^-m * dist` for `m = 1..20`;
/// infinite edges through `s = -+2^m` until values stop being finite.
pub fn tail_diagnostics(model: &dyn CgfModel, side: Side) -> TailDiagnostics {
    let strip = model.strip();
    let edge = match side {
        Side::Left => strip.lower,
        Side::Right => strip.upper,
    };
    let sign = if side == Side::Left { -1.0 } else { 1.0 };
    let grid: Vec<f64> = if edge.is_finite() {
        (1..=20).map(|m| edge - sign * edge.abs() * 0.5f64.powi(m)).collect()
    } else {
        (1..=30).map(|m| sign * 2f64.powi(m)).collect()
    };
    let mut points = Vec::new();
    for s in grid {
        if !strip.contains(s) {
            break;
        }
        let d = model.derivatives(s);
        if d.iter().any(|x| !x.is_finite()) {
            break;
        }
        points.push(TailPoint {
            s,
            k2_over_k1sq: d[2] / (d[1] * d[1]),
            k2_over_k1: d[2] / d[1],
            k4_over_k1cube: d[4] / d[1].powi(3),
            max_higher: d[2].abs().max(d[3].abs()).max(d[4].abs()),
        });
    }
    let col = |f: fn(&TailPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    let ratio_condition = Verdict::from(tends_to_zero(&col(|p| p.k2_over_k1sq)));
    let derivative_condition = Verdict::from(tends_to_zero(&col(|p| p.k2_over_k1)) && tends_to_zero(&col(|p| p.k4_over_k1cube)));
    let bounded_condition = Verdict::from(!points.is_empty() && stays_bounded(&col(|p| p.max_higher)));
    TailDiagnostics { side, edge, points, ratio_condition, derivative_condition, bounded_condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::Distribution;

    #[test]
    fn selection_examples() {
        let e = Distribution::exponential(1.0).unwrap();
        let w = Window::new(0.0, 2.0).unwrap().normalized(e.support()).unwrap();
        assert_eq!(select_method(e.strip(), w, 3.0).method, Method::Conv1);
        let n = Distribution::standard_normal();
        let w = Window::new(-1.0, 2.0).unwrap();
        for theta in [-4.0, 0.0, 5.0] {
            assert_eq!(select_method(n.strip(), w, theta).method, Method::Lr);
        }
        let g = Distribution::gamma(2.0, 1.0).unwrap();
        assert_eq!(select_method(g.strip(), Window::above(0.5).unwrap(), -2.0).method, Method::Lr);
    }

    #[test]
    fn dispatch_identity_and_calibration() {
        let n = Distribution::standard_normal();
        let w = Window::new(-1.0, 2.0).unwrap();
        let h = HybridTruncation::new(n, w).unwrap();
        let lr = LrTruncation::new(n, w).unwrap();
        let a = h.eval(1.0).unwrap();
        let b = lr.eval(1.0).unwrap();
        assert_eq!((a.k, a.k1, a.k2), (b.k, b.k1, b.k2));
        assert!(a.hybrid && a.method == Method::Lr);
        assert_eq!(h.k(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gumbel_construction() {
        let g = Distribution::gumbel(0.0, 1.0).unwrap();
        let h = HybridTruncation::new(g, Window::new(-1.0, 2.0).unwrap()).unwrap();
        assert_eq!(h.choice(-0.5).method, Method::Lr);
        assert_eq!(h.choice(0.5).method, Method::Conv1);
        assert_eq!(h.domain().1, f64::INFINITY);
        assert!(h.eval(4.0).is_ok());
        assert_eq!(h.lr_rejections(), 0);
    }

    #[test]
    fn continuity_at_zero() {
        let g = Distribution::gumbel(0.0, 1.0).unwrap();
        let h = HybridTruncation::new(g, Window::new(-1.0, 2.0).unwrap()).unwrap();
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|e| (h.k(*e).unwrap() - h.k(-e).unwrap()).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] < 1e-3, "{gaps:?}");
    }

    #[test]
    fn diagnostics_examples() {
        let n = tail_diagnostics(&Distribution::standard_normal(), Side::Left);
        assert_eq!(n.ratio_condition, Verdict::Pass);
        assert_eq!(n.derivative_condition, Verdict::Pass);
        assert_eq!(n.bounded_condition, Verdict::Pass);
        let g = tail_diagnostics(&Distribution::gamma(2.0, 1.0).unwrap(), Side::Left);
        assert_eq!(g.bounded_condition, Verdict::Pass);
        let l = tail_diagnostics(&Distribution::logistic(0.0, 1.0).unwrap(), Side::Left);
        assert_eq!(l.bounded_condition, Verdict::Fail);
        assert_eq!(l.ratio_condition, Verdict::Fail);
    }
}
