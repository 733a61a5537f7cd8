//! Truncated CGFs through the exponential-convolution representation.
//!
//! `Xi_1(theta, y) = int_{-inf}^y e^{theta x} dF0(x)` is finite for every
//! `theta` above the lower strip edge, and `Xi_2(theta, y)`, the integral over
//! `(y, inf)`, for every `theta` below the upper edge. Saddlepoint
//! approximations to them therefore give truncated CGFs that keep working
//! past a finite strip endpoint whenever the window is bounded on that side.
//!
//! ```text
//! Xi_j(theta, y) ~ [2 pi {1 + d^2 K0''(s)}]^(-1/2) exp{K0(s) + d y},  d = theta - s
//! K0'(s) + 1/d = y,   s < theta (j = 1),  s > theta (j = 2)
//! ```
//!
//! The second-order version multiplies by the usual correction `R(theta, y)`.

use crate::cgf::{CgfModel, EPS_STRIP};
use crate::error::{Error, Result};
use crate::invert::{CgfEvaluator, CgfTriple};
use crate::solve::{clipped_step, second_difference, solve_convolution_saddlepoint, FIRST_DIFF_STEP};
use crate::special::{ln_1m_exp, LN_SQRT_2PI};
use crate::window::{Method, TruncCgfEval, Window};

/// Which one-sided exponential moment is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `Xi_1`, integral below `y`; defined for `theta` above the lower strip edge.
    Lower,
    /// `Xi_2`, integral above `y`; defined for `theta` below the upper strip edge.
    Upper,
}

impl Branch {
    pub fn index(&self) -> u8 {
        match self {
            Branch::Lower => 1,
            Branch::Upper => 2,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Branch::Lower => Method::Conv1,
            Branch::Upper => Method::Conv2,
        }
    }
}

/// Saddlepoint order used for `Xi_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    /// First order for one-sided windows, second order for two-sided ones.
    pub fn default_for(window: &Window) -> Self {
        if window.is_two_sided() {
            Order::Second
        } else {
            Order::First
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::InvalidParameter(format!("order must be 1 or 2, got {n}"))),
        }
    }
}

/// An approximated `Xi_j(theta, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiEval {
    pub value: f64,
    pub ln_value: f64,
    pub s_root: f64,
    pub order: Order,
}

/// `ln Xi_hat`, the root, and `d ln Xi_hat / dtheta` at first order.
fn first_order(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch) -> Result<(f64, f64, f64, [f64; 5])> {
    let s = solve_convolution_saddlepoint(model, theta, y, branch.index())?.root;
    let k = model.derivatives(s);
    let d = theta - s;
    let q = 1.0 + d * d * k[2];
    let ln_xi = -LN_SQRT_2PI - 0.5 * q.ln() + k[0] + d * y;
    // d/dtheta: y + D' - (y - K0'(s)) ds/dtheta, with y - K0'(s) = 1/d.
    let ds = 1.0 / q;
    let d_prime = -0.5 * d * d * (k[3] + 2.0 * d * k[2] * k[2]) / (q * q);
    let slope = y + d_prime - ds / d;
    Ok((ln_xi, s, slope, k))
}

fn ln_correction(theta: f64, s: f64, k: &[f64; 5]) -> Result<f64> {
    let d = theta - s;
    let inv = 1.0 / d;
    let h2 = k[2] + inv * inv;
    let h3 = k[3] + 2.0 * inv.powi(3);
    let h4 = k[4] + 6.0 * inv.powi(4);
    let r = 1.0 + h4 / (8.0 * h2 * h2) - 5.0 / 24.0 * h3 * h3 / h2.powi(3);
    if r > 0.0 && r.is_finite() {
        Ok(r.ln())
    } else {
        Err(Error::NonFiniteCorrection { theta, s })
    }
}

fn branch_domain(model: &dyn CgfModel, branch: Branch) -> (f64, f64) {
    let strip = model.strip();
    match branch {
        Branch::Lower => (strip.lower + EPS_STRIP, f64::INFINITY),
        Branch::Upper => (f64::NEG_INFINITY, strip.upper - EPS_STRIP),
    }
}

fn ln_xi_at(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch, order: Order) -> Result<f64> {
    let (ln_xi, s, _, k) = first_order(model, theta, y, branch)?;
    match order {
        Order::First => Ok(ln_xi),
        Order::Second => Ok(ln_xi + ln_correction(theta, s, &k)?),
    }
}

/// `ln Xi` and `d ln Xi / dtheta`.
fn xi_with_slope(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch, order: Order) -> Result<(f64, f64, f64)> {
    let (ln_xi, s, slope, k) = first_order(model, theta, y, branch)?;
    match order {
        Order::First => Ok((ln_xi, slope, s)),
        Order::Second => {
            let ln_r = ln_correction(theta, s, &k)?;
            let h = clipped_step(FIRST_DIFF_STEP, theta, branch_domain(model, branch));
            let lr = |x: f64| -> Result<f64> {
                let s = solve_convolution_saddlepoint(model, x, y, branch.index())?.root;
                ln_correction(x, s, &model.derivatives(s))
            };
            let dr = (lr(theta + h)? - lr(theta - h)?) / (2.0 * h);
            Ok((ln_xi + ln_r, slope + dr, s))
        }
    }
}

fn check_domain(domain: (f64, f64), theta: f64) -> Result<()> {
    if theta > domain.0 && theta < domain.1 {
        Ok(())
    } else {
        Err(Error::OutsideStrip { theta, lower: domain.0, upper: domain.1 })
    }
}

/// Saddlepoint approximation to `Xi_j(theta, y)`.
pub fn xi_hat(model: &dyn CgfModel, theta: f64, y: f64, branch: Branch, order: Order) -> Result<XiEval> {
    check_domain(branch_domain(model, branch), theta)?;
    let (ln_xi, s, _, k) = first_order(model, theta, y, branch)?;
    let ln_value = match order {
        Order::First => ln_xi,
        Order::Second => ln_xi + ln_correction(theta, s, &k)?,
    };
    Ok(XiEval { value: ln_value.exp(), ln_value, s_root: s, order })
}

/// Exponential-convolution approximation to a truncated CGF.
#[derive(Debug, Clone)]
pub struct ConvTruncation<M> {
    model: M,
    window: Window,
    branch: Branch,
    order: Order,
    ln_mass0: f64,
}

impl<M: CgfModel> ConvTruncation<M> {
    /// One-sided windows must be bounded on the branch's side: `(-inf, b)`
    /// takes [`Branch::Lower`] and `(a, inf)` takes [`Branch::Upper`].
    pub fn new(model: M, window: Window, branch: Branch, order: Order) -> Result<Self> {
        let window = window.normalized(model.support())?;
        let ok = match (window.has_lower(), window.has_upper()) {
            (true, true) => true,
            (false, true) => branch == Branch::Lower,
            (true, false) => branch == Branch::Upper,
            (false, false) => false,
        };
        if !ok {
            return Err(Error::NotApplicable { method: branch.method().as_str(), a: window.a, b: window.b });
        }
        let mut this = Self { model, window, branch, order, ln_mass0: 0.0 };
        this.ln_mass0 = this.ln_mass(0.0)?;
        Ok(this)
    }

    /// Uses [`Order::default_for`] the window.
    pub fn with_default_order(model: M, window: Window, branch: Branch) -> Result<Self> {
        let order = Order::default_for(&window.normalized(model.support())?);
        Self::new(model, window, branch, order)
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn domain(&self) -> (f64, f64) {
        branch_domain(&self.model, self.branch)
    }

    /// Endpoints ordered so that the approximated mass is `Xi(near) - Xi(far)`.
    fn endpoints(&self) -> (f64, Option<f64>) {
        match self.branch {
            Branch::Lower => (self.window.b, self.window.has_lower().then_some(self.window.a)),
            Branch::Upper => (self.window.a, self.window.has_upper().then_some(self.window.b)),
        }
    }

    fn breakdown(&self, theta: f64) -> Error {
        Error::Breakdown { theta, reason: format!("non-positive Xi difference on ({}, {})", self.window.a, self.window.b) }
    }

    fn ln_mass(&self, theta: f64) -> Result<f64> {
        check_domain(self.domain(), theta)?;
        let (near, far) = self.endpoints();
        let ln_near = ln_xi_at(&self.model, theta, near, self.branch, self.order)?;
        match far {
            None => Ok(ln_near),
            Some(y) => {
                let ln_far = ln_xi_at(&self.model, theta, y, self.branch, self.order)?;
                if ln_far >= ln_near {
                    return Err(self.breakdown(theta));
                }
                Ok(ln_near + ln_1m_exp(ln_far - ln_near))
            }
        }
    }

    pub fn k(&self, theta: f64) -> Result<f64> {
        Ok(self.ln_mass(theta)? - self.ln_mass0)
    }

    pub fn k_k1(&self, theta: f64) -> Result<(f64, f64)> {
        check_domain(self.domain(), theta)?;
        let (near, far) = self.endpoints();
        let (ln_near, g_near, _) = xi_with_slope(&self.model, theta, near, self.branch, self.order)?;
        let (ln_mass, k1) = match far {
            None => (ln_near, g_near),
            Some(y) => {
                let (ln_far, g_far, _) = xi_with_slope(&self.model, theta, y, self.branch, self.order)?;
                if ln_far >= ln_near {
                    return Err(self.breakdown(theta));
                }
                let rho = (ln_far - ln_near).exp();
                let one_minus = -(ln_far - ln_near).exp_m1();
                (ln_near + ln_1m_exp(ln_far - ln_near), (g_near - rho * g_far) / one_minus)
            }
        };
        Ok((ln_mass - self.ln_mass0, k1))
    }

    pub fn eval(&self, theta: f64) -> Result<TruncCgfEval> {
        let (k, k1) = self.k_k1(theta)?;
        let k2 = second_difference(|x| self.k(x), theta, k, self.domain())?;
        Ok(TruncCgfEval { theta, k, k1, k2, method: self.branch.method(), hybrid: false, theta_domain: self.domain() })
    }
}

impl<M: CgfModel> CgfEvaluator for ConvTruncation<M> {
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        ConvTruncation::eval(self, theta).map(Into::into)
    }

    fn domain(&self) -> (f64, f64) {
        ConvTruncation::domain(self)
    }
}
