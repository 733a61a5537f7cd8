//! CGF models: the contract every underlying distribution satisfies, plus a
//! catalog of families with analytic derivatives up to order four.
//!
//! Catalog parameterizations:
//!
//! | family             | parameters                  | strip                       |
//! |--------------------|-----------------------------|-----------------------------|
//! | `normal`           | `mean`, `sd`                | `(-inf, inf)`               |
//! | `exponential`      | `rate`                      | `(-inf, rate)`              |
//! | `gamma`            | `shape`, `rate`             | `(-inf, rate)`              |
//! | `gumbel`           | `location`, `scale` (max)   | `(-inf, 1/scale)`           |
//! | `logistic`         | `location`, `scale`         | `(-1/scale, 1/scale)`       |
//! | `inverse-gaussian` | `mean`, `shape`             | `(-inf, shape/(2 mean^2))`  |

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::Distribution as _;

use crate::error::{Error, Result};
use crate::special::{gamma_lr, ln_gamma, ln_norm_cdf, ln_norm_pdf, norm_cdf, polygamma};

/// Margin kept between an evaluation point and a finite strip endpoint.
pub const EPS_STRIP: f64 = 1e-12;

/// Open interval `(lower, upper)` on which the MGF is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStrip {
    pub lower: f64,
    pub upper: f64,
}

impl ConvergenceStrip {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < 0.0 && upper > 0.0) {
            return Err(Error::InvalidParameter(format!("strip ({lower}, {upper}) must contain a neighbourhood of zero")));
        }
        Ok(Self { lower, upper })
    }

    pub fn real_line() -> Self {
        Self { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    /// `true` when `theta` is at least `EPS_STRIP` away from both endpoints.
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lower + EPS_STRIP && theta < self.upper - EPS_STRIP
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::OutsideStrip { theta, lower: self.lower, upper: self.upper })
        }
    }

    pub fn has_finite_lower(&self) -> bool {
        self.lower.is_finite()
    }

    pub fn has_finite_upper(&self) -> bool {
        self.upper.is_finite()
    }
}

/// `K0` and its first four derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfEval {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl From<[f64; 5]> for CgfEval {
    fn from(d: [f64; 5]) -> Self {
        Self { k: d[0], k1: d[1], k2: d[2], k3: d[3], k4: d[4] }
    }
}

/// An untruncated distribution described through its CGF.
///
/// Implementations must be pure: `derivatives` depends only on `theta`.
/// Density, CDF and sampler are optional and only used by the oracles.
pub trait CgfModel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn strip(&self) -> ConvergenceStrip;

    /// Closure of the support, `(lo, hi)`.
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `[K0, K0', K0'', K0''', K0'''']` at `theta`, without strip checks.
    fn derivatives(&self, theta: f64) -> [f64; 5];

    fn eval(&self, theta: f64) -> Result<CgfEval> {
        self.strip().check(theta)?;
        Ok(self.derivatives(theta).into())
    }

    fn ln_density(&self, _x: f64) -> Option<f64> {
        None
    }

    fn density(&self, x: f64) -> Option<f64> {
        self.ln_density(x).map(f64::exp)
    }

    fn cdf(&self, _x: f64) -> Option<f64> {
        None
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Option<f64> {
        None
    }

    fn mean(&self) -> f64 {
        self.derivatives(0.0)[1]
    }
}

/// Built-in distribution families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Gumbel { location: f64, scale: f64 },
    Logistic { location: f64, scale: f64 },
    InverseGaussian { mean: f64, shape: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Ok(Self::Normal { mean: finite("mean", mean)?, sd: positive("sd", sd)? })
    }

    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self::Exponential { rate: positive("rate", rate)? })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::Gamma { shape: positive("shape", shape)?, rate: positive("rate", rate)? })
    }

    pub fn gumbel(location: f64, scale: f64) -> Result<Self> {
        Ok(Self::Gumbel { location: finite("location", location)?, scale: positive("scale", scale)? })
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        Ok(Self::Logistic { location: finite("location", location)?, scale: positive("scale", scale)? })
    }

    pub fn inverse_gaussian(mean: f64, shape: f64) -> Result<Self> {
        Ok(Self::InverseGaussian { mean: positive("mean", mean)?, shape: positive("shape", shape)? })
    }

    /// Location and scale of the affine map from the standard member.
    fn affine(&self) -> (f64, f64) {
        match *self {
            Self::Normal { mean, sd } => (mean, sd),
            Self::Exponential { rate } => (0.0, 1.0 / rate),
            Self::Gamma { rate, .. } => (0.0, 1.0 / rate),
            Self::Gumbel { location, scale } | Self::Logistic { location, scale } => (location, scale),
            Self::InverseGaussian { .. } => (0.0, 1.0),
        }
    }

    fn standard_derivatives(&self, z: f64) -> [f64; 5] {
        match *self {
            Self::Normal { .. } => [0.5 * z * z, z, 1.0, 0.0, 0.0],
            Self::Exponential { .. } => gamma_kernel(1.0, z),
            Self::Gamma { shape, .. } => gamma_kernel(shape, z),
            Self::Gumbel { .. } => {
                let x = 1.0 - z;
                [ln_gamma(x) - ln_gamma(1.0), -polygamma(0, x), polygamma(1, x), -polygamma(2, x), polygamma(3, x)]
            }
            Self::Logistic { .. } => {
                let (m, p) = (1.0 - z, 1.0 + z);
                [
                    ln_gamma(m) + ln_gamma(p) - 2.0 * ln_gamma(1.0),
                    polygamma(0, p) - polygamma(0, m),
                    polygamma(1, p) + polygamma(1, m),
                    polygamma(2, p) - polygamma(2, m),
                    polygamma(3, p) + polygamma(3, m),
                ]
            }
            Self::InverseGaussian { mean, shape } => {
                let c = 2.0 * mean * mean / shape;
                let v = 1.0 - c * z;
                let r = v.sqrt();
                [
                    2.0 * mean * z / (1.0 + r),
                    mean / r,
                    mean.powi(3) / shape / (v * r),
                    3.0 * mean.powi(5) / shape.powi(2) / (v * v * r),
                    15.0 * mean.powi(7) / shape.powi(3) / (v * v * v * r),
                ]
            }
        }
    }

    fn standard_strip(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Exponential { .. } | Self::Gamma { .. } | Self::Gumbel { .. } => (f64::NEG_INFINITY, 1.0),
            Self::Logistic { .. } => (-1.0, 1.0),
            Self::InverseGaussian { mean, shape } => (f64::NEG_INFINITY, shape / (2.0 * mean * mean)),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Normal { .. } => "normal",
            Self::Exponential { .. } => "exponential",
            Self::Gamma { .. } => "gamma",
            Self::Gumbel { .. } => "gumbel",
            Self::Logistic { .. } => "logistic",
            Self::InverseGaussian { .. } => "inverse-gaussian",
        }
    }
}

fn gamma_kernel(shape: f64, z: f64) -> [f64; 5] {
    let v = 1.0 / (1.0 - z);
    [-shape * (-z).ln_1p(), shape * v, shape * v * v, 2.0 * shape * v * v * v, 6.0 * shape * v * v * v * v]
}

impl CgfModel for Distribution {
    fn name(&self) -> String {
        self.to_string()
    }

    fn strip(&self) -> ConvergenceStrip {
        let (lo, hi) = self.standard_strip();
        let (_, sigma) = self.affine();
        ConvergenceStrip { lower: lo / sigma, upper: hi / sigma }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Self::Exponential { .. } | Self::Gamma { .. } | Self::InverseGaussian { .. } => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn derivatives(&self, theta: f64) -> [f64; 5] {
        let (mu, sigma) = self.affine();
        let mut d = self.standard_derivatives(sigma * theta);
        let mut p = 1.0;
        for dj in d.iter_mut().skip(1) {
            p *= sigma;
            *dj *= p;
        }
        d[0] += mu * theta;
        d[1] += mu;
        d
    }

    fn ln_density(&self, x: f64) -> Option<f64> {
        let v = match *self {
            Self::Normal { mean, sd } => ln_norm_pdf((x - mean) / sd) - sd.ln(),
            Self::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Self::Gamma { shape, rate } => {
                if x <= 0.0 {
                    if x == 0.0 && shape == 1.0 {
                        rate.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
                }
            }
            Self::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                -z - (-z).exp() - scale.ln()
            }
            Self::Logistic { location, scale } => {
                let z = ((x - location) / scale).abs();
                -z - 2.0 * (-z).exp().ln_1p() - scale.ln()
            }
            Self::InverseGaussian { mean, shape } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.5 * (shape / (2.0 * std::f64::consts::PI * x.powi(3))).ln() - shape * (x - mean).powi(2) / (2.0 * mean * mean * x)
                }
            }
        };
        Some(v)
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        let v = match *self {
            Self::Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            Self::Gumbel { location, scale } => (-(-(x - location) / scale).exp()).exp(),
            Self::Logistic { location, scale } => 1.0 / (1.0 + (-(x - location) / scale).exp()),
            Self::InverseGaussian { mean, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let r = (shape / x).sqrt();
                    norm_cdf(r * (x / mean - 1.0)) + (2.0 * shape / mean + ln_norm_cdf(-r * (x / mean + 1.0))).exp()
                }
            }
        };
        Some(v)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<f64> {
        let x = match *self {
            Self::Normal { mean, sd } => rand_distr::Normal::new(mean, sd).ok()?.sample(rng),
            Self::Exponential { rate } => rand_distr::Exp::new(rate).ok()?.sample(rng),
            Self::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate).ok()?.sample(rng),
            Self::Gumbel { location, scale } => rand_distr::Gumbel::new(location, scale).ok()?.sample(rng),
            Self::Logistic { location, scale } => {
                let u: f64 = rand_distr::OpenClosed01.sample(rng);
                location + scale * (u / (1.0 - u)).ln()
            }
            Self::InverseGaussian { mean, shape } => rand_distr::InverseGaussian::new(mean, shape).ok()?.sample(rng),
        };
        Some(x)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Normal { mean, sd } => write!(f, "family=normal mean={mean} sd={sd}"),
            Self::Exponential { rate } => write!(f, "family=exponential rate={rate}"),
            Self::Gamma { shape, rate } => write!(f, "family=gamma shape={shape} rate={rate}"),
            Self::Gumbel { location, scale } => write!(f, "family=gumbel location={location} scale={scale}"),
            Self::Logistic { location, scale } => write!(f, "family=logistic location={location} scale={scale}"),
            Self::InverseGaussian { mean, shape } => write!(f, "family=inverse-gaussian mean={mean} shape={shape}"),
        }
    }
}

/// Parses `family=<name> key=value ...` (whitespace, `,` or `;` separated).
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut family = None;
        let mut params: Vec<(String, f64)> = Vec::new();
        for tok in s.split(|c: char| c.is_whitespace() || c == ',' || c == ';').filter(|t| !t.is_empty()) {
            let (key, value) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if key == "family" {
                family = Some(value.trim().to_ascii_lowercase());
            } else {
                let v = crate::parse_number(value)?;
                params.push((key, v));
            }
        }
        let family = family.ok_or_else(|| Error::Parse("missing `family=`".into()))?;
        let mut take = |names: &[&str], default: Option<f64>| -> Result<f64> {
            if let Some(i) = params.iter().position(|(k, _)| names.contains(&k.as_str())) {
                return Ok(params.remove(i).1);
            }
            default.ok_or_else(|| Error::InvalidParameter(format!("{family}: missing `{}`", names[0])))
        };
        let dist = match family.as_str() {
            "normal" | "gaussian" => {
                let mean = take(&["mean", "mu", "location", "loc"], Some(0.0))?;
                let sd = take(&["sd", "sigma", "scale"], Some(1.0))?;
                Distribution::normal(mean, sd)?
            }
            "exponential" | "exp" => Distribution::exponential(take(&["rate", "lambda"], Some(1.0))?)?,
            "gamma" => {
                let shape = take(&["shape", "alpha"], None)?;
                let rate = take(&["rate", "beta"], Some(1.0))?;
                Distribution::gamma(shape, rate)?
            }
            "gumbel" => {
                let loc = take(&["location", "loc", "mu"], Some(0.0))?;
                let scale = take(&["scale", "beta"], Some(1.0))?;
                Distribution::gumbel(loc, scale)?
            }
            "logistic" => {
                let loc = take(&["location", "loc", "mu"], Some(0.0))?;
                let scale = take(&["scale", "s"], Some(1.0))?;
                Distribution::logistic(loc, scale)?
            }
            "inverse-gaussian" | "inverse_gaussian" | "invgauss" | "wald" => {
                let mean = take(&["mean", "mu"], Some(1.0))?;
                let shape = take(&["shape", "lambda"], Some(1.0))?;
                Distribution::inverse_gaussian(mean, shape)?
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        if let Some((k, _)) = params.first() {
            return Err(Error::InvalidParameter(format!("unexpected parameter `{k}` for {family}")));
        }
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn catalog() -> Vec<Distribution> {
        vec![
            Distribution::standard_normal(),
            Distribution::normal(1.5, 2.0).unwrap(),
            Distribution::exponential(1.0).unwrap(),
            Distribution::gamma(2.0, 1.0).unwrap(),
            Distribution::gamma(0.7, 3.0).unwrap(),
            Distribution::gumbel(0.0, 1.0).unwrap(),
            Distribution::gumbel(-1.0, 0.5).unwrap(),
            Distribution::logistic(0.0, 1.0).unwrap(),
            Distribution::inverse_gaussian(1.0, 2.0).unwrap(),
        ]
    }

    fn grid(strip: ConvergenceStrip) -> Vec<f64> {
        let lo = strip.lower.max(-6.0);
        let hi = strip.upper.min(6.0);
        (1..20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect()
    }

    #[test]
    fn normal_closed_form() {
        let e = Distribution::standard_normal().eval(2.0).unwrap();
        assert_eq!((e.k, e.k1, e.k2), (2.0, 2.0, 1.0));
        assert_eq!(Distribution::standard_normal().strip(), ConvergenceStrip::real_line());
    }

    #[test]
    fn exponential_strip_and_moments() {
        let m = Distribution::exponential(1.0).unwrap();
        assert_eq!(m.strip().upper, 1.0);
        let e = m.eval(0.0).unwrap();
        assert_eq!((e.k, e.k1, e.k2), (0.0, 1.0, 1.0));
        assert!(matches!(m.eval(1.0), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn gamma_component_cgf() {
        let m = Distribution::gamma(10.0, 1.0).unwrap();
        for &t in &[-3.0, -0.5, 0.4] {
            assert_relative_eq!(m.eval(t).unwrap().k, -10.0 * (1.0f64 - t).ln(), max_relative = 1e-14);
        }
    }

    #[test]
    fn cgf_vanishes_at_zero() {
        for m in catalog() {
            assert_eq!(m.derivatives(0.0)[0], 0.0, "{m}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in catalog() {
            for t in grid(m.strip()) {
                let h = 1e-5 * t.abs().max(1.0);
                let d = m.derivatives(t);
                let (p, q) = (m.derivatives(t + h), m.derivatives(t - h));
                for j in 0..4 {
                    let fd = (p[j] - q[j]) / (2.0 * h);
                    let tol = 1e-6 * d[j + 1].abs().max(1.0);
                    assert!((fd - d[j + 1]).abs() < tol, "{m} order {} at {t}: {fd} vs {}", j + 1, d[j + 1]);
                }
                assert!(d[2] > 0.0);
            }
        }
    }

    #[test]
    fn steep_at_finite_endpoints() {
        for m in catalog() {
            let s = m.strip();
            if s.has_finite_upper() {
                let seq: Vec<f64> = (1..30).map(|j| m.derivatives(s.upper - s.upper * 0.5f64.powi(j))[1].abs()).collect();
                assert!(seq.windows(2).all(|w| w[1] > w[0]), "{m}");
            }
            if s.has_finite_lower() {
                let seq: Vec<f64> = (1..30).map(|j| m.derivatives(s.lower - s.lower * 0.5f64.powi(j))[1].abs()).collect();
                assert!(seq.windows(2).all(|w| w[1] > w[0]), "{m}");
            }
        }
    }

    #[test]
    fn parse_specs() {
        let d: Distribution = "family=gamma shape=2.0 rate=1.0".parse().unwrap();
        assert_eq!(d, Distribution::Gamma { shape: 2.0, rate: 1.0 });
        let d: Distribution = "family=normal".parse().unwrap();
        assert_eq!(d, Distribution::standard_normal());
        assert!(matches!("family=cauchy".parse::<Distribution>(), Err(Error::UnknownFamily(_))));
        assert!(matches!("family=gamma shape=-1".parse::<Distribution>(), Err(Error::InvalidParameter(_))));
        assert!(matches!("family=gamma".parse::<Distribution>(), Err(Error::InvalidParameter(_))));
        assert!(matches!("family=normal foo=1".parse::<Distribution>(), Err(Error::InvalidParameter(_))));
        for m in catalog() {
            assert_eq!(m.to_string().parse::<Distribution>().unwrap(), m);
        }
    }

    #[test]
    fn cdf_consistent_with_density() {
        for m in catalog() {
            let (lo, _) = m.support();
            let x0 = if lo.is_finite() { 0.3 } else { -0.7 };
            let x1 = x0 + 1.1;
            let integral = crate::oracle::quad::integrate(|x| m.density(x).unwrap(), x0, x1, 1e-13, 1e-12).unwrap().value;
            assert_relative_eq!(integral, m.cdf(x1).unwrap() - m.cdf(x0).unwrap(), max_relative = 1e-9);
        }
    }
}
