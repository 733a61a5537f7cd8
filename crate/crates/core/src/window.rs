//! Truncation windows and the evaluation record shared by every method.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::parse_number;

/// Truncation interval `(a, b)` with extended-real endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub a: f64,
    pub b: f64,
}

impl Window {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() || !(a < b) || a == f64::INFINITY || b == f64::NEG_INFINITY {
            return Err(Error::DegenerateWindow { a, b, reason: "require a < b".into() });
        }
        Ok(Self { a, b })
    }

    pub fn full() -> Self {
        Self { a: f64::NEG_INFINITY, b: f64::INFINITY }
    }

    /// `(-inf, b)`.
    pub fn below(b: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, b)
    }

    /// `(a, inf)`.
    pub fn above(a: f64) -> Result<Self> {
        Self::new(a, f64::INFINITY)
    }

    pub fn has_lower(&self) -> bool {
        self.a.is_finite()
    }

    pub fn has_upper(&self) -> bool {
        self.b.is_finite()
    }

    pub fn is_two_sided(&self) -> bool {
        self.has_lower() && self.has_upper()
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Replaces endpoints at or beyond the support boundary by infinities.
    ///
    /// An endpoint on the boundary of the support does not truncate anything,
    /// and neither saddlepoint equation has a root there.
    pub fn normalized(&self, support: (f64, f64)) -> Result<Self> {
        let a = if self.a <= support.0 { f64::NEG_INFINITY } else { self.a };
        let b = if self.b >= support.1 { f64::INFINITY } else { self.b };
        if a >= support.1 || b <= support.0 {
            return Err(Error::DegenerateWindow { a: self.a, b: self.b, reason: "window misses the support".into() });
        }
        Self::new(a, b)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

/// Parses `a,b`; endpoints accept `-inf`, `inf` and fractions.
impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = s.split_once(',').ok_or_else(|| Error::Parse(format!("window `{s}` is not `a,b`")))?;
        Self::new(parse_number(a)?, parse_number(b)?)
    }
}

/// Which approximation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lr,
    Conv1,
    Conv2,
    Exact,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Conv1 => "conv1",
            Method::Conv2 => "conv2",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(K, K', K'')` of a truncated-CGF approximation at one `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncCgfEval {
    pub theta: f64,
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    pub method: Method,
    /// Set when the value was dispatched by the hybrid rule.
    pub hybrid: bool,
    /// Open interval of `theta` on which the producing method is defined.
    pub theta_domain: (f64, f64),
}

impl TruncCgfEval {
    /// `"hybrid:lr"` style tag.
    pub fn tag(&self) -> String {
        if self.hybrid {
            format!("hybrid:{}", self.method)
        } else {
            self.method.to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_validate() {
        let w: Window = "-1,2".parse().unwrap();
        assert_eq!(w, Window { a: -1.0, b: 2.0 });
        let w: Window = "-inf, 1.5".parse().unwrap();
        assert!(!w.has_lower() && w.has_upper());
        assert!("2,1".parse::<Window>().is_err());
        assert!("inf,inf".parse::<Window>().is_err());
        assert!("1".parse::<Window>().is_err());
    }

    #[test]
    fn normalization_against_support() {
        let w = Window::new(0.0, 2.0).unwrap().normalized((0.0, f64::INFINITY)).unwrap();
        assert_eq!(w, Window::below(2.0).unwrap());
        let w = Window::new(-3.0, 1.0).unwrap().normalized((0.0, 1.0)).unwrap();
        assert_eq!(w, Window::full());
        assert!(Window::new(-3.0, -1.0).unwrap().normalized((0.0, 1.0)).is_err());
    }
}
