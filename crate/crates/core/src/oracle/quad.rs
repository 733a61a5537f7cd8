//! Globally adaptive Gauss-Kronrod (10/21) quadrature over finite and
//! infinite intervals.
//!
//! Infinite pieces are mapped to `(0, 1]` with `x = c +- s (1 - t) / t`, so
//! the integrand is never evaluated at infinity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::special::{G10_WEIGHTS, GK21_NODES, GK21_WEIGHTS};

/// Maximum number of panels before giving up.
pub const PANEL_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    /// `x = c + s (1 - t) / t`.
    Up {
        c: f64,
        s: f64,
    },
    /// `x = c - s (1 - t) / t`.
    Down {
        c: f64,
        s: f64,
    },
}

impl Map {
    fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, t: f64) -> f64 {
        let v = match *self {
            Map::Finite => f(t),
            Map::Up { c, s } => f(c + s * (1.0 - t) / t) * s / (t * t),
            Map::Down { c, s } => f(c - s * (1.0 - t) / t) * s / (t * t),
        };
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    map: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(map: &Map, f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let fc = map.apply(f, mid);
    let mut fv = [[0.0; 2]; 10];
    let mut kron = GK21_WEIGHTS[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let x = half * GK21_NODES[j];
        let (a, b) = (map.apply(f, mid - x), map.apply(f, mid + x));
        fv[j] = [a, b];
        kron += GK21_WEIGHTS[j] * (a + b);
        if j % 2 == 1 {
            gauss += G10_WEIGHTS[j / 2] * (a + b);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = GK21_WEIGHTS[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += GK21_WEIGHTS[j] * ((fv[j][0] - mean).abs() + (fv[j][1] - mean).abs());
    }
    let scale = half.abs();
    let asc = asc * scale;
    let mut err = ((kron - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    (kron * half, err.max(50.0 * f64::EPSILON * (kron * half).abs()))
}

/// `int_a^b f`, with optional interior split points and a length scale for the
/// infinite pieces. Stops when the error estimate is below
/// `max(abs_tol, rel_tol |value|)`.
pub fn integrate_split<F>(mut f: F, a: f64, b: f64, splits: &[f64], scale: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad>
where
    F: FnMut(f64) -> f64,
{
    if !(a < b) {
        return Ok(Quad { value: 0.0, error: 0.0, panels: 0 });
    }
    let mut points = vec![a];
    points.extend(splits.iter().copied().filter(|&x| x > a && x < b && x.is_finite()));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    // An all-infinite interval is split at the origin.
    if points.len() == 2 && !a.is_finite() && !b.is_finite() {
        points.insert(1, 0.0);
    }
    let s = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let mut maps = Vec::new();
    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (map, tlo, thi) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Map::Finite, lo, hi),
            (true, false) => (Map::Up { c: lo, s }, 0.0, 1.0),
            (false, true) => (Map::Down { c: hi, s }, 0.0, 1.0),
            (false, false) => unreachable!("split at origin"),
        };
        maps.push(map);
        let (v, e) = gk21(&map, &mut f, tlo, thi);
        total += v;
        total_err += e;
        heap.push(Panel { lo: tlo, hi: thi, value: v, error: e, map: maps.len() - 1 });
    }
    let mut panels = heap.len();
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if panels >= PANEL_BUDGET {
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        let map = maps[p.map];
        let (v1, e1) = gk21(&map, &mut f, p.lo, mid);
        let (v2, e2) = gk21(&map, &mut f, mid, p.hi);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { lo: p.lo, hi: mid, value: v1, error: e1, map: p.map });
        heap.push(Panel { lo: mid, hi: p.hi, value: v2, error: e2, map: p.map });
        panels += 1;
        if panels % 64 == 0 {
            // Refresh running sums to keep cancellation from accumulating.
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Quad { value, error, panels })
}

/// `int_a^b f` with unit scale and no split points.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    integrate_split(f, a, b, &[], 1.0, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finite_smooth() {
        let q = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-12).unwrap();
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn infinite_gaussian() {
        let q = integrate(|x: f64| (-0.5 * x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-14, 1e-12).unwrap();
        assert_relative_eq!(q.value, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-12);
        let q = integrate(|x: f64| (-x).exp(), 3.0, f64::INFINITY, 1e-16, 1e-12).unwrap();
        assert_relative_eq!(q.value, (-3.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-10).unwrap();
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let r = integrate(|x: f64| (1.0 / x).sin() / x, 1e-8, 1.0, 1e-300, 1e-300);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-14, 1e-10).unwrap().value, 0.0);
    }
}
