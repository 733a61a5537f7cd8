//! Two-state ion channel observed under time-interval omission.
//!
//! The channel alternates between open and closed residences with independent
//! sojourn laws. A residence in state `s` is detected iff it lasts longer than
//! `tau_s`; undetected residences and the same-state residence that follows
//! them merge into the current observed sojourn. The observed open sojourn
//! therefore has the MGF
//!
//! `Phi~_oc(theta) = pi_o^-1 Phi^D_oc(theta) pi_c / (1 - Phi^U_co(theta) Phi_oc(theta))`
//!
//! with `Phi^D(theta) = E[e^{theta T} 1(T > tau)]`, `Phi^U(theta) = E[e^{theta T} 1(T <= tau)]`
//! and `pi = P(T > tau)`, and the closed case mirrors it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::cgf::{CgfModel, Distribution};
use crate::conv::{Branch, ConvTruncation, Order};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hybrid::HybridTruncation;
use crate::invert::{saddlepoint_density, CgfEvaluator, CgfTriple, SaddlepointDensity};
use crate::lr::LrTruncation;
use crate::oracle::mc::{chunk_rng, CHUNK};
use crate::oracle::{exp_moments, ExactTruncation};
use crate::solve::{central_first_derivative, second_difference};
use crate::window::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Open,
    Closed,
}

impl State {
    pub fn other(self) -> Self {
        match self {
            Self::Open => Self::Closed,
            Self::Closed => Self::Open,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Open => "open",
            Self::Closed => "closed",
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" | "o" => Ok(Self::Open),
            "closed" | "c" => Ok(Self::Closed),
            other => Err(Error::Parse(format!("unknown channel state `{other}`"))),
        }
    }
}

/// Backend for the truncated sojourn MGFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SojournMethod {
    Exact,
    Conv,
    Lr,
    Hybrid,
}

impl SojournMethod {
    pub const ALL: [SojournMethod; 4] = [Self::Exact, Self::Conv, Self::Lr, Self::Hybrid];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Conv => "conv",
            Self::Lr => "lr",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for SojournMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SojournMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "conv" => Ok(Self::Conv),
            "lr" => Ok(Self::Lr),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(Error::Parse(format!("unknown sojourn method `{other}`"))),
        }
    }
}

/// Sojourn laws and detection thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub open_sojourn: Distribution,
    pub closed_sojourn: Distribution,
    pub tau_o: f64,
    pub tau_c: f64,
}

impl ChannelSpec {
    pub fn new(open_sojourn: Distribution, closed_sojourn: Distribution, tau_o: f64, tau_c: f64) -> Result<Self> {
        let spec = Self { open_sojourn, closed_sojourn, tau_o, tau_c };
        spec.validate()?;
        Ok(spec)
    }

    /// Exponential sojourns with rates `lambda_o` and `lambda_c`.
    pub fn markov(lambda_o: f64, lambda_c: f64, tau_o: f64, tau_c: f64) -> Result<Self> {
        Self::new(Distribution::exponential(lambda_o)?, Distribution::exponential(lambda_c)?, tau_o, tau_c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, law) in [("open", &self.open_sojourn), ("closed", &self.closed_sojourn)] {
            if law.support().0 < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} sojourn law `{law}` is not supported on (0, inf)")));
            }
            if !(law.strip().upper > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} sojourn MGF does not converge near zero")));
            }
        }
        for (name, tau) in [("tau_o", self.tau_o), ("tau_c", self.tau_c)] {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {tau}")));
            }
        }
        Ok(())
    }

    pub fn law(&self, state: State) -> Distribution {
        match state {
            State::Open => self.open_sojourn,
            State::Closed => self.closed_sojourn,
        }
    }

    pub fn tau(&self, state: State) -> f64 {
        match state {
            State::Open => self.tau_o,
            State::Closed => self.tau_c,
        }
    }
}

/// Splits `key = value` (or `key: value`) lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cut = match (line.find('='), line.find(':')) {
            (Some(i), Some(j)) => i.min(j),
            (Some(i), None) | (None, Some(i)) => i,
            (None, None) => return Err(Error::Parse(format!("expected `key = value`, got `{line}`"))),
        };
        let key = line[..cut].trim().to_ascii_lowercase();
        out.insert(key, line[cut + 1..].trim().to_string());
    }
    Ok(out)
}

impl ChannelSpec {
    /// Reads `open`, `closed`, and `tau_o`/`tau_c` (or a shared `tau`);
    /// other keys are returned untouched.
    pub fn from_key_values(mut kv: BTreeMap<String, String>) -> Result<(Self, BTreeMap<String, String>)> {
        let mut take = |k: &str| kv.remove(k);
        let open: Distribution = take("open").ok_or_else(|| Error::Parse("missing `open`".into()))?.parse()?;
        let closed: Distribution = take("closed").ok_or_else(|| Error::Parse("missing `closed`".into()))?.parse()?;
        let shared = take("tau").map(|v| crate::parse_number(&v)).transpose()?;
        let tau = |v: Option<String>, name: &str| -> Result<f64> {
            match v {
                Some(v) => crate::parse_number(&v),
                None => shared.ok_or_else(|| Error::Parse(format!("missing `{name}`"))),
            }
        };
        let tau_o = tau(take("tau_o"), "tau_o")?;
        let tau_c = tau(take("tau_c"), "tau_c")?;
        Ok((Self::new(open, closed, tau_o, tau_c)?, kv))
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "open = {}", self.open_sojourn)?;
        writeln!(f, "closed = {}", self.closed_sojourn)?;
        writeln!(f, "tau_o = {}", self.tau_o)?;
        write!(f, "tau_c = {}", self.tau_c)
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (spec, rest) = Self::from_key_values(parse_key_values(s)?)?;
        if let Some(k) = rest.keys().next() {
            return Err(Error::Parse(format!("unknown channel key `{k}`")));
        }
        Ok(spec)
    }
}

/// A truncated CGF from any backend.
#[derive(Debug)]
enum Truncated {
    Exact(ExactTruncation<Distribution>),
    Conv(ConvTruncation<Distribution>),
    Lr(LrTruncation<Distribution>),
    Hybrid(HybridTruncation<Distribution>),
}

impl Truncated {
    fn new(law: Distribution, window: Window, method: SojournMethod) -> Result<Self> {
        Ok(match method {
            SojournMethod::Exact => Self::Exact(ExactTruncation::new(law, window)?),
            SojournMethod::Conv => {
                let normalized = window.normalized(law.support())?;
                let branch = if normalized.has_upper() { Branch::Lower } else { Branch::Upper };
                Self::Conv(ConvTruncation::new(law, window, branch, Order::default_for(&normalized))?)
            }
            SojournMethod::Lr => Self::Lr(LrTruncation::new(law, window)?),
            SojournMethod::Hybrid => Self::Hybrid(HybridTruncation::new(law, window)?),
        })
    }

    fn k(&self, theta: f64) -> Result<f64> {
        match self {
            Self::Exact(t) => t.k(theta),
            Self::Conv(t) => t.k(theta),
            Self::Lr(t) => t.k(theta),
            Self::Hybrid(t) => t.k(theta),
        }
    }

    fn triple(&self, theta: f64) -> Result<CgfTriple> {
        match self {
            Self::Exact(t) => CgfEvaluator::eval(t, theta),
            Self::Conv(t) => CgfEvaluator::eval(t, theta),
            Self::Lr(t) => CgfEvaluator::eval(t, theta),
            Self::Hybrid(t) => CgfEvaluator::eval(t, theta),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            Self::Exact(t) => t.domain(),
            Self::Conv(t) => t.domain(),
            Self::Lr(t) => t.domain(),
            Self::Hybrid(t) => t.domain(),
        }
    }
}

/// Detected and undetected pieces of one sojourn law.
#[derive(Debug)]
struct SojournParts {
    law: Distribution,
    pi: f64,
    /// `None` when `tau = 0`: every residence is detected.
    pieces: Option<(Truncated, Truncated)>,
}

impl SojournParts {
    fn new(law: Distribution, tau: f64, method: SojournMethod) -> Result<Self> {
        if tau == 0.0 {
            return Ok(Self { law, pi: 1.0, pieces: None });
        }
        let pi = match law.cdf(tau) {
            Some(f) => 1.0 - f,
            None => exp_moments(&law, 0.0, tau, f64::INFINITY, false)?.ln_mass.exp(),
        };
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Underflow(format!("detection probability {pi:e} for `{law}` at tau = {tau}")));
        }
        let detected = Truncated::new(law, Window::above(tau)?, method)?;
        let undetected = Truncated::new(law, Window::new(0.0, tau)?, method)?;
        Ok(Self { law, pi, pieces: Some((detected, undetected)) })
    }

    fn full(&self, theta: f64) -> Result<f64> {
        Ok(CgfModel::eval(&self.law, theta)?.k.exp())
    }

    fn detected(&self, theta: f64) -> Result<f64> {
        match &self.pieces {
            None => self.full(theta),
            Some((d, _)) => Ok(self.pi * d.k(theta)?.exp()),
        }
    }

    fn undetected(&self, theta: f64) -> Result<f64> {
        match &self.pieces {
            None => Ok(0.0),
            Some((_, u)) => Ok((1.0 - self.pi) * u.k(theta)?.exp()),
        }
    }

    /// Where the full and detected MGFs are finite.
    fn detected_domain(&self) -> (f64, f64) {
        let s = self.law.strip();
        match &self.pieces {
            None => (s.lower, s.upper),
            Some((d, _)) => {
                let (lo, hi) = d.domain();
                (s.lower.max(lo), s.upper.min(hi))
            }
        }
    }

    /// Where the undetected MGF is finite; a bounded window makes it entire
    /// for backends that allow it.
    fn undetected_domain(&self) -> (f64, f64) {
        match &self.pieces {
            None => (f64::NEG_INFINITY, f64::INFINITY),
            Some((_, u)) => u.domain(),
        }
    }
}

/// `(Phi^D, Phi^U, pi)` for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournMgfs {
    pub phi_d: f64,
    pub phi_u: f64,
    pub pi: f64,
}

/// Detected and undetected partial MGFs of the sojourn in `state`.
pub fn truncated_sojourn_mgfs(spec: &ChannelSpec, state: State, theta: f64, method: SojournMethod) -> Result<SojournMgfs> {
    let parts = SojournParts::new(spec.law(state), spec.tau(state), method)?;
    Ok(SojournMgfs { phi_d: parts.detected(theta)?, phi_u: parts.undetected(theta)?, pi: parts.pi })
}

/// CGF `log Phi~` of the observed sojourn in one state.
#[derive(Debug)]
pub struct ObservedCgf {
    state: State,
    method: SojournMethod,
    this: SojournParts,
    other: SojournParts,
    domain: (f64, f64),
}

impl ObservedCgf {
    pub fn new(spec: &ChannelSpec, state: State, method: SojournMethod) -> Result<Self> {
        spec.validate()?;
        let this = SojournParts::new(spec.law(state), spec.tau(state), method)?;
        let other = SojournParts::new(spec.law(state.other()), spec.tau(state.other()), method)?;
        let (a, b) = (this.detected_domain(), other.undetected_domain());
        let mut out = Self { state, method, this, other, domain: (a.0.max(b.0), a.1.min(b.1)) };
        out.domain.1 = out.divergence_edge();
        Ok(out)
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn method(&self) -> SojournMethod {
        self.method
    }

    /// `1 - Phi^U_other(theta) Phi_this(theta)`.
    fn denominator(&self, theta: f64) -> Result<f64> {
        Ok(1.0 - self.other.undetected(theta)? * self.this.full(theta)?)
    }

    /// Largest `theta` below the component strips where the geometric series
    /// still converges.
    fn divergence_edge(&self) -> f64 {
        let hi = self.domain.1;
        let ok = |t: f64| matches!(self.denominator(t), Ok(d) if d > 0.0);
        let edge = hi - 1e-9 * hi.abs().max(1.0);
        if ok(edge) {
            return hi;
        }
        let (mut a, mut b) = (0.0, edge);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if ok(m) {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }

    /// Open `theta` interval where `Phi~` is finite.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `Phi~(theta)`.
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        if !(theta > self.domain.0 && theta < self.domain.1) {
            let den = self.denominator(theta);
            if matches!(den, Ok(d) if d <= 0.0) {
                return Err(Error::SeriesDivergence { theta });
            }
            return Err(Error::OutsideStrip { theta, lower: self.domain.0, upper: self.domain.1 });
        }
        let den = self.denominator(theta)?;
        if !(den > 0.0) {
            return Err(Error::SeriesDivergence { theta });
        }
        Ok(self.this.detected(theta)? / self.this.pi * self.other.pi / den)
    }

    pub fn k(&self, theta: f64) -> Result<f64> {
        Ok(self.mgf(theta)?.ln())
    }

    /// `(k, k1, k2)` of `log Phi~` by central differences of `k`.
    ///
    /// Unsuitable for the hybrid backend, whose pieces meet with a jump at
    /// `theta = 0`; [`CgfEvaluator::eval`] chains component derivatives instead.
    pub fn eval_by_differences(&self, theta: f64) -> Result<CgfTriple> {
        let k = self.k(theta)?;
        let k1 = central_first_derivative(|t| self.k(t), theta, self.domain)?;
        let k2 = second_difference(|t| self.k(t), theta, k, self.domain)?;
        Ok(CgfTriple { k, k1, k2 })
    }
}

impl CgfEvaluator for ObservedCgf {
    /// With `A` the truncated CGF of the detected piece and
    /// `P = Phi^U_other Phi_this`, `log Phi~ = A + const - log(1 - P)`, so
    /// `k1 = A' + P p1 / (1 - P)` and `k2 = A'' + P (p2 + p1^2) / (1 - P) + (P p1 / (1 - P))^2`
    /// where `p1`, `p2` are the derivatives of `log P`.
    fn eval(&self, theta: f64) -> Result<CgfTriple> {
        let k = self.k(theta)?;
        let full = CgfModel::eval(&self.this.law, theta)?;
        let (a1, a2) = match &self.this.pieces {
            None => (full.k1, full.k2),
            Some((d, _)) => {
                let t = d.triple(theta)?;
                (t.k1, t.k2)
            }
        };
        let (k1, k2) = match &self.other.pieces {
            None => (a1, a2),
            Some((_, u)) => {
                let t = u.triple(theta)?;
                let p = self.other.undetected(theta)? * full.k.exp();
                let (p1, p2) = (t.k1 + full.k1, t.k2 + full.k2);
                let r = p / (1.0 - p);
                (a1 + r * p1, a2 + r * (p2 + p1 * p1) + (r * p1).powi(2))
            }
        };
        Ok(CgfTriple { k, k1, k2 })
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// `Phi~(theta)` for the observed sojourn in `state`.
pub fn observed_sojourn_mgf(spec: &ChannelSpec, state: State, theta: f64, method: SojournMethod) -> Result<f64> {
    ObservedCgf::new(spec, state, method)?.mgf(theta)
}

/// First-order saddlepoint density of the observed sojourn on a grid; each
/// point fails independently.
pub fn observed_sojourn_density(
    spec: &ChannelSpec,
    state: State,
    grid: &[f64],
    method: SojournMethod,
) -> Result<Vec<Result<SaddlepointDensity>>> {
    let cgf = ObservedCgf::new(spec, state, method)?;
    Ok(Exec::default().map(grid, |&x| saddlepoint_density(&cgf, x)))
}

/// `n` observed sojourns in `state`, using the default executor.
pub fn simulate_observed_sojourns(spec: &ChannelSpec, state: State, n: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_observed_sojourns_with(Exec::default(), spec, state, n, seed)
}

/// Simulates the alternating residence sequence and merges undetected
/// residences. Each chunk of [`CHUNK`] observations runs an independent
/// channel on its own generator stream and discards its first observed
/// period, so the output depends only on `seed`.
pub fn simulate_observed_sojourns_with(exec: Exec, spec: &ChannelSpec, state: State, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<f64>>> = exec.map_range(chunks, |i| {
        let len = CHUNK.min(n - i * CHUNK);
        let mut rng = chunk_rng(seed, i as u64);
        let mut out = Vec::with_capacity(len);
        let mut raw = state.other();
        let mut current: Option<(State, f64)> = None;
        let mut first = true;
        while out.len() < len {
            let law = spec.law(raw);
            let t = law.sample(&mut rng).ok_or_else(|| Error::MissingSampler(law.name()))?;
            let detected = t > spec.tau(raw);
            current = match current {
                None if detected => Some((raw, t)),
                None => None,
                Some((s, acc)) if s == raw || !detected => Some((s, acc + t)),
                Some((s, acc)) => {
                    if !first && s == state {
                        out.push(acc);
                    }
                    first = false;
                    Some((raw, t))
                }
            };
            raw = raw.other();
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(n);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Histogram density of `samples` on cells centred at the grid points, with
/// cell edges halfway between neighbours.
pub fn empirical_density(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    if m == 0 || samples.is_empty() {
        return vec![f64::NAN; m];
    }
    let mut edges = Vec::with_capacity(m + 1);
    let first_gap = if m > 1 { grid[1] - grid[0] } else { 1.0 };
    let last_gap = if m > 1 { grid[m - 1] - grid[m - 2] } else { 1.0 };
    edges.push(grid[0] - 0.5 * first_gap);
    for w in grid.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(grid[m - 1] + 0.5 * last_gap);
    let mut counts = vec![0usize; m];
    for &x in samples {
        let i = edges.partition_point(|&e| e <= x);
        if i >= 1 && i <= m {
            counts[i - 1] += 1;
        }
    }
    let total = samples.len() as f64;
    (0..m).map(|i| counts[i] as f64 / total / (edges[i + 1] - edges[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn markov() -> ChannelSpec {
        ChannelSpec::markov(1.0, 2.0, 0.2, 0.2).unwrap()
    }

    #[test]
    fn exponential_detection_at_zero() {
        let m = truncated_sojourn_mgfs(&markov(), State::Open, 0.0, SojournMethod::Exact).unwrap();
        assert_relative_eq!(m.phi_d, (-0.2f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(m.phi_u, 1.0 - (-0.2f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(m.pi, (-0.2f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn partition_at_zero_for_every_method() {
        let spec = ChannelSpec::new(Distribution::gamma(2.0, 3.0).unwrap(), Distribution::exponential(1.5).unwrap(), 0.3, 0.1).unwrap();
        for method in SojournMethod::ALL {
            for state in [State::Open, State::Closed] {
                let m = truncated_sojourn_mgfs(&spec, state, 0.0, method).unwrap();
                assert_relative_eq!(m.phi_d + m.phi_u, 1.0, max_relative = 1e-12);
                assert_relative_eq!(m.phi_d, m.pi, max_relative = 1e-12);
                assert_relative_eq!(observed_sojourn_mgf(&spec, state, 0.0, method).unwrap(), 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn detected_exponential_closed_form() {
        let (lambda, tau, theta) = (1.0f64, 0.2, 0.4);
        let m = truncated_sojourn_mgfs(&markov(), State::Open, theta, SojournMethod::Exact).unwrap();
        let expected = lambda / (lambda - theta) * (-(lambda - theta) * tau).exp();
        assert_relative_eq!(m.phi_d, expected, max_relative = 1e-10);
    }

    #[test]
    fn chained_derivatives_match_differences() {
        let spec = ChannelSpec::new(Distribution::gamma(2.0, 2.0).unwrap(), Distribution::exponential(1.0).unwrap(), 0.2, 0.3).unwrap();
        for method in [SojournMethod::Exact, SojournMethod::Lr, SojournMethod::Conv] {
            let cgf = ObservedCgf::new(&spec, State::Open, method).unwrap();
            for theta in [-1.0, 0.0, 0.3] {
                let a = cgf.eval(theta).unwrap();
                let b = cgf.eval_by_differences(theta).unwrap();
                assert_relative_eq!(a.k1, b.k1, max_relative = 1e-6);
                assert_relative_eq!(a.k2, b.k2, max_relative = 1e-4);
            }
        }
        let hybrid = ObservedCgf::new(&spec, State::Open, SojournMethod::Hybrid).unwrap();
        assert!(hybrid.eval(0.0).unwrap().k2 > 0.0);
    }

    #[test]
    fn divergence_is_reported() {
        let cgf = ObservedCgf::new(&markov(), State::Open, SojournMethod::Exact).unwrap();
        let edge = cgf.domain().1;
        assert!(edge < 1.0);
        assert!(matches!(cgf.mgf(edge + 1e-6), Err(Error::SeriesDivergence { .. })));
    }

    #[test]
    fn zero_thresholds_leave_sojourns_untouched() {
        let spec = ChannelSpec::markov(1.0, 2.0, 0.0, 0.0).unwrap();
        let obs = simulate_observed_sojourns(&spec, State::Open, 1000, 5).unwrap();
        let mut rng = chunk_rng(5, 0);
        let mut raw = Vec::new();
        // The raw sequence starts closed and that closed period is the
        // discarded one.
        let mut state = State::Closed;
        while raw.len() < 1000 {
            let t = spec.law(state).sample(&mut rng).unwrap();
            if state == State::Open {
                raw.push(t);
            }
            state = state.other();
        }
        assert_eq!(obs, raw);
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = markov();
        let a = simulate_observed_sojourns_with(Exec::Sequential, &spec, State::Closed, 70_000, 9).unwrap();
        let b = simulate_observed_sojourns_with(Exec::Parallel, &spec, State::Closed, 70_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x > 0.2));
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = markov();
        let again: ChannelSpec = spec.to_string().parse().unwrap();
        assert_eq!(again, spec);
        let s: ChannelSpec = "open: family=gamma shape=2 rate=1\nclosed = family=exp rate=3 # fast\ntau = 0.1\n".parse().unwrap();
        assert_eq!(s.tau_o, 0.1);
        assert_eq!(s.tau_c, 0.1);
        assert!("open = family=normal\nclosed = family=exp\ntau = 1".parse::<ChannelSpec>().is_err());
        assert!("open = family=exp\nclosed = family=exp\ntau = 1\nfoo = 2".parse::<ChannelSpec>().is_err());
    }

    #[test]
    fn histogram_density_normalizes() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let grid: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
        for d in empirical_density(&xs, &grid) {
            assert_relative_eq!(d, 1.0, max_relative = 1e-12);
        }
    }
}
