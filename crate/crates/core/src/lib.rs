//! Saddlepoint approximations to cumulant generating functions of
//! interval-truncated random variables.
//!
//! Given the CGF `K0` of an untruncated variable `X` and a window `(a, b)`,
//! the crate approximates `K_(a,b)(theta) = log E[exp(theta X) | a < X < b]`
//! together with its first two derivatives, using either
//!
//! * the tilted representation with Lugannani-Rice CDFs ([`lr`]), valid on the
//!   convergence strip of `K0`, or
//! * the exponential-convolution representation ([`conv`]), which extends past
//!   a finite strip endpoint when the window is bounded on that side,
//!
//! and a rule-of-thumb dispatcher ([`hybrid`]) that picks between them per
//! tail. The approximations feed generic saddlepoint inversion ([`invert`]),
//! used by the Dirichlet rectangle ([`dirichlet`]) and ion-channel
//! ([`ionchannel`]) drivers. Quadrature and Monte-Carlo ground truth live in
//! [`oracle`].

// `!(x < y)` guards deliberately reject NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgf;
pub mod conv;
pub mod dirichlet;
pub mod error;
pub mod exec;
pub mod hybrid;
pub mod invert;
pub mod ionchannel;
pub mod lr;
pub mod oracle;
pub mod solve;
pub mod special;
pub mod window;

pub use cgf::{CgfEval, CgfModel, ConvergenceStrip, Distribution};
pub use conv::{Branch, ConvTruncation, Order};
pub use error::{Error, Result};
pub use exec::Exec;
pub use hybrid::HybridTruncation;
pub use invert::{CgfEvaluator, CgfTriple};
pub use lr::LrTruncation;
pub use oracle::ExactTruncation;
pub use window::{Method, TruncCgfEval, Window};

/// Parses a real number, also accepting `inf`, `-inf` and fractions `p/q`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a number: `{s}`"));
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| bad())?;
        let q: f64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0.0 {
            return Err(bad());
        }
        return Ok(p / q);
    }
    let v: f64 = s.parse().map_err(|_| bad())?;
    if v.is_nan() {
        return Err(bad());
    }
    Ok(v)
}
