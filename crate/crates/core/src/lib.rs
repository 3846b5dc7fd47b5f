//! Minimal models of quantum L-infinity algebras on finite-dimensional super
//! vector spaces, computed as formal BV integrals
//!
//! ```text
//! m' = hbar * log  ∫_{L_s} exp(m / hbar) exp(-sigma / 2 hbar)
//! ```
//!
//! with two evaluation routes that are checked against each other exactly:
//! Gaussian integration over the canonical Lagrangian (Wick contraction, with
//! the coordinate-by-coordinate rules as an oracle) and the Feynman expansion
//! over connected stable graphs.
//!
//! All arithmetic is over exact rationals.

// adjacency matrices read better with explicit indices
#![allow(clippy::needless_range_loop, clippy::len_without_is_empty, clippy::should_implement_trait)]

pub mod bv;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod graphs;
pub mod integrate;
pub mod linalg;
pub mod sdr;
pub mod series;
pub mod space;
pub mod transfer;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use series::{Alphabet, FormalSeries, Monomial};
pub use space::{FormKind, Generator, Parity, SuperSpace};

/// Exact rational scalars.
pub type Q = num_rational::BigRational;

/// Shorthand for an integer-valued rational.
pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Shorthand for `n / d`.
pub fn qf(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`.
pub fn parse_q(s: &str) -> std::result::Result<Q, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = n.parse().map_err(|_| format!("bad rational `{s}`"))?;
    let d: num_bigint::BigInt = d.parse().map_err(|_| format!("bad rational `{s}`"))?;
    if num_traits::Zero::is_zero(&d) {
        return Err(format!("zero denominator in `{s}`"));
    }
    Ok(Q::new(n, d))
}

/// Formats a rational as `"p/q"` (or `"p"` when integral).
pub fn fmt_q(x: &Q) -> String {
    x.to_string()
}
