//! Exact-arithmetic toolkit for the Lüroth map `L(x) = a(a-1)x - (a-1)` on
//! `(0, 1]`, with the Gauss map as a baseline.
//!
//! All points, orbit values and cylinder endpoints are exact rationals.
//! Irrational points are handled on the symbolic side as [`DigitStream`]s
//! and only ever evaluated through rigorous enclosures.

pub mod chaos;
pub mod dimension;
pub mod enclosure;
pub mod error;
pub mod expansion;
pub mod intervals;
pub mod pairs;
pub mod rational;
pub mod stats;
pub mod symbolic;

pub use error::{Error, Result};
pub use expansion::{Bracket, DigitStream, DigitWord, EventualPeriod, StreamSpec};
pub use rational::ExactRational;
