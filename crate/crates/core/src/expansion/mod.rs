//! Exact evaluation of the Lüroth map, digit extraction and the coding map
//! between digit sequences and `(0, 1]`.
//!
//! Cells follow the half-open convention `1/a < x <= 1/(a-1)`, so `x = 1/2`
//! has first digit 3 and `x = 1` has first digit 2.

mod gauss;
mod stream;

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::ExactRational;

pub use gauss::{cf_expand, gauss_step, CfExpansion};
pub use stream::{DigitSource, DigitStream, StreamSpec};

/// Default cap on orbit iterates inspected by cycle detection.
pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

/// Finite word of Lüroth digits, each `>= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitWord(Vec<u64>);

impl DigitWord {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if let Some((position, &digit)) = digits.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::InvalidDigit { digit, position });
        }
        Ok(DigitWord(digits))
    }

    /// Like [`DigitWord::new`] but also rejects the empty word.
    pub fn nonempty(digits: Vec<u64>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyWord);
        }
        Self::new(digits)
    }

    pub fn empty() -> Self {
        DigitWord(Vec::new())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }

    pub fn prefix(&self, n: usize) -> DigitWord {
        DigitWord(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &[u64]) -> Result<DigitWord> {
        let mut digits = self.0.clone();
        digits.extend_from_slice(other);
        DigitWord::new(digits)
    }

    /// Whether the word is not a proper power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        (1..n).filter(|&p| n.is_multiple_of(p)).all(|p| {
            self.0.iter().enumerate().any(|(i, d)| *d != self.0[i % p])
        })
    }
}

impl Deref for DigitWord {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl TryFrom<Vec<u64>> for DigitWord {
    type Error = Error;
    fn try_from(digits: Vec<u64>) -> Result<Self> {
        DigitWord::new(digits)
    }
}

impl From<DigitWord> for Vec<u64> {
    fn from(word: DigitWord) -> Vec<u64> {
        word.0
    }
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// `preperiod · period^∞`, the digit pattern of a rational point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventualPeriod {
    pub preperiod: DigitWord,
    pub period: DigitWord,
}

impl EventualPeriod {
    pub fn new(preperiod: Vec<u64>, period: Vec<u64>) -> Result<Self> {
        Ok(EventualPeriod {
            preperiod: DigitWord::new(preperiod)?,
            period: DigitWord::nonempty(period)?,
        })
    }

    /// Digit at 1-based `position`.
    pub fn digit(&self, position: u64) -> u64 {
        debug_assert!(position >= 1);
        let pre = self.preperiod.len() as u64;
        if position <= pre {
            self.preperiod[(position - 1) as usize]
        } else {
            let p = self.period.len() as u64;
            self.period[((position - pre - 1) % p) as usize]
        }
    }

    /// Descriptor of the shifted sequence.
    pub fn shift(&self) -> EventualPeriod {
        if self.preperiod.is_empty() {
            let mut period = self.period.as_slice().to_vec();
            period.rotate_left(1);
            EventualPeriod { preperiod: DigitWord::empty(), period: DigitWord(period) }
        } else {
            EventualPeriod {
                preperiod: DigitWord(self.preperiod[1..].to_vec()),
                period: self.period.clone(),
            }
        }
    }
}

fn check_point(x: &ExactRational, allow_zero: bool) -> Result<()> {
    let ok_low = if allow_zero { !x.is_negative() } else { x.is_positive() };
    if !ok_low || x > &BigRational::one() {
        let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
        return Err(Error::Domain(format!("{x} is outside {range}")));
    }
    Ok(())
}

/// First Lüroth digit: the unique `a >= 2` with `1/a < x <= 1/(a-1)`.
pub fn luroth_digit(x: &ExactRational) -> Result<u64> {
    check_point(x, false)?;
    // floor(1/x) + 1 covers both the integral and non-integral case of 1/x.
    let a = x.denom().div_floor(x.numer()) + BigInt::one();
    let a = a.to_u64().ok_or(Error::DigitOverflow)?;
    debug_assert!(x > &BigRational::new(BigInt::one(), BigInt::from(a)));
    debug_assert!(x <= &BigRational::new(BigInt::one(), BigInt::from(a - 1)));
    Ok(a)
}

/// One step of the Lüroth map: `L(0) = 0`, otherwise `a(a-1)x - (a-1)`.
pub fn luroth_step(x: &ExactRational) -> Result<ExactRational> {
    check_point(x, true)?;
    if x.is_zero() {
        return Ok(BigRational::zero());
    }
    let a = luroth_digit(x)?;
    Ok(branch_image(x, a))
}

/// `a(a-1)x - (a-1)`, the affine branch on the cell of digit `a`.
pub(crate) fn branch_image(x: &ExactRational, a: u64) -> ExactRational {
    let a = BigInt::from(a);
    let am1 = &a - BigInt::one();
    x * BigRational::from_integer(&a * &am1) - BigRational::from_integer(am1)
}

/// `n` iterates of the map.
pub fn luroth_iterate(x: &ExactRational, n: usize) -> Result<ExactRational> {
    let mut cur = x.clone();
    for _ in 0..n {
        cur = luroth_step(&cur)?;
    }
    Ok(cur)
}

/// First `n` digits of `x`.
pub fn luroth_digits(x: &ExactRational, n: usize) -> Result<DigitWord> {
    check_point(x, false)?;
    let mut digits = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        let a = luroth_digit(&cur)?;
        digits.push(a);
        cur = branch_image(&cur, a);
    }
    Ok(DigitWord(digits))
}

/// Digits of a rational point together with its orbit and, when found within
/// the cycle cap, its eventual period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LurothExpansion {
    pub digits: DigitWord,
    /// `x, L(x), …, L^{n-1}(x)`.
    pub orbit: Vec<ExactRational>,
    pub period: Option<EventualPeriod>,
}

pub fn luroth_expand(x: &ExactRational, n: usize) -> Result<LurothExpansion> {
    luroth_expand_with_cap(x, n, DEFAULT_CYCLE_CAP)
}

pub fn luroth_expand_with_cap(x: &ExactRational, n: usize, cap: usize) -> Result<LurothExpansion> {
    check_point(x, false)?;
    let period = detect_period(x, cap).ok();
    let mut digits = Vec::with_capacity(n);
    let mut orbit = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        let a = luroth_digit(&cur)?;
        digits.push(a);
        let next = branch_image(&cur, a);
        orbit.push(cur);
        cur = next;
    }
    Ok(LurothExpansion { digits: DigitWord(digits), orbit, period })
}

/// Finds the eventual period of the orbit of a rational point by exact-value
/// hashing. Fails rather than guessing when no repeat occurs within `cap`
/// iterates.
pub fn detect_period(x: &ExactRational, cap: usize) -> Result<EventualPeriod> {
    check_point(x, false)?;
    let mut seen: HashMap<ExactRational, usize> = HashMap::new();
    let mut digits = Vec::new();
    let mut cur = x.clone();
    while digits.len() < cap {
        if let Some(&start) = seen.get(&cur) {
            let period = digits.split_off(start);
            return Ok(EventualPeriod { preperiod: DigitWord(digits), period: DigitWord(period) });
        }
        let a = luroth_digit(&cur)?;
        let next = branch_image(&cur, a);
        seen.insert(cur, digits.len());
        digits.push(a);
        cur = next;
    }
    Err(Error::CycleCapExceeded(cap))
}

/// Left endpoint `<c_1,…,c_n>` and diameter `Π 1/(c_j(c_j-1))` of the
/// cylinder of `word`. The empty word gives `(0, 1)`.
pub fn cylinder(word: &[u64]) -> Result<(ExactRational, ExactRational)> {
    let mut lo = BigRational::zero();
    let mut scale = BigRational::one();
    for (position, &c) in word.iter().enumerate() {
        if c < 2 {
            return Err(Error::InvalidDigit { digit: c, position });
        }
        let c = BigInt::from(c);
        lo += &scale / BigRational::from_integer(c.clone());
        scale /= BigRational::from_integer(&c * (&c - BigInt::one()));
    }
    Ok((lo, scale))
}

/// Fixed point of the inverse branch of `period`: the value of `period^∞`.
pub fn periodic_value(period: &[u64]) -> Result<ExactRational> {
    if period.is_empty() {
        return Err(Error::EmptyWord);
    }
    let (lo, diam) = cylinder(period)?;
    Ok(lo / (BigRational::one() - diam))
}

/// Value of the Lüroth series of `word` followed by an optional eventually
/// periodic tail. Without a tail this is the finite partial sum.
pub fn luroth_value(word: &[u64], tail: Option<&EventualPeriod>) -> Result<ExactRational> {
    let (lo, diam) = cylinder(word)?;
    match tail {
        None => Ok(lo),
        Some(tail) => {
            let inner = periodic_value(&tail.period)?;
            let (pre_lo, pre_diam) = cylinder(&tail.preperiod)?;
            Ok(lo + diam * (pre_lo + pre_diam * inner))
        }
    }
}

/// Exact value of an eventually periodic stream.
pub fn stream_value(stream: &DigitStream) -> Result<ExactRational> {
    let period = stream.period().ok_or(Error::NotPeriodic)?;
    luroth_value(&[], Some(&period))
}

/// Closed bracket `[lo, hi]` of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    #[serde(with = "crate::rational::serde_str")]
    pub lo: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub hi: ExactRational,
}

impl Bracket {
    pub fn point(value: ExactRational) -> Self {
        Bracket { lo: value.clone(), hi: value }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> ExactRational {
        &self.hi - &self.lo
    }

    /// Bracket of `|u - v|` for `u` in `self`, `v` in `other`.
    pub fn abs_diff(&self, other: &Bracket) -> Bracket {
        let zero = BigRational::zero();
        let lo = if self.hi < other.lo {
            &other.lo - &self.hi
        } else if other.hi < self.lo {
            &self.lo - &other.hi
        } else {
            zero
        };
        let a = (&self.hi - &other.lo).abs();
        let b = (&other.hi - &self.lo).abs();
        Bracket { lo, hi: a.max(b) }
    }
}

/// Enclosure `[<w>, <w> + |I(w)|]` of `Λ(σ^start(s))` from `depth` digits.
pub fn stream_enclosure(stream: &DigitStream, start: u64, depth: usize) -> Bracket {
    let window = stream.window(start, depth);
    let (lo, diam) = cylinder(&window).expect("streams only produce digits >= 2");
    let hi = &lo + diam;
    Bracket { lo, hi }
}
