//! The Gauss map `G(x) = 1/x - floor(1/x)` and regular continued fractions,
//! kept as a comparison baseline.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::ExactRational;

fn check(x: &ExactRational) -> Result<()> {
    if x.is_negative() || x >= &BigRational::one() {
        return Err(Error::Domain(format!("{x} is outside [0, 1)")));
    }
    Ok(())
}

pub fn gauss_step(x: &ExactRational) -> Result<ExactRational> {
    check(x)?;
    if x.is_zero() {
        return Ok(BigRational::zero());
    }
    let inv = x.recip();
    Ok(inv.fract())
}

/// Partial quotients of `x`, with the index at which the orbit hit 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfExpansion {
    pub digits: Vec<u64>,
    pub orbit: Vec<ExactRational>,
    /// Number of partial quotients after which the orbit reached 0.
    pub terminated_at: Option<usize>,
}

pub fn cf_expand(x: &ExactRational, n: usize) -> Result<CfExpansion> {
    check(x)?;
    if x.is_zero() {
        return Err(Error::Domain("continued fraction digits need x > 0".into()));
    }
    let mut digits = Vec::new();
    let mut orbit = Vec::new();
    let mut cur = x.clone();
    let mut terminated_at = None;
    while digits.len() < n {
        if cur.is_zero() {
            terminated_at = Some(digits.len());
            break;
        }
        let c = cur.denom().div_floor(cur.numer());
        digits.push(c.to_u64().ok_or(Error::DigitOverflow)?);
        let next = gauss_step(&cur)?;
        orbit.push(cur);
        cur = next;
    }
    if terminated_at.is_none() && cur.is_zero() {
        terminated_at = Some(digits.len());
    }
    Ok(CfExpansion { digits, orbit, terminated_at })
}
