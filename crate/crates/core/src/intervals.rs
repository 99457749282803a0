//! Fundamental intervals `I_n(c)`: exact endpoints, diameters, inverse
//! branches and gaps.

use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{cylinder, DigitStream, DigitWord};
use crate::rational::{int, ExactRational};

/// The half-open cell `(lo, hi]` of points whose first digits spell `word`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FundamentalInterval {
    pub word: DigitWord,
    #[serde(with = "crate::rational::serde_str")]
    pub lo: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub hi: ExactRational,
}

impl FundamentalInterval {
    pub fn diameter(&self) -> ExactRational {
        &self.hi - &self.lo
    }

    /// Membership in the half-open cell.
    pub fn contains(&self, x: &ExactRational) -> bool {
        &self.lo < x && x <= &self.hi
    }

    pub fn closure_contains(&self, x: &ExactRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Whether this cell lies inside the open interval `(lo, hi)`.
    pub fn inside_open(&self, lo: &ExactRational, hi: &ExactRational) -> bool {
        lo <= &self.lo && &self.hi < hi
    }

    pub fn contains_interval(&self, other: &FundamentalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }
}

/// `I_n(w) = (<w>, <w> + Π 1/(c_j(c_j-1))]`.
pub fn fundamental_interval(word: &[u64]) -> Result<FundamentalInterval> {
    let word = DigitWord::nonempty(word.to_vec())?;
    let (lo, diam) = cylinder(&word)?;
    let hi = &lo + diam;
    Ok(FundamentalInterval { word, lo, hi })
}

/// The level-`n` cell containing the value of `stream`.
pub fn luroth_enclosure(stream: &DigitStream, n: usize) -> Result<FundamentalInterval> {
    fundamental_interval(&stream.prefix(n))
}

pub fn interval_diameter(word: &[u64]) -> Result<ExactRational> {
    Ok(cylinder(word)?.1)
}

/// The inverse branch `T_w`: the point whose digits are `w` followed by the
/// digits of `y`. Affine, `lo + |I(w)|·y`.
pub fn inverse_branch(word: &[u64], y: &ExactRational) -> Result<ExactRational> {
    if !y.is_positive() || y > &BigRational::one() {
        return Err(Error::Domain(format!("{y} is outside (0, 1]")));
    }
    let (lo, diam) = cylinder(word)?;
    Ok(lo + diam * y)
}

/// Exact distance between the closures of two cells; zero iff they meet.
pub fn interval_gap(a: &FundamentalInterval, b: &FundamentalInterval) -> ExactRational {
    closed_gap((&a.lo, &a.hi), (&b.lo, &b.hi))
}

pub(crate) fn closed_gap(a: (&ExactRational, &ExactRational), b: (&ExactRational, &ExactRational)) -> ExactRational {
    if a.1 < b.0 {
        b.0 - a.1
    } else if b.1 < a.0 {
        a.0 - b.1
    } else {
        BigRational::zero()
    }
}

/// Outcome of the non-adjacent cell separation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    #[serde(with = "crate::rational::serde_str")]
    pub gap: ExactRational,
    /// `E^{-2m}`.
    #[serde(with = "crate::rational::serde_str")]
    pub bound: ExactRational,
    pub holds: bool,
}

/// Checks `d(I_m(c), I_m(b)) >= E^{-2m}` for `b ∈ [2,E]^m` whose last digit `e`
/// satisfies `3 <= e <= E-1` and `|c_m - e| >= 2`. Precondition failures are
/// errors; a failing bound is reported through `holds = false`.
pub fn check_lu_dis_separation(c: &[u64], b: &[u64], big_e: u64) -> Result<SeparationCertificate> {
    let m = c.len();
    if m == 0 || b.len() != m {
        return Err(Error::Precondition(format!(
            "words must have equal positive length, got {} and {}",
            c.len(),
            b.len()
        )));
    }
    if big_e < 6 {
        return Err(Error::Precondition(format!("E = {big_e} < 6")));
    }
    if let Some(&d) = b.iter().find(|&&d| d < 2 || d > big_e) {
        return Err(Error::Precondition(format!("digit {d} of b is outside [2, {big_e}]")));
    }
    let e = b[m - 1];
    if !(3..=big_e - 1).contains(&e) {
        return Err(Error::Precondition(format!("last digit {e} of b is outside [3, {}]", big_e - 1)));
    }
    if c[m - 1].abs_diff(e) < 2 {
        return Err(Error::Precondition(format!("|c_m - e| = |{} - {e}| < 2", c[m - 1])));
    }
    let gap = interval_gap(&fundamental_interval(c)?, &fundamental_interval(b)?);
    let bound = Pow::pow(int(big_e), 2 * m as u32).recip();
    let holds = gap >= bound;
    Ok(SeparationCertificate { gap, bound, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{luroth_digits, luroth_iterate};
    use crate::rational::rat;

    fn cell(w: &[u64]) -> FundamentalInterval {
        fundamental_interval(w).unwrap()
    }

    #[test]
    fn interval_examples() {
        assert_eq!((cell(&[2]).lo, cell(&[2]).hi), (rat(1, 2), rat(1, 1)));
        assert_eq!((cell(&[2, 2]).lo, cell(&[2, 2]).hi), (rat(3, 4), rat(1, 1)));
        assert_eq!((cell(&[2, 3]).lo, cell(&[2, 3]).hi), (rat(2, 3), rat(3, 4)));
        for c in 2..40u64 {
            let i = cell(&[c]);
            assert_eq!((i.lo, i.hi), (rat(1, c as i64), rat(1, c as i64 - 1)));
        }
        assert!(matches!(fundamental_interval(&[2, 1]), Err(Error::InvalidDigit { digit: 1, position: 1 })));
        assert_eq!(fundamental_interval(&[]), Err(Error::EmptyWord));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(interval_diameter(&[2, 3]).unwrap(), rat(1, 12));
        assert_eq!(interval_diameter(&[5]).unwrap(), rat(1, 20));
        assert_eq!(interval_diameter(&[2; 9]).unwrap(), rat(1, 512));
    }

    #[test]
    fn inverse_branch_examples() {
        assert_eq!(inverse_branch(&[2], &rat(1, 1)).unwrap(), rat(1, 1));
        assert_eq!(inverse_branch(&[3], &rat(2, 5)).unwrap(), rat(2, 5));
        assert_eq!(luroth_digits(&rat(2, 5), 6).unwrap().as_slice(), &[3; 6]);
        let z = inverse_branch(&[2, 2], &rat(1, 2)).unwrap();
        assert_eq!(z, rat(7, 8));
        assert_eq!(luroth_iterate(&z, 2).unwrap(), rat(1, 2));
        assert!(inverse_branch(&[2], &rat(0, 1)).is_err());
    }

    /// Gap of closures by brute force over the four endpoint pairs, with an
    /// overlap test.
    fn gap_oracle(a: &FundamentalInterval, b: &FundamentalInterval) -> ExactRational {
        let overlap = a.lo <= b.hi && b.lo <= a.hi;
        if overlap {
            return rat(0, 1);
        }
        [(&a.lo, &b.hi), (&a.hi, &b.lo), (&a.lo, &b.lo), (&a.hi, &b.hi)]
            .iter()
            .map(|(x, y)| (*x - *y).abs())
            .min()
            .unwrap()
    }

    #[test]
    fn gap_examples() {
        assert_eq!(interval_gap(&cell(&[2]), &cell(&[3])), rat(0, 1));
        // d((1/4,1/3], (1/2,1]) = 1/2 - 1/3
        assert_eq!(interval_gap(&cell(&[2]), &cell(&[4])), rat(1, 6));
        assert_eq!(gap_oracle(&cell(&[2]), &cell(&[4])), rat(1, 6));
        assert_eq!(interval_gap(&cell(&[2, 2]), &cell(&[2, 4])), rat(1, 12));
        assert_eq!(gap_oracle(&cell(&[2, 2]), &cell(&[2, 4])), rat(1, 12));
        for a in [[2u64, 5], [3, 3], [7, 2]] {
            for b in [[2u64, 2], [4, 6], [3, 5]] {
                assert_eq!(interval_gap(&cell(&a), &cell(&b)), gap_oracle(&cell(&a), &cell(&b)));
            }
        }
    }

    #[test]
    fn separation_examples() {
        let cert = check_lu_dis_separation(&[2, 6], &[2, 3], 6).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.bound, rat(1, 1296));
        let cert = check_lu_dis_separation(&[7], &[3], 7).unwrap();
        assert_eq!(cert.gap, rat(1, 6));
        assert!(cert.holds && cert.bound == rat(1, 49));
        assert!(check_lu_dis_separation(&[2, 2], &[2, 4], 6).unwrap().holds);
    }

    #[test]
    fn separation_preconditions() {
        // |c_m - e| = 1
        assert!(matches!(check_lu_dis_separation(&[2, 4], &[2, 3], 6), Err(Error::Precondition(_))));
        // e = 2 is not allowed
        assert!(matches!(check_lu_dis_separation(&[2, 5], &[2, 2], 6), Err(Error::Precondition(_))));
        // digit of b above E
        assert!(matches!(check_lu_dis_separation(&[2, 6], &[9, 3], 6), Err(Error::Precondition(_))));
        assert!(matches!(check_lu_dis_separation(&[2, 6], &[2, 3], 5), Err(Error::Precondition(_))));
    }
}
