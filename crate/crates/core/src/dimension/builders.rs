//! The concrete families: distal trees `𝒜(m, n)`, the `G_N^M` trees of the
//! asymptotic construction, and the parameter choices that make them work.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::tree::{block_geometry, cantor_tree, CantorTreeSpec, ChildBlock, ChildRule, DigitRange, TreeDescriptor};
use super::verify::DimensionError;
use crate::enclosure::{self, escalate, Fixed};
use crate::error::{Error, Result};
use crate::expansion::{Bracket, DigitStream};
use crate::rational::{int, ExactRational};

/// Digits the distal sequence may use: `⟦3, E-1⟧`, plus `E` itself when
/// `E = 6`, where `a = 4` has no partner in `{3, 4, 5}`.
pub fn admissible_distal_digits(big_e: u64) -> std::ops::RangeInclusive<u64> {
    if big_e == 6 {
        3..=6
    } else {
        3..=big_e.saturating_sub(1)
    }
}

/// Smallest `e ∈ ⟦3, E-1⟧` with `|a - e| >= 2`; for `E = 6` and `a = 4`,
/// which admit no such `e`, the value `E` is used.
pub fn distal_digit(a: u64, big_e: u64) -> Result<u64> {
    if big_e < 6 {
        return Err(Error::Precondition(format!("E = {big_e} < 6")));
    }
    Ok(admissible_distal_digits(big_e).find(|&e| a.abs_diff(e) >= 2).expect("E >= 6 leaves a candidate"))
}

/// `e_j = distal_digit(a_{jm})` for `j = 1..=count`.
pub fn distal_sequence(a: &DigitStream, big_e: u64, m: u64, count: usize) -> Result<Vec<u64>> {
    (1..=count as u64).map(|j| distal_digit(a.digit(j * m), big_e)).collect()
}

pub(crate) fn check_distal_params(big_e: u64, m: u64, n: u64) -> Result<()> {
    if big_e < 6 {
        return Err(Error::Precondition(format!("E = {big_e} < 6")));
    }
    if m < 2 {
        return Err(Error::Precondition(format!("m = {m} < 2")));
    }
    if n < big_e {
        return Err(Error::Precondition(format!("n = {n} < E = {big_e}")));
    }
    Ok(())
}

fn distal_block(m: u64, n: u64, e: u64) -> ChildBlock {
    let mut ranges = vec![DigitRange::Finite { lo: 2, hi: n }; (m - 1) as usize];
    ranges.push(DigitRange::single(e));
    ChildBlock::Product(ranges)
}

struct DistalRule {
    e_seq: Vec<u64>,
    m: u64,
    n: u64,
}

impl ChildRule for DistalRule {
    fn block(&self, level: usize, _: &[u64]) -> ChildBlock {
        distal_block(self.m, self.n, self.e_seq[level])
    }
    fn level_homogeneous(&self) -> bool {
        true
    }
}

fn distal_tree_from_seq(e_seq: Vec<u64>, big_e: u64, m: u64, n: u64) -> Result<CantorTreeSpec> {
    check_distal_params(big_e, m, n)?;
    if let Some(&e) = e_seq.iter().find(|&&e| !admissible_distal_digits(big_e).contains(&e)) {
        return Err(Error::Precondition(format!("e = {e} is not an admissible distal digit for E = {big_e}")));
    }
    let levels = e_seq.len();
    let descriptor = TreeDescriptor::Distal { e_seq: e_seq.clone(), m, n, big_e };
    CantorTreeSpec::new(
        vec![],
        (BigRational::zero(), BigRational::one()),
        Arc::new(DistalRule { e_seq, m, n }),
        levels,
        descriptor,
    )
}

/// The family `𝒜(m, n)`: level-`k` nodes are the closed cylinders of
/// `B_m(b, e)` for `b ∈ ⟦2, n⟧^{k(m-1)}`, with `e` the distal sequence of
/// `a`. Enumerates `levels` levels.
pub fn build_distal_tree(a: &DigitStream, big_e: u64, m: u64, n: u64, levels: usize) -> Result<CantorTreeSpec> {
    check_distal_params(big_e, m, n)?;
    distal_tree_from_seq(distal_sequence(a, big_e, m, levels)?, big_e, m, n)
}

/// `B(m, n)`: the smallest relative sibling gap of a distal block, over all
/// admissible last digits `e`. Exact.
pub fn distal_separation(big_e: u64, m: u64, n: u64) -> Result<ExactRational> {
    check_distal_params(big_e, m, n)?;
    let core = (BigRational::zero(), BigRational::one());
    Ok(admissible_distal_digits(big_e)
        .map(|e| block_geometry(&distal_block(m, n, e), &core).min_gap.expect("n >= 6 gives siblings"))
        .min()
        .expect("E >= 6"))
}

struct AsymptoticRule {
    a_prefix: Vec<u64>,
    big_m: u64,
    big_n: u64,
}

impl ChildRule for AsymptoticRule {
    fn block(&self, level: usize, _: &[u64]) -> ChildBlock {
        let a = self.a_prefix[self.big_n as usize - 1 + level];
        ChildBlock::Product(vec![if a <= self.big_m {
            DigitRange::single(a)
        } else {
            DigitRange::Unbounded { from: self.big_m + 1 }
        }])
    }
    fn level_homogeneous(&self) -> bool {
        true
    }
}

fn asymptotic_tree_from_prefix(a_prefix: Vec<u64>, big_m: u64, big_n: u64) -> Result<CantorTreeSpec> {
    if big_m < 3 || big_n < 1 {
        return Err(Error::Precondition(format!("need M >= 3 and N >= 1, got M = {big_m}, N = {big_n}")));
    }
    if (a_prefix.len() as u64) < big_n {
        return Err(Error::Precondition("prefix shorter than N".into()));
    }
    let levels = a_prefix.len() - big_n as usize + 1;
    let descriptor = TreeDescriptor::Asymptotic { a_prefix: a_prefix.clone(), big_m, big_n };
    let root = a_prefix[..big_n as usize - 1].to_vec();
    CantorTreeSpec::new(
        root,
        (BigRational::zero(), BigRational::one()),
        Arc::new(AsymptoticRule { a_prefix, big_m, big_n }),
        levels,
        descriptor,
    )
}

/// The tree of `G_N^M(a)`: the root is `Ī_{N-1}(a_1, …, a_{N-1})` and the
/// child digit at position `n >= N` is `a_n` when `a_n <= M`, otherwise any
/// digit `> M` (a countable list).
pub fn build_asymptotic_tree(a: &DigitStream, big_m: u64, big_n: u64, depth: usize) -> Result<CantorTreeSpec> {
    let len = big_n as usize - 1 + depth;
    asymptotic_tree_from_prefix(a.window(0, len), big_m, big_n)
}

/// Smallest integer `M >= 3` with `M >= 1 + (1/(2ε))^{1/(2ε)}`, which makes
/// `Σ_{k>M} (k(k-1))^{-(1/2+ε)} <= 1`.
pub fn asymptotic_threshold(eps: &ExactRational) -> Result<u64> {
    if eps <= &BigRational::zero() || eps > &BigRational::new(BigInt::one(), BigInt::from(2)) {
        return Err(Error::Precondition(format!("ε = {eps} is outside (0, 1/2]")));
    }
    let t = (eps * int(2)).recip(); // 1/(2ε) >= 1
    // t^t for integral t is exact; otherwise bracket it
    let bound: ExactRational = if t.denom().is_one() {
        let k = t.to_u64().ok_or_else(|| Error::Precondition("ε too small".into()))?;
        num_traits::pow(t.clone(), k as usize)
    } else {
        let (b, _) = escalate("threshold", |w| {
            let p = enclosure::pow(&t, &t, w);
            (p.hi.floor() == p.lo.floor()).then_some(p)
        })?;
        b.hi
    };
    let m = (bound + BigRational::one()).ceil().to_integer();
    Ok(m.to_u64().ok_or_else(|| Error::Precondition("threshold overflows".into()))?.max(3))
}

/// Parameters from the two inequalities `Σ_{j=2}^n (j(j-1))^{-s} > 1` and
/// `E^{-2}(Σ…)^{m-1} > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistalParameters {
    pub m: u64,
    pub n: u64,
    /// Enclosure of `Σ_{j=2}^n (j(j-1))^{-s}`.
    pub sum: Bracket,
}

const N_LIMIT: u64 = 1 << 20;

/// Smallest `n >= E` with the first inequality, then smallest `m >= 2` with
/// the second, both decided on rigorous enclosures.
pub fn choose_distal_parameters(s: &ExactRational, big_e: u64) -> Result<DistalParameters> {
    if s <= &BigRational::zero() || s >= &BigRational::one() {
        return Err(Error::Precondition(format!("s = {s} is outside (0, 1)")));
    }
    if big_e < 6 {
        return Err(Error::Precondition(format!("E = {big_e} < 6")));
    }
    let one = BigRational::one();
    let (found, _) = escalate("distal alphabet size", |w| {
        let neg_s = -s;
        let mut acc = Fixed { lo: BigInt::zero(), hi: BigInt::zero(), w };
        for j in 2..=N_LIMIT {
            acc = acc.add(&enclosure::pow_fixed(&int(j * (j - 1)), &neg_s, w));
            if j < big_e {
                continue;
            }
            let b = acc.to_bracket();
            if b.lo > one {
                return Some(Some((j, b)));
            }
            if b.hi > one {
                return None;
            }
        }
        Some(None)
    })?;
    let (n, sum) = found.ok_or_else(|| Error::Precondition(format!("no n <= {N_LIMIT} works for s = {s}")))?;
    // (m-1)·ln(sum) > 2 ln E
    let ((m, _), _) = escalate("distal block length", |w| {
        let ln_lo = enclosure::ln_rational(&sum.lo, w).to_bracket();
        let ln_hi = enclosure::ln_rational(&sum.hi, w).to_bracket();
        let target = enclosure::ln_int(&BigInt::from(big_e), w).to_bracket().scale_nonneg(&int(2));
        let guess = (target.midpoint_f64() / ln_lo.midpoint_f64()).floor().max(1.0) as u64;
        let passes = |k: u64| -> Option<bool> {
            let k = int(k);
            if &ln_lo.lo * &k > target.hi {
                Some(true)
            } else if &ln_hi.hi * &k <= target.lo {
                Some(false)
            } else {
                None
            }
        };
        let mut k = guess.saturating_sub(2).max(1);
        loop {
            match passes(k)? {
                true => break,
                false => k += 1,
            }
        }
        while k > 1 && passes(k - 1)? {
            k -= 1;
        }
        Some((k + 1, ()))
    })?;
    Ok(DistalParameters { m, n, sum })
}

/// Rebuilds a tree from its descriptor.
pub fn tree_from_descriptor(desc: &TreeDescriptor) -> Result<CantorTreeSpec, DimensionError> {
    let spec = match desc {
        TreeDescriptor::CantorN { n } => cantor_tree(*n)?,
        TreeDescriptor::Distal { e_seq, m, n, big_e } => distal_tree_from_seq(e_seq.clone(), *big_e, *m, *n)?,
        TreeDescriptor::Asymptotic { a_prefix, big_m, big_n } => asymptotic_tree_from_prefix(a_prefix.clone(), *big_m, *big_n)?,
        TreeDescriptor::Custom { name } => {
            return Err(DimensionError::Precondition(format!("custom tree {name:?} cannot be rebuilt")))
        }
    };
    Ok(spec)
}
