//! Moran-type sums `Σ r_i^s`, their roots, and the tail moments
//! `Σ_{k>M} (k(k-1))^{-s}` of countable digit alphabets.

use std::collections::HashMap;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enclosure::{self, exact_pow, Fixed, PRECISION_LADDER};
use crate::error::{Error, Result};
use crate::expansion::Bracket;
use crate::rational::{int, pow2_neg, rat, to_f64};

/// Stop bisecting once the bracket is narrower than `2^-46` (< 1e-12).
const WIDTH_BITS: u64 = 46;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_STEPS: u32 = 400;

/// Contraction ratios `1/(j(j-1))`, `j = 2..=n`, of the cylinders of `F_n`.
pub fn cantor_ratios(n: u64) -> Vec<BigRational> {
    (2..=n).map(|j| BigRational::new(BigInt::one(), BigInt::from(j * (j - 1)))).collect()
}

/// Enclosure of `Σ_i r_i^s`.
pub struct MoranSum {
    ratios: Vec<BigRational>,
    ln_cache: HashMap<u32, Vec<Fixed>>,
}

impl MoranSum {
    pub fn new(ratios: Vec<BigRational>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::Precondition("no ratios".into()));
        }
        if let Some(r) = ratios.iter().find(|r| !r.is_positive() || **r >= BigRational::one()) {
            return Err(Error::Precondition(format!("ratio {r} is outside (0, 1)")));
        }
        Ok(MoranSum { ratios, ln_cache: HashMap::new() })
    }

    /// Exact value when every term is an exact power.
    pub fn exact(&self, s: &BigRational) -> Option<BigRational> {
        self.ratios.iter().map(|r| exact_pow(r, s)).sum()
    }

    pub fn enclose(&mut self, s: &BigRational, w: u32) -> Bracket {
        if let Some(v) = self.exact(s) {
            return Bracket::point(v);
        }
        let ratios = &self.ratios;
        let lns = self
            .ln_cache
            .entry(w)
            .or_insert_with(|| ratios.par_iter().map(|r| enclosure::ln_for_pow(r, w)).collect());
        let (lo, hi) = lns
            .par_iter()
            .map(|l| {
                let p = enclosure::pow_fixed_from_ln(l, s);
                (p.lo, p.hi)
            })
            .reduce(|| (BigInt::zero(), BigInt::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
        Fixed { lo, hi, w }.to_bracket()
    }

    /// Sign of `Σ r_i^s - 1` together with the enclosure that decided it.
    fn sign_minus_one(&mut self, s: &BigRational) -> Result<(Sign, Bracket)> {
        let one = BigRational::one();
        for w in PRECISION_LADDER {
            let b = self.enclose(s, w).sub(&Bracket::point(one.clone()));
            if b.is_exact() {
                let sign = if b.lo.is_zero() { Sign::NoSign } else if b.lo.is_positive() { Sign::Plus } else { Sign::Minus };
                return Ok((sign, b));
            }
            if b.lo.is_positive() {
                return Ok((Sign::Plus, b));
            }
            if b.hi.is_negative() {
                return Ok((Sign::Minus, b));
            }
        }
        Err(Error::Indecision(format!("sign of the Moran sum at s = {s}")))
    }
}

/// Root `s*` of `Σ r_i^s = 1`, bracketed by a verified sign change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoranSolution {
    #[serde(with = "crate::rational::serde_str")]
    pub lo: BigRational,
    #[serde(with = "crate::rational::serde_str")]
    pub hi: BigRational,
    /// Upper bound on `|Σ r_i^s - 1|` over the bracket endpoints.
    pub residual: f64,
    pub steps: u32,
    /// The root was hit exactly (`lo == hi`).
    pub exact: bool,
}

impl MoranSolution {
    pub fn midpoint(&self) -> f64 {
        (to_f64(&self.lo) + to_f64(&self.hi)) / 2.0
    }

    pub fn width(&self) -> f64 {
        to_f64(&(&self.hi - &self.lo))
    }
}

/// Bisection for `Σ r_i^s = 1` with ratios in `(0, 1)`. The sum is strictly
/// decreasing in `s`, so the root is unique. Each step decides the sign at the
/// dyadic midpoint rigorously; the loop stops when the bracket is below
/// `2^-46` and the residual below `1e-12`.
pub fn moran_solve_ratios(ratios: &[BigRational]) -> Result<MoranSolution> {
    let mut sum = MoranSum::new(ratios.to_vec())?;
    let exact_root = |s: BigRational| MoranSolution { lo: s.clone(), hi: s, residual: 0.0, steps: 0, exact: true };
    let mut lo = BigRational::zero();
    let (s0, _) = sum.sign_minus_one(&lo)?;
    if s0 == Sign::NoSign {
        return Ok(exact_root(lo));
    }
    let mut hi = BigRational::one();
    loop {
        match sum.sign_minus_one(&hi)?.0 {
            Sign::NoSign => return Ok(exact_root(hi)),
            Sign::Minus => break,
            Sign::Plus => {
                lo = hi.clone();
                hi = &hi * int(2);
            }
        }
    }
    let two = int(2);
    let width_tol = pow2_neg(WIDTH_BITS);
    let mut steps = 0;
    let (mut f_lo, mut f_hi) = (None, None);
    loop {
        if &hi - &lo < width_tol {
            let fl: Bracket = match f_lo.take() {
                Some(b) => b,
                None => sum.sign_minus_one(&lo)?.1,
            };
            let fh: Bracket = match f_hi.take() {
                Some(b) => b,
                None => sum.sign_minus_one(&hi)?.1,
            };
            let residual = to_f64(&fl.hi).max(-to_f64(&fh.lo));
            if residual < RESIDUAL_TOL || steps >= MAX_STEPS {
                return Ok(MoranSolution { lo, hi, residual, steps, exact: false });
            }
            f_lo = Some(fl);
            f_hi = Some(fh);
        }
        let mid = (&lo + &hi) / &two;
        steps += 1;
        match sum.sign_minus_one(&mid)? {
            (Sign::NoSign, _) => {
                let mut sol = exact_root(mid);
                sol.steps = steps;
                return Ok(sol);
            }
            (Sign::Plus, b) => {
                lo = mid;
                f_lo = Some(b);
            }
            (Sign::Minus, b) => {
                hi = mid;
                f_hi = Some(b);
            }
        }
    }
}

/// `s*(n)`, the root of `Σ_{j=2}^n (j(j-1))^{-s} = 1`.
pub fn moran_solve(alphabet_max: u64) -> Result<MoranSolution> {
    if alphabet_max < 3 {
        return Err(Error::Precondition(format!("N = {alphabet_max} < 3")));
    }
    moran_solve_ratios(&cantor_ratios(alphabet_max))
}

/// Width the tail enclosure aims for at working precision `w`.
pub fn tail_target_width(w: u32) -> BigRational {
    pow2_neg((w / 5) as u64)
}

/// Enclosure of `Σ_{k>M} (k(k-1))^{-s}`.
///
/// `s = 1` telescopes to exactly `1/M`. Otherwise the sum is split at `K`:
/// the head is summed term by term and the tail is compared with
/// `h(x) = (x - 1/2)^{-2s}`, which satisfies
/// `h(k) <= (k(k-1))^{-s} <= c_K·h(k)` for `k > K`; convexity of `h` then
/// gives `∫_{K+1}^∞ h + h(K+1)/2 <= Σ_{k>K} h(k) <= ∫_{K+1/2}^∞ h`.
/// `K` doubles until the bracket is narrower than `target`.
pub fn tail_moment(m: u64, s: &BigRational, target: &BigRational, w: u32) -> Result<Bracket> {
    if m < 1 {
        return Err(Error::Precondition("tail_moment needs M >= 1".into()));
    }
    if s.is_one() {
        return Ok(Bracket::point(BigRational::new(BigInt::one(), BigInt::from(m))));
    }
    if s <= &rat(1, 2) {
        return Err(Error::Divergent(format!("Σ (k(k-1))^(-s) diverges for s = {s} <= 1/2")));
    }
    let neg_s = -s;
    let two_s_minus_1 = s * int(2) - BigRational::one();
    let one_minus_2s = -&two_s_minus_1;
    let (mut head_lo, mut head_hi) = (BigInt::zero(), BigInt::zero());
    let mut next = m + 1;
    let mut k = (m + 1).max(32);
    loop {
        let terms: Vec<(BigInt, BigInt)> = (next..=k)
            .into_par_iter()
            .map(|j| {
                let p = enclosure::pow_fixed(&int(j * (j - 1)), &neg_s, w);
                (p.lo, p.hi)
            })
            .collect();
        for (lo, hi) in terms {
            head_lo += lo;
            head_hi += hi;
        }
        next = k + 1;
        let head = Fixed { lo: head_lo.clone(), hi: head_hi.clone(), w }.to_bracket();
        let kk = int(k);
        let mid = BigRational::new(BigInt::from(2 * k + 1), BigInt::from(2));
        let int_lo = enclosure::pow(&mid, &one_minus_2s, w).scale_nonneg(&two_s_minus_1.recip());
        let h_next = enclosure::pow(&mid, &(&neg_s * int(2)), w).scale_nonneg(&rat(1, 2));
        let tail_lo = int_lo.add(&h_next).lo;
        let ratio = BigRational::new(BigInt::from((2 * k + 1) * (2 * k + 1)), BigInt::from(4 * k * (k + 1)));
        let c = enclosure::pow(&ratio, s, w);
        let int_hi = enclosure::pow(&kk, &one_minus_2s, w).scale_nonneg(&two_s_minus_1.recip());
        let tail_hi = c.mul_nonneg(&int_hi).hi;
        let total = Bracket { lo: &head.lo + tail_lo, hi: &head.hi + tail_hi };
        if &total.width() <= target || k > 1 << 24 {
            return Ok(total.round_outward(w));
        }
        k *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent float oracle: `10^6` terms plus a crude integral tail.
    fn tail_oracle(m: u64, s: f64) -> f64 {
        let big = 1_000_000u64;
        let head: f64 = (m + 1..=big).map(|k| ((k * (k - 1)) as f64).powf(-s)).sum();
        head + (big as f64 + 0.5).powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
    }

    #[test]
    fn tail_moment_telescoping() {
        let t = tail_target_width(128);
        assert_eq!(tail_moment(2, &rat(1, 1), &t, 128).unwrap(), Bracket::point(rat(1, 2)));
        assert_eq!(tail_moment(10, &rat(1, 1), &t, 128).unwrap(), Bracket::point(rat(1, 10)));
        for m in [1u64, 3, 77, 10_000] {
            assert_eq!(tail_moment(m, &rat(1, 1), &t, 128).unwrap(), Bracket::point(rat(1, m as i64)));
        }
    }

    #[test]
    fn tail_moment_brackets_truth() {
        let target = rat(1, 1_000_000);
        let b = tail_moment(5, &rat(3, 4), &target, 128).unwrap();
        assert!(b.width() <= target);
        let truth = tail_oracle(5, 0.75);
        assert!(to_f64(&b.lo) <= truth + 1e-9 && truth - 1e-9 <= to_f64(&b.hi), "{b:?} vs {truth}");
        let b = tail_moment(3, &rat(2, 1), &tail_target_width(128), 128).unwrap();
        let truth = tail_oracle(3, 2.0);
        assert!(to_f64(&b.lo) <= truth + 1e-12 && truth - 1e-12 <= to_f64(&b.hi));
    }

    #[test]
    fn tail_moment_divergence() {
        let t = tail_target_width(128);
        assert!(matches!(tail_moment(4, &rat(1, 2), &t, 128), Err(Error::Divergent(_))));
        assert!(matches!(tail_moment(4, &rat(1, 3), &t, 128), Err(Error::Divergent(_))));
    }

    /// Float bisection oracle for `Σ_{j=2}^n (j(j-1))^{-s} = 1`.
    fn moran_oracle(n: u64) -> f64 {
        let f = |s: f64| (2..=n).map(|j| ((j * (j - 1)) as f64).powf(-s)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = (lo + hi) / 2.0;
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn two_equal_ratios_give_half() {
        let sol = moran_solve_ratios(&[rat(1, 4), rat(1, 4)]).unwrap();
        assert!(sol.exact);
        assert_eq!(sol.lo, rat(1, 2));
        let sol = moran_solve_ratios(&[rat(1, 3), rat(1, 3), rat(1, 3)]).unwrap();
        assert_eq!(sol.lo, rat(1, 1));
    }

    #[test]
    fn generic_ratios_can_exceed_one() {
        // 3·(1/2)^s = 1 at s = log 3 / log 2
        let sol = moran_solve_ratios(&[rat(1, 2), rat(1, 2), rat(1, 2)]).unwrap();
        assert!((sol.midpoint() - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn moran_three() {
        let sol = moran_solve(3).unwrap();
        assert!(sol.residual < 1e-12);
        assert!(sol.width() < 1e-12 && sol.lo < sol.hi);
        assert!((sol.midpoint() - moran_oracle(3)).abs() < 1e-12);
        // 2^-s + 6^-s at the bracket ends straddles 1
        let mut sum = MoranSum::new(cantor_ratios(3)).unwrap();
        assert!(sum.enclose(&sol.lo, 128).lo > BigRational::one());
        assert!(sum.enclose(&sol.hi, 128).hi < BigRational::one());
    }

    #[test]
    fn moran_monotone_in_alphabet() {
        let s: Vec<f64> = [3u64, 4, 5, 10].iter().map(|&n| moran_solve(n).unwrap().midpoint()).collect();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&x| x < 1.0));
        assert!(moran_solve(2).is_err());
    }
}
