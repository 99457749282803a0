//! Rigorous enclosures of real powers `b^s` for rational `b > 0` and
//! rational `s`, as brackets of dyadic rationals.
//!
//! Everything is fixed-point integer arithmetic with directed rounding:
//! a value `v` at precision `w` is held as integers `lo <= v·2^w <= hi`.
//! Integer exponents and perfect-power bases bypass the series entirely so
//! that exact equalities (`Σ 1/(k(k-1)) = 1`, `2·4^{-1/2} = 1`) stay exact.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expansion::Bracket;

/// Precision ladder used when a comparison cannot be decided.
pub const PRECISION_LADDER: [u32; 4] = [128, 256, 512, 1024];

const GUARD: u32 = 24;

/// Fixed-point enclosure `[lo, hi]·2^{-w}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    pub lo: BigInt,
    pub hi: BigInt,
    pub w: u32,
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn shr_floor(a: &BigInt, k: u32) -> BigInt {
    // arithmetic shift on BigInt rounds toward -inf
    a >> k
}

fn shr_ceil(a: &BigInt, k: u32) -> BigInt {
    -((-a) >> k)
}

impl Fixed {
    pub fn exact_int(v: &BigInt, w: u32) -> Fixed {
        let x = v << w;
        Fixed { lo: x.clone(), hi: x, w }
    }

    /// Outward-rounded enclosure of a rational.
    pub fn from_rational(v: &BigRational, w: u32) -> Fixed {
        let n = v.numer() << w;
        Fixed { lo: floor_div(&n, v.denom()), hi: ceil_div(&n, v.denom()), w }
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.w, other.w);
        Fixed { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi, w: self.w }
    }

    pub fn sub(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.w, other.w);
        Fixed { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo, w: self.w }
    }

    /// Multiplication by a nonnegative rational.
    pub fn scale(&self, c: &BigRational) -> Fixed {
        assert!(!c.is_negative());
        let (p, q) = (c.numer(), c.denom());
        Fixed { lo: floor_div(&(&self.lo * p), q), hi: ceil_div(&(&self.hi * p), q), w: self.w }
    }

    pub fn to_bracket(&self) -> Bracket {
        let den = BigInt::one() << self.w;
        Bracket {
            lo: BigRational::new(self.lo.clone(), den.clone()),
            hi: BigRational::new(self.hi.clone(), den),
        }
    }

    /// Drops `k` bits of precision, rounding outward.
    pub fn reduce(&self, k: u32) -> Fixed {
        Fixed { lo: shr_floor(&self.lo, k), hi: shr_ceil(&self.hi, k), w: self.w - k }
    }
}

/// `2·atanh(a/b)` for `0 <= a/b <= 1/3` at precision `w`.
fn two_atanh(a: &BigInt, b: &BigInt, w: u32) -> Fixed {
    if a.is_zero() {
        return Fixed::exact_int(&BigInt::zero(), w);
    }
    let a2 = a * a;
    let b2 = b * b;
    // p = z^{2i+1}·2^w, bracketed
    let mut p_lo = floor_div(&(a << w), b);
    let mut p_hi = ceil_div(&(a << w), b);
    let mut sum_lo = BigInt::zero();
    let mut sum_hi = BigInt::zero();
    let mut i: u64 = 0;
    while p_hi > BigInt::one() {
        let d = BigInt::from(2 * i + 1);
        sum_lo += floor_div(&p_lo, &d);
        sum_hi += ceil_div(&p_hi, &d);
        p_lo = floor_div(&(&p_lo * &a2), &b2);
        p_hi = ceil_div(&(&p_hi * &a2), &b2);
        i += 1;
    }
    // remaining terms are at most p_hi·Σ z^{2j} <= p_hi·9/8 <= 2
    sum_hi += BigInt::from(2);
    Fixed { lo: sum_lo << 1, hi: sum_hi << 1, w }
}

/// `ln 2 = 2·atanh(1/3)`.
pub fn ln2(w: u32) -> Fixed {
    two_atanh(&BigInt::one(), &BigInt::from(3), w + GUARD).reduce(GUARD)
}

/// `ln n` for an integer `n >= 1`, via `n = 2^k·(1+z)/(1-z)` with
/// `z = (n - 2^k)/(n + 2^k) <= 1/3`.
pub fn ln_int(n: &BigInt, w: u32) -> Fixed {
    assert!(n.is_positive(), "ln of a nonpositive integer");
    let wg = w + GUARD;
    let k = n.bits() - 1;
    let pk = BigInt::one() << k;
    let t = two_atanh(&(n - &pk), &(n + &pk), wg);
    let l2 = two_atanh(&BigInt::one(), &BigInt::from(3), wg);
    let kk = BigInt::from(k);
    Fixed { lo: &l2.lo * &kk + t.lo, hi: &l2.hi * &kk + t.hi, w: wg }.reduce(GUARD)
}

/// `ln x` for a positive rational.
pub fn ln_rational(x: &BigRational, w: u32) -> Fixed {
    assert!(x.is_positive(), "ln of a nonpositive rational");
    ln_int(x.numer(), w).sub(&ln_int(x.denom(), w))
}

/// `e^v` for `v >= 0` given as an exact fixed-point numerator `v·2^w`.
/// Returns an enclosure at precision `w`.
fn exp_point(v: &BigInt, w: u32, round_up: bool) -> BigInt {
    debug_assert!(!v.is_negative());
    // e^v = (e^{v/2^r})^{2^r} with v/2^r <= 1/2
    let r = (v.bits() as i64 - w as i64 + 1).max(0) as u32;
    let wg = w + r + GUARD;
    let y = v << (GUARD); // y = v / 2^r at precision wg
    let one = BigInt::one() << wg;
    // Taylor series with directed rounding
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut i: u64 = 1;
    loop {
        let prod = &term * &y;
        let d = BigInt::from(i) << wg;
        term = if round_up { ceil_div(&prod, &d) } else { floor_div(&prod, &d) };
        if term.is_zero() {
            break;
        }
        sum += &term;
        if term <= BigInt::one() {
            break;
        }
        i += 1;
    }
    if round_up {
        // remainder after the last included term is at most 2·term + 1
        sum += BigInt::from(3);
    }
    for _ in 0..r {
        let sq = &sum * &sum;
        sum = if round_up { shr_ceil(&sq, wg) } else { shr_floor(&sq, wg) };
    }
    let drop = wg - w;
    if round_up {
        shr_ceil(&sum, drop)
    } else {
        shr_floor(&sum, drop)
    }
}

/// `e^v` for an enclosure `v` with `v.lo >= 0`.
pub fn exp_nonneg(v: &Fixed) -> Fixed {
    assert!(!v.lo.is_negative(), "exp_nonneg needs v >= 0");
    Fixed { lo: exp_point(&v.lo, v.w, false), hi: exp_point(&v.hi, v.w, true), w: v.w }
}

/// `e^v` for any enclosure `v`.
pub fn exp(v: &Fixed) -> Fixed {
    let w = v.w;
    if !v.lo.is_negative() {
        return exp_nonneg(v);
    }
    if !v.hi.is_positive() {
        // e^{-u} = 2^{2w'} / (e^u·2^{w'}), rounded outward
        let wg = w + GUARD;
        let u = Fixed { lo: -(&v.hi) << GUARD, hi: -(&v.lo) << GUARD, w: wg };
        let e = exp_nonneg(&u);
        let num = BigInt::one() << (2 * wg);
        let out = Fixed { lo: floor_div(&num, &e.hi), hi: ceil_div(&num, &e.lo), w: wg };
        return out.reduce(GUARD);
    }
    // straddles zero: split at 0
    let neg = exp(&Fixed { lo: v.lo.clone(), hi: BigInt::zero(), w });
    let pos = exp(&Fixed { lo: BigInt::zero(), hi: v.hi.clone(), w });
    Fixed { lo: neg.lo, hi: pos.hi, w }
}

/// Exact `x^(p/q)` when `x`'s numerator and denominator are perfect q-th
/// powers.
pub fn exact_pow(x: &BigRational, s: &BigRational) -> Option<BigRational> {
    if x.is_zero() {
        return None;
    }
    let q = s.denom().to_u32()?;
    let p = s.numer().to_i32()?;
    if p.unsigned_abs() > 4096 {
        return None;
    }
    let root = |n: &BigInt| -> Option<BigInt> {
        let r = n.nth_root(q);
        (r.pow(q) == *n).then_some(r)
    };
    let base = if q == 1 {
        x.clone()
    } else {
        if x.is_negative() {
            return None;
        }
        BigRational::new(root(x.numer())?, root(x.denom())?)
    };
    let mag = num_traits::pow(base, p.unsigned_abs() as usize);
    Some(if p < 0 { mag.recip() } else { mag })
}

/// Enclosure of `x^s` for rational `x > 0` at working precision `w`.
/// Exact whenever [`exact_pow`] applies.
pub fn pow(x: &BigRational, s: &BigRational, w: u32) -> Bracket {
    assert!(x.is_positive(), "pow needs a positive base");
    if let Some(v) = exact_pow(x, s) {
        return Bracket::point(v);
    }
    let l = ln_rational(x, w + GUARD);
    let v = scale_signed(&l, s);
    exp(&v).reduce(GUARD).to_bracket()
}

/// Like [`pow`] but from a cached `ln x` enclosure.
pub fn pow_from_ln(ln_x: &Fixed, s: &BigRational) -> Bracket {
    pow_fixed_from_ln(ln_x, s).to_bracket()
}

/// Fixed-point form of [`pow_from_ln`], at precision `ln_x.w - GUARD`.
pub fn pow_fixed_from_ln(ln_x: &Fixed, s: &BigRational) -> Fixed {
    exp(&scale_signed(ln_x, s)).reduce(GUARD)
}

/// Fixed-point enclosure of `x^s` at precision `w`.
pub fn pow_fixed(x: &BigRational, s: &BigRational, w: u32) -> Fixed {
    if let Some(v) = exact_pow(x, s) {
        return Fixed::from_rational(&v, w);
    }
    pow_fixed_from_ln(&ln_for_pow(x, w), s)
}

/// `ln x` at the precision [`pow_from_ln`] expects for output precision `w`.
pub fn ln_for_pow(x: &BigRational, w: u32) -> Fixed {
    ln_rational(x, w + GUARD)
}

fn scale_signed(v: &Fixed, s: &BigRational) -> Fixed {
    if s.is_negative() {
        let pos = v.scale(&-s);
        Fixed { lo: -pos.hi, hi: -pos.lo, w: pos.w }
    } else {
        v.scale(s)
    }
}

impl Bracket {
    pub fn add(&self, other: &Bracket) -> Bracket {
        Bracket { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Bracket) -> Bracket {
        Bracket { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    /// Product of brackets of nonnegative numbers.
    pub fn mul_nonneg(&self, other: &Bracket) -> Bracket {
        debug_assert!(!self.lo.is_negative() && !other.lo.is_negative());
        Bracket { lo: &self.lo * &other.lo, hi: &self.hi * &other.hi }
    }

    pub fn scale_nonneg(&self, c: &BigRational) -> Bracket {
        Bracket { lo: &self.lo * c, hi: &self.hi * c }
    }

    /// Rounds endpoints outward to multiples of `2^-w`, unless the bracket is
    /// exact.
    pub fn round_outward(&self, w: u32) -> Bracket {
        if self.is_exact() {
            return self.clone();
        }
        let lo = Fixed::from_rational(&self.lo, w).lo;
        let hi = Fixed::from_rational(&self.hi, w).hi;
        Fixed { lo, hi, w }.to_bracket()
    }

    /// `Some(true)` if every point is `>= c`, `Some(false)` if every point is
    /// `< c`, `None` when undecided.
    pub fn decide_ge(&self, c: &BigRational) -> Option<bool> {
        if &self.lo >= c {
            Some(true)
        } else if &self.hi < c {
            Some(false)
        } else {
            None
        }
    }

    /// `Some(true)` if every point is `<= c`, `Some(false)` if every point is
    /// `> c`.
    pub fn decide_le(&self, c: &BigRational) -> Option<bool> {
        if &self.hi <= c {
            Some(true)
        } else if &self.lo > c {
            Some(false)
        } else {
            None
        }
    }

    /// `self^k` for a bracket of nonnegative numbers, rounding outward to
    /// `2^-w` after every multiplication.
    pub fn powi_nonneg(&self, k: u64, w: u32) -> Bracket {
        let mut result = Bracket::point(BigRational::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul_nonneg(&base).round_outward(w);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_nonneg(&base).round_outward(w);
            }
        }
        result
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        crate::rational::to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))))
    }
}

/// Runs `attempt` along [`PRECISION_LADDER`] until it returns a decision.
pub fn escalate<T>(what: &str, mut attempt: impl FnMut(u32) -> Option<T>) -> Result<(T, u32)> {
    for w in PRECISION_LADDER {
        if let Some(v) = attempt(w) {
            return Ok((v, w));
        }
    }
    Err(Error::Indecision(format!(
        "{what} undecided at {} bits",
        PRECISION_LADDER[PRECISION_LADDER.len() - 1]
    )))
}

/// Sign of a fixed-point enclosure, if decided.
pub fn sign(v: &Fixed) -> Option<Sign> {
    if v.lo.is_positive() {
        Some(Sign::Plus)
    } else if v.hi.is_negative() {
        Some(Sign::Minus)
    } else if v.lo.is_zero() && v.hi.is_zero() {
        Some(Sign::NoSign)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, to_f64};

    fn width_f64(b: &Bracket) -> f64 {
        to_f64(&b.width())
    }

    #[test]
    fn ln_matches_float() {
        for n in [1u64, 2, 3, 7, 10, 1000, 123_456_789] {
            let f = ln_int(&BigInt::from(n), 128).to_bracket();
            let want = (n as f64).ln();
            assert!(to_f64(&f.lo) <= want + 1e-15 && want - 1e-15 <= to_f64(&f.hi), "n = {n}");
            assert!(width_f64(&f) < 1e-30);
        }
        let l2 = ln2(256).to_bracket();
        assert!(width_f64(&l2) < 1e-70);
        // ln 2 = 0.693147180559945309417232121458176568...
        let ref_lo = rat(693_147_180_559_945, 1_000_000_000_000_000);
        let ref_hi = rat(693_147_180_559_946, 1_000_000_000_000_000);
        assert!(ref_lo < l2.lo && l2.hi < ref_hi);
    }

    #[test]
    fn exp_matches_float() {
        for (p, q) in [(0i64, 1i64), (1, 2), (1, 1), (5, 1), (-3, 2), (40, 1), (-40, 3), (1, 1000)] {
            let v = Fixed::from_rational(&rat(p, q), 160);
            let e = exp(&v).to_bracket();
            let want = (p as f64 / q as f64).exp();
            let (lo, hi) = (to_f64(&e.lo), to_f64(&e.hi));
            assert!(lo <= want * (1.0 + 1e-14) && want * (1.0 - 1e-14) <= hi, "{p}/{q}: {lo} {hi} {want}");
            assert!(hi - lo <= want * 1e-30 + 1e-40);
        }
    }

    #[test]
    fn exp_of_ln_contains_identity() {
        // e^{ln 7} must enclose 7
        let l = ln_int(&BigInt::from(7), 200);
        let e = exp(&l).to_bracket();
        assert!(e.contains(&rat(7, 1)));
    }

    #[test]
    fn pow_exact_cases() {
        assert_eq!(pow(&rat(1, 4), &rat(1, 2), 128), Bracket::point(rat(1, 2)));
        assert_eq!(pow(&rat(6, 1), &rat(-1, 1), 128), Bracket::point(rat(1, 6)));
        assert_eq!(pow(&rat(8, 27), &rat(-2, 3), 128), Bracket::point(rat(9, 4)));
        assert_eq!(exact_pow(&rat(2, 1), &rat(1, 2)), None);
    }

    #[test]
    fn pow_brackets_truth() {
        for (b, s) in [((2, 1), (-1, 2)), ((6, 1), (-9, 10)), ((3, 7), (3, 4)), ((56, 1), (-9, 10))] {
            let x = rat(b.0, b.1);
            let e = rat(s.0, s.1);
            let br = pow(&x, &e, 128);
            let want = (b.0 as f64 / b.1 as f64).powf(s.0 as f64 / s.1 as f64);
            assert!((br.midpoint_f64() - want).abs() < 1e-14 * want.max(1.0));
            assert!(width_f64(&br) < 1e-30);
            let cached = pow_from_ln(&ln_for_pow(&x, 128), &e);
            assert!(cached.contains(&br.lo) || br.contains(&cached.lo));
        }
    }

    #[test]
    fn escalation_reports_indecision() {
        let r: Result<((), u32)> = escalate("never", |_| None);
        assert!(matches!(r, Err(Error::Indecision(_))));
        let (v, w) = escalate("third", |w| (w >= 512).then_some(w)).unwrap();
        assert_eq!((v, w), (512, 512));
    }
}
