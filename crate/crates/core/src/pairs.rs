//! Finite-depth evidence about pairs `(x, y)`: orbit-distance windows, the
//! symbolic asymptotic criterion, the sets `G_N^M` and distal companions.
//!
//! `liminf` and `limsup` are not computable from finite data. Everything
//! here either reports window statistics or a semi-decision that is labelled
//! as such; none of it claims the true asymptotic status of a pair.

use num_rational::BigRational;
use num_traits::{Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::dimension::distal_digit;
use crate::error::{Error, Result};
use crate::expansion::{detect_period, luroth_step, stream_enclosure, Bracket, DigitStream, DEFAULT_CYCLE_CAP};
use crate::rational::{int, ExactRational};
use crate::symbolic::{shuffle, ShuffleSchedule};

/// Extra digits beyond the window used for stream enclosures, so that an
/// enclosure of `L^n(x)` has width at most `2^{-(depth+20)}`.
pub const ENCLOSURE_SLACK: usize = 20;

/// A point of `[0, 1]`: an exact rational or the value of a digit stream.
#[derive(Clone, Debug)]
pub enum Point {
    Exact(ExactRational),
    Digits(DigitStream),
}

impl Point {
    /// Digit stream of the point (exact points through their eventual
    /// period).
    pub fn to_stream(&self) -> Result<DigitStream> {
        match self {
            Point::Exact(x) => Ok(DigitStream::from_period(detect_period(x, DEFAULT_CYCLE_CAP)?)),
            Point::Digits(s) => Ok(s.clone()),
        }
    }

    /// Orbit enclosures `L^0 … L^depth`, each from `digits` digits when the
    /// point is a stream.
    pub fn orbit(&self, depth: u64, digits: usize) -> Result<Vec<Bracket>> {
        match self {
            Point::Exact(x) => {
                let mut cur = x.clone();
                let mut out = Vec::with_capacity(depth as usize + 1);
                out.push(Bracket::point(cur.clone()));
                for _ in 0..depth {
                    cur = luroth_step(&cur)?;
                    out.push(Bracket::point(cur.clone()));
                }
                Ok(out)
            }
            Point::Digits(s) => Ok((0..=depth).map(|n| stream_enclosure(s, n, digits)).collect()),
        }
    }
}

/// Symbolic evidence attached to a verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairCertificate {
    /// Digits agree from `index` through `checked_through` (candidate
    /// asymptotic pair; a semi-decision).
    EventualAgreement { index: u64, checked_through: u64 },
    /// Every observed distance is at least `bound`.
    DistalBound {
        #[serde(with = "crate::rational::serde_str")]
        bound: ExactRational,
    },
    /// The scramble schedule was checked for `m <= m_max`.
    ScrambledSchedule { m_max: u64 },
}

/// Window statistics of `|L^n x - L^n y|` for `n ∈ ⟦0, window⟧`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub window: u64,
    /// Enclosure of the minimum observed distance (exact for exact points).
    pub min_distance: Bracket,
    pub max_distance: Bracket,
    pub distances: Vec<Bracket>,
    pub certificate: Option<PairCertificate>,
}

fn bracket_min(a: &Bracket, b: &Bracket) -> Bracket {
    Bracket { lo: a.lo.clone().min(b.lo.clone()), hi: a.hi.clone().min(b.hi.clone()) }
}

fn bracket_max(a: &Bracket, b: &Bracket) -> Bracket {
    Bracket { lo: a.lo.clone().max(b.lo.clone()), hi: a.hi.clone().max(b.hi.clone()) }
}

/// Orbit distances over `⟦0, depth⟧`. Stream points are evaluated from
/// `depth + 20` digits, so each enclosure has width `<= 2^{-(depth+20)}`.
pub fn pair_metrics(x: &Point, y: &Point, depth: u64) -> Result<PairVerdict> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let digits = depth as usize + ENCLOSURE_SLACK;
    let ox = x.orbit(depth, digits)?;
    let oy = y.orbit(depth, digits)?;
    let distances: Vec<Bracket> = ox.iter().zip(&oy).map(|(a, b)| a.abs_diff(b)).collect();
    let min_distance = distances.iter().skip(1).fold(distances[0].clone(), |m, d| bracket_min(&m, d));
    let max_distance = distances.iter().skip(1).fold(distances[0].clone(), |m, d| bracket_max(&m, d));
    Ok(PairVerdict { window: depth, min_distance, max_distance, distances, certificate: None })
}

/// Outcome of the bounded-digit asymptotic criterion at finite depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AsymptoticVerdict {
    /// Digits agree on `⟦index, depth⟧`; `index` is the smallest such.
    AgreesFrom { index: u64, depth: u64 },
    /// The digits at `depth` differ, so no agreement tail is visible.
    DisagreementPersists { depth: u64 },
}

/// For `x` with digits bounded by `bound`, `(x, y)` is asymptotic iff the
/// digit sequences agree eventually. This only inspects `⟦1, depth⟧`, so the
/// answer is a semi-decision.
pub fn asymptotic_criterion_bounded(
    x: &DigitStream,
    bound: u64,
    y: &DigitStream,
    depth: u64,
) -> Result<AsymptoticVerdict> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if let Some(n) = (1..=depth).find(|&n| x.digit(n) > bound) {
        return Err(Error::Precondition(format!("digit {} of x at {n} exceeds the bound {bound}", x.digit(n))));
    }
    let mut index = depth + 1;
    while index > 1 && x.digit(index - 1) == y.digit(index - 1) {
        index -= 1;
    }
    Ok(if index > depth {
        AsymptoticVerdict::DisagreementPersists { depth }
    } else {
        AsymptoticVerdict::AgreesFrom { index, depth }
    })
}

/// `P(a, b, M, n)`: `(a_{n+1} <= M ⟹ a_{n+1} = b_{n+1})` and
/// `(a_{n+1} > M ⟹ b_{n+1} > M)`.
pub fn p_predicate(a: &DigitStream, b: &DigitStream, big_m: u64, n: u64) -> Result<bool> {
    if big_m < 3 || n < 1 {
        return Err(Error::Precondition(format!("need M >= 3 and n >= 1, got M = {big_m}, n = {n}")));
    }
    let (an, bn) = (a.digit(n + 1), b.digit(n + 1));
    Ok(if an <= big_m { an == bn } else { bn > big_m })
}

/// The envelope `f_N^M ≤ b_n ≤ g_N^M` defining `G_N^M` around `a`.
#[derive(Clone, Debug)]
pub struct AsymptoticProfile {
    pub big_m: u64,
    pub big_n: u64,
    pub a: DigitStream,
}

impl AsymptoticProfile {
    pub fn new(a: DigitStream, big_m: u64, big_n: u64) -> Result<Self> {
        if big_m < 3 || big_n < 1 {
            return Err(Error::Precondition(format!("need M >= 3 and N >= 1, got M = {big_m}, N = {big_n}")));
        }
        Ok(AsymptoticProfile { big_m, big_n, a })
    }

    pub fn f(&self, n: u64) -> u64 {
        let an = self.a.digit(n);
        if n < self.big_n || an <= self.big_m {
            an
        } else {
            self.big_m + 1
        }
    }

    /// `None` stands for `∞`.
    pub fn g(&self, n: u64) -> Option<u64> {
        let an = self.a.digit(n);
        if n < self.big_n || an <= self.big_m {
            Some(an)
        } else {
            None
        }
    }
}

/// Whether `f(n) <= b_n <= g(n)` for `N <= n <= depth`.
pub fn g_set_membership(b: &DigitStream, profile: &AsymptoticProfile, depth: u64) -> bool {
    (profile.big_n..=depth).all(|n| {
        let bn = b.digit(n);
        profile.f(n) <= bn && profile.g(n).is_none_or(|g| bn <= g)
    })
}

/// `M₁(ε)`: the largest `m` with `m(m+1) <= 1/(4ε)`.
pub fn m1_threshold(eps: &ExactRational) -> Result<u64> {
    if eps <= &BigRational::zero() {
        return Err(Error::Precondition(format!("ε = {eps} must be positive")));
    }
    let cap = (eps * int(4)).recip();
    let mut m = 0u64;
    while int((m + 1) * (m + 2)) <= cap {
        m += 1;
    }
    Ok(m)
}

/// The family `F_m^n(e) = {B_m(b, e) : b ∈ ⟦2, n⟧^ℕ}` of distal companions
/// of `a`.
#[derive(Clone, Debug)]
pub struct DistalFamily {
    pub a: DigitStream,
    pub big_e: u64,
    pub m: u64,
    pub n: u64,
    /// `e_j = distal_digit(a_{jm})`.
    pub e_seq: DigitStream,
}

/// `e_j` is the smallest admissible digit with `|a_{jm} - e_j| >= 2`.
pub fn distal_companion_family(a: &DigitStream, big_e: u64, m: u64, n: u64) -> Result<DistalFamily> {
    crate::dimension::distal_sequence(a, big_e, m, 1)?;
    if m < 2 || n < big_e {
        return Err(Error::Precondition(format!("need m >= 2 and n >= E, got m = {m}, n = {n}, E = {big_e}")));
    }
    let source = a.clone();
    let e_seq = DigitStream::from_fn(move |j| distal_digit(source.digit(j * m), big_e).expect("E checked"));
    Ok(DistalFamily { a: a.clone(), big_e, m, n, e_seq })
}

impl DistalFamily {
    pub fn schedule(&self) -> ShuffleSchedule {
        ShuffleSchedule::EveryMth { m: self.m }
    }

    /// `B_m(b, e)`. The caller guarantees `b ∈ ⟦2, n⟧^ℕ`.
    pub fn member(&self, b: &DigitStream) -> DigitStream {
        shuffle(b, &self.e_seq, self.schedule())
    }

    /// Member built from uniform `b ∈ ⟦2, n⟧^ℕ`.
    pub fn sample(&self, seed: u64, index: u64) -> DigitStream {
        let b = DigitStream::uniform(2, self.n, seed, index).expect("n >= 6");
        self.member(&b)
    }
}

/// Result of checking `|L^j x - L^j y| >= E^{-2m}` on `⟦0, depth⟧`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistalCertificate {
    #[serde(with = "crate::rational::serde_str")]
    pub bound: ExactRational,
    pub min_distance: Bracket,
    pub argmin: u64,
    pub depth: u64,
    pub holds: bool,
    /// Digits per enclosure needed to decide every comparison.
    pub digits_used: usize,
}

impl DistalCertificate {
    /// `min_distance.lo - bound`, the exact guaranteed slack.
    pub fn margin(&self) -> ExactRational {
        &self.min_distance.lo - &self.bound
    }
}

const DISTAL_DIGIT_CAP: usize = 1 << 14;

/// Verifies the distal bound against `y` from the family of `x`. Enclosures
/// are refined until each comparison with `E^{-2m}` is decided.
pub fn verify_distal_bound(x: &DigitStream, y: &DigitStream, big_e: u64, m: u64, depth: u64) -> Result<DistalCertificate> {
    let family = distal_companion_family(x, big_e, m, big_e)?;
    let checked = depth + m;
    if let Some(j) = (1..=checked / m).find(|&j| y.digit(j * m) != family.e_seq.digit(j)) {
        return Err(Error::Precondition(format!("digit {} of y is not the distal digit e_{j}", j * m)));
    }
    if x.agrees_with(y, checked + ENCLOSURE_SLACK as u64) {
        return Err(Error::Precondition("x and y agree on the whole window".into()));
    }
    let bound = Pow::pow(int(big_e), 2 * m as u32).recip();
    let mut digits = depth as usize + ENCLOSURE_SLACK;
    let mut min: Option<(Bracket, u64)> = None;
    let mut holds = true;
    for j in 0..=depth {
        let d = loop {
            let d = stream_enclosure(x, j, digits).abs_diff(&stream_enclosure(y, j, digits));
            if d.lo >= bound || d.hi < bound {
                break d;
            }
            digits *= 2;
            if digits > DISTAL_DIGIT_CAP {
                return Err(Error::Indecision(format!("distance at iterate {j} against E^(-2m)")));
            }
        };
        holds &= d.lo >= bound;
        if min.as_ref().is_none_or(|(b, _)| d.lo < b.lo) {
            min = Some((d, j));
        }
    }
    let (min_distance, argmin) = min.expect("depth >= 0 gives one iterate");
    Ok(DistalCertificate { bound, min_distance, argmin, depth, holds, digits_used: digits })
}

/// Whether `y` differs from `x` only in its first `k` digits, through `depth`.
pub fn is_surgery_of(x: &DigitStream, y: &DigitStream, k: u64, depth: u64) -> bool {
    (k + 1..=depth).all(|n| x.digit(n) == y.digit(n))
}

/// Distances of exact orbits through `depth`, used by callers wanting the
/// raw sequence.
pub fn exact_distances(x: &ExactRational, y: &ExactRational, depth: u64) -> Result<Vec<ExactRational>> {
    let v = pair_metrics(&Point::Exact(x.clone()), &Point::Exact(y.clone()), depth)?;
    Ok(v.distances.into_iter().map(|b| b.lo).collect())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn exact(p: i64, q: i64) -> Point {
        Point::Exact(rat(p, q))
    }

    #[test]
    fn pair_metrics_examples() {
        let v = pair_metrics(&exact(1, 3), &exact(1, 3), 10).unwrap();
        assert_eq!((v.min_distance.lo.clone(), v.max_distance.hi.clone()), (rat(0, 1), rat(0, 1)));
        assert_eq!(
            exact_distances(&rat(1, 1), &rat(1, 2), 3).unwrap(),
            vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(0, 1)]
        );
        let v = pair_metrics(&exact(1, 1), &exact(1, 2), 3).unwrap();
        assert_eq!(v.min_distance, Bracket::point(rat(0, 1)));
        assert_eq!(v.max_distance, Bracket::point(rat(1, 2)));
        let twos = Point::Digits(DigitStream::constant(2).unwrap());
        let threes = Point::Digits(DigitStream::constant(3).unwrap());
        let v = pair_metrics(&twos, &threes, 5).unwrap();
        assert!(v.min_distance.contains(&rat(3, 5)) && v.max_distance.contains(&rat(3, 5)));
        assert!(v.min_distance.width() <= crate::rational::pow2_neg(24));
    }

    #[test]
    fn asymptotic_criterion_examples() {
        let x = DigitStream::uniform(2, 5, 1, 0).unwrap();
        let y = x.with_prefix(x.window(0, 5).iter().map(|d| if *d == 2 { 3 } else { 2 }).collect()).unwrap();
        assert_eq!(
            asymptotic_criterion_bounded(&x, 5, &y, 40).unwrap(),
            AsymptoticVerdict::AgreesFrom { index: 6, depth: 40 }
        );
        assert_eq!(
            asymptotic_criterion_bounded(&x, 5, &x, 40).unwrap(),
            AsymptoticVerdict::AgreesFrom { index: 1, depth: 40 }
        );
        let two = DigitStream::constant(2).unwrap();
        let alt = DigitStream::periodic(vec![], vec![2, 3]).unwrap();
        assert_eq!(
            asymptotic_criterion_bounded(&two, 2, &alt, 40).unwrap(),
            AsymptoticVerdict::DisagreementPersists { depth: 40 }
        );
        assert!(asymptotic_criterion_bounded(&x, 3, &y, 40).is_err());
    }

    /// Brute-force evaluation of the two implications.
    fn p_oracle(a: u64, b: u64, m: u64) -> bool {
        let first = !(a <= m) || a == b;
        let second = !(a > m) || b > m;
        first && second
    }

    #[test]
    fn p_predicate_table() {
        let at = |d: u64| DigitStream::periodic(vec![2], vec![d]).unwrap();
        assert!(p_predicate(&at(4), &at(4), 5, 1).unwrap());
        assert!(p_predicate(&at(9), &at(7), 5, 1).unwrap());
        assert!(!p_predicate(&at(4), &at(5), 5, 1).unwrap());
        for m in 3..=10 {
            for a in 2..=12 {
                for b in 2..=12 {
                    assert_eq!(p_predicate(&at(a), &at(b), m, 1).unwrap(), p_oracle(a, b, m));
                }
            }
        }
        assert!(p_predicate(&at(4), &at(4), 2, 1).is_err());
    }

    #[test]
    fn g_set_examples() {
        let a = DigitStream::periodic(vec![], vec![3, 9, 4]).unwrap();
        let p = AsymptoticProfile::new(a.clone(), 5, 2).unwrap();
        assert_eq!((p.f(2), p.g(2)), (6, None));
        assert_eq!((p.f(3), p.g(3)), (4, Some(4)));
        assert!(g_set_membership(&a, &p, 100));
        // b_n = M + 2 where a_n > M
        let b = a.with_prefix(vec![3, 7]).unwrap();
        assert!(g_set_membership(&b, &p, 100));
        let c = a.with_prefix(vec![3, 9, 3]).unwrap();
        assert!(!g_set_membership(&c, &p, 100));
    }

    #[test]
    fn m1_examples() {
        assert_eq!(m1_threshold(&rat(1, 8)).unwrap(), 1); // 1/(4ε) = 2
        assert_eq!(m1_threshold(&rat(1, 24)).unwrap(), 2); // 6
        assert_eq!(m1_threshold(&rat(1, 1)).unwrap(), 0);
    }

    #[test]
    fn distal_digit_examples() {
        assert_eq!(distal_digit(2, 6).unwrap(), 4);
        assert_eq!(distal_digit(3, 6).unwrap(), 5);
        assert_eq!(distal_digit(9, 6).unwrap(), 3);
        assert_eq!(distal_digit(4, 6).unwrap(), 6);
        assert_eq!(distal_digit(4, 7).unwrap(), 6);
    }

    #[test]
    fn distal_bound_holds_for_samples() {
        let x = DigitStream::uniform(2, 6, 8, 0).unwrap();
        let fam = distal_companion_family(&x, 6, 2, 6).unwrap();
        for i in 0..10 {
            let y = fam.sample(3, i);
            let cert = verify_distal_bound(&x, &y, 6, 2, 20).unwrap();
            assert!(cert.holds, "{cert:?}");
            assert_eq!(cert.bound, rat(1, 1296));
            // at multiples of m the mismatch |a_{jm} - e| >= 2 separates the cells
            assert!(cert.min_distance.lo >= cert.bound);
        }
        assert!(matches!(verify_distal_bound(&x, &x, 6, 2, 20), Err(Error::Precondition(_))));
    }
}
