//! Constructive witnesses for Devaney chaos (periodic points, transitivity,
//! sensitivity, locally eventually onto) and the time-subsequence checks
//! behind scrambled pairs.
//!
//! Every witness is a plain record that [`ChaosWitness::replay`] re-derives
//! from scratch with exact rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{
    luroth_digits, luroth_expand, luroth_iterate, periodic_value, stream_enclosure, Bracket, DigitStream, DigitWord,
    StreamSpec,
};
use crate::intervals::{fundamental_interval, interval_diameter, inverse_branch};
use crate::rational::{int, pow2_neg, rat, ExactRational};
use crate::symbolic::scrambled_point;

pub const WITNESS_SCHEMA: u32 = 1;

/// Open interval `(lo, hi)` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenInterval {
    #[serde(with = "crate::rational::serde_str")]
    pub lo: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub hi: ExactRational,
}

impl OpenInterval {
    /// A nonempty open subinterval of `[0, 1]`.
    pub fn new(lo: ExactRational, hi: ExactRational) -> Result<Self> {
        if lo >= hi || lo.is_negative() || hi > BigRational::one() {
            return Err(Error::Domain(format!("({lo}, {hi}) is not a nonempty open subinterval of (0, 1)")));
        }
        Ok(OpenInterval { lo, hi })
    }

    pub fn contains(&self, x: &ExactRational) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn midpoint(&self) -> ExactRational {
        (&self.lo + &self.hi) / int(2)
    }
}

/// The fixed point of `T_w`, i.e. the point whose digits repeat `w`.
pub fn periodic_point(w: &DigitWord) -> Result<ExactRational> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    periodic_value(w)
}

/// A point `z ∈ U` with `L^n(z) = x ∈ V`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transitivity {
    pub u: OpenInterval,
    pub v: OpenInterval,
    pub word: DigitWord,
    #[serde(with = "crate::rational::serde_str")]
    pub z: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub x: ExactRational,
    pub n: usize,
}

/// Grows `n` along the digits of the midpoint of `U` until `I_n ⊆ U`, then
/// lands on the midpoint of `V` through the inverse branch.
pub fn transitivity_witness(u: &OpenInterval, v: &OpenInterval) -> Result<Transitivity> {
    let y = u.midpoint();
    let x = v.midpoint();
    if x.is_zero() || y.is_zero() {
        return Err(Error::Domain("intervals must meet (0, 1]".into()));
    }
    let mut n = 1;
    let word = loop {
        let word = luroth_digits(&y, n)?;
        if fundamental_interval(&word)?.inside_open(&u.lo, &u.hi) {
            break word;
        }
        n += 1;
    };
    let z = inverse_branch(&word, &x)?;
    Ok(Transitivity { u: u.clone(), v: v.clone(), word, z, x, n })
}

/// A point `y` with `|x - y| < δ` and `|L^n x - L^n y| = distance`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sensitivity {
    #[serde(with = "crate::rational::serde_str")]
    pub x: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub delta: ExactRational,
    #[serde(with = "crate::rational::serde_str")]
    pub y: ExactRational,
    pub n: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub distance: ExactRational,
}

/// For `x = 0` the witness is `y = 1/N` with the smallest `N` such that
/// `1/N < δ`, at distance 1 after one step. Otherwise `n` is the first level
/// with `|I_n| < δ` and `y` is sent to `L^n x ± 1/2`, whichever lies in
/// `(0, 1]` (when `L^n x = 1/2` only `+` does).
pub fn sensitivity_witness(x: &ExactRational, delta: &ExactRational) -> Result<Sensitivity> {
    if !delta.is_positive() {
        return Err(Error::Domain(format!("δ = {delta} must be positive")));
    }
    if x.is_negative() || x > &BigRational::one() {
        return Err(Error::Domain(format!("{x} is outside [0, 1]")));
    }
    if x.is_zero() {
        let big_n = delta.recip().floor() + BigRational::one();
        let y = big_n.recip();
        return Ok(Sensitivity { x: x.clone(), delta: delta.clone(), y, n: 1, distance: BigRational::one() });
    }
    let mut n = 1;
    let word = loop {
        let word = luroth_digits(x, n)?;
        if &interval_diameter(&word)? < delta {
            break word;
        }
        n += 1;
    };
    let image = luroth_iterate(x, n)?;
    let half = rat(1, 2);
    let z = if image <= half { &image + &half } else { &image - &half };
    let y = inverse_branch(&word, &z)?;
    Ok(Sensitivity { x: x.clone(), delta: delta.clone(), y, n, distance: half })
}

/// `L^n` maps `I_n(w)` affinely onto `(0, 1]` with `n = |w|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leo {
    pub word: DigitWord,
    pub n: usize,
}

pub fn leo_certificate(w: &DigitWord) -> Result<Leo> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let leo = Leo { word: w.clone(), n: w.len() };
    leo.check()?;
    Ok(leo)
}

impl Leo {
    fn check(&self) -> Result<()> {
        let cell = fundamental_interval(&self.word)?;
        // the affine inverse of T_w sends lo to 0 and hi to 1
        let diam = cell.diameter();
        let inv = |t: &ExactRational| (t - &cell.lo) / &diam;
        if !inv(&cell.lo).is_zero() || !inv(&cell.hi).is_one() {
            return Err(Error::Precondition("endpoints do not map onto [0, 1]".into()));
        }
        if luroth_iterate(&cell.hi, self.n)? != BigRational::one() || self.n != self.word.len() {
            return Err(Error::Precondition(format!("L^{} does not send the right endpoint to 1", self.n)));
        }
        Ok(())
    }
}

/// One `m` of the scrambled-pair schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrambleRow {
    pub m: u64,
    /// `|L^{m³}α − L^{m³}β|`, bounded above by `2^{-m}`.
    pub proximal: Bracket,
    pub proximal_ok: bool,
    /// `|L^{m³+m}α − L^{m³+m}β|`, bounded below by `|x − y| − 2^{1-m}`.
    pub li_yorke: Bracket,
    pub li_yorke_bound: Bracket,
    pub li_yorke_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrambleReport {
    pub m_max: u64,
    /// Enclosure of `|Λ(a) − Λ(b)|`.
    pub base_distance: Bracket,
    /// First `m` whose prefixes of `a` and `b` differ.
    pub first_effective_m: u64,
    pub rows: Vec<ScrambleRow>,
    pub digits_used: usize,
}

impl ScrambleReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.proximal_ok && r.li_yorke_ok)
    }
}

const SCRAMBLE_DIGITS: usize = 64;
const SCRAMBLE_DIGIT_CAP: usize = 1 << 12;

/// Checks `α = Λ(F(a))`, `β = Λ(F(b))` at the times `m³` and `m³ + m` for
/// `m <= m_max`. Each enclosure is refined until its comparison is decided.
pub fn scrambled_pair_check(a: &DigitStream, b: &DigitStream, m_max: u64) -> Result<ScrambleReport> {
    if m_max == 0 {
        return Err(Error::Precondition("m_max must be at least 1".into()));
    }
    let first_effective_m = (1..=m_max)
        .find(|&k| a.digit(k) != b.digit(k))
        .ok_or_else(|| Error::Precondition(format!("a and b agree on the first {m_max} digits")))?;
    let (alpha, beta) = (scrambled_point(a), scrambled_point(b));
    let mut digits = SCRAMBLE_DIGITS;
    let mut rows = Vec::with_capacity(m_max as usize);
    let mut base_distance = stream_enclosure(a, 0, digits).abs_diff(&stream_enclosure(b, 0, digits));
    for m in 1..=m_max {
        let t = m.pow(3);
        let proximal = stream_enclosure(&alpha, t, digits).abs_diff(&stream_enclosure(&beta, t, digits));
        let proximal_ok = proximal.hi <= pow2_neg(m);
        let slack = pow2_neg(m - 1);
        let (li_yorke, li_yorke_bound) = loop {
            base_distance = stream_enclosure(a, 0, digits).abs_diff(&stream_enclosure(b, 0, digits));
            let bound = Bracket { lo: &base_distance.lo - &slack, hi: &base_distance.hi - &slack };
            let d = stream_enclosure(&alpha, t + m, digits).abs_diff(&stream_enclosure(&beta, t + m, digits));
            if d.lo >= bound.hi || d.hi < bound.lo {
                break (d, bound);
            }
            digits *= 2;
            if digits > SCRAMBLE_DIGIT_CAP {
                return Err(Error::Indecision(format!("Li-Yorke side at m = {m}")));
            }
        };
        let li_yorke_ok = li_yorke.lo >= li_yorke_bound.hi;
        rows.push(ScrambleRow { m, proximal, proximal_ok, li_yorke, li_yorke_bound, li_yorke_ok });
    }
    Ok(ScrambleReport { m_max, base_distance, first_effective_m, rows, digits_used: digits })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Periodic {
    pub word: DigitWord,
    #[serde(with = "crate::rational::serde_str")]
    pub point: ExactRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrambledPair {
    #[serde(with = "spec_str")]
    pub a: StreamSpec,
    #[serde(with = "spec_str")]
    pub b: StreamSpec,
    pub report: ScrambleReport,
}

mod spec_str {
    use crate::expansion::StreamSpec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(spec: &StreamSpec, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&spec.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StreamSpec, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessPayload {
    Transitivity(Transitivity),
    Sensitivity(Sensitivity),
    Leo(Leo),
    Periodic(Periodic),
    ScrambledPair(ScrambledPair),
}

/// Serialized witness: `{"schema": 1, "kind": ..., ...}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaosWitness {
    pub schema: u32,
    #[serde(flatten)]
    pub payload: WitnessPayload,
}

/// Why a replay failed.
#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("malformed witness: {0}")]
    Invalid(#[from] Error),
    #[error("witness does not replay: {0}")]
    Mismatch(String),
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> std::result::Result<(), ReplayError> {
    if ok {
        Ok(())
    } else {
        Err(ReplayError::Mismatch(what()))
    }
}

impl ChaosWitness {
    pub fn new(payload: WitnessPayload) -> Self {
        ChaosWitness { schema: WITNESS_SCHEMA, payload }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            WitnessPayload::Transitivity(_) => "transitivity",
            WitnessPayload::Sensitivity(_) => "sensitivity",
            WitnessPayload::Leo(_) => "leo",
            WitnessPayload::Periodic(_) => "periodic",
            WitnessPayload::ScrambledPair(_) => "scrambled-pair",
        }
    }

    /// Re-derives the claimed quantities from the payload alone.
    pub fn replay(&self) -> std::result::Result<(), ReplayError> {
        ensure(self.schema == WITNESS_SCHEMA, || format!("unknown schema {}", self.schema))?;
        match &self.payload {
            WitnessPayload::Transitivity(t) => {
                ensure(t.u.contains(&t.z), || format!("z = {} is not in U", t.z))?;
                ensure(t.v.contains(&t.x), || format!("x = {} is not in V", t.x))?;
                ensure(t.word.len() == t.n && luroth_digits(&t.z, t.n)? == t.word, || "digits of z".into())?;
                ensure(luroth_iterate(&t.z, t.n)? == t.x, || format!("L^{}(z) != x", t.n))
            }
            WitnessPayload::Sensitivity(s) => {
                let gap = (&s.x - &s.y).abs();
                ensure(gap < s.delta, || format!("|x - y| = {gap} is not below δ"))?;
                let d = (luroth_iterate(&s.x, s.n)? - luroth_iterate(&s.y, s.n)?).abs();
                ensure(d == s.distance, || format!("distance at iterate {} is {d}", s.n))?;
                ensure(s.distance >= rat(1, 2), || "distance below 1/2".into())
            }
            WitnessPayload::Leo(l) => l.check().map_err(|e| ReplayError::Mismatch(e.to_string())),
            WitnessPayload::Periodic(p) => {
                ensure(periodic_point(&p.word)? == p.point, || "fixed point of T_w".into())?;
                ensure(luroth_iterate(&p.point, p.word.len())? == p.point, || "L^|w| x != x".into())?;
                let e = luroth_expand(&p.point, p.word.len())?;
                ensure(e.digits == p.word, || "digits of the periodic point".into())
            }
            WitnessPayload::ScrambledPair(s) => {
                let again = scrambled_pair_check(&s.a.to_stream(), &s.b.to_stream(), s.report.m_max)?;
                ensure(again == s.report, || "scrambled report differs".into())?;
                ensure(again.holds(), || "a schedule inequality fails".into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(d: &[u64]) -> DigitWord {
        DigitWord::nonempty(d.to_vec()).unwrap()
    }

    fn open(a: (i64, i64), b: (i64, i64)) -> OpenInterval {
        OpenInterval::new(rat(a.0, a.1), rat(b.0, b.1)).unwrap()
    }

    #[test]
    fn periodic_point_examples() {
        assert_eq!(periodic_point(&word(&[2])).unwrap(), rat(1, 1));
        assert_eq!(periodic_point(&word(&[3])).unwrap(), rat(2, 5));
        let p = periodic_point(&word(&[2, 3])).unwrap();
        assert_eq!(p, rat(8, 11));
        assert_eq!(luroth_iterate(&p, 2).unwrap(), p);
        assert!(fundamental_interval(&[2, 3]).unwrap().contains(&p));
    }

    #[test]
    fn transitivity_examples() {
        let t = transitivity_witness(&open((1, 10), (2, 10)), &open((8, 10), (9, 10))).unwrap();
        ChaosWitness::new(WitnessPayload::Transitivity(t)).replay().unwrap();
        let u = open((4, 10), (6, 10));
        let t = transitivity_witness(&u, &u).unwrap();
        assert!(u.contains(&luroth_iterate(&t.z, t.n).unwrap()));
        let t = transitivity_witness(&open((0, 1), (1, 1)), &open((0, 1), (1, 1))).unwrap();
        assert_eq!(t.n, 1);
        assert!(OpenInterval::new(rat(1, 2), rat(1, 2)).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let s = sensitivity_witness(&rat(0, 1), &rat(1, 10)).unwrap();
        assert_eq!((s.y.clone(), s.n, s.distance.clone()), (rat(1, 11), 1, rat(1, 1)));
        let s = sensitivity_witness(&rat(1, 1), &rat(1, 4)).unwrap();
        assert_eq!((s.n, s.distance.clone()), (3, rat(1, 2)));
        assert_eq!(luroth_iterate(&s.y, 3).unwrap(), rat(1, 2));
        let s = sensitivity_witness(&rat(1, 3), &rat(1, 2)).unwrap();
        assert_eq!(s.n, 1);
        assert_eq!(s.y, inverse_branch(&[4], &rat(1, 2)).unwrap());
        for s in [s, sensitivity_witness(&rat(0, 1), &rat(1, 10)).unwrap()] {
            ChaosWitness::new(WitnessPayload::Sensitivity(s)).replay().unwrap();
        }
    }

    #[test]
    fn leo_examples() {
        assert_eq!(leo_certificate(&word(&[2])).unwrap().n, 1);
        assert_eq!(leo_certificate(&word(&[2, 3])).unwrap().n, 2);
        assert_eq!(leo_certificate(&word(&[7, 2, 9, 3, 4])).unwrap().n, 5);
    }

    #[test]
    fn scrambled_constant_pair() {
        let a = DigitStream::constant(3).unwrap();
        let b = DigitStream::constant(4).unwrap();
        let r = scrambled_pair_check(&a, &b, 10).unwrap();
        assert!(r.holds());
        assert!(r.base_distance.contains(&rat(7, 55)));
        assert!(r.rows[9].proximal.hi <= pow2_neg(10));
        assert_eq!(r.first_effective_m, 1);
        let c = DigitStream::periodic(vec![3, 3, 3], vec![5]).unwrap();
        let d = DigitStream::periodic(vec![3, 3, 3], vec![2]).unwrap();
        assert_eq!(scrambled_pair_check(&c, &d, 6).unwrap().first_effective_m, 4);
        assert!(scrambled_pair_check(&a, &a, 6).is_err());
    }

    #[test]
    fn witness_json_round_trip() {
        let spec_a: StreamSpec = "3".parse().unwrap();
        let spec_b: StreamSpec = "4".parse().unwrap();
        let report = scrambled_pair_check(&spec_a.to_stream(), &spec_b.to_stream(), 5).unwrap();
        let w = ChaosWitness::new(WitnessPayload::ScrambledPair(ScrambledPair { a: spec_a, b: spec_b, report }));
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.starts_with("{\"schema\":1,\"kind\":\"scrambled-pair\""));
        let back: ChaosWitness = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        back.replay().unwrap();
        let mut bad = w.clone();
        if let WitnessPayload::ScrambledPair(s) = &mut bad.payload {
            s.report.m_max = 4;
        }
        assert!(matches!(bad.replay(), Err(ReplayError::Mismatch(_))));
    }
}
