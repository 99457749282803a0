//! Lazily evaluated infinite digit sequences.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DigitWord, EventualPeriod};
use crate::error::{Error, Result};

/// Rule producing the digit at a 1-based position. Implementations must be
/// pure: the same position always yields the same digit.
pub trait DigitSource: Send + Sync {
    fn digit(&self, position: u64) -> u64;

    /// Eventual-period descriptor, when the sequence is known to have one.
    fn period(&self) -> Option<EventualPeriod> {
        None
    }
}

/// Shared handle to an immutable infinite digit sequence `(a_n)_{n>=1}`.
#[derive(Clone)]
pub struct DigitStream {
    source: Arc<dyn DigitSource>,
}

impl fmt::Debug for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = self.window(0, 8);
        f.debug_struct("DigitStream")
            .field("head", &head)
            .field("period", &self.period())
            .finish()
    }
}

struct Periodic(EventualPeriod);

impl DigitSource for Periodic {
    fn digit(&self, position: u64) -> u64 {
        self.0.digit(position)
    }
    fn period(&self) -> Option<EventualPeriod> {
        Some(self.0.clone())
    }
}

struct FromFn<F>(F);

impl<F: Fn(u64) -> u64 + Send + Sync> DigitSource for FromFn<F> {
    fn digit(&self, position: u64) -> u64 {
        (self.0)(position)
    }
}

struct Shifted {
    inner: DigitStream,
    by: u64,
}

impl DigitSource for Shifted {
    fn digit(&self, position: u64) -> u64 {
        self.inner.digit(position + self.by)
    }
    fn period(&self) -> Option<EventualPeriod> {
        let mut p = self.inner.period()?;
        for _ in 0..self.by {
            p = p.shift();
        }
        Some(p)
    }
}

struct PrefixReplaced {
    prefix: Vec<u64>,
    rest: DigitStream,
}

impl DigitSource for PrefixReplaced {
    fn digit(&self, position: u64) -> u64 {
        match self.prefix.get((position - 1) as usize) {
            Some(&d) => d,
            None => self.rest.digit(position),
        }
    }
    fn period(&self) -> Option<EventualPeriod> {
        let inner = self.rest.period()?;
        let k = self.prefix.len() as u64;
        let mut tail = inner;
        for _ in 0..k {
            tail = tail.shift();
        }
        let mut pre = self.prefix.clone();
        pre.extend_from_slice(&tail.preperiod);
        EventualPeriod::new(pre, tail.period.into_vec()).ok()
    }
}

/// I.i.d. digits uniform on `lo..=hi`, addressed by position through the
/// ChaCha word counter so that any digit is reproducible on its own.
struct UniformDigits {
    lo: u64,
    hi: u64,
    seed: u64,
    stream_id: u64,
}

impl DigitSource for UniformDigits {
    fn digit(&self, position: u64) -> u64 {
        let mut rng = positioned_rng(self.seed, self.stream_id, position);
        rng.random_range(self.lo..=self.hi)
    }
}

/// I.i.d. digits with `P(a) = 1/(a(a-1))`, the digit law of a
/// Lebesgue-uniform point. `Λ` of such a stream is a uniform random point.
struct LebesgueDigits {
    seed: u64,
    stream_id: u64,
}

impl DigitSource for LebesgueDigits {
    fn digit(&self, position: u64) -> u64 {
        let mut rng = positioned_rng(self.seed, self.stream_id, position);
        loop {
            // u = r / 2^64 with r >= 2 keeps the digit inside u64.
            let r = rng.next_u64();
            if r >= 2 {
                return ((1u128 << 64) / r as u128) as u64 + 1;
            }
        }
    }
}

fn positioned_rng(seed: u64, stream_id: u64, position: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng.set_word_pos(position as u128 * 16);
    rng
}

impl DigitStream {
    pub fn from_source<S: DigitSource + 'static>(source: S) -> Self {
        DigitStream { source: Arc::new(source) }
    }

    /// Stream from a digit rule. The rule must only produce digits `>= 2`;
    /// this is asserted on every access.
    pub fn from_fn<F: Fn(u64) -> u64 + Send + Sync + 'static>(rule: F) -> Self {
        Self::from_source(FromFn(rule))
    }

    pub fn constant(digit: u64) -> Result<Self> {
        Self::periodic(vec![], vec![digit])
    }

    pub fn periodic(preperiod: Vec<u64>, period: Vec<u64>) -> Result<Self> {
        Ok(Self::from_source(Periodic(EventualPeriod::new(preperiod, period)?)))
    }

    pub fn from_period(period: EventualPeriod) -> Self {
        Self::from_source(Periodic(period))
    }

    pub fn uniform(lo: u64, hi: u64, seed: u64, stream_id: u64) -> Result<Self> {
        if lo < 2 || hi < lo {
            return Err(Error::Precondition(format!("bad digit range {lo}..={hi}")));
        }
        Ok(Self::from_source(UniformDigits { lo, hi, seed, stream_id }))
    }

    pub fn lebesgue(seed: u64, stream_id: u64) -> Self {
        Self::from_source(LebesgueDigits { seed, stream_id })
    }

    /// Digit at 1-based `position`.
    pub fn digit(&self, position: u64) -> u64 {
        assert!(position >= 1, "digit positions are 1-based");
        let d = self.source.digit(position);
        assert!(d >= 2, "digit source produced {d} at position {position}");
        d
    }

    /// Digits at positions `start+1 ..= start+len`.
    pub fn window(&self, start: u64, len: usize) -> Vec<u64> {
        (1..=len as u64).map(|i| self.digit(start + i)).collect()
    }

    pub fn prefix(&self, n: usize) -> DigitWord {
        DigitWord(self.window(0, n))
    }

    pub fn period(&self) -> Option<EventualPeriod> {
        self.source.period()
    }

    /// `σ^by` of the stream.
    pub fn shift(&self, by: u64) -> DigitStream {
        if by == 0 {
            return self.clone();
        }
        Self::from_source(Shifted { inner: self.clone(), by })
    }

    /// The stream with its first `prefix.len()` digits replaced.
    pub fn with_prefix(&self, prefix: Vec<u64>) -> Result<DigitStream> {
        DigitWord::new(prefix.clone())?;
        Ok(Self::from_source(PrefixReplaced { prefix, rest: self.clone() }))
    }

    /// Whether the first `n` digits of both streams agree.
    pub fn agrees_with(&self, other: &DigitStream, n: u64) -> bool {
        (1..=n).all(|i| self.digit(i) == other.digit(i))
    }
}

/// Textual description of a reproducible digit stream, used wherever a
/// stream must be written down and rebuilt.
///
/// * `5` or `5,...`: constant
/// * `3,4,5,...`: arithmetic progression continuing the last step
/// * `4,[2,3]`: preperiod `4` then `(2,3)` repeated
/// * `uniform:LO:HI:SEED`: i.i.d. uniform digits
/// * `lebesgue:SEED`: digits of a Lebesgue-uniform point
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StreamSpec {
    Periodic(EventualPeriod),
    Arithmetic { head: Vec<u64>, step: u64 },
    Uniform { lo: u64, hi: u64, seed: u64 },
    Lebesgue { seed: u64 },
}

impl StreamSpec {
    pub fn to_stream(&self) -> DigitStream {
        match self {
            StreamSpec::Periodic(p) => DigitStream::from_period(p.clone()),
            StreamSpec::Arithmetic { head, step } => {
                let head = head.clone();
                let step = *step;
                DigitStream::from_fn(move |pos| {
                    let k = head.len() as u64;
                    if pos <= k {
                        head[(pos - 1) as usize]
                    } else {
                        head[head.len() - 1] + step * (pos - k)
                    }
                })
            }
            StreamSpec::Uniform { lo, hi, seed } => {
                DigitStream::uniform(*lo, *hi, *seed, 0).expect("validated on parse")
            }
            StreamSpec::Lebesgue { seed } => DigitStream::lebesgue(*seed, 0),
        }
    }
}

fn parse_digit(text: &str) -> Result<u64> {
    let d: u64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad digit {text:?}")))?;
    if d < 2 {
        return Err(Error::InvalidDigit { digit: d, position: 0 });
    }
    Ok(d)
}

fn parse_list(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_digit).collect()
}

impl std::str::FromStr for StreamSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let fields: Vec<&str> = text.split(':').collect();
        match fields.as_slice() {
            ["uniform", lo, hi, seed] => {
                let lo = parse_digit(lo)?;
                let hi = parse_digit(hi)?;
                let seed = seed.parse().map_err(|_| Error::Parse(format!("bad seed in {text:?}")))?;
                DigitStream::uniform(lo, hi, seed, 0)?;
                return Ok(StreamSpec::Uniform { lo, hi, seed });
            }
            ["lebesgue", seed] => {
                let seed = seed.parse().map_err(|_| Error::Parse(format!("bad seed in {text:?}")))?;
                return Ok(StreamSpec::Lebesgue { seed });
            }
            [_] => {}
            _ => return Err(Error::Parse(format!("unknown stream syntax {text:?}"))),
        }
        if let Some(open) = text.find('[') {
            let inner = text[open..]
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("unbalanced brackets in {text:?}")))?;
            let pre = text[..open].trim().trim_end_matches(',');
            let period = parse_list(inner)?;
            return Ok(StreamSpec::Periodic(EventualPeriod::new(parse_list(pre)?, period)?));
        }
        let (body, open_ended) = match text.strip_suffix("...") {
            Some(body) => (body.trim().trim_end_matches(','), true),
            None => (text, false),
        };
        let head = parse_list(body)?;
        match head.as_slice() {
            [] => Err(Error::Parse("empty stream".into())),
            [d] => Ok(StreamSpec::Periodic(EventualPeriod::new(vec![], vec![*d])?)),
            _ if !open_ended => Err(Error::Parse(format!(
                "{text:?} is finite; end it with ',...' or give a period in brackets"
            ))),
            [.., a, b] if b >= a => {
                let step = b - a;
                if step == 0 {
                    let mut pre = head.clone();
                    let last = pre.pop().expect("nonempty");
                    Ok(StreamSpec::Periodic(EventualPeriod::new(pre, vec![last])?))
                } else {
                    Ok(StreamSpec::Arithmetic { head, step })
                }
            }
            _ => Err(Error::Parse(format!("{text:?} decreases, which cannot continue forever"))),
        }
    }
}

impl fmt::Display for StreamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[u64]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        match self {
            StreamSpec::Periodic(p) if p.preperiod.is_empty() => write!(f, "[{}]", list(&p.period)),
            StreamSpec::Periodic(p) => write!(f, "{},[{}]", list(&p.preperiod), list(&p.period)),
            StreamSpec::Arithmetic { head, .. } => write!(f, "{},...", list(head)),
            StreamSpec::Uniform { lo, hi, seed } => write!(f, "uniform:{lo}:{hi}:{seed}"),
            StreamSpec::Lebesgue { seed } => write!(f, "lebesgue:{seed}"),
        }
    }
}

impl serde::Serialize for StreamSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for StreamSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_and_shift() {
        let s = DigitStream::periodic(vec![4, 5], vec![2, 3]).unwrap();
        assert_eq!(s.window(0, 6), vec![4, 5, 2, 3, 2, 3]);
        let t = s.shift(3);
        assert_eq!(t.window(0, 4), vec![3, 2, 3, 2]);
        assert_eq!(t.period(), Some(EventualPeriod::new(vec![], vec![3, 2]).unwrap()));
    }

    #[test]
    fn prefix_replacement_keeps_period() {
        let s = DigitStream::constant(3).unwrap();
        let y = s.with_prefix(vec![7, 7]).unwrap();
        assert_eq!(y.window(0, 4), vec![7, 7, 3, 3]);
        assert_eq!(y.period(), Some(EventualPeriod::new(vec![7, 7], vec![3]).unwrap()));
    }

    #[test]
    fn random_streams_are_addressable() {
        let s = DigitStream::uniform(2, 6, 11, 0).unwrap();
        let head = s.window(0, 50);
        assert!(head.iter().all(|d| (2..=6).contains(d)));
        assert_eq!(s.digit(37), head[36]);
        assert_ne!(head, DigitStream::uniform(2, 6, 11, 1).unwrap().window(0, 50));
        let l = DigitStream::lebesgue(3, 0);
        assert!(l.window(0, 200).iter().all(|&d| d >= 2));
    }

    #[test]
    fn stream_spec_syntax() {
        let s: StreamSpec = "3,4,5,...".parse().unwrap();
        assert_eq!(s.to_stream().window(0, 5), vec![3, 4, 5, 6, 7]);
        let s: StreamSpec = "2,[3,4]".parse().unwrap();
        assert_eq!(s.to_stream().window(0, 5), vec![2, 3, 4, 3, 4]);
        assert_eq!(s.to_stream().period(), Some(EventualPeriod::new(vec![2], vec![3, 4]).unwrap()));
        let s: StreamSpec = "5".parse().unwrap();
        assert_eq!(s.to_stream().window(0, 3), vec![5, 5, 5]);
        let s: StreamSpec = "7,3,3,...".parse().unwrap();
        assert_eq!(s.to_stream().period(), Some(EventualPeriod::new(vec![7, 3], vec![3]).unwrap()));
        assert!("3,2,...".parse::<StreamSpec>().is_err());
        assert!("3,4".parse::<StreamSpec>().is_err());
        assert!("1,...".parse::<StreamSpec>().is_err());
        for text in ["3,4,5,...", "2,[3,4]", "[5]", "uniform:2:6:9", "lebesgue:4"] {
            let spec: StreamSpec = text.parse().unwrap();
            let again: StreamSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again);
        }
    }

    #[test]
    #[should_panic(expected = "digit source produced")]
    fn invalid_rule_is_caught() {
        DigitStream::from_fn(|_| 1).digit(1);
    }
}
