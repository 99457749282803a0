//! Sequence combinators: R-shuffles, the scramble schedule
//! `R = ⋃_m ⟦m³+1, m³+2m⟧`, the word `g(a)` and the scrambled-point map
//! `F(a) = B(a, g(a); R)`.
//!
//! Every stream produced here answers "digit at position j" with closed-form
//! block arithmetic, so looking far into a stream costs a handful of integer
//! operations plus the source lookups.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{DigitSource, DigitStream, DigitWord, EventualPeriod};

/// Index set `R ⊂ ℕ` (infinite and co-infinite) along which a shuffle draws
/// from its second argument. `Q = ℕ \ R` feeds the first argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShuffleSchedule {
    /// `R = mℕ`, the schedule of `B_m`.
    EveryMth { m: u64 },
    /// `R = ⋃_{m>=1} ⟦m³+1, m³+2m⟧`.
    Scramble,
}

/// Largest `m` with `m³ <= n`.
pub fn icbrt(n: u64) -> u64 {
    let mut m = (n as f64).cbrt() as u64;
    while m > 0 && m.checked_pow(3).is_none_or(|c| c > n) {
        m -= 1;
    }
    while (m + 1).checked_pow(3).is_some_and(|c| c <= n) {
        m += 1;
    }
    m
}

/// `t(n) = #(R ∩ ⟦1,n⟧)` for the scramble schedule: complete blocks
/// `m < m0` contribute `Σ 2m = m0(m0-1)`, block `m0` contributes its part
/// below `n`.
pub fn scramble_count(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let m0 = icbrt(n - 1);
    m0 * (m0.max(1) - 1) + (n - m0.pow(3)).min(2 * m0)
}

impl ShuffleSchedule {
    pub fn every_mth(m: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition(format!("B_m needs m >= 2, got {m}")));
        }
        Ok(ShuffleSchedule::EveryMth { m })
    }

    pub fn contains(&self, j: u64) -> bool {
        assert!(j >= 1, "schedule positions are 1-based");
        match *self {
            ShuffleSchedule::EveryMth { m } => j.is_multiple_of(m),
            ShuffleSchedule::Scramble => {
                let m0 = icbrt(j - 1);
                j - m0.pow(3) <= 2 * m0
            }
        }
    }

    /// `#(R ∩ ⟦1,n⟧)`.
    pub fn count_r(&self, n: u64) -> u64 {
        match *self {
            ShuffleSchedule::EveryMth { m } => n / m,
            ShuffleSchedule::Scramble => scramble_count(n),
        }
    }

    pub fn count_q(&self, n: u64) -> u64 {
        n - self.count_r(n)
    }

    /// `r_k`, the k-th element of `R` (1-based).
    pub fn r(&self, k: u64) -> u64 {
        assert!(k >= 1);
        match *self {
            ShuffleSchedule::EveryMth { m } => k * m,
            ShuffleSchedule::Scramble => {
                // block m holds ranks m(m-1)+1 ..= m(m+1)
                let mut m = ((k as f64).sqrt() as u64).max(1);
                while m * (m - 1) >= k {
                    m -= 1;
                }
                while m * (m + 1) < k {
                    m += 1;
                }
                m.pow(3) + (k - m * (m - 1))
            }
        }
    }

    /// `q_k`, the k-th element of `Q` (1-based).
    pub fn q(&self, k: u64) -> u64 {
        assert!(k >= 1);
        match *self {
            ShuffleSchedule::EveryMth { m } => {
                let (blocks, rem) = (k - 1).div_rem(&(m - 1));
                blocks * m + rem + 1
            }
            ShuffleSchedule::Scramble => {
                // smallest j with j - t(j) >= k; t(j) <= 2 j^{2/3} keeps j near k
                let (mut lo, mut hi) = (k, 2 * k + 8);
                while self.count_q(hi) < k {
                    hi *= 2;
                }
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if self.count_q(mid) >= k {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            }
        }
    }
}

struct Shuffle {
    x: DigitStream,
    y: DigitStream,
    schedule: ShuffleSchedule,
}

impl DigitSource for Shuffle {
    fn digit(&self, j: u64) -> u64 {
        if self.schedule.contains(j) {
            self.y.digit(self.schedule.count_r(j))
        } else {
            self.x.digit(self.schedule.count_q(j))
        }
    }

    fn period(&self) -> Option<EventualPeriod> {
        let ShuffleSchedule::EveryMth { m } = self.schedule else {
            return None;
        };
        let (px, py) = (self.x.period()?, self.y.period()?);
        // x advances m-1 digits per block of m positions and y advances one.
        let per_block = m - 1;
        let cycle_blocks = (px.period.len() as u64).lcm(&(py.period.len() as u64));
        let pre_blocks = (px.preperiod.len() as u64)
            .div_ceil(per_block)
            .max(py.preperiod.len() as u64);
        let pre_len = pre_blocks * m;
        let len = cycle_blocks * m;
        if pre_len + len > 1 << 20 {
            return None;
        }
        let pre = (1..=pre_len).map(|j| self.digit(j)).collect();
        let period = (pre_len + 1..=pre_len + len).map(|j| self.digit(j)).collect();
        EventualPeriod::new(pre, period).ok()
    }
}

/// The R-shuffle `B(x, y; R)`: `c_{q_k} = x_k` and `c_{r_k} = y_k`.
pub fn shuffle(x: &DigitStream, y: &DigitStream, schedule: ShuffleSchedule) -> DigitStream {
    DigitStream::from_source(Shuffle { x: x.clone(), y: y.clone(), schedule })
}

/// Finite shuffle `B_m(a, b)` of words: `(a_1..a_{m-1}, b_1, a_m..)`.
pub fn shuffle_words(a: &[u64], b: &[u64], m: u64) -> Result<DigitWord> {
    let schedule = ShuffleSchedule::every_mth(m)?;
    let n = (a.len() + b.len()) as u64;
    if schedule.count_r(n) != b.len() as u64 || schedule.count_q(n) != a.len() as u64 {
        return Err(Error::Precondition(format!(
            "B_{m} of words needs |b| = (|a|+|b|)/m, got |a| = {}, |b| = {}",
            a.len(),
            b.len()
        )));
    }
    let digits = (1..=n)
        .map(|j| {
            if schedule.contains(j) {
                b[(schedule.count_r(j) - 1) as usize]
            } else {
                a[(schedule.count_q(j) - 1) as usize]
            }
        })
        .collect();
    DigitWord::new(digits)
}

pub fn scramble_schedule() -> ShuffleSchedule {
    ShuffleSchedule::Scramble
}

struct GWord(DigitStream);

impl DigitSource for GWord {
    fn digit(&self, j: u64) -> u64 {
        // block n occupies offsets n(n-1)+1 ..= n(n+1): n twos, then pref(a, n)
        let mut n = ((j as f64).sqrt() as u64).max(1);
        while n * (n - 1) >= j {
            n -= 1;
        }
        while n * (n + 1) < j {
            n += 1;
        }
        let offset = j - n * (n - 1);
        if offset <= n {
            2
        } else {
            self.0.digit(offset - n)
        }
    }

    fn period(&self) -> Option<EventualPeriod> {
        match self.0.period() {
            Some(p) if p.preperiod.is_empty() && p.period.as_slice() == [2] => Some(p),
            _ => None,
        }
    }
}

/// `g(a) = 2, a_1, 2, 2, a_1, a_2, 2, 2, 2, a_1, a_2, a_3, …`.
pub fn g_stream(a: &DigitStream) -> DigitStream {
    DigitStream::from_source(GWord(a.clone()))
}

/// Prefix of `g(a)` of length `depth`.
pub fn g_word(a: &DigitStream, depth: usize) -> DigitWord {
    g_stream(a).prefix(depth)
}

/// `F(a) = B(a, g(a); R)` with the scramble schedule.
pub fn scrambled_point(a: &DigitStream) -> DigitStream {
    shuffle(a, &g_stream(a), ShuffleSchedule::Scramble)
}

struct Unshuffle {
    c: DigitStream,
    schedule: ShuffleSchedule,
    take_r: bool,
}

impl DigitSource for Unshuffle {
    fn digit(&self, k: u64) -> u64 {
        let j = if self.take_r { self.schedule.r(k) } else { self.schedule.q(k) };
        self.c.digit(j)
    }
}

/// `π_Q(c) = (c_{q_j})_j`.
pub fn unshuffle_q(c: &DigitStream, schedule: ShuffleSchedule) -> DigitStream {
    DigitStream::from_source(Unshuffle { c: c.clone(), schedule, take_r: false })
}

/// `π_R(c) = (c_{r_j})_j`.
pub fn unshuffle_r(c: &DigitStream, schedule: ShuffleSchedule) -> DigitStream {
    DigitStream::from_source(Unshuffle { c: c.clone(), schedule, take_r: true })
}
