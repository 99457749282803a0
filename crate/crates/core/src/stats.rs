//! Monte-Carlo statistics: the first-digit law, shrinking-target hit counts
//! and the summable/divergent radius dichotomy.
//!
//! Counts are exact: every membership test is decided on rational cylinder
//! endpoints, refining the digit window until the answer is settled. The
//! comparisons against asymptotic laws are diagnostics only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{luroth_step, DigitStream};
use crate::pairs::Point;
use crate::rational::{recip, to_f64, ExactRational};

const BATCH: u64 = 1 << 14;

/// Soft/hard gates on `|z|` for the digit law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellFlag {
    Ok,
    /// `3 < |z| <= 4`.
    Soft,
    /// `|z| > 4`.
    Fail,
}

impl CellFlag {
    fn from_z(z: f64) -> Self {
        match z.abs() {
            a if a <= 3.0 => CellFlag::Ok,
            a if a <= 4.0 => CellFlag::Soft,
            _ => CellFlag::Fail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitCell {
    /// Digit value; the last row lumps all digits `> k_max` and has `k = 0`.
    pub k: u64,
    pub count: u64,
    pub observed: f64,
    pub expected: f64,
    pub stderr: f64,
    pub z: f64,
    pub flag: CellFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitLawTable {
    pub samples: u64,
    pub seed: u64,
    pub k_max: u64,
    pub cells: Vec<DigitCell>,
}

impl DigitLawTable {
    /// No cell beyond four standard errors, for digits up to `k`.
    pub fn within_4sigma(&self, k: u64) -> bool {
        self.cells.iter().filter(|c| c.k >= 2 && c.k <= k).all(|c| c.flag != CellFlag::Fail)
    }
}

/// The first digit of `(r + 1)/2^64`, a point of `(0, 1]`.
fn first_digit(r: u64) -> u128 {
    (1u128 << 64) / (r as u128 + 1) + 1
}

/// Tabulates first digits of `samples` uniform 64-bit dyadics in `(0, 1]`
/// against `|I_1(k)| = 1/(k(k-1))`. Batch `i` draws from ChaCha stream `i`
/// of `seed`, so the table does not depend on scheduling.
pub fn digit_law_mc(samples: u64, k_max: u64, seed: u64) -> Result<DigitLawTable> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 samples, got {samples}")));
    }
    if k_max < 2 {
        return Err(Error::Precondition(format!("k_max must be at least 2, got {k_max}")));
    }
    let slots = (k_max + 1) as usize;
    let batches = samples.div_ceil(BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut counts = vec![0u64; slots];
            for _ in 0..BATCH.min(samples - b * BATCH) {
                let k = first_digit(rng.next_u64());
                let slot = if k > k_max as u128 { 0 } else { k as usize };
                counts[slot] += 1;
            }
            counts
        })
        .reduce(|| vec![0u64; slots], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let n = samples as f64;
    let cell = |k: u64, count: u64, expected: f64| {
        let observed = count as f64 / n;
        let stderr = (expected * (1.0 - expected) / n).sqrt();
        let z = (observed - expected) / stderr;
        DigitCell { k, count, observed, expected, stderr, z, flag: CellFlag::from_z(z) }
    };
    let mut cells: Vec<DigitCell> = (2..=k_max).map(|k| cell(k, counts[k as usize], 1.0 / (k * (k - 1)) as f64)).collect();
    cells.push(cell(0, counts[0], 1.0 / k_max as f64));
    Ok(DigitLawTable { samples, seed, k_max, cells })
}

/// Interval with rational endpoints and chosen end types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub lo: ExactRational,
    pub hi: ExactRational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Target {
    /// `(lo, hi]`.
    pub fn half_open(lo: ExactRational, hi: ExactRational) -> Self {
        Target { lo, hi, lo_closed: false, hi_closed: true }
    }

    /// `(lo, hi)`.
    pub fn open(lo: ExactRational, hi: ExactRational) -> Self {
        Target { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, x: &ExactRational) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    /// Lebesgue measure of the part inside `[0, 1]`.
    pub fn mass(&self) -> ExactRational {
        let lo = self.lo.clone().max(BigRational::zero());
        let hi = self.hi.clone().min(BigRational::one());
        (hi - lo).max(BigRational::zero())
    }

    /// Membership of a point known to lie in `cell`: `Some` once the cell
    /// decides it.
    fn decide_cell(&self, cell: &Cell) -> Option<bool> {
        use std::cmp::Ordering::*;
        let top_hi = cell.cmp_top(&self.hi);
        let inside_hi = top_hi == Less || (self.hi_closed && top_hi == Equal);
        if cell.cmp_lo(&self.lo) != Less && inside_hi {
            return Some(true);
        }
        let top_lo = cell.cmp_top(&self.lo);
        let below_lo = top_lo == Less || (!self.lo_closed && top_lo == Equal);
        if below_lo || cell.cmp_lo(&self.hi) != Less {
            return Some(false);
        }
        None
    }
}

/// The cylinder `(num/den, (num+1)/den]` of a digit window, kept over the
/// common denominator `den = Π c_j(c_j-1)` so no gcd is ever taken.
struct Cell {
    num: BigInt,
    den: BigInt,
}

impl Cell {
    fn of(word: &[u64]) -> Self {
        let (mut num, mut den) = (BigInt::zero(), BigInt::one());
        for &c in word.iter().rev() {
            let c1 = BigInt::from(c - 1);
            num += &c1 * &den;
            den *= BigInt::from(c) * c1;
        }
        Cell { num, den }
    }

    fn cmp_lo(&self, r: &ExactRational) -> std::cmp::Ordering {
        (&self.num * r.denom()).cmp(&(r.numer() * &self.den))
    }

    fn cmp_top(&self, r: &ExactRational) -> std::cmp::Ordering {
        ((&self.num + 1u32) * r.denom()).cmp(&(r.numer() * &self.den))
    }
}

/// Common target families `n ↦ I_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    /// `(0, 1]`.
    Full,
    Empty,
    /// `(0, 1/n]`.
    Harmonic,
}

impl TargetRule {
    pub fn target(&self, n: u64) -> Target {
        match self {
            TargetRule::Full => Target::half_open(BigRational::zero(), BigRational::one()),
            TargetRule::Empty => Target::half_open(BigRational::zero(), BigRational::zero()),
            TargetRule::Harmonic => Target::half_open(BigRational::zero(), recip(n)),
        }
    }
}

impl std::str::FromStr for TargetRule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "full" => Ok(TargetRule::Full),
            "empty" => Ok(TargetRule::Empty),
            "harmonic" => Ok(TargetRule::Harmonic),
            _ => Err(Error::Parse(format!("unknown target rule {text:?} (full, empty, harmonic)"))),
        }
    }
}

const WINDOW_START: usize = 1;
const WINDOW_CAP: usize = 1 << 12;

/// Orbit `L^n(p)` for `n = 1, 2, …`, either exactly or through a digit cache.
enum Orbit {
    Exact(ExactRational),
    Digits { stream: DigitStream, cache: Vec<u64> },
}

impl Orbit {
    fn new(p: &Point) -> Self {
        match p {
            Point::Exact(x) => Orbit::Exact(x.clone()),
            Point::Digits(s) => Orbit::Digits { stream: s.clone(), cache: Vec::new() },
        }
    }

    /// Advances to the next iterate.
    fn step(&mut self) -> Result<()> {
        if let Orbit::Exact(x) = self {
            *x = luroth_step(x)?;
        }
        Ok(())
    }

    /// Whether the `n`-th iterate lies in `target`.
    fn hits(&mut self, n: u64, target: &Target) -> Result<bool> {
        match self {
            Orbit::Exact(x) => Ok(target.contains(x)),
            Orbit::Digits { stream, cache } => {
                let mut depth = WINDOW_START;
                loop {
                    let need = n as usize + depth;
                    while cache.len() < need {
                        cache.push(stream.digit(cache.len() as u64 + 1));
                    }
                    if let Some(hit) = target.decide_cell(&Cell::of(&cache[n as usize..need])) {
                        return Ok(hit);
                    }
                    depth *= 2;
                    if depth > WINDOW_CAP {
                        return Err(Error::Indecision(format!("membership of iterate {n}")));
                    }
                }
            }
        }
    }
}

fn log3_guard(phi: f64) -> f64 {
    phi.ln().powi(3).max(1.0)
}

/// `A(N, t)` against `φ(N) = Σ m(I_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitCountReport {
    pub horizon: u64,
    pub hits: u64,
    #[serde(with = "crate::rational::serde_str")]
    pub phi: ExactRational,
    pub phi_approx: f64,
    /// `|A − φ| / sqrt(φ · max(1, log³ φ))`.
    pub deviation: f64,
    pub seed: Option<u64>,
}

impl HitCountReport {
    /// `|A − φ| <= 3 sqrt(φ) log² φ`, the diagnostic band used in tests.
    pub fn within_band(&self) -> bool {
        let phi = self.phi_approx;
        (self.hits as f64 - phi).abs() <= 3.0 * phi.sqrt() * phi.ln().powi(2)
    }
}

/// Counts `n ∈ ⟦1, N⟧` with `L^n(t) ∈ I_n`.
pub fn hit_count<F: Fn(u64) -> Target>(t: &Point, targets: F, horizon: u64) -> Result<HitCountReport> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let mut orbit = Orbit::new(t);
    let mut hits = 0;
    let mut masses = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        orbit.step()?;
        let target = targets(n);
        masses.push(target.mass());
        if orbit.hits(n, &target)? {
            hits += 1;
        }
    }
    let phi = exact_sum(masses);
    let phi_approx = to_f64(&phi);
    let deviation = if phi_approx > 0.0 {
        (hits as f64 - phi_approx).abs() / (phi_approx * log3_guard(phi_approx)).sqrt()
    } else {
        0.0
    };
    Ok(HitCountReport { horizon, hits, phi, phi_approx, deviation, seed: None })
}

/// `hit_count` from a Lebesgue-random `t` drawn from `seed`.
pub fn hit_count_random(seed: u64, rule: &TargetRule, horizon: u64) -> Result<HitCountReport> {
    let t = Point::Digits(DigitStream::lebesgue(seed, 0));
    let mut report = hit_count(&t, |n| rule.target(n), horizon)?;
    report.seed = Some(seed);
    Ok(report)
}

/// Radii `r_n` for the shrinking-target experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusRule {
    /// `1/n`.
    Harmonic,
    /// `1/n²`.
    InverseSquare,
    Constant(#[serde(with = "crate::rational::serde_str")] ExactRational),
}

impl RadiusRule {
    pub fn radius(&self, n: u64) -> ExactRational {
        match self {
            RadiusRule::Harmonic => recip(n),
            RadiusRule::InverseSquare => recip(n) * recip(n),
            RadiusRule::Constant(r) => r.clone(),
        }
    }
}

impl std::str::FromStr for RadiusRule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "harmonic" | "1/n" => Ok(RadiusRule::Harmonic),
            "inverse-square" | "1/n^2" => Ok(RadiusRule::InverseSquare),
            other => other
                .strip_prefix("constant:")
                .map(|r| crate::rational::parse_rational(r).map(RadiusRule::Constant))
                .unwrap_or_else(|| Err(Error::Parse(format!("unknown radius rule {other:?}")))),
        }
    }
}

/// Hit counts `#{n <= N : |L^n x − L^n y| < r_n}` at `N` and `2N` for
/// Lebesgue-random `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingTargetReport {
    #[serde(with = "crate::rational::serde_str")]
    pub x: ExactRational,
    pub rule: RadiusRule,
    pub horizon: u64,
    pub seed: u64,
    /// Per sample, hits up to `N`.
    pub counts: Vec<u64>,
    /// Per sample, hits up to `2N`.
    pub counts_double: Vec<u64>,
    pub median: f64,
    pub median_double: f64,
}

fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Sample `i` uses the Lebesgue stream `(seed, i)`.
pub fn shrinking_target_experiment(
    x: &ExactRational,
    rule: &RadiusRule,
    samples: u64,
    horizon: u64,
    seed: u64,
) -> Result<ShrinkingTargetReport> {
    if samples == 0 || horizon == 0 {
        return Err(Error::Precondition("samples and horizon must be at least 1".into()));
    }
    crate::expansion::luroth_step(x)?;
    // the exact orbit of x is shared by every sample
    let mut orbit = x.clone();
    let mut targets = Vec::with_capacity(2 * horizon as usize);
    for n in 1..=2 * horizon {
        orbit = luroth_step(&orbit)?;
        let r = rule.radius(n);
        targets.push(Target::open(&orbit - &r, &orbit + &r));
    }
    let per_sample: Vec<(u64, u64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut y = Orbit::new(&Point::Digits(DigitStream::lebesgue(seed, i)));
            let (mut at_n, mut total) = (0, 0);
            for n in 1..=2 * horizon {
                if y.hits(n, &targets[n as usize - 1])? {
                    total += 1;
                }
                if n == horizon {
                    at_n = total;
                }
            }
            Ok((at_n, total))
        })
        .collect::<Result<_>>()?;
    let counts: Vec<u64> = per_sample.iter().map(|p| p.0).collect();
    let counts_double: Vec<u64> = per_sample.iter().map(|p| p.1).collect();
    Ok(ShrinkingTargetReport {
        x: x.clone(),
        rule: rule.clone(),
        horizon,
        seed,
        median: median(&counts),
        median_double: median(&counts_double),
        counts,
        counts_double,
    })
}

/// Pairwise summation, which keeps the operands of each addition of
/// similar size (sequential sums of `1/n` are quadratic in the bit length).
pub fn exact_sum(mut terms: Vec<ExactRational>) -> ExactRational {
    if terms.is_empty() {
        return BigRational::zero();
    }
    while terms.len() > 1 {
        terms = terms
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a + b,
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    terms.pop().expect("one term left")
}

/// `H_N = Σ_{n<=N} 1/n`.
pub fn harmonic(n: u64) -> ExactRational {
    exact_sum((1..=n).map(recip).collect())
}
