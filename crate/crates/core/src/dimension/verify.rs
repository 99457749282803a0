//! Finite-depth certificates for the mass-distribution bounds on tree-like
//! families.
//!
//! Lower bound at exponent `s`: every node `A` satisfies
//! `Σ_{B child} |B|^s >= |A|^s`, siblings are at distance `>= B_n·|A|`,
//! children nest inside their parent and diameters decay geometrically.
//! Upper bound: `Σ |B|^s <= |A|^s` and nesting.
//!
//! Child sums factorize over block positions:
//! `Σ_b |T_{wb}K|^s / |T_w K|^s = Π_j Σ_{d ∈ S_j} (d(d-1))^{-s}`, and
//! countable positions contribute a [`tail_moment`].

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::moran::{tail_moment, tail_target_width};
use super::tree::{block_geometry, CantorTreeSpec, ChildBlock, DigitRange, TreeDescriptor};
use crate::enclosure::{self, Fixed, PRECISION_LADDER};
use crate::expansion::Bracket;
use crate::rational::{int, to_f64, ExactRational};

/// Certificate format version.
pub const CERTIFICATE_SCHEMA: u32 = 1;

/// Cap on explicitly enumerated nodes per level for non-homogeneous rules.
pub const NODE_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// Which hypothesis failed at a node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationKind {
    /// The child sum is on the wrong side of 1; `sum` bounds it.
    ChildSum {
        #[serde(with = "crate::rational::serde_str")]
        sum_lo: ExactRational,
        #[serde(with = "crate::rational::serde_str")]
        sum_hi: ExactRational,
    },
    /// Sibling gap below `B_n·|A|` (both relative to `|A|`).
    Separation {
        #[serde(with = "crate::rational::serde_str")]
        gap: ExactRational,
        #[serde(with = "crate::rational::serde_str")]
        required: ExactRational,
    },
    /// Children leave their parent.
    Nesting,
    /// Diameters fail to shrink.
    Decay,
    /// The separation sequence violates `limsup log log(1/B_n) / n < 1` on
    /// the checked range.
    SeparationGrowth,
    /// A countable child list where the lower bound needs finite ones.
    Countable,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DimensionError {
    /// `level` is the level of the offending children; `path` is the parent.
    #[error("violation at level {level} below node {path:?}: {kind:?}")]
    Violation { level: usize, path: Vec<u64>, kind: Box<ViolationKind> },
    #[error("indecision: {0}")]
    Indecision(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<crate::error::Error> for DimensionError {
    fn from(e: crate::error::Error) -> Self {
        match e {
            crate::error::Error::Indecision(m) => DimensionError::Indecision(m),
            other => DimensionError::Precondition(other.to_string()),
        }
    }
}

/// Separation constants `B_n`, indexed by the level of the children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeparationSeq {
    Constant(ExactRational),
    PerLevel(Vec<ExactRational>),
}

impl SeparationSeq {
    /// `B_n` for children at level `n >= 1`.
    pub fn get(&self, n: usize) -> Option<&ExactRational> {
        match self {
            SeparationSeq::Constant(b) => Some(b),
            SeparationSeq::PerLevel(v) => v.get(n - 1),
        }
    }

    /// Smallest relative sibling gap of each level, computed from the tree.
    pub fn from_tree(spec: &CantorTreeSpec, depth: usize) -> Result<Self, DimensionError> {
        let mut out = Vec::with_capacity(depth);
        for k in 0..depth {
            let gaps = level_blocks(spec, k)?
                .into_iter()
                .filter_map(|(_, b)| block_geometry(&b, &spec.core).relative_gap(&spec.core))
                .min();
            out.push(gaps.unwrap_or_else(BigRational::one));
        }
        Ok(SeparationSeq::PerLevel(out))
    }
}

/// Record of a successful finite-depth check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub schema: u32,
    pub kind: BoundKind,
    #[serde(with = "crate::rational::serde_str")]
    pub s: ExactRational,
    pub levels_checked: usize,
    /// Parents checked, in decimal, or `"countable"`.
    pub nodes_covered: String,
    /// `B_1 … B_depth` as used (lower bounds only).
    #[serde(with = "crate::rational::serde_vec")]
    pub separation_seq: Vec<ExactRational>,
    /// Smallest slack `Σ|B|^s/|A|^s - 1` (lower) or `1 - Σ|B|^s/|A|^s`
    /// (upper), taken at the pessimistic end of each enclosure.
    #[serde(with = "crate::rational::serde_str")]
    pub margin: ExactRational,
    pub margin_approx: f64,
    /// `ρ` with `d_n <= ρ^n d_0` on the checked levels.
    #[serde(with = "crate::rational::serde_str")]
    pub decay_ratio: ExactRational,
    pub precision_bits: u32,
    pub tree: TreeDescriptor,
}

/// Blocks to check at `level`: one representative for homogeneous rules,
/// otherwise every node in enumeration order.
fn level_blocks(spec: &CantorTreeSpec, level: usize) -> Result<Vec<(Vec<u64>, ChildBlock)>, DimensionError> {
    if spec.rule.level_homogeneous() {
        let mut word = spec.root_word.as_slice().to_vec();
        for k in 0..level {
            word.extend(spec.block(k, &word)?.first_child());
        }
        let block = spec.block(level, &word)?;
        return Ok(vec![(word, block)]);
    }
    let nodes = spec.level_nodes(level, NODE_CAP)?;
    nodes
        .into_par_iter()
        .map(|w| {
            let b = spec.block(level, &w)?;
            Ok((w, b))
        })
        .collect::<Result<Vec<_>, crate::error::Error>>()
        .map_err(Into::into)
}

fn node_count(spec: &CantorTreeSpec, depth: usize) -> Result<String, DimensionError> {
    let mut per_level = BigUint::one();
    let mut total = BigUint::zero();
    for k in 0..depth {
        total += &per_level;
        if k + 1 == depth {
            break;
        }
        if spec.rule.level_homogeneous() {
            match level_blocks(spec, k)?[0].1.count() {
                Some(c) => per_level *= c,
                None => return Ok("countable".into()),
            }
        } else {
            per_level = BigUint::from(spec.level_nodes(k + 1, NODE_CAP)?.len());
        }
    }
    Ok(total.to_string())
}

/// Cache of per-range sums `Σ_{d∈S} (d(d-1))^{-s}` at a fixed precision.
struct SumCache {
    s: ExactRational,
    neg_s: ExactRational,
    w: u32,
    ranges: HashMap<DigitRange, Bracket>,
}

impl SumCache {
    fn new(s: &ExactRational, w: u32) -> Self {
        SumCache { s: s.clone(), neg_s: -s, w, ranges: HashMap::new() }
    }

    fn range_sum(&mut self, r: DigitRange) -> Result<Bracket, DimensionError> {
        if let Some(b) = self.ranges.get(&r) {
            return Ok(b.clone());
        }
        let b = match r {
            DigitRange::Finite { lo, hi } => {
                let neg_s = &self.neg_s;
                let w = self.w;
                let exact: Option<ExactRational> =
                    (lo..=hi).map(|d| enclosure::exact_pow(&int(d * (d - 1)), neg_s)).sum();
                match exact {
                    Some(v) => Bracket::point(v),
                    None => {
                        let (l, h) = (lo..=hi)
                            .into_par_iter()
                            .map(|d| {
                                let p = enclosure::pow_fixed(&int(d * (d - 1)), neg_s, w);
                                (p.lo, p.hi)
                            })
                            .reduce(Default::default, |a, b| (a.0 + b.0, a.1 + b.1));
                        Fixed { lo: l, hi: h, w }.to_bracket()
                    }
                }
            }
            DigitRange::Unbounded { from } => {
                tail_moment(from - 1, &self.s, &tail_target_width(self.w), self.w).map_err(|e| match e {
                    crate::error::Error::Divergent(m) => DimensionError::Precondition(m),
                    other => other.into(),
                })?
            }
        };
        self.ranges.insert(r, b.clone());
        Ok(b)
    }

    /// `Σ_b |T_{wb}K|^s / |T_w K|^s` for a block.
    fn block_sum(&mut self, block: &ChildBlock) -> Result<Bracket, DimensionError> {
        match block {
            ChildBlock::Product(ranges) => {
                // collapse runs of equal ranges into powers
                let mut total = Bracket::point(BigRational::one());
                let mut i = 0;
                while i < ranges.len() {
                    let mut j = i;
                    while j < ranges.len() && ranges[j] == ranges[i] {
                        j += 1;
                    }
                    let factor = self.range_sum(ranges[i])?.powi_nonneg((j - i) as u64, self.w);
                    total = total.mul_nonneg(&factor).round_outward(self.w);
                    i = j;
                }
                Ok(total)
            }
            ChildBlock::Words(words) => {
                let neg_s = &self.neg_s;
                let w = self.w;
                let diam = |b: &Vec<u64>| -> ExactRational {
                    b.iter().map(|&d| int(d * (d - 1))).fold(BigRational::one(), |a, x| a * x)
                };
                let exact: Option<ExactRational> =
                    words.iter().map(|b| enclosure::exact_pow(&diam(b), neg_s)).sum();
                if let Some(v) = exact {
                    return Ok(Bracket::point(v));
                }
                let (l, h) = words
                    .par_iter()
                    .map(|b| {
                        let p = enclosure::pow_fixed(&diam(b), neg_s, w);
                        (p.lo, p.hi)
                    })
                    .reduce(Default::default, |a, b| (a.0 + b.0, a.1 + b.1));
                Ok(Fixed { lo: l, hi: h, w }.to_bracket())
            }
        }
    }
}

/// Decides `sum >= 1` (lower) or `sum <= 1` (upper) with precision
/// escalation; returns the decision, the pessimistic slack and the
/// precision that decided it.
fn decide_sum(
    caches: &mut [SumCache],
    block: &ChildBlock,
    kind: BoundKind,
) -> Result<(bool, Bracket, u32), DimensionError> {
    let one = BigRational::one();
    for cache in caches.iter_mut() {
        let sum = cache.block_sum(block)?;
        let decided = match kind {
            BoundKind::Lower => sum.decide_ge(&one),
            BoundKind::Upper => sum.decide_le(&one),
        };
        if let Some(ok) = decided {
            return Ok((ok, sum, cache.w));
        }
    }
    Err(DimensionError::Indecision(format!("child sum undecided at {} bits", PRECISION_LADDER[PRECISION_LADDER.len() - 1])))
}

fn check_s(s: &ExactRational) -> Result<(), DimensionError> {
    if !s.is_positive() || s > &BigRational::one() {
        return Err(DimensionError::Precondition(format!("s = {s} is outside (0, 1]")));
    }
    Ok(())
}

fn check_depth(spec: &CantorTreeSpec, depth: usize) -> Result<(), DimensionError> {
    if depth == 0 || depth > spec.level_cap {
        return Err(DimensionError::Precondition(format!("depth {depth} is outside 1..={}", spec.level_cap)));
    }
    Ok(())
}

/// Proxy for `limsup log log(1/B_n) / n < 1` on a finite range: constant
/// sequences satisfy it outright, others are tested at the deepest level.
fn separation_growth_ok(seps: &[ExactRational]) -> bool {
    if seps.windows(2).all(|p| p[0] == p[1]) {
        return true;
    }
    let n = seps.len();
    let b = &seps[n - 1];
    let inv = to_f64(&b.recip());
    if !inv.is_finite() {
        return false;
    }
    // log log(1/B) is negative or undefined for 1/B <= e
    inv <= std::f64::consts::E || inv.ln().ln() < n as f64
}

struct LevelOutcome {
    path: Vec<u64>,
    ok: bool,
    sum: Bracket,
    precision: u32,
    kind: Option<ViolationKind>,
    ratio: ExactRational,
}

fn check_level(
    spec: &CantorTreeSpec,
    level: usize,
    kind: BoundKind,
    sep: Option<&ExactRational>,
    caches: &mut [SumCache],
) -> Result<Vec<LevelOutcome>, DimensionError> {
    let blocks = level_blocks(spec, level)?;
    let mut out = Vec::with_capacity(blocks.len());
    for (path, block) in blocks {
        let geom = block_geometry(&block, &spec.core);
        let mut violation = None;
        if geom.hull.0 < spec.core.0 || geom.hull.1 > spec.core.1 {
            violation = Some(ViolationKind::Nesting);
        }
        if geom.max_ratio >= BigRational::one() {
            violation = violation.or(Some(ViolationKind::Decay));
        }
        if kind == BoundKind::Lower && block.is_countable() {
            violation = violation.or(Some(ViolationKind::Countable));
        }
        let (sum_ok, sum, precision) = decide_sum(caches, &block, kind)?;
        if !sum_ok {
            violation = violation.or(Some(ViolationKind::ChildSum { sum_lo: sum.lo.clone(), sum_hi: sum.hi.clone() }));
        }
        if let (BoundKind::Lower, Some(b)) = (kind, sep) {
            if let Some(gap) = geom.relative_gap(&spec.core) {
                if &gap < b {
                    violation = violation.or(Some(ViolationKind::Separation { gap, required: b.clone() }));
                }
            }
        }
        out.push(LevelOutcome { path, ok: violation.is_none(), sum, precision, kind: violation, ratio: geom.max_ratio });
    }
    Ok(out)
}

fn verify(
    spec: &CantorTreeSpec,
    s: &ExactRational,
    kind: BoundKind,
    sep: Option<&SeparationSeq>,
    depth: usize,
) -> Result<DimensionCertificate, DimensionError> {
    check_s(s)?;
    check_depth(spec, depth)?;
    let mut caches: Vec<SumCache> = PRECISION_LADDER.iter().map(|&w| SumCache::new(s, w)).collect();
    let mut margin: Option<ExactRational> = None;
    let mut decay = BigRational::zero();
    let mut precision = PRECISION_LADDER[0];
    let mut seps = Vec::new();
    for level in 0..depth {
        let b = match sep {
            Some(seq) => {
                let b = seq.get(level + 1).cloned().ok_or_else(|| {
                    DimensionError::Precondition(format!("no separation constant for level {}", level + 1))
                })?;
                if !b.is_positive() {
                    return Err(DimensionError::Precondition(format!("B_{} = {b} must be positive", level + 1)));
                }
                seps.push(b.clone());
                Some(b)
            }
            None => None,
        };
        for o in check_level(spec, level, kind, b.as_ref(), &mut caches)? {
            if !o.ok {
                return Err(DimensionError::Violation { level: level + 1, path: o.path, kind: Box::new(o.kind.expect("not ok")) });
            }
            let one = BigRational::one();
            let slack = match kind {
                BoundKind::Lower => &o.sum.lo - &one,
                BoundKind::Upper => &one - &o.sum.hi,
            };
            margin = Some(match margin {
                Some(m) if m <= slack => m,
                _ => slack,
            });
            decay = decay.max(o.ratio);
            precision = precision.max(o.precision);
        }
    }
    if sep.is_some() && !separation_growth_ok(&seps) {
        let path = spec.root_word.as_slice().to_vec();
        return Err(DimensionError::Violation { level: depth, path, kind: Box::new(ViolationKind::SeparationGrowth) });
    }
    let margin = margin.expect("depth >= 1");
    Ok(DimensionCertificate {
        schema: CERTIFICATE_SCHEMA,
        kind,
        s: s.clone(),
        levels_checked: depth,
        nodes_covered: node_count(spec, depth)?,
        separation_seq: seps,
        margin_approx: to_f64(&margin),
        margin,
        decay_ratio: decay,
        precision_bits: precision,
        tree: spec.descriptor.clone(),
    })
}

/// Checks the lower-bound hypotheses on every node above `depth`.
pub fn verify_lower_bound(
    spec: &CantorTreeSpec,
    s: &ExactRational,
    sep: &SeparationSeq,
    depth: usize,
) -> Result<DimensionCertificate, DimensionError> {
    verify(spec, s, BoundKind::Lower, Some(sep), depth)
}

/// Checks `Σ |B|^s <= |A|^s` and nesting on every node above `depth`.
/// Closures of siblings may touch; only interiors need to be disjoint,
/// which holds for Lüroth cylinders by construction.
pub fn verify_upper_bound(spec: &CantorTreeSpec, s: &ExactRational, depth: usize) -> Result<DimensionCertificate, DimensionError> {
    verify(spec, s, BoundKind::Upper, None, depth)
}

/// Rebuilds the tree named by the certificate, re-runs the check and
/// requires an identical certificate.
pub fn replay_certificate(cert: &DimensionCertificate) -> Result<(), DimensionError> {
    if cert.schema != CERTIFICATE_SCHEMA {
        return Err(DimensionError::Precondition(format!("unknown schema {}", cert.schema)));
    }
    let spec = super::builders::tree_from_descriptor(&cert.tree)?;
    let again = match cert.kind {
        BoundKind::Lower => verify_lower_bound(&spec, &cert.s, &SeparationSeq::PerLevel(cert.separation_seq.clone()), cert.levels_checked)?,
        BoundKind::Upper => verify_upper_bound(&spec, &cert.s, cert.levels_checked)?,
    };
    let mut again = again;
    if (again.margin_approx - cert.margin_approx).abs() <= 1e-12 * cert.margin_approx.abs().max(1e-300) {
        // decimal round trips of the float field are not bit-exact
        again.margin_approx = cert.margin_approx;
    }
    if &again != cert {
        return Err(DimensionError::Precondition("replayed certificate differs from the recorded one".into()));
    }
    Ok(())
}
