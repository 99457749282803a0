//! Strongly tree-like Cantor families built from Lüroth cylinders.
//!
//! A node is the compact set `T_w(K)`, the image of a fixed core interval
//! `K ⊂ [0, 1]` under the inverse branch of its word `w`. Children of a node
//! append a block of digits, so every ratio `|child| / |parent|` and every
//! relative sibling gap depends only on the block, never on `w`.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{cylinder, periodic_value, DigitWord};
use crate::rational::ExactRational;

/// Digits allowed at one position of a child block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DigitRange {
    /// `lo..=hi`.
    Finite { lo: u64, hi: u64 },
    /// `from, from+1, …`, countably many.
    Unbounded { from: u64 },
}

impl DigitRange {
    pub fn single(d: u64) -> Self {
        DigitRange::Finite { lo: d, hi: d }
    }

    pub fn smallest(&self) -> u64 {
        match *self {
            DigitRange::Finite { lo, .. } => lo,
            DigitRange::Unbounded { from } => from,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DigitRange::Finite { lo, hi } if lo >= 2 && lo <= hi => Ok(()),
            DigitRange::Unbounded { from } if from >= 2 => Ok(()),
            other => Err(Error::Precondition(format!("invalid digit range {other:?}"))),
        }
    }
}

/// The children of a node: either a product of per-position digit ranges or
/// an explicit list of digit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChildBlock {
    Product(Vec<DigitRange>),
    Words(Vec<Vec<u64>>),
}

impl ChildBlock {
    pub fn validate(&self) -> Result<()> {
        match self {
            ChildBlock::Product(ranges) if !ranges.is_empty() => ranges.iter().try_for_each(DigitRange::validate),
            ChildBlock::Words(words) if !words.is_empty() => {
                let len = words[0].len();
                if len == 0 || words.iter().any(|w| w.len() != len) {
                    return Err(Error::Precondition("child words must share a positive length".into()));
                }
                words.iter().try_for_each(|w| DigitWord::new(w.clone()).map(|_| ()))
            }
            _ => Err(Error::Precondition("a node needs at least one child".into())),
        }
    }

    pub fn is_countable(&self) -> bool {
        matches!(self, ChildBlock::Product(r) if r.iter().any(|d| matches!(d, DigitRange::Unbounded { .. })))
    }

    /// Number of children, `None` for countable blocks.
    pub fn count(&self) -> Option<BigUint> {
        match self {
            ChildBlock::Product(ranges) => {
                let mut n = BigUint::one();
                for r in ranges {
                    match *r {
                        DigitRange::Finite { lo, hi } => n *= BigUint::from(hi - lo + 1),
                        DigitRange::Unbounded { .. } => return None,
                    }
                }
                Some(n)
            }
            ChildBlock::Words(words) => Some(BigUint::from(words.len())),
        }
    }

    /// Canonical child: the smallest digit at every position.
    pub fn first_child(&self) -> Vec<u64> {
        match self {
            ChildBlock::Product(ranges) => ranges.iter().map(DigitRange::smallest).collect(),
            ChildBlock::Words(words) => words[0].clone(),
        }
    }

    /// All child words, for finite blocks below `cap` children.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Vec<u64>>> {
        let too_many = || Error::Precondition(format!("more than {cap} children"));
        match self {
            ChildBlock::Words(words) if words.len() <= cap => Ok(words.clone()),
            ChildBlock::Words(_) => Err(too_many()),
            ChildBlock::Product(ranges) => {
                let count = self.count().ok_or_else(|| Error::Precondition("countable child list".into()))?;
                if count > BigUint::from(cap) {
                    return Err(too_many());
                }
                let mut words = vec![Vec::new()];
                for r in ranges {
                    let DigitRange::Finite { lo, hi } = *r else { unreachable!() };
                    words = words
                        .into_iter()
                        .flat_map(|w| {
                            (lo..=hi).map(move |d| {
                                let mut w = w.clone();
                                w.push(d);
                                w
                            })
                        })
                        .collect();
                }
                Ok(words)
            }
        }
    }
}

/// Child-enumeration rule. Must be a pure function of `(level, word)`.
pub trait ChildRule: Send + Sync {
    /// Children of the node at `level` (root is level 0) with defining word
    /// `word` (including the root word).
    fn block(&self, level: usize, word: &[u64]) -> ChildBlock;

    /// Whether `block` ignores `word`, so one node per level stands for all.
    fn level_homogeneous(&self) -> bool {
        false
    }
}

/// Finite description of a tree sufficient to rebuild it for replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TreeDescriptor {
    /// `F_N`: digits in `⟦2, N⟧` at every position.
    CantorN { n: u64 },
    /// The distal family `𝒜(m, n)` along the sequence `e`.
    Distal { e_seq: Vec<u64>, m: u64, n: u64, big_e: u64 },
    /// The `G_N^M` tree of a sequence `a`, given by its first digits.
    Asymptotic { a_prefix: Vec<u64>, big_m: u64, big_n: u64 },
    /// A user-supplied rule; cannot be rebuilt from the certificate alone.
    Custom { name: String },
}

/// Strongly tree-like family rooted at `T_root(K)`.
#[derive(Clone)]
pub struct CantorTreeSpec {
    pub root_word: DigitWord,
    pub core: (ExactRational, ExactRational),
    pub rule: Arc<dyn ChildRule>,
    pub level_cap: usize,
    pub descriptor: TreeDescriptor,
}

impl fmt::Debug for CantorTreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CantorTreeSpec")
            .field("root_word", &self.root_word)
            .field("core", &self.core)
            .field("level_cap", &self.level_cap)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

/// Image of `[k0, k1]` under the inverse branch of `word`.
pub fn branch_image_of(word: &[u64], k: &(ExactRational, ExactRational)) -> (ExactRational, ExactRational) {
    let (lo, diam) = cylinder(word).expect("tree words hold digits >= 2");
    (&lo + &diam * &k.0, lo + diam * &k.1)
}

/// `T_d(y) = 1/d + y/(d(d-1))`.
fn t_d(d: u64, y: &ExactRational) -> ExactRational {
    let d_big = BigInt::from(d);
    BigRational::new(BigInt::one(), d_big.clone()) + y / BigRational::from_integer(&d_big * (d_big.clone() - 1))
}

/// Exact geometry of a block relative to `K`: the hull of
/// `⋃_b T_b(K)`, the smallest gap between distinct `T_b(K)` and the largest
/// ratio `|T_b(K)| / |K|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGeometry {
    pub hull: (ExactRational, ExactRational),
    /// `None` for a single child.
    pub min_gap: Option<ExactRational>,
    pub max_ratio: ExactRational,
}

impl BlockGeometry {
    pub fn relative_gap(&self, core: &(ExactRational, ExactRational)) -> Option<ExactRational> {
        self.min_gap.as_ref().map(|g| g / (&core.1 - &core.0))
    }
}

pub fn block_geometry(block: &ChildBlock, core: &(ExactRational, ExactRational)) -> BlockGeometry {
    match block {
        ChildBlock::Product(ranges) => {
            // Work from the last position outwards: `hull` and `gap` describe
            // the union of T_{b_j..b_L}(K) over the remaining positions.
            let mut hull = core.clone();
            let mut gap: Option<ExactRational> = None;
            let mut max_ratio = BigRational::one();
            for r in ranges.iter().rev() {
                match *r {
                    DigitRange::Finite { lo, hi } => {
                        let inner = gap.map(|g| g / BigRational::from_integer(BigInt::from(hi * (hi - 1))));
                        let cross = (lo..hi).map(|d| t_d(d, &hull.0) - t_d(d + 1, &hull.1)).min();
                        gap = match (inner, cross) {
                            (Some(a), Some(b)) => Some(a.min(b)),
                            (a, b) => a.or(b),
                        };
                        hull = (t_d(hi, &hull.0), t_d(lo, &hull.1));
                        max_ratio /= BigRational::from_integer(BigInt::from(lo * (lo - 1)));
                    }
                    DigitRange::Unbounded { from } => {
                        gap = Some(BigRational::zero());
                        hull = (BigRational::zero(), t_d(from, &hull.1));
                        max_ratio /= BigRational::from_integer(BigInt::from(from * (from - 1)));
                    }
                }
            }
            BlockGeometry { hull, min_gap: gap, max_ratio }
        }
        ChildBlock::Words(words) => {
            let width = &core.1 - &core.0;
            let mut sets: Vec<(ExactRational, ExactRational)> = words.iter().map(|w| branch_image_of(w, core)).collect();
            sets.sort();
            let hull = (
                sets.iter().map(|s| s.0.clone()).min().expect("nonempty"),
                sets.iter().map(|s| s.1.clone()).max().expect("nonempty"),
            );
            let min_gap = sets
                .windows(2)
                .map(|p| crate::intervals::closed_gap((&p[0].0, &p[0].1), (&p[1].0, &p[1].1)))
                .min();
            let max_ratio = sets.iter().map(|s| (&s.1 - &s.0) / &width).max().expect("nonempty");
            BlockGeometry { hull, min_gap, max_ratio }
        }
    }
}

impl CantorTreeSpec {
    pub fn new(
        root_word: Vec<u64>,
        core: (ExactRational, ExactRational),
        rule: Arc<dyn ChildRule>,
        level_cap: usize,
        descriptor: TreeDescriptor,
    ) -> Result<Self> {
        if !(BigRational::zero() <= core.0 && core.0 < core.1 && core.1 <= BigRational::one()) {
            return Err(Error::Precondition(format!("core [{}, {}] is not a subinterval of [0, 1]", core.0, core.1)));
        }
        Ok(CantorTreeSpec { root_word: DigitWord::new(root_word)?, core, rule, level_cap, descriptor })
    }

    /// The node set `T_word(K)`.
    pub fn node(&self, word: &[u64]) -> (ExactRational, ExactRational) {
        branch_image_of(word, &self.core)
    }

    pub fn root(&self) -> (ExactRational, ExactRational) {
        self.node(&self.root_word)
    }

    pub fn block(&self, level: usize, word: &[u64]) -> Result<ChildBlock> {
        let b = self.rule.block(level, word);
        b.validate()?;
        Ok(b)
    }

    /// Words of every node at `level`, for finite trees below `cap` nodes.
    pub fn level_nodes(&self, level: usize, cap: usize) -> Result<Vec<Vec<u64>>> {
        if level > self.level_cap {
            return Err(Error::Precondition(format!("level {level} is beyond the cap {}", self.level_cap)));
        }
        let mut nodes = vec![self.root_word.as_slice().to_vec()];
        for k in 0..level {
            let mut next = Vec::new();
            for w in &nodes {
                for b in self.block(k, w)?.enumerate(cap)? {
                    let mut c = w.clone();
                    c.extend(b);
                    next.push(c);
                    if next.len() > cap {
                        return Err(Error::Precondition(format!("more than {cap} nodes at level {}", k + 1)));
                    }
                }
            }
            nodes = next;
        }
        Ok(nodes)
    }
}

struct ProductEveryLevel(Vec<DigitRange>);

impl ChildRule for ProductEveryLevel {
    fn block(&self, _: usize, _: &[u64]) -> ChildBlock {
        ChildBlock::Product(self.0.clone())
    }
    fn level_homogeneous(&self) -> bool {
        true
    }
}

/// `F_N = {x : a_n(x) ∈ ⟦2, N⟧ for all n}`. The core is its hull
/// `[⟨N, N, …⟩, 1]`, so that sibling nodes are strictly separated.
pub fn cantor_tree(n: u64) -> Result<CantorTreeSpec> {
    if n < 3 {
        return Err(Error::Precondition(format!("F_N needs N >= 3, got {n}")));
    }
    let core = (periodic_value(&[n])?, BigRational::one());
    CantorTreeSpec::new(
        vec![],
        core,
        Arc::new(ProductEveryLevel(vec![DigitRange::Finite { lo: 2, hi: n }])),
        usize::MAX,
        TreeDescriptor::CantorN { n },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::interval_gap;
    use crate::rational::rat;

    /// Geometry by explicit enumeration of the child sets.
    fn geometry_oracle(block: &ChildBlock, core: &(ExactRational, ExactRational)) -> BlockGeometry {
        block_geometry(&ChildBlock::Words(block.enumerate(1 << 16).unwrap()), core)
    }

    #[test]
    fn product_geometry_matches_enumeration() {
        let cores = [(rat(0, 1), rat(1, 1)), (rat(2, 7), rat(1, 1)), (rat(1, 5), rat(3, 4))];
        let blocks = [
            vec![DigitRange::Finite { lo: 2, hi: 4 }],
            vec![DigitRange::Finite { lo: 2, hi: 5 }, DigitRange::single(4)],
            vec![DigitRange::Finite { lo: 3, hi: 4 }, DigitRange::Finite { lo: 2, hi: 6 }, DigitRange::single(3)],
            vec![DigitRange::single(7)],
        ];
        for core in &cores {
            for b in &blocks {
                let block = ChildBlock::Product(b.clone());
                assert_eq!(block_geometry(&block, core), geometry_oracle(&block, core), "{b:?} {core:?}");
            }
        }
    }

    #[test]
    fn cantor_tree_levels_are_separated_and_nested() {
        let t = cantor_tree(3).unwrap();
        assert_eq!(t.core.0, rat(2, 5));
        let g = block_geometry(&t.block(0, &[]).unwrap(), &t.core);
        assert_eq!(g.hull, t.core);
        // T_2(K) = [7/10, 1], T_3(K) = [2/5, 1/2]
        assert_eq!(g.min_gap, Some(rat(1, 5)));
        let level2 = t.level_nodes(2, 100).unwrap();
        assert_eq!(level2.len(), 4);
        let parent = t.node(&[2]);
        for w in level2.iter().filter(|w| w[0] == 2) {
            let c = t.node(w);
            assert!(parent.0 <= c.0 && c.1 <= parent.1);
        }
    }

    #[test]
    fn unit_core_cells_touch() {
        let block = ChildBlock::Product(vec![DigitRange::Finite { lo: 2, hi: 3 }]);
        let g = block_geometry(&block, &(rat(0, 1), rat(1, 1)));
        assert_eq!(g.min_gap, Some(rat(0, 1)));
        let a = crate::intervals::fundamental_interval(&[2]).unwrap();
        let b = crate::intervals::fundamental_interval(&[3]).unwrap();
        assert_eq!(interval_gap(&a, &b), rat(0, 1));
    }

    #[test]
    fn unbounded_range_accumulates_at_zero() {
        let block = ChildBlock::Product(vec![DigitRange::Unbounded { from: 4 }]);
        let g = block_geometry(&block, &(rat(0, 1), rat(1, 1)));
        assert_eq!(g.hull, (rat(0, 1), rat(1, 3)));
        assert_eq!(g.min_gap, Some(rat(0, 1)));
        assert_eq!(g.max_ratio, rat(1, 12));
        assert!(block.count().is_none() && block.is_countable());
    }

    #[test]
    fn invalid_blocks_rejected() {
        assert!(ChildBlock::Product(vec![]).validate().is_err());
        assert!(ChildBlock::Product(vec![DigitRange::Finite { lo: 1, hi: 3 }]).validate().is_err());
        assert!(ChildBlock::Words(vec![vec![2], vec![2, 3]]).validate().is_err());
        assert!(cantor_tree(2).is_err());
    }
}
