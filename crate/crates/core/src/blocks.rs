//! Blocks, their canonical enumeration, expectations and occurrence counts.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::exact::{CompensatedSum, UnitFractionSum};
use crate::sequences::{BasicSequence, Limit};

/// A nonempty word `(e_1, ..., e_k)` of digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block(Vec<u64>);

impl Block {
    pub fn new(word: Vec<u64>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::Domain("blocks are nonempty".into()));
        }
        Ok(Self(word))
    }

    /// `0_k`.
    pub fn zeros(k: usize) -> Self {
        assert!(k >= 1);
        Self(vec![0; k])
    }

    /// `1_k`.
    pub fn ones(k: usize) -> Self {
        assert!(k >= 1);
        Self(vec![1; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `||B|| = sum (e_t + 1)`.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|e| e + 1).sum()
    }

    /// `B(t)` for `1 <= t <= |B|`.
    pub fn at(&self, t: usize) -> u64 {
        self.0[t - 1]
    }

    pub fn word(&self) -> &[u64] {
        &self.0
    }

    pub fn max_digit(&self) -> u64 {
        *self.0.iter().max().expect("nonempty")
    }

    /// `I_{B,j}`: whether every `e_t < q_{j+t-1}`.
    pub fn indicator(&self, j: u64, seq: &BasicSequence) -> bool {
        assert!(j >= 1);
        self.0
            .iter()
            .enumerate()
            .all(|(t, &e)| e < seq.base_at(j + t as u64))
    }

    /// Whether the block occurs at 0-based offset `start` of `digits`.
    #[inline]
    pub fn occurs_at(&self, digits: &[u64], start: usize) -> bool {
        digits.get(start..start + self.len()) == Some(&self.0[..])
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Block {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("block literal `{s}` must look like [0,3]")))?;
        let word = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad digit `{t}` in block `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Block::new(word)
    }
}

/// An ordered collection of distinct blocks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockCollection {
    pub name: Option<String>,
    blocks: Vec<Block>,
}

impl BlockCollection {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let mut seen = HashSet::new();
        for b in &blocks {
            if !seen.insert(b) {
                return Err(Error::Domain(format!("duplicate block {b} in collection")));
            }
        }
        Ok(Self { name: None, blocks })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// All blocks with `||B|| <= max_norm`, in canonical order.
    pub fn up_to_norm(max_norm: u64) -> Self {
        Self {
            name: Some(format!("norm<={max_norm}")),
            blocks: blocks_up_to_norm(max_norm),
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// One block literal per line; blank lines and `#` comments are skipped.
    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            blocks.push(line.parse().map_err(|e: Error| Error::Data {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Self::new(blocks)
    }
}

/// Blocks of norm exactly `s`, ordered by length and then lexicographically.
fn norm_tier(s: u64) -> Vec<Block> {
    let mut out = Vec::new();
    for len in 1..=s as usize {
        let mut word = Vec::with_capacity(len);
        fill_tier(s, len, &mut word, &mut out);
    }
    out
}

fn fill_tier(remaining: u64, slots: usize, word: &mut Vec<u64>, out: &mut Vec<Block>) {
    if slots == 0 {
        if remaining == 0 {
            out.push(Block(word.clone()));
        }
        return;
    }
    if remaining < slots as u64 {
        return;
    }
    // Each slot takes at least 1 unit of norm; the current one takes e + 1.
    let max_e = remaining - slots as u64;
    for e in 0..=max_e {
        word.push(e);
        fill_tier(remaining - e - 1, slots - 1, word, out);
        word.pop();
    }
}

/// The first `p` blocks in canonical order: ascending norm, then length,
/// then lexicographic.
pub fn enumerate_blocks(p: usize) -> Vec<Block> {
    let mut out = Vec::with_capacity(p);
    let mut s = 1;
    while out.len() < p {
        for b in norm_tier(s) {
            if out.len() == p {
                break;
            }
            out.push(b);
        }
        s += 1;
    }
    out
}

pub fn blocks_up_to_norm(max_norm: u64) -> Vec<Block> {
    (1..=max_norm).flat_map(norm_tier).collect()
}

/// Exact `Q_{m,n}(B) = sum_{j=m..n} I_{B,j} / (q_j ... q_{j+k-1})`.
pub fn expectation(b: &Block, m: u64, n: u64, seq: &BasicSequence) -> BigRational {
    assert!(m >= 1);
    if n < m {
        return BigRational::zero();
    }
    let k = b.len() as u64;
    let mut tail = BigRational::zero();
    let mut direct_end = n;
    if let Some((s, q)) = seq.stable_from() {
        let first = s.max(m);
        if first <= n {
            if b.max_digit() < q {
                let den = num_traits::pow(BigUint::from(q), b.len());
                tail = BigRational::new((n - first + 1).into(), den.into());
            }
            direct_end = first - 1;
        }
    }
    let mut sum = UnitFractionSum::new();
    let mut window = BigUint::one();
    for t in 0..k {
        window *= seq.base_at(m + t);
    }
    for j in m..=direct_end {
        if j > m {
            window /= seq.base_at(j - 1);
            window *= seq.base_at(j + k - 1);
        }
        if b.indicator(j, seq) {
            sum.add(&window);
        }
    }
    sum.finish() + tail
}

/// Double-precision cumulative `Q_j(B)` for `j = 0..=n` from a base table
/// that covers positions `1..=n + |B| - 1`.
pub fn expectation_cumulative(b: &Block, bases: &[u64], n: usize) -> Vec<f64> {
    let k = b.len();
    assert!(bases.len() + 1 >= n + k, "base table too short");
    let w = b.word();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = CompensatedSum::default();
    for j in 0..n {
        let window = &bases[j..j + k];
        if w.iter().zip(window).all(|(e, q)| e < q) {
            let mut term = 1.0f64;
            for &q in window {
                term /= q as f64;
            }
            acc.add(term);
        }
        out.push(acc.value());
    }
    out
}

/// `N_{m,n}(B)`: occurrences of `B` starting at 1-based positions `m..=n`.
pub fn count(d: &DigitStream, b: &Block, m: usize, n: usize) -> Result<usize> {
    assert!(m >= 1);
    let required = n + b.len() - 1;
    if required > d.len() {
        return Err(Error::Range {
            requested: n,
            available: d.len(),
            required,
        });
    }
    if n < m {
        return Ok(0);
    }
    let digits = d.digits();
    Ok((m - 1..n).filter(|&s| b.occurs_at(digits, s)).count())
}

/// 0-based starts of all occurrences of `b` within `digits[from..to]`
/// (the block must fit inside the range).
pub fn occurrence_starts(digits: &[u64], b: &Block, from: usize, to: usize) -> Vec<usize> {
    let k = b.len();
    if to < from + k {
        return Vec::new();
    }
    let first = b.word()[0];
    (from..=to - k)
        .filter(|&s| digits[s] == first && b.occurs_at(digits, s))
        .collect()
}

/// Counts `N_n(B)` at every checkpoint `n` (1-based, sorted ascending).
pub fn counts_at(digits: &[u64], b: &Block, checkpoints: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut running = 0usize;
    let mut pos = 0usize;
    for &n in checkpoints {
        while pos < n {
            if b.occurs_at(digits, pos) {
                running += 1;
            }
            pos += 1;
        }
        out.push(running);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goodness {
    Good,
    NotGood,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
pub struct GoodnessConfig {
    pub horizon: usize,
    pub threshold: f64,
}

impl Default for GoodnessConfig {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            threshold: 50.0,
        }
    }
}

/// Whether `B` has infinite expectation.
///
/// The indicator `I_{B,j}` is eventually constant for every supported rule:
/// eventually 1 when the bases tend to infinity or settle at a value above
/// every entry, eventually 0 otherwise. When it is eventually 1, goodness is
/// `|B|`-divergence, read from the metadata or, if undeclared, estimated
/// from `Q_horizon(B)`.
pub fn is_good(b: &Block, seq: &BasicSequence, cfg: &GoodnessConfig) -> Goodness {
    let eventually_one = match seq.limit() {
        Limit::Infinite => true,
        Limit::Constant(q) => b.max_digit() < q,
    };
    if !eventually_one {
        return Goodness::NotGood;
    }
    match seq.meta().declares_divergent(b.len() as u32) {
        Some(true) => Goodness::Good,
        Some(false) => Goodness::NotGood,
        None => {
            let bases = seq.bases(cfg.horizon + b.len());
            let q = *expectation_cumulative(b, &bases, cfg.horizon)
                .last()
                .expect("non-empty");
            if q >= cfg.threshold {
                Goodness::Good
            } else {
                Goodness::Unknown
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StarStatus {
    /// `partner` with position `t` such that `|B(t) - B'(t')| > 1` for all `t'`.
    Satisfied { partner: Block, t: usize },
    Violated,
    NotGood,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarEntry {
    pub block: Block,
    pub status: StarStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarReport {
    pub entries: Vec<StarEntry>,
}

impl StarReport {
    /// Every good member has a partner and no member has unknown goodness.
    pub fn satisfied(&self) -> bool {
        self.entries.iter().all(|e| {
            matches!(e.status, StarStatus::Satisfied { .. } | StarStatus::NotGood)
        })
    }

    pub fn violations(&self) -> impl Iterator<Item = &Block> {
        self.entries
            .iter()
            .filter(|e| e.status == StarStatus::Violated)
            .map(|e| &e.block)
    }
}

fn separating_position(b: &Block, other: &Block) -> Option<usize> {
    (1..=b.len()).find(|&t| {
        let e = b.at(t);
        other.word().iter().all(|&f| e.abs_diff(f) > 1)
    })
}

/// Checks the separation hypothesis on a collection: every good member `B`
/// needs a good member `B'` of the same length and a position `t` with
/// `|B(t) - B'(t')| > 1` for every `t'`.
pub fn star_condition_check(
    c: &BlockCollection,
    seq: &BasicSequence,
    cfg: &GoodnessConfig,
) -> StarReport {
    let goodness: Vec<Goodness> = c.blocks().iter().map(|b| is_good(b, seq, cfg)).collect();
    let entries = c
        .blocks()
        .iter()
        .zip(&goodness)
        .map(|(b, g)| {
            let status = match g {
                Goodness::NotGood => StarStatus::NotGood,
                Goodness::Unknown => StarStatus::Unknown,
                Goodness::Good => c
                    .blocks()
                    .iter()
                    .zip(&goodness)
                    .filter(|(o, og)| **og == Goodness::Good && o.len() == b.len())
                    .find_map(|(o, _)| {
                        separating_position(b, o).map(|t| StarStatus::Satisfied {
                            partner: o.clone(),
                            t,
                        })
                    })
                    .unwrap_or(StarStatus::Violated),
            };
            StarEntry {
                block: b.clone(),
                status,
            }
        })
        .collect();
    StarReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blk(s: &str) -> Block {
        s.parse().unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn norms_and_literals() {
        let b = blk("[0,3]");
        assert_eq!(b.len(), 2);
        assert_eq!(b.norm(), 5);
        assert_eq!(b.at(2), 3);
        assert_eq!(b.to_string(), "[0,3]");
        assert!("[]".parse::<Block>().is_err());
        assert!("0,3".parse::<Block>().is_err());
    }

    #[test]
    fn indicator_examples() {
        let lin = BasicSequence::linear(1, 1).unwrap();
        assert!(blk("[0]").indicator(5, &lin));
        assert!(!blk("[0,3]").indicator(1, &lin));
        assert!(blk("[0,3]").indicator(3, &lin));
    }

    #[test]
    fn expectation_examples() {
        let lin = BasicSequence::linear(1, 1).unwrap();
        assert_eq!(expectation(&blk("[1]"), 1, 3, &lin), r(13, 12));
        assert_eq!(expectation(&blk("[2]"), 1, 2, &lin), r(1, 3));
        let c3 = BasicSequence::constant(3).unwrap();
        assert_eq!(expectation(&blk("[4,0]"), 1, 50, &c3), r(0, 1));
    }

    #[test]
    fn count_examples() {
        let c2 = BasicSequence::constant(2).unwrap();
        let d = DigitStream::new(c2, vec![0, 1, 0, 0, 1, 0]).unwrap();
        assert_eq!(count(&d, &blk("[0,0]"), 1, 5).unwrap(), 1);
        assert_eq!(count(&d, &blk("[0]"), 1, 6).unwrap(), 4);
        assert!(matches!(
            count(&d, &blk("[0,0]"), 1, 6),
            Err(Error::Range { required: 7, .. })
        ));
    }

    #[test]
    fn enumeration_examples() {
        let show = |p| {
            enumerate_blocks(p)
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        assert_eq!(show(1), "[0]");
        assert_eq!(show(3), "[0] [1] [0,0]");
        assert_eq!(show(7), "[0] [1] [0,0] [2] [0,1] [1,0] [0,0,0]");
        assert_eq!(blocks_up_to_norm(4).len(), 15);
    }

    #[test]
    fn goodness_examples() {
        let cfg = GoodnessConfig::default();
        let c2: BasicSequence = "const:2@div=all".parse().unwrap();
        assert_eq!(is_good(&blk("[0]"), &c2, &cfg), Goodness::Good);
        let c3: BasicSequence = "const:3@div=all".parse().unwrap();
        assert_eq!(is_good(&blk("[5]"), &c3, &cfg), Goodness::NotGood);
        let lin: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        assert_eq!(is_good(&blk("[1,1]"), &lin, &cfg), Goodness::NotGood);
        assert_eq!(is_good(&blk("[7]"), &lin, &cfg), Goodness::Good);
        let undeclared = BasicSequence::constant(2).unwrap();
        assert_eq!(is_good(&blk("[0,1]"), &undeclared, &cfg), Goodness::Good);
        let small = GoodnessConfig {
            horizon: 100,
            threshold: 50.0,
        };
        let lin_undeclared = BasicSequence::linear(1, 1).unwrap();
        assert_eq!(is_good(&blk("[0]"), &lin_undeclared, &small), Goodness::Unknown);
    }

    #[test]
    fn star_examples() {
        let cfg = GoodnessConfig::default();
        let seq: BasicSequence = "const:5@div=all".parse().unwrap();
        let c = BlockCollection::new(vec![blk("[0,0]"), blk("[3,3]")]).unwrap();
        let rep = star_condition_check(&c, &seq, &cfg);
        assert!(rep.satisfied());
        assert_eq!(
            rep.entries[0].status,
            StarStatus::Satisfied {
                partner: blk("[3,3]"),
                t: 1
            }
        );
        let single = BlockCollection::new(vec![blk("[0]")]).unwrap();
        assert!(!star_condition_check(&single, &seq, &cfg).satisfied());
        let close = BlockCollection::new(vec![blk("[0,0]"), blk("[1,1]")]).unwrap();
        let rep = star_condition_check(&close, &seq, &cfg);
        assert!(!rep.satisfied());
        assert_eq!(rep.violations().count(), 2);
    }

    #[test]
    fn collections_reject_duplicates_and_parse_lines() {
        assert!(BlockCollection::new(vec![blk("[0]"), blk("[0]")]).is_err());
        let c = BlockCollection::parse_lines("# pair\n[0,0]\n\n[3,3]\n").unwrap();
        assert_eq!(c.len(), 2);
        assert!(matches!(
            BlockCollection::parse_lines("[0]\n[x]\n"),
            Err(Error::Data { line: 2, .. })
        ));
    }

    #[test]
    fn counts_at_checkpoints() {
        let digits = [0, 1, 0, 0, 1, 0, 0, 0];
        assert_eq!(counts_at(&digits, &blk("[0,0]"), &[1, 3, 6, 7]), vec![0, 1, 2, 3]);
        assert_eq!(occurrence_starts(&digits, &blk("[0,0]"), 0, 8), vec![2, 5, 6]);
    }
}
