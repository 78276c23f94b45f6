//! Finite-prefix estimators for the normality notions.
//!
//! Every estimator reports deviations at checkpoints; none of them decides
//! membership, since the notions are tail properties.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::blocks::{
    blocks_up_to_norm, counts_at, expectation, expectation_cumulative, is_good, Block,
    BlockCollection, Goodness, GoodnessConfig,
};
use crate::digits::{digit_ratio_points, DigitStream};
use crate::discrepancy::{
    bin_errors, extreme_discrepancy, star_discrepancy, weak_distribution_check, Point,
    WdnOutcome,
};
use crate::error::{Error, Result};
use crate::exact::ratio_to_f64;

/// How expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Numerics {
    /// Exact when the sequence is eventually constant or the largest
    /// checkpoint is at most [`EXACT_AUTO_LIMIT`].
    #[default]
    Auto,
    Exact,
    Float,
}

pub const EXACT_AUTO_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub numerics: Numerics,
    pub goodness: GoodnessConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviation {
    Finite(f64),
    Infinite,
}

impl Deviation {
    pub fn value(&self) -> f64 {
        match self {
            Deviation::Finite(v) => *v,
            Deviation::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deviation::Finite(v) => write!(f, "{v}"),
            Deviation::Infinite => f.write_str("inf"),
        }
    }
}

/// `Q_n(B)`, with the exact value when it was computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub approx: f64,
    pub exact: Option<BigRational>,
}

impl Expectation {
    /// Numerator and denominator, using the exact dyadic value of the double
    /// when no exact value is available.
    pub fn as_fraction(&self) -> (BigInt, BigInt) {
        let r = self
            .exact
            .clone()
            .or_else(|| BigRational::from_float(self.approx))
            .unwrap_or_else(BigRational::zero);
        (r.numer().clone(), r.denom().clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow {
    pub checkpoint: usize,
    pub block: Block,
    pub count: usize,
    pub expectation: Expectation,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub checkpoint: usize,
    pub first: Block,
    pub second: Block,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub checkpoint: usize,
    pub star: Point,
    pub extreme: Point,
    pub bins: Vec<(u64, Point)>,
}

/// Which point sequence represents the orbit of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionMode {
    /// `(a_i / q_i)`, equidistributed exactly when the orbit is, provided
    /// the bases tend to infinity.
    DigitRatio,
    /// The orbit `T_{Q,n} x` evaluated from the digit tails.
    TrueOrbit,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviationReport {
    pub checkpoints: Vec<usize>,
    pub rows: Vec<BlockRow>,
    pub pairs: Vec<PairRow>,
    pub distribution: Vec<DistributionRow>,
    /// Candidate blocks left out because they are not good.
    pub excluded: Vec<Block>,
}

impl DeviationReport {
    /// Largest deviation over every row and pair.
    pub fn max_deviation(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.deviation.value())
            .chain(self.pairs.iter().map(|p| p.deviation.value()))
            .reduce(f64::max)
    }

    /// Largest block-row deviation at checkpoint `n`.
    pub fn max_deviation_at(&self, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.checkpoint == n)
            .map(|r| r.deviation.value())
            .reduce(f64::max)
    }

    /// Largest pair deviation at checkpoint `n`.
    pub fn max_pair_deviation_at(&self, n: usize) -> Option<f64> {
        self.pairs
            .iter()
            .filter(|r| r.checkpoint == n)
            .map(|r| r.deviation.value())
            .reduce(f64::max)
    }

    /// Per-checkpoint maximum over block rows and pairs.
    pub fn max_by_checkpoint(&self) -> Vec<(usize, f64)> {
        let mut by: BTreeMap<usize, f64> = BTreeMap::new();
        let rows = self.rows.iter().map(|r| (r.checkpoint, r.deviation.value()));
        let pairs = self.pairs.iter().map(|p| (p.checkpoint, p.deviation.value()));
        for (n, v) in rows.chain(pairs) {
            let e = by.entry(n).or_insert(v);
            *e = e.max(v);
        }
        by.into_iter().collect()
    }

    /// Least-squares slope of `ln(max deviation)` against `ln n`.
    pub fn trend_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .max_by_checkpoint()
            .into_iter()
            .filter(|(n, v)| *n > 0 && v.is_finite() && *v > 0.0)
            .map(|(n, v)| ((n as f64).ln(), v.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// Rows for one block, in checkpoint order.
    pub fn series(&self, block: &Block) -> Vec<(usize, Deviation)> {
        self.rows
            .iter()
            .filter(|r| &r.block == block)
            .map(|r| (r.checkpoint, r.deviation))
            .collect()
    }
}

fn normalized_checkpoints(checkpoints: &[usize]) -> Vec<usize> {
    let mut cps: Vec<usize> = checkpoints.iter().copied().filter(|&n| n > 0).collect();
    cps.sort_unstable();
    cps.dedup();
    cps
}

fn use_exact(d: &DigitStream, numerics: Numerics, last: usize) -> bool {
    match numerics {
        Numerics::Exact => true,
        Numerics::Float => false,
        Numerics::Auto => d.seq().is_eventually_constant() || last <= EXACT_AUTO_LIMIT,
    }
}

/// Splits `candidates` into good blocks and excluded ones; unknown goodness
/// is a configuration error.
fn good_blocks(
    d: &DigitStream,
    candidates: &[Block],
    cfg: &GoodnessConfig,
) -> Result<(Vec<Block>, Vec<Block>)> {
    let mut good = Vec::new();
    let mut excluded = Vec::new();
    for b in candidates {
        match is_good(b, d.seq(), cfg) {
            Goodness::Good => good.push(b.clone()),
            Goodness::NotGood => excluded.push(b.clone()),
            Goodness::Unknown => {
                return Err(Error::Config(format!(
                    "goodness of block {b} is unknown for sequence {}; declare its divergence",
                    d.seq()
                )))
            }
        }
    }
    Ok((good, excluded))
}

fn check_fit(d: &DigitStream, blocks: &[Block], last: usize) -> Result<()> {
    let longest = blocks.iter().map(Block::len).max().unwrap_or(1);
    let required = last + longest - 1;
    if required > d.len() {
        return Err(Error::Range {
            requested: last,
            available: d.len(),
            required,
        });
    }
    Ok(())
}

struct BlockSeries {
    block: Block,
    counts: Vec<usize>,
    expectations: Vec<Expectation>,
}

fn block_series(d: &DigitStream, blocks: &[Block], cps: &[usize], exact: bool) -> Vec<BlockSeries> {
    let last = *cps.last().expect("nonempty checkpoints");
    let longest = blocks.iter().map(Block::len).max().unwrap_or(1);
    let bases = &d.bases()[..(last + longest - 1).min(d.len())];
    blocks
        .iter()
        .map(|b| {
            let counts = counts_at(d.digits(), b, cps);
            let expectations = if exact {
                let mut acc = BigRational::zero();
                let mut from = 1u64;
                cps.iter()
                    .map(|&n| {
                        acc += expectation(b, from, n as u64, d.seq());
                        from = n as u64 + 1;
                        Expectation {
                            approx: ratio_to_f64(&acc),
                            exact: Some(acc.clone()),
                        }
                    })
                    .collect()
            } else {
                let cum = expectation_cumulative(b, bases, last);
                cps.iter()
                    .map(|&n| Expectation {
                        approx: cum[n],
                        exact: None,
                    })
                    .collect()
            };
            BlockSeries {
                block: b.clone(),
                counts,
                expectations,
            }
        })
        .collect()
}

fn normal_rows(series: &[BlockSeries], cps: &[usize]) -> Vec<BlockRow> {
    let mut rows = Vec::new();
    for (ci, &n) in cps.iter().enumerate() {
        for s in series {
            let e = &s.expectations[ci];
            let count = s.counts[ci];
            let deviation = match &e.exact {
                Some(q) if q.is_zero() => continue,
                Some(q) => {
                    let ratio = BigRational::from_integer(count.into()) / q;
                    let dev = (ratio - BigRational::from_integer(1.into())).abs();
                    Deviation::Finite(ratio_to_f64(&dev))
                }
                None if e.approx <= 0.0 => continue,
                None => Deviation::Finite((count as f64 / e.approx - 1.0).abs()),
            };
            rows.push(BlockRow {
                checkpoint: n,
                block: s.block.clone(),
                count,
                expectation: e.clone(),
                deviation,
            });
        }
    }
    rows
}

fn ratio_value(count: usize, e: &Expectation) -> Option<BigRational> {
    match &e.exact {
        Some(q) if q.is_zero() => None,
        Some(q) => Some(BigRational::from_integer(count.into()) / q),
        None if e.approx <= 0.0 => None,
        None => BigRational::from_float(count as f64 / e.approx),
    }
}

fn pair_rows(series: &[BlockSeries], cps: &[usize]) -> Vec<PairRow> {
    let mut rows = Vec::new();
    for (ci, &n) in cps.iter().enumerate() {
        for (i, s1) in series.iter().enumerate() {
            for s2 in series.iter().skip(i + 1) {
                if s1.block.len() != s2.block.len() {
                    continue;
                }
                let (Some(r1), Some(r2)) = (
                    ratio_value(s1.counts[ci], &s1.expectations[ci]),
                    ratio_value(s2.counts[ci], &s2.expectations[ci]),
                ) else {
                    continue;
                };
                let deviation = if r2.is_zero() {
                    Deviation::Infinite
                } else {
                    let dev = (r1 / r2 - BigRational::from_integer(1.into())).abs();
                    Deviation::Finite(ratio_to_f64(&dev))
                };
                rows.push(PairRow {
                    checkpoint: n,
                    first: s1.block.clone(),
                    second: s2.block.clone(),
                    deviation,
                });
            }
        }
    }
    rows
}

fn block_report(
    d: &DigitStream,
    candidates: &[Block],
    checkpoints: &[usize],
    opts: &ReportOptions,
    with_rows: bool,
    with_pairs: bool,
) -> Result<DeviationReport> {
    let cps = normalized_checkpoints(checkpoints);
    let (mut good, excluded) = good_blocks(d, candidates, &opts.goodness)?;
    if !with_rows {
        // Only blocks with an equal-length partner enter a pair.
        let lens: Vec<usize> = good.iter().map(Block::len).collect();
        good.retain(|b| lens.iter().filter(|&&l| l == b.len()).count() > 1);
    }
    let mut report = DeviationReport {
        checkpoints: cps.clone(),
        excluded,
        ..Default::default()
    };
    if cps.is_empty() || good.is_empty() {
        return Ok(report);
    }
    let last = *cps.last().expect("nonempty");
    check_fit(d, &good, last)?;
    let series = block_series(d, &good, &cps, use_exact(d, opts.numerics, last));
    if with_rows {
        report.rows = normal_rows(&series, &cps);
    }
    if with_pairs {
        report.pairs = pair_rows(&series, &cps);
    }
    Ok(report)
}

/// `|N_n(B)/Q_n(B) - 1|` for every good `B` with `||B|| <= max_norm`.
pub fn test_normal(
    d: &DigitStream,
    max_norm: u64,
    checkpoints: &[usize],
    opts: &ReportOptions,
) -> Result<DeviationReport> {
    block_report(d, &blocks_up_to_norm(max_norm), checkpoints, opts, true, false)
}

/// `|(N(B1)/Q(B1)) / (N(B2)/Q(B2)) - 1|` over pairs of good blocks of equal
/// length with norm at most `max_norm`.
pub fn test_ratio_normal(
    d: &DigitStream,
    max_norm: u64,
    checkpoints: &[usize],
    opts: &ReportOptions,
) -> Result<DeviationReport> {
    block_report(d, &blocks_up_to_norm(max_norm), checkpoints, opts, false, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectionVariant {
    Normal,
    RatioNormal,
}

/// The block statistics restricted to the members of `c`.
pub fn test_collection(
    d: &DigitStream,
    c: &BlockCollection,
    checkpoints: &[usize],
    variant: CollectionVariant,
    opts: &ReportOptions,
) -> Result<DeviationReport> {
    let rn = variant == CollectionVariant::RatioNormal;
    block_report(d, c.blocks(), checkpoints, opts, !rn, rn)
}

/// Fixed-point precision for orbit points at tolerance `tol`.
fn orbit_bits(tol: &BigRational) -> Result<u32> {
    for bits in 40..=62u32 {
        let bound = BigRational::new(3.into(), BigInt::from(1u64 << bits));
        if &bound <= tol {
            return Ok(bits);
        }
    }
    Err(Error::Domain(format!(
        "orbit tolerance {tol} is below the supported 3/2^62"
    )))
}

/// The point sequence of the first `n` positions in the given mode.
pub fn distribution_points(
    d: &DigitStream,
    n: usize,
    mode: DistributionMode,
    tol: &BigRational,
) -> Result<Vec<Point>> {
    if n > d.len() {
        return Err(Error::Range {
            requested: n,
            available: d.len(),
            required: n,
        });
    }
    match mode {
        DistributionMode::DigitRatio => {
            if !d.seq().meta().is_infinite_in_limit() {
                return Err(Error::Mode(format!(
                    "digit-ratio points need a sequence declared infinite in limit; {} is not",
                    d.seq()
                )));
            }
            Ok(digit_ratio_points(d, n))
        }
        DistributionMode::TrueOrbit => {
            let bits = orbit_bits(tol)?;
            let den = 1i128 << bits;
            Ok(d.tail_points_fixed(n, bits)?
                .into_iter()
                .map(|v| Point::new(v as i128, den))
                .collect())
        }
    }
}

/// Default bins `[0, 1/k)` reported alongside discrepancies.
pub const DEFAULT_BINS: [u64; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Star and extreme discrepancy (and bin errors) of the point sequence at
/// each checkpoint.
pub fn test_distribution_normal(
    d: &DigitStream,
    checkpoints: &[usize],
    mode: DistributionMode,
    tol: &BigRational,
) -> Result<DeviationReport> {
    let cps = normalized_checkpoints(checkpoints);
    let mut report = DeviationReport {
        checkpoints: cps.clone(),
        ..Default::default()
    };
    let Some(&last) = cps.last() else {
        return Ok(report);
    };
    let points = distribution_points(d, last, mode, tol)?;
    for &n in &cps {
        let prefix = &points[..n];
        report.distribution.push(DistributionRow {
            checkpoint: n,
            star: star_discrepancy(prefix)?,
            extreme: extreme_discrepancy(prefix)?.value,
            bins: bin_errors(prefix, &DEFAULT_BINS),
        });
    }
    Ok(report)
}

/// Weak distribution normality check `D_N <= eps` for `N` in `[ell, n_max]`.
pub fn test_wdn(
    d: &DigitStream,
    eps: &BigRational,
    ell: usize,
    n_max: usize,
    mode: DistributionMode,
    tol: &BigRational,
) -> Result<WdnOutcome> {
    let eps = Point::new(
        eps.numer()
            .to_i128()
            .ok_or_else(|| Error::Domain("eps numerator too large".into()))?,
        eps.denom()
            .to_i128()
            .ok_or_else(|| Error::Domain("eps denominator too large".into()))?,
    );
    let points = distribution_points(d, n_max, mode, tol)?;
    weak_distribution_check(&points, &eps, ell, n_max)
}

/// First 1-based start of every block with `||B|| <= max_norm`.
pub fn richness_scan(d: &DigitStream, max_norm: u64) -> Vec<(Block, Option<usize>)> {
    let digits = d.digits();
    blocks_up_to_norm(max_norm)
        .into_iter()
        .map(|b| {
            let first = (0..digits.len()).find(|&s| b.occurs_at(digits, s)).map(|s| s + 1);
            (b, first)
        })
        .collect()
}

/// Adds the boundaries `b_1, b_2, ...` that fit in the stream to the
/// user checkpoints.
pub fn with_boundaries(checkpoints: &[usize], boundaries: &[usize], limit: usize) -> Vec<usize> {
    let mut all: Vec<usize> = checkpoints
        .iter()
        .chain(boundaries)
        .copied()
        .filter(|&n| n > 0 && n <= limit)
        .collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Exact `N/Q` as a rational, for callers comparing against exact bounds.
pub fn exact_ratio(count: usize, q: &BigRational) -> Option<BigRational> {
    (!q.is_zero()).then(|| BigRational::from_integer(BigInt::from(count)) / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::BasicSequence;

    fn c2_all() -> BasicSequence {
        "const:2@div=all@iil=0".parse().unwrap()
    }

    fn blk(s: &str) -> Block {
        s.parse().unwrap()
    }

    #[test]
    fn normal_examples() {
        let d = DigitStream::new(c2_all(), vec![0, 1, 0, 1]).unwrap();
        let rep = test_normal(&d, 1, &[4], &ReportOptions::default()).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].deviation, Deviation::Finite(0.0));

        let zeros = DigitStream::new(c2_all(), vec![0; 101]).unwrap();
        let rep = test_normal(&zeros, 2, &[100], &ReportOptions::default()).unwrap();
        let row = rep.rows.iter().find(|r| r.block == blk("[1]")).unwrap();
        assert_eq!(row.deviation, Deviation::Finite(1.0));
    }

    #[test]
    fn vacuous_when_no_good_blocks() {
        let s: BasicSequence = "const:2@div=none@iil=0".parse().unwrap();
        let d = DigitStream::new(s, vec![0, 1, 0, 1]).unwrap();
        let rep = test_normal(&d, 3, &[4], &ReportOptions::default()).unwrap();
        assert!(rep.rows.is_empty());
        assert_eq!(rep.excluded.len(), 7);
    }

    #[test]
    fn unknown_goodness_is_config_error() {
        let s = BasicSequence::linear(1, 1).unwrap();
        let d = DigitStream::new(s, vec![0; 10]).unwrap();
        let opts = ReportOptions {
            goodness: GoodnessConfig {
                horizon: 10,
                threshold: 50.0,
            },
            ..Default::default()
        };
        assert!(matches!(test_normal(&d, 1, &[5], &opts), Err(Error::Config(_))));
    }

    #[test]
    fn ratio_examples() {
        let d = DigitStream::new(c2_all(), vec![0, 1, 0, 1]).unwrap();
        let rep = test_ratio_normal(&d, 2, &[4], &ReportOptions::default()).unwrap();
        assert_eq!(rep.pairs.len(), 1);
        assert_eq!(rep.pairs[0].deviation, Deviation::Finite(0.0));

        let zeros = DigitStream::new(c2_all(), vec![0; 8]).unwrap();
        let rep = test_ratio_normal(&zeros, 2, &[8], &ReportOptions::default()).unwrap();
        assert_eq!(rep.pairs[0].deviation, Deviation::Infinite);

        let rep = test_ratio_normal(&d, 1, &[4], &ReportOptions::default()).unwrap();
        assert!(rep.pairs.is_empty());
    }

    #[test]
    fn collection_examples() {
        let d = DigitStream::new(c2_all(), vec![0, 1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
        let opts = ReportOptions::default();
        let full = BlockCollection::up_to_norm(3);
        let a = test_collection(&d, &full, &[4, 7], CollectionVariant::Normal, &opts).unwrap();
        let b = test_normal(&d, 3, &[4, 7], &opts).unwrap();
        assert_eq!(a, b);
        let single = BlockCollection::new(vec![blk("[0]")]).unwrap();
        let rn = test_collection(&d, &single, &[4], CollectionVariant::RatioNormal, &opts).unwrap();
        assert!(rn.pairs.is_empty());
        let pair = BlockCollection::new(vec![blk("[0]"), blk("[1]")]).unwrap();
        let rn = test_collection(&d, &pair, &[4], CollectionVariant::RatioNormal, &opts).unwrap();
        assert_eq!(rn.pairs[0].deviation, Deviation::Finite(0.0));
    }

    #[test]
    fn digit_ratio_mode_needs_infinite_limit() {
        let d = DigitStream::new(c2_all(), vec![0, 1]).unwrap();
        let tol = BigRational::new(1.into(), 1_000_000.into());
        assert!(matches!(
            test_distribution_normal(&d, &[2], DistributionMode::DigitRatio, &tol),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn all_zero_digits_have_large_discrepancy() {
        let s: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        let d = DigitStream::new(s, vec![0; 100]).unwrap();
        let tol = BigRational::new(1.into(), 1_000_000.into());
        let rep = test_distribution_normal(&d, &[100], DistributionMode::DigitRatio, &tol).unwrap();
        assert!(rep.distribution[0].star >= Point::new(99, 100));
        let eps = BigRational::new(1.into(), 10.into());
        let out = test_wdn(&d, &eps, 1, 100, DistributionMode::DigitRatio, &tol).unwrap();
        assert!(!out.passed());
    }

    #[test]
    fn richness_examples() {
        let d = DigitStream::new(c2_all(), vec![0, 1, 0, 0]).unwrap();
        let scan = richness_scan(&d, 2);
        assert_eq!(scan[0], (blk("[0]"), Some(1)));
        assert_eq!(scan[1], (blk("[1]"), Some(2)));
        assert_eq!(scan[2], (blk("[0,0]"), Some(3)));
        let zeros = DigitStream::new(c2_all(), vec![0; 5]).unwrap();
        assert_eq!(richness_scan(&zeros, 2)[1].1, None);
    }

    #[test]
    fn checkpoints_must_fit() {
        let d = DigitStream::new(c2_all(), vec![0, 1, 0, 1]).unwrap();
        assert!(matches!(
            test_normal(&d, 2, &[4], &ReportOptions::default()),
            Err(Error::Range { required: 5, .. })
        ));
    }
}
