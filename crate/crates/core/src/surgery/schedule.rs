//! Greedy checkpoint schedules `0 = b_0 < b_1 < ...` with certificates.
//!
//! Boundaries are 0-based offsets: interval `n` covers the 1-based positions
//! `b_{n-1}+1 ..= b_n`. Conditions quantified over every later prefix
//! ("for all `b >= b_{n-1}`") constrain the choice of `b_{n-1}`, so picking
//! `b_n` certifies the tail condition of level `n+1`. Level 1 would have to
//! hold from the very first digit and is not checked.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::blocks::{blocks_up_to_norm, expectation, is_good, Block, Goodness, GoodnessConfig};
use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::exact::ratio_to_string;
use crate::normality::EXACT_AUTO_LIMIT;
use crate::sequences::{BasicSequence, Divergence, DivergenceProfile};

use super::reference::{make_reference, SeedSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    #[serde(rename = "DN")]
    Dn,
    #[serde(rename = "N")]
    Normal,
    #[serde(rename = "DIFF4")]
    Diff4,
    #[serde(rename = "HC")]
    Hc,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Dn => "dn",
            Profile::Normal => "n",
            Profile::Diff4 => "diff4",
            Profile::Hc => "hc",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dn" => Ok(Profile::Dn),
            "n" => Ok(Profile::Normal),
            "diff4" => Ok(Profile::Diff4),
            "hc" => Ok(Profile::Hc),
            other => Err(Error::Parse(format!("unknown schedule profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    /// Both sides evaluated in exact rational arithmetic.
    #[serde(rename = "exact")]
    Exact,
    /// Left side is a double with relative error at most `error_bound`,
    /// and the margin exceeds that error.
    #[serde(rename = "bounded-float")]
    BoundedFloat,
    /// A universally quantified condition checked over the materialized
    /// stream only.
    #[serde(rename = "windowed")]
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub condition: String,
    pub subject: String,
    pub lhs: String,
    pub relation: String,
    pub rhs: String,
    pub margin: f64,
    pub scope: Scope,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub boundary: usize,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub profile: Profile,
    pub sequence: String,
    pub stream_length: usize,
    /// `b_0 = 0, b_1, ...`.
    pub boundaries: Vec<usize>,
    /// One certificate per boundary `b_1, b_2, ...`.
    pub certificates: Vec<Certificate>,
}

/// Interval `n` of a schedule as 0-based offsets `[start, end)`. The open
/// trailing interval after the last boundary has `open = true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub n: usize,
    pub start: usize,
    pub end: usize,
    pub open: bool,
}

impl Schedule {
    pub fn trivial(profile: Profile, seq: &BasicSequence, len: usize) -> Self {
        Self {
            profile,
            sequence: seq.to_string(),
            stream_length: len,
            boundaries: vec![0],
            certificates: Vec::new(),
        }
    }

    /// Number of certified boundaries after `b_0`.
    pub fn count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn last(&self) -> usize {
        *self.boundaries.last().expect("b_0 is always present")
    }

    /// The intervals covering offsets `[0, len)`, including the open
    /// trailing interval when `len` exceeds the last boundary.
    pub fn intervals(&self, len: usize) -> Result<Vec<Interval>> {
        if self.last() > len {
            return Err(Error::Range {
                requested: self.last(),
                available: len,
                required: self.last(),
            });
        }
        let mut out: Vec<Interval> = self
            .boundaries
            .windows(2)
            .enumerate()
            .map(|(i, w)| Interval {
                n: i + 1,
                start: w[0],
                end: w[1],
                open: false,
            })
            .collect();
        if len > self.last() {
            out.push(Interval {
                n: self.count() + 1,
                start: self.last(),
                end: len,
                open: true,
            });
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleParams {
    pub goodness: GoodnessConfig,
    /// Seeds for the reference streams `w_m` of the HC profile.
    pub seeds: Option<SeedSource>,
    /// Fixed-point bits of the orbit points used by the DN profile.
    pub orbit_bits: u32,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            goodness: GoodnessConfig::default(),
            seeds: None,
            orbit_bits: 52,
        }
    }
}

/// Greedy smallest boundaries for `count` intervals.
///
/// Fails with an extension error carrying the partial schedule when the
/// stream is too short to certify all of them.
pub fn build_schedule(
    seq: &BasicSequence,
    z: &DigitStream,
    profile: Profile,
    count: usize,
    params: &ScheduleParams,
) -> Result<Schedule> {
    if z.seq().rule() != seq.rule() {
        return Err(Error::Config(format!(
            "reference stream is over {} but the schedule is for {}",
            z.seq(),
            seq
        )));
    }
    let mut builder = Builder::new(seq, z, profile, params)?;
    let mut schedule = Schedule::trivial(profile, seq, z.len());
    for n in 1..=count {
        let prev = schedule.last();
        match builder.next_boundary(n, prev)? {
            Some((b, checks)) => {
                schedule.boundaries.push(b);
                schedule.certificates.push(Certificate {
                    n,
                    boundary: b,
                    checks,
                });
            }
            None => {
                return Err(Error::Extension {
                    requested: count,
                    certified: n - 1,
                    next: n,
                    available: z.len(),
                    partial: Box::new(schedule),
                })
            }
        }
    }
    Ok(schedule)
}

/// The longest schedule with at most `cap` boundaries that the stream
/// certifies.
pub fn build_longest_schedule(
    seq: &BasicSequence,
    z: &DigitStream,
    profile: Profile,
    cap: usize,
    params: &ScheduleParams,
) -> Result<Schedule> {
    match build_schedule(seq, z, profile, cap, params) {
        Ok(s) => Ok(s),
        Err(Error::Extension { partial, .. }) => Ok(*partial),
        Err(e) => Err(e),
    }
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Cumulative double-precision expectations of one block under one sequence.
struct Table {
    seq: BasicSequence,
    block: Block,
    /// `cum[j] = Q_j(B)` for `j = 0..=len`.
    cum: Vec<f64>,
}

impl Table {
    fn new(seq: &BasicSequence, block: &Block, len: usize) -> Self {
        let bases = seq.bases(len + block.len());
        Self {
            seq: seq.clone(),
            block: block.clone(),
            cum: crate::blocks::expectation_cumulative(block, &bases, len),
        }
    }

    fn cheap_exact(&self, b: usize) -> bool {
        self.seq.is_eventually_constant() || b <= EXACT_AUTO_LIMIT
    }

    /// Certifies `Q_{a+1..b}(B) > rhs`, returning the check on success.
    fn certify_range_gt(
        &self,
        a: usize,
        b: usize,
        rhs: &BigRational,
        condition: &str,
    ) -> Option<Check> {
        let subject = self.block.to_string();
        if self.cheap_exact(b) {
            let lhs = expectation(&self.block, a as u64 + 1, b as u64, &self.seq);
            if &lhs > rhs {
                let margin = crate::exact::ratio_to_f64(&(&lhs - rhs));
                return Some(Check {
                    condition: condition.into(),
                    subject,
                    lhs: ratio_to_string(&lhs),
                    relation: ">".into(),
                    rhs: ratio_to_string(rhs),
                    margin,
                    scope: Scope::Exact,
                    error_bound: None,
                });
            }
            return None;
        }
        let v = self.cum[b] - self.cum[a];
        let gamma = (b + self.block.len() + 2) as f64 * UNIT_ROUNDOFF;
        let err = gamma * (self.cum[b] + self.cum[a]);
        let r = crate::exact::ratio_to_f64(rhs);
        if v - err > r {
            Some(Check {
                condition: condition.into(),
                subject,
                lhs: format!("{v:e}"),
                relation: ">".into(),
                rhs: ratio_to_string(rhs),
                margin: v - r,
                scope: Scope::BoundedFloat,
                error_bound: Some(err),
            })
        } else {
            None
        }
    }

    /// Smallest `b` in `[from, len]` with `Q_{a+1..b}(B) > rhs`, certified.
    fn first_range_gt(
        &self,
        a: usize,
        from: usize,
        rhs: &BigRational,
        condition: &str,
    ) -> Option<(usize, Check)> {
        let len = self.cum.len() - 1;
        let r = crate::exact::ratio_to_f64(rhs);
        let base = self.cum[a];
        // Start slightly before the float crossing; exact checks settle it.
        let mut b = self.cum[from.min(len)..]
            .partition_point(|&c| c - base <= r * (1.0 - 1e-9))
            + from;
        while b <= len {
            if let Some(check) = self.certify_range_gt(a, b, rhs, condition) {
                return Some((b, check));
            }
            b += 1;
        }
        None
    }
}

struct Builder<'a> {
    seq: &'a BasicSequence,
    z: &'a DigitStream,
    profile: Profile,
    params: &'a ScheduleParams,
    tables: HashMap<(u64, Block), Table>,
    references: HashMap<u64, DigitStream>,
    orbit: Option<Vec<u128>>,
    bin_records: HashMap<u64, Vec<BinRecord>>,
}

/// A prefix length `b'` whose bin deviation `|k c - b'| / (k b')` is at
/// least that of every longer prefix.
#[derive(Debug, Clone, Copy)]
struct BinRecord {
    bp: usize,
    diff: u128,
    inside: u128,
}

/// Records ordered by decreasing `bp`, hence by non-decreasing deviation.
fn bin_records(points: &[u128], k: u64, scale: u128) -> Vec<BinRecord> {
    let k = k as u128;
    let mut inside = vec![0u128; points.len() + 1];
    for (i, &v) in points.iter().enumerate() {
        inside[i + 1] = inside[i] + u128::from(v * k < scale);
    }
    let mut records: Vec<BinRecord> = Vec::new();
    for bp in (1..=points.len()).rev() {
        let c = inside[bp];
        let diff = (k * c).abs_diff(bp as u128);
        let beats = records
            .last()
            .is_none_or(|r| diff * r.bp as u128 >= r.diff * bp as u128);
        if beats {
            records.push(BinRecord { bp, diff, inside: c });
        }
    }
    records
}

fn pow2(n: usize) -> Option<u128> {
    1u128.checked_shl(n as u32).filter(|_| n < 127)
}

fn big(v: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl<'a> Builder<'a> {
    fn new(
        seq: &'a BasicSequence,
        z: &'a DigitStream,
        profile: Profile,
        params: &'a ScheduleParams,
    ) -> Result<Self> {
        match profile {
            Profile::Normal => {
                if is_good(&Block::zeros(1), seq, &params.goodness) == Goodness::Unknown {
                    return Err(Error::Config(format!(
                        "the N profile needs declared divergence metadata; {seq} has none"
                    )));
                }
            }
            Profile::Diff4 | Profile::Hc => {
                if seq.meta().divergent == Divergence::Undeclared {
                    return Err(Error::Config(format!(
                        "the {profile} profile needs declared divergence metadata; {seq} has none"
                    )));
                }
                if seq.meta().profile() == DivergenceProfile::Convergent {
                    return Err(Error::Config(format!(
                        "the {profile} profile needs a 1-divergent sequence; {seq} is declared 1-convergent"
                    )));
                }
                if profile == Profile::Hc && params.seeds.is_none() {
                    return Err(Error::Config("the HC profile needs reference seeds".into()));
                }
            }
            Profile::Dn => {}
        }
        Ok(Self {
            seq,
            z,
            profile,
            params,
            tables: HashMap::new(),
            references: HashMap::new(),
            orbit: None,
            bin_records: HashMap::new(),
        })
    }

    /// Table for `block` under `P_m` (`m = None` means the base sequence).
    fn table(&mut self, m: Option<u64>, block: &Block) -> &Table {
        let key = (m.map_or(u64::MAX, |m| m), block.clone());
        let len = self.z.len();
        let seq = match m {
            None => self.seq.clone(),
            Some(m) => self.seq.derive_pm(m),
        };
        self.tables
            .entry(key)
            .or_insert_with(|| Table::new(&seq, block, len))
    }

    fn next_boundary(&mut self, n: usize, prev: usize) -> Result<Option<(usize, Vec<Check>)>> {
        match self.profile {
            Profile::Dn => Ok(self.next_dn(n, prev)),
            Profile::Normal => self.next_normal(n, prev),
            Profile::Diff4 => Ok(self.next_diff4(n, prev)),
            Profile::Hc => self.next_hc(n, prev),
        }
    }

    fn good_blocks(&self, max_norm: u64) -> Result<Vec<Block>> {
        let mut out = Vec::new();
        for b in blocks_up_to_norm(max_norm) {
            match is_good(&b, self.seq, &self.params.goodness) {
                Goodness::Good => out.push(b),
                Goodness::NotGood => {}
                Goodness::Unknown => {
                    return Err(Error::Config(format!(
                        "goodness of block {b} is unknown for {}",
                        self.seq
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Orders `k <= limit` declared divergent.
    fn divergent_orders(&self, limit: usize) -> Vec<usize> {
        (1..=limit)
            .filter(|&k| self.seq.meta().declares_divergent(k as u32) == Some(true))
            .collect()
    }

    // DN: |#{i < b' : tau in [0,1/k)}/b' - 1/k| < 1/(2(n+1)) for k <= n+3
    // and every b' >= b_n in the stream.
    fn next_dn(&mut self, n: usize, prev: usize) -> Option<(usize, Vec<Check>)> {
        let bits = self.params.orbit_bits;
        let points = self
            .orbit
            .get_or_insert_with(|| self.z.tail_points_available(bits));
        let total = points.len();
        let level = (n + 1) as u128;
        let scale = 1u128 << bits;
        let ks: Vec<u64> = (2..=(n as u64 + 3)).collect();
        for &k in &ks {
            self.bin_records
                .entry(k)
                .or_insert_with(|| bin_records(points, k, scale));
        }
        // |inside/b' - 1/k| < 1/(2 level)  <=>  2 level |k c - b'| < k b'
        let violates = |k: u64, r: &BinRecord| 2 * level * r.diff >= k as u128 * r.bp as u128;
        let mut b = prev + 1;
        for &k in &ks {
            let last_violation = self.bin_records[&k]
                .iter()
                .find(|r| violates(k, r))
                .map_or(0, |r| r.bp);
            b = b.max(last_violation + 1);
        }
        if b > total {
            return None;
        }
        let worst: Vec<(u64, usize, u128)> = ks
            .iter()
            .map(|&k| {
                let rec = self.bin_records[&k]
                    .iter()
                    .rev()
                    .find(|r| r.bp >= b)
                    .expect("the full prefix is always a record");
                (k, rec.bp, rec.inside)
            })
            .collect();
        let tol = BigRational::new(1.into(), BigInt::from(2 * level));
        let checks = worst
            .into_iter()
            .map(|(k, at, c)| {
                let lhs = (BigRational::new(BigInt::from(c), BigInt::from(at as u64))
                    - BigRational::new(1.into(), BigInt::from(k)))
                .abs();
                Check {
                    condition: "dn-bin".into(),
                    subject: format!("k={k}, worst b'={at}"),
                    margin: crate::exact::ratio_to_f64(&(&tol - &lhs)),
                    lhs: ratio_to_string(&lhs),
                    relation: "<".into(),
                    rhs: ratio_to_string(&tol),
                    scope: Scope::Windowed,
                    error_bound: None,
                }
            })
            .collect();
        Some((b, checks))
    }

    fn next_normal(&mut self, n: usize, prev: usize) -> Result<Option<(usize, Vec<Check>)>> {
        let len = self.z.len();
        let Some(p2) = pow2(n) else { return Ok(None) };
        // bp1: b - prev > 2^n prev.
        let Some(bp1_min) = p2
            .checked_add(1)
            .and_then(|f| f.checked_mul(prev as u128))
            .and_then(|v| v.checked_add(1))
        else {
            return Ok(None);
        };
        if bp1_min > len as u128 {
            return Ok(None);
        }
        let mut b = (bp1_min as usize).max(prev + 1);

        // bp3: Q_b(B) > 4^n prev for good B with ||B|| <= n.
        let Some(p4) = pow2(2 * n) else { return Ok(None) };
        let Some(rhs3) = p4.checked_mul(prev as u128) else { return Ok(None) };
        let rhs3 = big(rhs3);
        let bp3_blocks = self.good_blocks(n as u64)?;
        for blk in &bp3_blocks {
            let t = self.table(None, blk);
            match t.first_range_gt(0, b, &rhs3, "bp3") {
                Some((bb, _)) => b = b.max(bb),
                None => return Ok(None),
            }
        }

        // bp2 for level n+1: |N_m(B) - Q_m(B)| < Q_m(B)/(n+1) for all m >= b.
        let bp2_blocks = self.good_blocks(n as u64 + 1)?;
        let tol = 1.0 / (n as f64 + 1.0);
        let mut bp2_worst = Vec::new();
        for blk in &bp2_blocks {
            let k = blk.len();
            if len < k {
                return Ok(None);
            }
            let last = len - k + 1;
            let digits = self.z.digits();
            let cum = &self.table(None, blk).cum;
            let mut count = 0usize;
            let mut last_violation = 0usize;
            let mut rel = vec![0f64; last + 1];
            for m in 1..=last {
                if blk.occurs_at(digits, m - 1) {
                    count += 1;
                }
                let q = cum[m];
                let dev = if q > 0.0 {
                    (count as f64 - q).abs() / q
                } else {
                    f64::INFINITY
                };
                rel[m] = dev;
                if dev >= tol {
                    last_violation = m;
                }
            }
            b = b.max(last_violation + 1);
            if b > last {
                return Ok(None);
            }
            bp2_worst.push((blk.clone(), rel, last));
        }
        if b > len {
            return Ok(None);
        }

        let mut checks = Vec::new();
        let lhs1 = (b - prev) as u128;
        let rhs1 = p2 * prev as u128;
        checks.push(Check {
            condition: "bp1".into(),
            subject: format!("b_{n} - b_{}", n - 1),
            lhs: lhs1.to_string(),
            relation: ">".into(),
            rhs: rhs1.to_string(),
            margin: (lhs1 - rhs1) as f64,
            scope: Scope::Exact,
            error_bound: None,
        });
        for blk in &bp3_blocks {
            let check = self
                .table(None, blk)
                .certify_range_gt(0, b, &rhs3, "bp3")
                .expect("bp3 is monotone in b");
            checks.push(check);
        }
        for (blk, rel, last) in bp2_worst {
            let (at, worst) = (b..=last)
                .map(|m| (m, rel[m]))
                .fold((b, 0.0f64), |acc, x| if x.1 > acc.1 { x } else { acc });
            checks.push(Check {
                condition: "bp2".into(),
                subject: format!("{blk}, worst m={at}"),
                lhs: format!("{worst:e}"),
                relation: "<".into(),
                rhs: format!("1/{}", n + 1),
                margin: tol - worst,
                scope: Scope::Windowed,
                error_bound: None,
            });
        }
        Ok(Some((b, checks)))
    }

    // DIFF4: Q^(k)_b > 2^n b_{n-1} for every declared k <= 2n.
    fn next_diff4(&mut self, n: usize, prev: usize) -> Option<(usize, Vec<Check>)> {
        let rhs = big(pow2(n)?.checked_mul(prev as u128)?);
        let orders = self.divergent_orders(2 * n);
        let mut b = prev + 1;
        for &k in &orders {
            let t = self.table(None, &Block::zeros(k));
            let (bb, _) = t.first_range_gt(0, b, &rhs, "diff4")?;
            b = b.max(bb);
        }
        if b > self.z.len() {
            return None;
        }
        let checks = orders
            .iter()
            .map(|&k| {
                self.table(None, &Block::zeros(k))
                    .certify_range_gt(0, b, &rhs, "diff4")
                    .expect("monotone in b")
            })
            .collect();
        Some((b, checks))
    }

    fn reference(&mut self, m: u64) -> Result<&DigitStream> {
        if !self.references.contains_key(&m) {
            let seed = self
                .params
                .seeds
                .as_ref()
                .expect("checked in new")
                .seed_for(m)?;
            let w = make_reference(&self.seq.derive_pm(m), seed, self.z.len());
            self.references.insert(m, w);
        }
        Ok(&self.references[&m])
    }

    fn hc_block_length(&self, n: usize) -> usize {
        match self.seq.meta().profile() {
            DivergenceProfile::UpTo(k0) => (2 * n).min(k0 as usize),
            _ => 2 * n,
        }
    }

    fn next_hc(&mut self, n: usize, prev: usize) -> Result<Option<(usize, Vec<Check>)>> {
        let len = self.z.len();
        // lp2: (P_m)_{prev+1..b}(0_k) > 2^n prev for all m <= n.
        let Some(rhs) = pow2(n).and_then(|p| p.checked_mul(prev as u128)) else {
            return Ok(None);
        };
        let rhs = big(rhs);
        let zeros = Block::zeros(self.hc_block_length(n));
        let mut b = prev + 1;
        for m in 0..=n as u64 {
            let t = self.table(Some(m), &zeros);
            match t.first_range_gt(prev, b, &rhs, "lp2") {
                Some((bb, _)) => b = b.max(bb),
                None => return Ok(None),
            }
        }

        // lp1 for level n+1 over glued references, as a per-b mask.
        let blocks = self.good_blocks(n as u64 + 2)?;
        let tol = 0.5f64.powi(n as i32 + 1);
        let mut ok = vec![true; len + 1];
        let ms: Vec<u64> = (0..=n as u64 + 2).collect();
        for &m in &ms {
            self.reference(m)?;
        }
        for blk in &blocks {
            for &m2 in &ms {
                let lp1 = Lp1Suffix::new(self, m2, blk, tol);
                for &m1 in &ms {
                    lp1.mask(self, m1, &mut ok);
                }
            }
        }
        while b <= len && !ok[b] {
            b += 1;
        }
        if b > len {
            return Ok(None);
        }

        let mut checks = Vec::new();
        for m in 0..=n as u64 {
            let check = self
                .table(Some(m), &zeros)
                .certify_range_gt(prev, b, &rhs, "lp2")
                .map(|mut c| {
                    c.subject = format!("m={m}, {}", c.subject);
                    c
                })
                .expect("lp2 is monotone in b");
            checks.push(check);
        }
        for blk in &blocks {
            for &m2 in &ms {
                let lp1 = Lp1Suffix::new(self, m2, blk, tol);
                for &m1 in &ms {
                    let worst = lp1.worst_at(self, m1, b);
                    checks.push(Check {
                        condition: "lp1".into(),
                        subject: format!("m1={m1}, m2={m2}, {blk}"),
                        lhs: format!("{worst:e}"),
                        relation: "<".into(),
                        rhs: format!("1/2^{}", n + 1),
                        margin: tol - worst,
                        scope: Scope::Windowed,
                        error_bound: None,
                    });
                }
            }
        }
        Ok(Some((b, checks)))
    }
}

/// Suffix extrema that turn the lp1 condition for a glue point `b` into
/// O(1) comparisons.
///
/// With `C(i)`, `E(i)` the cumulative count and expectation of `B` in
/// `w_{m2}` over `P_{m2}`, the glued stream at `i > b` has count
/// `X_b + C(i)` and expectation `Y_b + E(i)`, so the condition
/// `|count - exp| < tol * exp` for every `i > b` reads
/// `max_{i>b} (C - E - tol E) < tol Y_b - (X_b - Y_b)` and
/// `min_{i>b} (C - E + tol E) > -tol Y_b - (X_b - Y_b)`.
struct Lp1Suffix {
    m2: u64,
    block: Block,
    tol: f64,
    /// `C(i)` and `E(i)` for `i = 0..=last`.
    c: Vec<f64>,
    e: Vec<f64>,
    /// Suffix max of `C - E - tol E` and min of `C - E + tol E` over `i >= j`.
    hi: Vec<f64>,
    lo: Vec<f64>,
    last: usize,
}

impl Lp1Suffix {
    fn new(builder: &mut Builder<'_>, m2: u64, block: &Block, tol: f64) -> Self {
        let k = block.len();
        let len = builder.z.len();
        let last = len.saturating_sub(k - 1);
        let e = builder.table(Some(m2), block).cum[..=last].to_vec();
        let w = &builder.references[&m2];
        let mut c = vec![0f64; last + 1];
        for i in 1..=last {
            c[i] = c[i - 1] + f64::from(u8::from(block.occurs_at(w.digits(), i - 1)));
        }
        let mut hi = vec![f64::NEG_INFINITY; last + 2];
        let mut lo = vec![f64::INFINITY; last + 2];
        for i in (1..=last).rev() {
            let d = c[i] - e[i];
            hi[i] = hi[i + 1].max(d - tol * e[i]);
            lo[i] = lo[i + 1].min(d + tol * e[i]);
        }
        Self {
            m2,
            block: block.clone(),
            tol,
            c,
            e,
            hi,
            lo,
            last,
        }
    }

    /// Prefix count and expectation of the glued stream up to starts `<= b`,
    /// shifted by the `w_{m2}` values at `b`.
    fn offsets(&self, builder: &Builder<'_>, m1: u64, b: usize, w1: &PrefixScan) -> (f64, f64) {
        let k = self.block.len();
        let full = b.saturating_sub(k - 1);
        let (mut x, mut y) = (w1.count[full], w1.exp[full]);
        let z1 = builder.references[&m1].digits();
        let z2 = builder.references[&self.m2].digits();
        let p1 = builder.references[&m1].bases();
        let p2 = builder.references[&self.m2].bases();
        for s in full + 1..=b {
            // Start s (1-based) straddles the glue point: digits before
            // offset b come from w_{m1}, the rest from w_{m2}.
            let mut hit = true;
            let mut term = 1.0f64;
            let mut fits = true;
            for t in 0..k {
                let off = s - 1 + t;
                if off >= z2.len() {
                    fits = false;
                    break;
                }
                let (digit, base) = if off < b { (z1[off], p1[off]) } else { (z2[off], p2[off]) };
                let e = self.block.word()[t];
                hit &= digit == e;
                if e >= base {
                    term = 0.0;
                } else {
                    term /= base as f64;
                }
            }
            if fits {
                x += f64::from(u8::from(hit));
                y += term;
            }
        }
        (x - self.c[b.min(self.last)], y - self.e[b.min(self.last)])
    }

    /// Clears `ok[b]` for every glue point `b` at which lp1 fails.
    #[allow(clippy::needless_range_loop)]
    fn mask(&self, builder: &Builder<'_>, m1: u64, ok: &mut [bool]) {
        let scan = PrefixScan::new(builder, m1, &self.block, self.last);
        for b in 1..ok.len() {
            if !ok[b] {
                continue;
            }
            if b >= self.last {
                // Nothing left to check after b within the stream.
                ok[b] = false;
                continue;
            }
            let (xo, yo) = self.offsets(builder, m1, b, &scan);
            let shift = xo - yo;
            let good = self.hi[b + 1] < self.tol * yo - shift && self.lo[b + 1] > -self.tol * yo - shift;
            if !good {
                ok[b] = false;
            }
        }
    }

    fn worst_at(&self, builder: &Builder<'_>, m1: u64, b: usize) -> f64 {
        let scan = PrefixScan::new(builder, m1, &self.block, self.last);
        let (xo, yo) = self.offsets(builder, m1, b, &scan);
        (b + 1..=self.last)
            .map(|i| {
                let exp = yo + self.e[i];
                ((xo + self.c[i]) - exp).abs() / exp
            })
            .fold(0.0, f64::max)
    }
}

/// Cumulative count and expectation of a block in `w_{m1}` over `P_{m1}`.
struct PrefixScan {
    count: Vec<f64>,
    exp: Vec<f64>,
}

impl PrefixScan {
    fn new(builder: &Builder<'_>, m1: u64, block: &Block, last: usize) -> Self {
        let w = &builder.references[&m1];
        let bases = w.bases();
        let k = block.len();
        let mut count = vec![0f64; last + 1];
        let mut exp = vec![0f64; last + 1];
        let mut acc = crate::exact::CompensatedSum::default();
        for s in 1..=last {
            count[s] = count[s - 1] + f64::from(u8::from(block.occurs_at(w.digits(), s - 1)));
            let window = &bases[s - 1..s - 1 + k];
            if block.word().iter().zip(window).all(|(e, q)| e < q) {
                acc.add(window.iter().fold(1.0, |t, &q| t / q as f64));
            }
            exp[s] = acc.value();
        }
        Self { count, exp }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surgery::make_reference;

    #[test]
    fn trivial_schedule_for_count_zero() {
        let seq: BasicSequence = "const:2@div=all@iil=0".parse().unwrap();
        let z = make_reference(&seq, 1, 100);
        let s = build_schedule(&seq, &z, Profile::Diff4, 0, &ScheduleParams::default()).unwrap();
        assert_eq!(s.boundaries, vec![0]);
        assert!(s.certificates.is_empty());
    }

    #[test]
    fn diff4_constant_two() {
        let seq: BasicSequence = "const:2@div=all@iil=0".parse().unwrap();
        let z = make_reference(&seq, 1, 40_000);
        let s = build_schedule(&seq, &z, Profile::Diff4, 3, &ScheduleParams::default()).unwrap();
        // Q^(k)_b = b/2^k: b/2 > 0, then b/16 > 4, then b/64 > 8 * 65.
        assert_eq!(s.boundaries, vec![0, 1, 65, 33281]);
        for cert in &s.certificates {
            assert!(cert.checks.iter().all(|c| c.scope == Scope::Exact && c.margin > 0.0));
        }
    }

    #[test]
    fn diff4_linear_runs_out() {
        let seq: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        let z = make_reference(&seq, 7, 100_000);
        match build_schedule(&seq, &z, Profile::Diff4, 3, &ScheduleParams::default()) {
            Err(Error::Extension {
                certified, partial, ..
            }) => {
                assert_eq!(certified, 2);
                assert_eq!(partial.boundaries, vec![0, 1, 82]);
            }
            other => panic!("expected extension error, got {other:?}"),
        }
    }

    #[test]
    fn normal_profile_bp1_holds() {
        let seq: BasicSequence = "const:2@div=all@iil=0".parse().unwrap();
        let z = make_reference(&seq, 3, 200_000);
        let s = build_longest_schedule(&seq, &z, Profile::Normal, 4, &ScheduleParams::default())
            .unwrap();
        assert!(s.count() >= 1);
        for (i, w) in s.boundaries.windows(2).enumerate() {
            let n = i as u32 + 1;
            assert!((w[1] - w[0]) as u128 > (1u128 << n) * w[0] as u128);
        }
    }

    #[test]
    fn intervals_include_open_tail() {
        let seq = BasicSequence::constant(2).unwrap();
        let mut s = Schedule::trivial(Profile::Dn, &seq, 10);
        s.boundaries = vec![0, 3, 7];
        let iv = s.intervals(10).unwrap();
        assert_eq!(iv.len(), 3);
        assert_eq!((iv[2].n, iv[2].start, iv[2].end, iv[2].open), (3, 7, 10, true));
        assert!(s.intervals(5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let seq: BasicSequence = "const:2@div=all@iil=0".parse().unwrap();
        let z = make_reference(&seq, 1, 5000);
        let s = build_schedule(&seq, &z, Profile::Diff4, 2, &ScheduleParams::default()).unwrap();
        let back = Schedule::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
