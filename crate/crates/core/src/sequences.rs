//! Basic sequences `Q = (q_i)`, `q_i >= 2`, given by closed-form rules.
//!
//! A rule is total and cheap to evaluate at any index. Divergence of the
//! partial sums `Q_n^(k)` is not decidable in general, so every sequence
//! carries declared divergence metadata which the constructions consume as
//! input; [`check_divergence`] only cross-checks the declaration against
//! partial sums at a finite horizon.
//!
//! Sequence strings: `const:<b>`, `linear:<slope>:<offset>`,
//! `explicit:<d1,d2,...>;<tail>`, `pm:<m>;<base>`, optionally followed by
//! `@div=<k-list|all|none>` and `@iil=<0|1>`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{CompensatedSum, UnitFractionSum};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Constant(u64),
    /// `q_i = slope * i + offset`.
    Linear { slope: u64, offset: i64 },
    /// The listed bases at positions `1..=prefix.len()`, then the tail rule
    /// evaluated at the same absolute index.
    ExplicitThen { prefix: Arc<[u64]>, tail: Box<Rule> },
    /// `max(2, floor((m+1)/(m+2) * q_i))` of the base rule.
    Squeezed { m: u64, base: Box<Rule> },
}

/// Long-run behaviour of a rule: every supported rule is eventually
/// constant or tends to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Constant(u64),
    Infinite,
}

impl Rule {
    fn validate(&self) -> Result<()> {
        match self {
            Rule::Constant(b) if *b < 2 => Err(Error::Domain(format!("constant base {b} < 2"))),
            Rule::Constant(_) => Ok(()),
            Rule::Linear { slope, offset } => {
                if (*slope as i128) + (*offset as i128) < 2 {
                    Err(Error::Domain(format!(
                        "linear rule {slope}*i{offset:+} has q_1 < 2"
                    )))
                } else {
                    Ok(())
                }
            }
            Rule::ExplicitThen { prefix, tail } => {
                if let Some(bad) = prefix.iter().find(|&&q| q < 2) {
                    return Err(Error::Domain(format!("explicit base {bad} < 2")));
                }
                tail.validate()
            }
            Rule::Squeezed { base, .. } => base.validate(),
        }
    }

    pub fn try_base_at(&self, i: u64) -> Option<u64> {
        debug_assert!(i >= 1);
        match self {
            Rule::Constant(b) => Some(*b),
            Rule::Linear { slope, offset } => {
                let v = (*slope as i128) * (i as i128) + (*offset as i128);
                u64::try_from(v).ok()
            }
            Rule::ExplicitThen { prefix, tail } => {
                if (i as usize) <= prefix.len() {
                    Some(prefix[i as usize - 1])
                } else {
                    tail.try_base_at(i)
                }
            }
            Rule::Squeezed { m, base } => {
                let q = base.try_base_at(i)? as u128;
                let m = *m as u128;
                let v = ((m + 1) * q) / (m + 2);
                Some(v.max(2) as u64)
            }
        }
    }

    /// First index from which the rule is constant, with that constant.
    pub fn stable_from(&self) -> Option<(u64, u64)> {
        match self {
            Rule::Constant(b) => Some((1, *b)),
            Rule::Linear { slope: 0, offset } => Some((1, *offset as u64)),
            Rule::Linear { .. } => None,
            Rule::ExplicitThen { prefix, tail } => tail
                .stable_from()
                .map(|(i, v)| (i.max(prefix.len() as u64 + 1), v)),
            Rule::Squeezed { m, base } => base.stable_from().map(|(i, q)| {
                let v = ((*m as u128 + 1) * q as u128) / (*m as u128 + 2);
                (i, (v as u64).max(2))
            }),
        }
    }

    pub fn limit(&self) -> Limit {
        match self {
            Rule::Constant(b) => Limit::Constant(*b),
            Rule::Linear { slope: 0, offset } => Limit::Constant(*offset as u64),
            Rule::Linear { .. } => Limit::Infinite,
            Rule::ExplicitThen { tail, .. } => tail.limit(),
            Rule::Squeezed { m, base } => match base.limit() {
                Limit::Constant(q) => {
                    let v = ((*m as u128 + 1) * q as u128) / (*m as u128 + 2);
                    Limit::Constant((v as u64).max(2))
                }
                Limit::Infinite => Limit::Infinite,
            },
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Constant(b) => write!(f, "const:{b}"),
            Rule::Linear { slope, offset } => write!(f, "linear:{slope}:{offset}"),
            Rule::ExplicitThen { prefix, tail } => {
                f.write_str("explicit:")?;
                for (i, q) in prefix.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{q}")?;
                }
                write!(f, ";{tail}")
            }
            Rule::Squeezed { m, base } => write!(f, "pm:{m};{base}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} `{s}`")))
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("sequence `{s}` has no rule kind")))?;
        let rule = match kind {
            "const" => Rule::Constant(parse_num(rest, "constant base")?),
            "linear" => {
                let (slope, offset) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("linear rule `{s}` needs slope:offset")))?;
                Rule::Linear {
                    slope: parse_num(slope, "slope")?,
                    offset: parse_num(offset, "offset")?,
                }
            }
            "explicit" => {
                let (list, tail) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse(format!("explicit rule `{s}` needs `;<tail>`")))?;
                let prefix = list
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| parse_num::<u64>(t, "explicit base"))
                    .collect::<Result<Vec<_>>>()?;
                Rule::ExplicitThen {
                    prefix: prefix.into(),
                    tail: Box::new(tail.parse()?),
                }
            }
            "pm" => {
                let (m, base) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse(format!("pm rule `{s}` needs `;<base>`")))?;
                Rule::Squeezed {
                    m: parse_num(m, "squeeze index")?,
                    base: Box::new(base.parse()?),
                }
            }
            other => return Err(Error::Parse(format!("unknown rule kind `{other}`"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Declared orders `k` for which `Q_n^(k) -> infinity`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Divergence {
    #[default]
    Undeclared,
    All,
    Orders(BTreeSet<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DivergenceMeta {
    pub divergent: Divergence,
    pub infinite_in_limit: Option<bool>,
}

/// What the metadata says about the largest divergent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceProfile {
    Unknown,
    /// 1-convergent: no block has infinite expectation.
    Convergent,
    /// Largest divergent order `k0`.
    UpTo(u32),
    Fully,
}

impl DivergenceMeta {
    /// `Some(true/false)` when declared, `None` when undeclared.
    pub fn declares_divergent(&self, k: u32) -> Option<bool> {
        match &self.divergent {
            Divergence::Undeclared => None,
            Divergence::All => Some(true),
            Divergence::Orders(set) => Some(set.contains(&k)),
        }
    }

    pub fn profile(&self) -> DivergenceProfile {
        match &self.divergent {
            Divergence::Undeclared => DivergenceProfile::Unknown,
            Divergence::All => DivergenceProfile::Fully,
            Divergence::Orders(set) => match set.iter().next_back() {
                None => DivergenceProfile::Convergent,
                Some(&k0) => DivergenceProfile::UpTo(k0),
            },
        }
    }

    pub fn is_infinite_in_limit(&self) -> bool {
        self.infinite_in_limit == Some(true)
    }
}

impl fmt::Display for DivergenceMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergent {
            Divergence::Undeclared => {}
            Divergence::All => f.write_str("@div=all")?,
            Divergence::Orders(set) if set.is_empty() => f.write_str("@div=none")?,
            Divergence::Orders(set) => {
                f.write_str("@div=")?;
                for (i, k) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
            }
        }
        if let Some(iil) = self.infinite_in_limit {
            write!(f, "@iil={}", u8::from(iil))?;
        }
        Ok(())
    }
}

impl FromStr for DivergenceMeta {
    type Err = Error;

    /// Parses the `@key=value` suffix (without the leading rule).
    fn from_str(s: &str) -> Result<Self> {
        let mut meta = DivergenceMeta::default();
        for item in s.split('@').filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("metadata item `{item}` needs `=`")))?;
            match key.trim() {
                "div" => {
                    let value = value.trim();
                    meta.divergent = match value {
                        "all" => Divergence::All,
                        "" | "none" => Divergence::Orders(BTreeSet::new()),
                        list => Divergence::Orders(
                            list.split(',')
                                .map(|t| parse_num::<u32>(t, "divergence order"))
                                .collect::<Result<BTreeSet<_>>>()?,
                        ),
                    };
                    if let Divergence::Orders(set) = &meta.divergent {
                        if set.contains(&0) {
                            return Err(Error::Parse("divergence orders start at 1".into()));
                        }
                    }
                }
                "iil" => {
                    meta.infinite_in_limit = Some(match value.trim() {
                        "0" => false,
                        "1" => true,
                        other => return Err(Error::Parse(format!("iil must be 0 or 1, got `{other}`"))),
                    })
                }
                other => return Err(Error::Parse(format!("unknown metadata key `{other}`"))),
            }
        }
        Ok(meta)
    }
}

/// A basic sequence: an immutable rule plus declared divergence metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSequence {
    rule: Rule,
    meta: DivergenceMeta,
}

impl BasicSequence {
    pub fn new(rule: Rule, meta: DivergenceMeta) -> Result<Self> {
        rule.validate()?;
        Ok(Self { rule, meta })
    }

    pub fn constant(b: u64) -> Result<Self> {
        Self::new(Rule::Constant(b), DivergenceMeta::default())
    }

    pub fn linear(slope: u64, offset: i64) -> Result<Self> {
        Self::new(Rule::Linear { slope, offset }, DivergenceMeta::default())
    }

    pub fn explicit_then(prefix: Vec<u64>, tail: BasicSequence) -> Result<Self> {
        Self::new(
            Rule::ExplicitThen {
                prefix: prefix.into(),
                tail: Box::new(tail.rule),
            },
            tail.meta,
        )
    }

    pub fn with_meta(mut self, meta: DivergenceMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Declares the divergent orders and the infinite-in-limit flag.
    pub fn declare(self, divergent: Divergence, infinite_in_limit: bool) -> Self {
        self.with_meta(DivergenceMeta {
            divergent,
            infinite_in_limit: Some(infinite_in_limit),
        })
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn meta(&self) -> &DivergenceMeta {
        &self.meta
    }

    /// `q_i` for `i >= 1`.
    pub fn base_at(&self, i: u64) -> u64 {
        assert!(i >= 1, "positions start at 1");
        self.rule
            .try_base_at(i)
            .unwrap_or_else(|| panic!("base at position {i} exceeds u64"))
    }

    /// Bases `q_1..=q_n` as a vector (index 0 holds `q_1`).
    pub fn bases(&self, n: usize) -> Vec<u64> {
        (1..=n as u64).map(|i| self.base_at(i)).collect()
    }

    pub fn limit(&self) -> Limit {
        self.rule.limit()
    }

    pub fn is_eventually_constant(&self) -> bool {
        matches!(self.limit(), Limit::Constant(_))
    }

    pub fn stable_from(&self) -> Option<(u64, u64)> {
        self.rule.stable_from()
    }

    /// The squeezed sequence `P_m`. Metadata carries over: `P_m <= Q`
    /// termwise, so every divergent order of `Q` stays divergent.
    pub fn derive_pm(&self, m: u64) -> BasicSequence {
        BasicSequence {
            rule: Rule::Squeezed {
                m,
                base: Box::new(self.rule.clone()),
            },
            meta: self.meta.clone(),
        }
    }

    /// Exact `Q_n^(k) = sum_{j<=n} 1/(q_j ... q_{j+k-1})`.
    pub fn partial_expectation_0k(&self, k: usize, n: usize) -> BigRational {
        assert!(k >= 1);
        let n = n as u64;
        let mut sum = UnitFractionSum::new();
        let mut tail = BigRational::zero();
        let direct_end = match self.stable_from() {
            Some((s, b)) if n >= s => {
                let den = num_traits::pow(BigUint::from(b), k);
                tail = BigRational::new((n - s + 1).into(), den.into());
                s - 1
            }
            _ => n,
        };
        let mut window = BigUint::one();
        for t in 1..=k as u64 {
            window *= self.base_at(t);
        }
        for j in 1..=direct_end {
            if j > 1 {
                window /= self.base_at(j - 1);
                window *= self.base_at(j + k as u64 - 1);
            }
            sum.add(&window);
        }
        sum.finish() + tail
    }

    /// Double-precision cumulative `Q_j^(k)` for `j = 0..=n`.
    pub fn cumulative_0k(&self, k: usize, n: usize) -> Vec<f64> {
        let bases = self.bases(n + k);
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        let mut acc = CompensatedSum::default();
        for j in 0..n {
            let mut term = 1.0f64;
            for &q in &bases[j..j + k] {
                term /= q as f64;
            }
            acc.add(term);
            out.push(acc.value());
        }
        out
    }

    /// `(1/N) * sum_{i<=N} 1/q_i`, exact.
    pub fn salat_average(&self, n: usize) -> BigRational {
        assert!(n >= 1);
        self.partial_expectation_0k(1, n) / BigRational::from_integer(n.into())
    }
}

impl fmt::Display for BasicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.rule, self.meta)
    }
}

impl FromStr for BasicSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (rule, meta) = match s.find('@') {
            Some(at) => (&s[..at], &s[at..]),
            None => (s, ""),
        };
        BasicSequence::new(rule.parse()?, meta.parse()?)
    }
}

/// Thresholds for the heuristic divergence cross-check.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceCheck {
    pub threshold: f64,
    pub horizon: usize,
    /// Orders checked when the declaration is `all`.
    pub max_order: u32,
}

impl Default for DivergenceCheck {
    fn default() -> Self {
        Self {
            threshold: 50.0,
            horizon: 1_000_000,
            max_order: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaWarning {
    pub order: Option<u32>,
    pub message: String,
}

/// Cross-checks declared metadata: declared-divergent orders should reach
/// the threshold at the horizon, declared-convergent ones should not, and
/// the infinite-in-limit flag must match the rule's limit.
pub fn check_divergence(seq: &BasicSequence, cfg: &DivergenceCheck) -> Vec<MetaWarning> {
    let mut warnings = Vec::new();
    let orders: Vec<u32> = match &seq.meta.divergent {
        Divergence::Undeclared => Vec::new(),
        Divergence::All => (1..=cfg.max_order).collect(),
        Divergence::Orders(set) => {
            let top = set.iter().next_back().copied().unwrap_or(0);
            (1..=top.max(1) + 1).collect()
        }
    };
    for k in orders {
        let sum = *seq
            .cumulative_0k(k as usize, cfg.horizon)
            .last()
            .expect("non-empty");
        let declared = seq.meta.declares_divergent(k) == Some(true);
        if declared && sum < cfg.threshold {
            warnings.push(MetaWarning {
                order: Some(k),
                message: format!(
                    "declared {k}-divergent but Q^({k}) at {} is {sum:.4} < {}",
                    cfg.horizon, cfg.threshold
                ),
            });
        } else if !declared && sum >= cfg.threshold {
            warnings.push(MetaWarning {
                order: Some(k),
                message: format!(
                    "declared {k}-convergent but Q^({k}) at {} is {sum:.4} >= {}",
                    cfg.horizon, cfg.threshold
                ),
            });
        }
    }
    if let Some(iil) = seq.meta.infinite_in_limit {
        let actual = seq.limit() == Limit::Infinite;
        if iil != actual {
            warnings.push(MetaWarning {
                order: None,
                message: format!(
                    "declared infinite_in_limit={} but the rule {}",
                    u8::from(iil),
                    if actual { "tends to infinity" } else { "is eventually constant" }
                ),
            });
        }
    }
    warnings
}
