//! Digit surgery: input clamps, the elementary operations, reference
//! streams, checkpoint schedules and the reductions built on them.

mod ops;
mod reductions;
mod reference;
mod schedule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ops::{theta_op, xi_op, RMap, ThetaOutcome};
pub use reductions::{
    glued_reference, reduce_diff4, reduce_dn, reduce_normal, reduce_rn_not_n, IntervalNote,
    PivotNote, Reduction,
};
pub use reference::{make_reference, SeedSource};
pub use schedule::{
    build_longest_schedule, build_schedule, Certificate, Check, Interval, Profile, Schedule,
    ScheduleParams, Scope,
};

/// One track of a two-track input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Track {
    Identity,
    Constant(u64),
    /// Values indexed by `n`, used for both `x(2n)` and `x(2n+1)`; the last
    /// value repeats forever.
    Tabulated(Vec<u64>),
}

impl Track {
    fn value(&self, m: u64) -> u64 {
        match self {
            Track::Identity => m,
            Track::Constant(c) => *c,
            Track::Tabulated(v) => {
                let n = (m / 2).max(1) as usize;
                v[(n - 1).min(v.len() - 1)]
            }
        }
    }
}

/// The input point `x` of a reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionInput {
    /// `x(n) = values[n-1]`; the last value repeats forever.
    Tabulated(Vec<u64>),
    /// `x(n) = n`.
    Identity,
    /// `x(2n) = c`, `x(2n+1) = 2n+1`.
    ConstantOnEvens(u64),
    /// `x(2n+1) = c`, `x(2n) = 2n`.
    ConstantOnOdds(u64),
    TwoTrack { even: Track, odd: Track },
}

impl ReductionInput {
    /// `x(n)` for `n >= 1`.
    pub fn value(&self, n: u64) -> u64 {
        assert!(n >= 1, "inputs are indexed from 1");
        match self {
            ReductionInput::Tabulated(v) => v[(n as usize - 1).min(v.len() - 1)],
            ReductionInput::Identity => n,
            ReductionInput::ConstantOnEvens(c) => {
                if n.is_multiple_of(2) {
                    *c
                } else {
                    n
                }
            }
            ReductionInput::ConstantOnOdds(c) => {
                if n % 2 == 1 {
                    *c
                } else {
                    n
                }
            }
            ReductionInput::TwoTrack { even, odd } => {
                if n.is_multiple_of(2) {
                    even.value(n)
                } else {
                    odd.value(n)
                }
            }
        }
    }

    /// Whether the even (`x(2n)`) or odd (`x(2n+1)`) track is bounded.
    pub fn track_bounded(&self, odd: bool) -> bool {
        let track = match self {
            ReductionInput::Tabulated(_) => return true,
            ReductionInput::Identity => Track::Identity,
            ReductionInput::ConstantOnEvens(c) => {
                if odd {
                    Track::Identity
                } else {
                    Track::Constant(*c)
                }
            }
            ReductionInput::ConstantOnOdds(c) => {
                if odd {
                    Track::Constant(*c)
                } else {
                    Track::Identity
                }
            }
            ReductionInput::TwoTrack { even, odd: o } => {
                if odd {
                    o.clone()
                } else {
                    even.clone()
                }
            }
        };
        !matches!(track, Track::Identity)
    }
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    let v = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad input value `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Error::Parse("empty table".into()));
    }
    Ok(v)
}

fn write_list(f: &mut fmt::Formatter<'_>, v: &[u64]) -> fmt::Result {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(Track::Identity);
        }
        if let Some(c) = s.strip_prefix("const:") {
            return c
                .trim()
                .parse()
                .map(Track::Constant)
                .map_err(|_| Error::Parse(format!("bad track constant `{c}`")));
        }
        if let Some(t) = s.strip_prefix("table:") {
            return Ok(Track::Tabulated(parse_list(t)?));
        }
        Err(Error::Parse(format!("unknown track `{s}`")))
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Track::Identity => f.write_str("identity"),
            Track::Constant(c) => write!(f, "const:{c}"),
            Track::Tabulated(v) => {
                f.write_str("table:")?;
                write_list(f, v)
            }
        }
    }
}

impl FromStr for ReductionInput {
    type Err = Error;

    /// `identity`, `table:<v1,v2,...>`, `evens:<c>`, `odds:<c>` or
    /// `tracks:<even>;<odd>` with tracks `identity`, `const:<c>`,
    /// `table:<...>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(ReductionInput::Identity);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown input `{s}`")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad constant `{t}`")))
        };
        match kind {
            "table" => Ok(ReductionInput::Tabulated(parse_list(rest)?)),
            "evens" => Ok(ReductionInput::ConstantOnEvens(num(rest)?)),
            "odds" => Ok(ReductionInput::ConstantOnOdds(num(rest)?)),
            "tracks" => {
                let (even, odd) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse(format!("`{s}` needs `<even>;<odd>`")))?;
                Ok(ReductionInput::TwoTrack {
                    even: even.parse()?,
                    odd: odd.parse()?,
                })
            }
            other => Err(Error::Parse(format!("unknown input kind `{other}`"))),
        }
    }
}

impl fmt::Display for ReductionInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionInput::Tabulated(v) => {
                f.write_str("table:")?;
                write_list(f, v)
            }
            ReductionInput::Identity => f.write_str("identity"),
            ReductionInput::ConstantOnEvens(c) => write!(f, "evens:{c}"),
            ReductionInput::ConstantOnOdds(c) => write!(f, "odds:{c}"),
            ReductionInput::TwoTrack { even, odd } => write!(f, "tracks:{even};{odd}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampMode {
    /// `min(x(n), n)`.
    Dn,
    /// `max(27, min(x(n), n))`.
    Normal,
    /// `max(2, min(x(n), n))`.
    Diff4,
}

/// `x'(n)` for the given mode.
pub fn clamp_input(x: &ReductionInput, n: u64, mode: ClampMode) -> u64 {
    let v = x.value(n).min(n);
    match mode {
        ClampMode::Dn => v,
        ClampMode::Normal => v.max(27),
        ClampMode::Diff4 => v.max(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "dn-threshold")]
    DnThreshold,
}

impl Reason {
    pub fn tag(&self) -> &'static str {
        match self {
            Reason::Theta => "theta",
            Reason::Xi => "xi",
            Reason::R => "r",
            Reason::DnThreshold => "dn-threshold",
        }
    }
}

impl FromStr for Reason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Reason::Theta),
            "xi" => Ok(Reason::Xi),
            "r" => Ok(Reason::R),
            "dn-threshold" => Ok(Reason::DnThreshold),
            other => Err(Error::Parse(format!("unknown surgery reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgeryEntry {
    /// 1-based digit position.
    pub index: usize,
    pub old: u64,
    pub new: u64,
    pub reason: Reason,
}

/// Every digit changed by a reduction, in increasing position order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SurgeryLog {
    pub entries: Vec<SurgeryEntry>,
}

impl SurgeryLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records the positions where `after` differs from `before`, tagged
    /// with the reason stored for that offset. `offset` is the 0-based
    /// position of `before[0]` in the stream.
    pub(crate) fn record_diff(
        &mut self,
        offset: usize,
        before: &[u64],
        after: &[u64],
        reasons: &[Option<Reason>],
    ) {
        for (t, (&old, &new)) in before.iter().zip(after).enumerate() {
            if old != new {
                self.entries.push(SurgeryEntry {
                    index: offset + t + 1,
                    old,
                    new,
                    reason: reasons[t].expect("every change carries a reason"),
                });
            }
        }
    }

    /// Replays the log on `digits`, checking each recorded old value.
    pub fn replay(&self, digits: &[u64]) -> Result<Vec<u64>> {
        let mut out = digits.to_vec();
        for e in &self.entries {
            let slot = out.get_mut(e.index - 1).ok_or_else(|| {
                Error::Domain(format!("log index {} beyond stream", e.index))
            })?;
            if *slot != e.old {
                return Err(Error::Domain(format!(
                    "log expects {} at position {}, found {}",
                    e.old, e.index, slot
                )));
            }
            *slot = e.new;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_examples() {
        let big = ReductionInput::Tabulated(vec![100]);
        assert_eq!(clamp_input(&big, 5, ClampMode::Normal), 27);
        let three = ReductionInput::Tabulated(vec![3]);
        assert_eq!(clamp_input(&three, 7, ClampMode::Dn), 3);
        let zero = ReductionInput::Tabulated(vec![0]);
        assert_eq!(clamp_input(&zero, 1, ClampMode::Diff4), 2);
    }

    #[test]
    fn input_values() {
        assert_eq!(ReductionInput::Identity.value(9), 9);
        let e = ReductionInput::ConstantOnEvens(2);
        assert_eq!((e.value(4), e.value(5)), (2, 5));
        let o = ReductionInput::ConstantOnOdds(1);
        assert_eq!((o.value(4), o.value(5)), (4, 1));
        let t = ReductionInput::Tabulated(vec![4, 5]);
        assert_eq!((t.value(1), t.value(2), t.value(10)), (4, 5, 5));
        let tt: ReductionInput = "tracks:table:7,8;identity".parse().unwrap();
        assert_eq!((tt.value(2), tt.value(4), tt.value(20), tt.value(5)), (7, 8, 8, 5));
        assert!(tt.track_bounded(false));
        assert!(!tt.track_bounded(true));
    }

    #[test]
    fn input_strings_round_trip() {
        for s in [
            "identity",
            "table:3",
            "table:0,1,2",
            "evens:2",
            "odds:1",
            "tracks:const:2;identity",
            "tracks:table:1,2;const:5",
        ] {
            let x: ReductionInput = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
        }
        assert!("table:".parse::<ReductionInput>().is_err());
        assert!("bogus".parse::<ReductionInput>().is_err());
    }

    #[test]
    fn log_replay_checks_old_values() {
        let log = SurgeryLog {
            entries: vec![SurgeryEntry {
                index: 2,
                old: 0,
                new: 1,
                reason: Reason::Theta,
            }],
        };
        assert_eq!(log.replay(&[0, 0, 0]).unwrap(), vec![0, 1, 0]);
        assert!(log.replay(&[0, 5, 0]).is_err());
    }
}
