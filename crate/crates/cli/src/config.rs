//! Run configuration shared by every subcommand, with a canonical
//! `key=value` text form that also serves as the `--config` file format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cantor_core::blocks::Block;
use cantor_core::exact::{parse_rational, ratio_to_string};
use cantor_core::normality::DistributionMode;
use cantor_core::surgery::{Profile, ReductionInput};
use cantor_core::{BasicSequence, Error};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Seq,
    Expand,
    Stats,
    Test,
    Construct,
    Schedule,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Seq => "seq",
            Command::Expand => "expand",
            Command::Stats => "stats",
            Command::Test => "test",
            Command::Construct => "construct",
            Command::Schedule => "schedule",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "seq" => Command::Seq,
            "expand" => Command::Expand,
            "stats" => Command::Stats,
            "test" => Command::Test,
            "construct" => Command::Construct,
            "schedule" => Command::Schedule,
            other => return Err(Error::Parse(format!("unknown command `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Normal,
    Ratio,
    Distribution,
    Wdn,
    Rich,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Normal => "normal",
            TestKind::Ratio => "ratio",
            TestKind::Distribution => "distribution",
            TestKind::Wdn => "wdn",
            TestKind::Rich => "rich",
        }
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "normal" => TestKind::Normal,
            "ratio" => TestKind::Ratio,
            "distribution" => TestKind::Distribution,
            "wdn" => TestKind::Wdn,
            "rich" => TestKind::Rich,
            other => return Err(Error::Parse(format!("unknown test kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Dn,
    N,
    DnNotN,
    NNotDn,
    RnNotDn,
    DnNotRn,
    RnNotN,
}

impl Target {
    pub const ALL: [Target; 7] = [
        Target::Dn,
        Target::N,
        Target::DnNotN,
        Target::NNotDn,
        Target::RnNotDn,
        Target::DnNotRn,
        Target::RnNotN,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Dn => "dn",
            Target::N => "n",
            Target::DnNotN => "dn-not-n",
            Target::NNotDn => "n-not-dn",
            Target::RnNotDn => "rn-not-dn",
            Target::DnNotRn => "dn-not-rn",
            Target::RnNotN => "rn-not-n",
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown construction target `{s}`")))
    }
}

fn mode_name(m: DistributionMode) -> &'static str {
    match m {
        DistributionMode::DigitRatio => "digit-ratio",
        DistributionMode::TrueOrbit => "true-orbit",
    }
}

fn parse_mode(s: &str) -> Result<DistributionMode, Error> {
    match s {
        "digit-ratio" => Ok(DistributionMode::DigitRatio),
        "true-orbit" => Ok(DistributionMode::TrueOrbit),
        other => Err(Error::Parse(format!("unknown distribution mode `{other}`"))),
    }
}

/// A non-negative integer given as a decimal or as an exact rational `p/q`
/// that reduces to an integer.
pub fn parse_count(s: &str) -> Result<u64, Error> {
    let r = parse_rational(s)?;
    if !r.is_integer() || r < BigRational::from_integer(BigInt::from(0)) {
        return Err(Error::Parse(format!("`{s}` is not a non-negative integer")));
    }
    r.to_integer()
        .to_u64()
        .ok_or_else(|| Error::Parse(format!("`{s}` is too large")))
}

fn parse_list(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_count(t.trim()).map(|v| v as usize))
        .collect()
}

fn parse_blocks(s: &str) -> Result<Vec<Block>, Error> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse())
        .collect()
}

/// Every setting a run can carry. Unset options fall back to per-command
/// defaults at execution time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seq: Option<BasicSequence>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    /// The rational to expand.
    pub x: Option<BigRational>,
    /// The reduction input `x` in Baire space.
    pub point: Option<ReductionInput>,
    pub input: Option<PathBuf>,
    pub checkpoints: Vec<usize>,
    pub blocks: Vec<Block>,
    pub max_norm: Option<u64>,
    pub kind: Option<TestKind>,
    pub mode: Option<DistributionMode>,
    pub tol: Option<BigRational>,
    pub eps: Option<BigRational>,
    pub ell: Option<usize>,
    pub target: Option<Target>,
    pub profile: Option<Profile>,
    pub count: Option<usize>,
    pub schedule: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Keys in canonical order.
pub const KEYS: [&str; 21] = [
    "command",
    "seq",
    "seed",
    "n",
    "x",
    "point",
    "input",
    "checkpoints",
    "blocks",
    "max-norm",
    "kind",
    "mode",
    "tol",
    "eps",
    "ell",
    "target",
    "profile",
    "count",
    "schedule",
    "out",
    "out-dir",
];

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let v = value.trim();
        match key {
            "command" => self.command = Some(v.parse()?),
            "seq" => self.seq = Some(v.parse()?),
            "seed" => self.seed = Some(parse_count(v)?),
            "n" => self.n = Some(parse_count(v)? as usize),
            "x" => self.x = Some(parse_rational(v)?),
            "point" => self.point = Some(v.parse()?),
            "input" => self.input = Some(PathBuf::from(v)),
            "checkpoints" => self.checkpoints = parse_list(v)?,
            "blocks" => self.blocks = parse_blocks(v)?,
            "max-norm" => self.max_norm = Some(parse_count(v)?),
            "kind" => self.kind = Some(v.parse()?),
            "mode" => self.mode = Some(parse_mode(v)?),
            "tol" => self.tol = Some(parse_rational(v)?),
            "eps" => self.eps = Some(parse_rational(v)?),
            "ell" => self.ell = Some(parse_count(v)? as usize),
            "target" => self.target = Some(v.parse()?),
            "profile" => self.profile = Some(v.parse()?),
            "count" => self.count = Some(parse_count(v)? as usize),
            "schedule" => self.schedule = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "out-dir" => self.out_dir = Some(PathBuf::from(v)),
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let join = |v: &[usize]| {
            (!v.is_empty()).then(|| v.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        };
        match key {
            "command" => self.command.map(|c| c.name().to_string()),
            "seq" => self.seq.as_ref().map(ToString::to_string),
            "seed" => self.seed.map(|v| v.to_string()),
            "n" => self.n.map(|v| v.to_string()),
            "x" => self.x.as_ref().map(ratio_to_string),
            "point" => self.point.as_ref().map(ToString::to_string),
            "input" => path(&self.input),
            "checkpoints" => join(&self.checkpoints),
            "blocks" => (!self.blocks.is_empty()).then(|| {
                self.blocks
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(";")
            }),
            "max-norm" => self.max_norm.map(|v| v.to_string()),
            "kind" => self.kind.map(|k| k.name().to_string()),
            "mode" => self.mode.map(|m| mode_name(m).to_string()),
            "tol" => self.tol.as_ref().map(ratio_to_string),
            "eps" => self.eps.as_ref().map(ratio_to_string),
            "ell" => self.ell.map(|v| v.to_string()),
            "target" => self.target.map(|t| t.name().to_string()),
            "profile" => self.profile.map(|p| p.to_string()),
            "count" => self.count.map(|v| v.to_string()),
            "schedule" => path(&self.schedule),
            "out" => path(&self.out),
            "out-dir" => path(&self.out_dir),
            _ => None,
        }
    }

    /// Parses the `key=value` text form; blank lines and `#` comments are
    /// ignored.
    pub fn parse_text(text: &str) -> Result<Self, Error> {
        let mut c = RunConfig::default();
        for (t, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Data {
                line: t + 1,
                message: format!("expected `key=value`, found `{line}`"),
            })?;
            c.set(k.trim(), v).map_err(|e| Error::Data {
                line: t + 1,
                message: e.to_string(),
            })?;
        }
        Ok(c)
    }

    /// Copies every option set in `other` over this one.
    pub fn overlay(&mut self, other: &RunConfig) {
        for key in KEYS {
            if let Some(v) = other.get(key) {
                self.set(key, &v).expect("canonical values re-parse");
            }
        }
    }
}

impl fmt::Display for RunConfig {
    /// The canonical form: one `key=value` line per set option, in [`KEYS`]
    /// order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in KEYS {
            if let Some(v) = self.get(key) {
                writeln!(f, "{key}={v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = "command=construct\nseq=linear:1:1@div=all@iil=1\nseed=7\nn=1000\n\
                    point=tracks:const:2;identity\ncheckpoints=10,100\nblocks=[0];[0,1]\n\
                    tol=1/3\ntarget=rn-not-n\nprofile=hc\nout-dir=out\n";
        let c = RunConfig::parse_text(text).unwrap();
        assert_eq!(c.to_string(), text);
        assert_eq!(RunConfig::parse_text(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn non_canonical_input_normalizes() {
        let c = RunConfig::parse_text("# comment\n n = 20/2 \ntol=2/6\nseq=const:2\n").unwrap();
        assert_eq!(c.to_string(), "seq=const:2\nn=10\ntol=1/3\n");
    }

    #[test]
    fn errors() {
        assert!(parse_count("1/2").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_count("12/4").unwrap(), 3);
        assert!(matches!(
            RunConfig::parse_text("n=1\nbogus=2\n"),
            Err(Error::Data { line: 2, .. })
        ));
        assert!(RunConfig::parse_text("just text").is_err());
    }
}
