use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cantor_core::blocks::{blocks_up_to_norm, counts_at, expectation_cumulative, Block, BlockCollection};
use cantor_core::digits::{digits_of_rational, DigitStream};
use cantor_core::discrepancy::WdnOutcome;
use cantor_core::formats::{
    block_label, certificate_json, digits_to_string, distribution_csv, log_csv, pairs_csv,
    parse_digits, plot_series, pretty_report, report_csv,
};
use cantor_core::normality::{
    richness_scan, test_collection, test_distribution_normal, test_wdn, with_boundaries,
    CollectionVariant, DeviationReport, DistributionMode, ReportOptions,
};
use cantor_core::sequences::{check_divergence, DivergenceCheck};
use cantor_core::surgery::{
    build_longest_schedule, make_reference, reduce_diff4, reduce_dn, reduce_normal,
    reduce_rn_not_n, Profile, Reduction, ReductionInput, Schedule, ScheduleParams, SeedSource,
};
use cantor_core::{BasicSequence, Error};
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::config::{Command, RunConfig, Target, TestKind};

/// A usage problem: missing or contradictory options.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Usage(format!("--{flag} is required")).into())
}

pub const DEFAULT_COUNT: usize = 8;
pub const DEFAULT_MAX_NORM: u64 = 3;

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Some(Command::Seq) => cmd_seq(cfg),
        Some(Command::Expand) => cmd_expand(cfg),
        Some(Command::Stats) => cmd_stats(cfg),
        Some(Command::Test) => cmd_test(cfg),
        Some(Command::Construct) => cmd_construct(cfg).map(|_| ()),
        Some(Command::Schedule) => cmd_schedule(cfg),
        None => bail!(Usage("no command given".into())),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_seq(cfg: &RunConfig) -> Result<()> {
    let seq = need(&cfg.seq, "seq")?;
    let n = cfg.n.unwrap_or(20);
    let mut text = format!("# {seq}\n# i q_i\n");
    for (i, q) in seq.bases(n).iter().enumerate() {
        text.push_str(&format!("{} {q}\n", i + 1));
    }
    for k in 1..=4 {
        let cum = seq.cumulative_0k(k, n);
        text.push_str(&format!("# Q_{n}^({k}) = {}\n", cum[n]));
    }
    for w in check_divergence(&seq, &DivergenceCheck::default()) {
        log::warn!("{}", w.message);
        text.push_str(&format!("# warning: {}\n", w.message));
    }
    emit(&cfg.out, &text)
}

fn cmd_expand(cfg: &RunConfig) -> Result<()> {
    let seq = need(&cfg.seq, "seq")?;
    let x = need(&cfg.x, "x")?;
    let n = need(&cfg.n, "n")?;
    let zero = BigRational::from_integer(BigInt::from(0));
    let one = BigRational::from_integer(BigInt::from(1));
    if x < zero || x >= one {
        bail!(Usage(format!("--x must lie in [0, 1), got {x}")));
    }
    let d = digits_of_rational(&x, &seq, n).map_err(|e| Usage(e.to_string()))?;
    emit(&cfg.out, &digits_to_string(&d))
}

fn read_stream(cfg: &RunConfig) -> Result<DigitStream> {
    let path = need(&cfg.input, "input")?;
    let text = fs::read_to_string(&path).map_err(|e| Error::Data {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_digits(&text, cfg.seq.as_ref())?)
}

/// User checkpoints, or powers of ten plus the stream length.
fn checkpoints(cfg: &RunConfig, len: usize) -> Vec<usize> {
    if !cfg.checkpoints.is_empty() {
        return cfg.checkpoints.clone();
    }
    let mut out: Vec<usize> = std::iter::successors(Some(10usize), |v| v.checked_mul(10))
        .take_while(|&v| v < len)
        .collect();
    out.push(len);
    out
}

fn candidate_blocks(cfg: &RunConfig) -> Vec<Block> {
    if cfg.blocks.is_empty() {
        blocks_up_to_norm(cfg.max_norm.unwrap_or(DEFAULT_MAX_NORM))
    } else {
        cfg.blocks.clone()
    }
}

fn cmd_stats(cfg: &RunConfig) -> Result<()> {
    let d = read_stream(cfg)?;
    let cps = checkpoints(cfg, d.len());
    let validity = d.validate(cantor_core::digits::DEFAULT_TOP_WINDOW);
    if validity.has_warnings() {
        log::warn!("the stream ends in a long run of top digits q_i - 1");
    }
    let mut text = String::from("checkpoint,block,count,expectation\n");
    for b in candidate_blocks(cfg) {
        let fits: Vec<usize> = cps
            .iter()
            .copied()
            .filter(|&n| n + b.len() - 1 <= d.len())
            .collect();
        let counts = counts_at(d.digits(), &b, &fits);
        let last = fits.last().copied().unwrap_or(0);
        let q = expectation_cumulative(&b, &d.seq().bases(last + b.len()), last);
        for (n, c) in fits.iter().zip(counts) {
            text.push_str(&format!("{n},\"{b}\",{c},{}\n", q[*n]));
        }
    }
    emit(&cfg.out, &text)
}

fn load_schedule(path: &Path) -> Result<Schedule> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    // Accept both a bare schedule and a construction certificate.
    let inner = value.get("schedule").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner).map_err(Error::from)?)
}

fn default_mode(seq: &BasicSequence) -> DistributionMode {
    if seq.meta().is_infinite_in_limit() {
        DistributionMode::DigitRatio
    } else {
        DistributionMode::TrueOrbit
    }
}

fn default_tol() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(1u64 << 40))
}

fn cmd_test(cfg: &RunConfig) -> Result<()> {
    let d = read_stream(cfg)?;
    let mut cps = checkpoints(cfg, d.len());
    if let Some(p) = &cfg.schedule {
        let sched = load_schedule(p)?;
        cps = with_boundaries(&cps, &sched.boundaries, d.len());
    }
    let opts = ReportOptions::default();
    let kind = cfg.kind.unwrap_or(TestKind::Normal);
    let mode = cfg.mode.unwrap_or_else(|| default_mode(d.seq()));
    let tol = cfg.tol.clone().unwrap_or_else(default_tol);
    let collection = BlockCollection::new(candidate_blocks(cfg))?;
    let report = match kind {
        TestKind::Normal => {
            test_collection(&d, &collection, &cps, CollectionVariant::Normal, &opts)?
        }
        TestKind::Ratio => {
            test_collection(&d, &collection, &cps, CollectionVariant::RatioNormal, &opts)?
        }
        TestKind::Distribution => test_distribution_normal(&d, &cps, mode, &tol)?,
        TestKind::Wdn => {
            let eps = cfg
                .eps
                .clone()
                .unwrap_or_else(|| BigRational::new(BigInt::from(1), BigInt::from(10)));
            let ell = cfg.ell.unwrap_or(1);
            let n_max = cps.last().copied().unwrap_or(d.len());
            let outcome = test_wdn(&d, &eps, ell, n_max, mode, &tol)?;
            let text = match outcome {
                WdnOutcome::Pass { evaluated } => {
                    format!("wdn: no violation of eps={eps} for {ell} <= n <= {n_max} ({evaluated} prefixes evaluated)\n")
                }
                WdnOutcome::Fail { n, witness } => format!(
                    "wdn: violation at n={n}: interval ({}, {}) has discrepancy {}\n",
                    witness.a, witness.b, witness.value
                ),
            };
            return write_single(cfg, "wdn.txt", &text);
        }
        TestKind::Rich => {
            let mut text = String::from("block,first_occurrence\n");
            for (b, first) in richness_scan(&d, cfg.max_norm.unwrap_or(DEFAULT_MAX_NORM)) {
                let pos = first.map_or_else(|| "none".to_string(), |p| p.to_string());
                text.push_str(&format!("\"{b}\",{pos}\n"));
            }
            return write_single(cfg, "rich.csv", &text);
        }
    };
    write_report(cfg, &report)
}

fn write_single(cfg: &RunConfig, name: &str, text: &str) -> Result<()> {
    match &cfg.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
            Ok(())
        }
        None => emit(&cfg.out, text),
    }
}

fn write_report(cfg: &RunConfig, report: &DeviationReport) -> Result<()> {
    let pretty = pretty_report(report);
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir.join("plots"))?;
        fs::write(dir.join("report.csv"), report_csv(report)?)?;
        fs::write(dir.join("report.txt"), &pretty)?;
        if !report.pairs.is_empty() {
            fs::write(dir.join("pairs.csv"), pairs_csv(report)?)?;
        }
        if !report.distribution.is_empty() {
            fs::write(dir.join("distribution.csv"), distribution_csv(report)?)?;
        }
        let mut seen = Vec::new();
        for row in &report.rows {
            if !seen.contains(&row.block) {
                seen.push(row.block.clone());
                let name = format!("{}.dat", block_label(&row.block));
                fs::write(dir.join("plots").join(name), plot_series(report, &row.block))?;
            }
        }
    }
    emit(&cfg.out, &pretty)
}

fn cmd_schedule(cfg: &RunConfig) -> Result<()> {
    let seq = need(&cfg.seq, "seq")?;
    let profile = need(&cfg.profile, "profile")?;
    let count = cfg.count.unwrap_or(DEFAULT_COUNT);
    let z = match &cfg.input {
        Some(_) => read_stream(cfg)?,
        None => {
            let seed = need(&cfg.seed, "seed")?;
            make_reference(&seq, seed, need(&cfg.n, "n")?)
        }
    };
    let params = ScheduleParams {
        seeds: cfg.seed.map(SeedSource::Derived),
        ..Default::default()
    };
    let sched = cantor_core::surgery::build_schedule(&seq, &z, profile, count, &params)?;
    let mut text = sched.to_json()?;
    text.push('\n');
    emit(&cfg.out, &text)
}

/// Everything a construction produces.
pub struct Construction {
    pub schedule: Schedule,
    pub reduction: Reduction,
    pub warnings: Vec<String>,
    /// The canonical configuration without output paths.
    pub config: String,
}

fn default_point(target: Target) -> ReductionInput {
    match target {
        Target::Dn | Target::N => ReductionInput::Identity,
        Target::DnNotN | Target::DnNotRn => ReductionInput::ConstantOnEvens(2),
        Target::NNotDn | Target::RnNotDn => ReductionInput::ConstantOnOdds(2),
        Target::RnNotN => ReductionInput::ConstantOnOdds(1),
    }
}

/// Which track must stay bounded for the target's witness property:
/// `Some(false)` the even track, `Some(true)` the odd one.
fn witness_track(target: Target) -> Option<bool> {
    match target {
        Target::Dn | Target::N => None,
        Target::DnNotN | Target::DnNotRn => Some(false),
        Target::NNotDn | Target::RnNotDn | Target::RnNotN => Some(true),
    }
}

pub fn build_construction(cfg: &RunConfig) -> Result<Construction> {
    let target = need(&cfg.target, "target")?;
    let seq = need(&cfg.seq, "seq")?;
    let seed = need(&cfg.seed, "seed")?;
    let n = need(&cfg.n, "n")?;
    if n == 0 {
        bail!(Usage("--n must be positive".into()));
    }
    let count = cfg.count.unwrap_or(DEFAULT_COUNT);
    let x = cfg.point.clone().unwrap_or_else(|| default_point(target));
    let mut warnings = Vec::new();
    if let Some(odd) = witness_track(target) {
        if !x.track_bounded(odd) {
            let which = if odd { "odd (x(2n+1))" } else { "even (x(2n))" };
            warnings.push(format!(
                "target {} needs a bounded {which} track; with x = {x} the output is not a witness",
                target.name()
            ));
        }
    }
    let profile = match target {
        Target::Dn => Profile::Dn,
        Target::N => Profile::Normal,
        Target::RnNotN => Profile::Hc,
        _ => Profile::Diff4,
    };
    if target == Target::N && seq.meta().declares_divergent(1) != Some(true) {
        return Err(Error::Config(format!(
            "target n needs a sequence declared 1-divergent; N(Q) is clopen for 1-convergent Q ({seq})"
        ))
        .into());
    }
    let z = make_reference(&seq, seed, n);
    let params = ScheduleParams {
        seeds: Some(SeedSource::Derived(seed)),
        ..Default::default()
    };
    let schedule = build_longest_schedule(&seq, &z, profile, count, &params)?;
    if schedule.count() < count {
        warnings.push(format!(
            "{} of {count} schedule boundaries certified within {n} digits",
            schedule.count()
        ));
    }
    let reduction = match target {
        Target::Dn => reduce_dn(&x, &z, &seq, &schedule)?,
        Target::N => reduce_normal(&x, &z, &seq, &schedule)?,
        Target::RnNotN => reduce_rn_not_n(&x, &seq, &schedule, &SeedSource::Derived(seed))?,
        _ => reduce_diff4(&x, &z, &seq, &schedule)?,
    };
    warnings.extend(reduction.warnings.iter().cloned());
    let mut canonical = cfg.clone();
    canonical.command = Some(Command::Construct);
    canonical.out = None;
    canonical.out_dir = None;
    canonical.point = Some(x);
    Ok(Construction {
        schedule,
        reduction,
        warnings,
        config: canonical.to_string(),
    })
}

pub fn cmd_construct(cfg: &RunConfig) -> Result<Construction> {
    let out_dir = need(&cfg.out_dir, "out-dir")?;
    let c = build_construction(cfg)?;
    for w in &c.warnings {
        log::warn!("{w}");
    }
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("digits.txt"), digits_to_string(&c.reduction.stream))?;
    fs::write(out_dir.join("log.csv"), log_csv(&c.reduction.log)?)?;
    let target = cfg.target.expect("checked").name();
    fs::write(
        out_dir.join("certificate.json"),
        certificate_json(target, &c.config, &c.schedule, &c.warnings)?,
    )?;
    Ok(c)
}
