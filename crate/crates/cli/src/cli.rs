use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cantor", version, about = "Cantor-series expansions, normality statistics and digit-surgery constructions")]
pub struct Cli {
    /// Read settings from a `key=value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Print the bases q_1..q_n and partial expectations of a sequence.
    Seq(SeqArgs),
    /// Expand a rational in [0, 1) into a digit-stream file.
    Expand(ExpandArgs),
    /// Block counts and expectations of a digit-stream file.
    Stats(StatsArgs),
    /// Normality, ratio-normality, distribution, WDN or richness reports.
    Test(TestArgs),
    /// Run a reduction and write the stream, surgery log and certificate.
    Construct(ConstructArgs),
    /// Build a checkpoint schedule and print its certificate.
    Schedule(ScheduleArgs),
}

/// Flags are kept as strings so that they parse exactly like config-file
/// values (including rationals such as `10/2`).
#[derive(Debug, Args)]
pub struct SeqArgs {
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    seq: Option<String>,
    /// The rational to expand, as `p/q` or a decimal.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    input: Option<String>,
    /// Comma-separated checkpoints.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Semicolon-separated blocks such as `[0];[0,1]`.
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    max_norm: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    input: Option<String>,
    /// normal, ratio, distribution, wdn or rich.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    max_norm: Option<String>,
    /// digit-ratio or true-orbit.
    #[arg(long)]
    mode: Option<String>,
    /// Orbit evaluation tolerance for true-orbit mode.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    /// Schedule or certificate JSON whose boundaries become checkpoints.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// dn, n, dn-not-n, n-not-dn, rn-not-dn, dn-not-rn or rn-not-n.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// The input x: identity, table:<..>, evens:<c>, odds:<c> or
    /// tracks:<even>;<odd>.
    #[arg(long)]
    point: Option<String>,
    /// Maximum number of schedule boundaries.
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// dn, n, diff4 or hc.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    count: Option<String>,
    /// Reference stream file; a seeded one is generated otherwise.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

fn apply(cfg: &mut RunConfig, pairs: &[(&str, &Option<String>)]) -> Result<()> {
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)
                .map_err(|e| crate::commands::Usage(format!("--{key}: {e}")))?;
        }
    }
    Ok(())
}

impl Cli {
    /// The flags as a configuration, without the `--config` file.
    pub fn flags(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        match &self.command {
            Sub::Seq(a) => {
                c.command = Some(Command::Seq);
                apply(&mut c, &[("seq", &a.seq), ("n", &a.n), ("out", &a.out)])?;
            }
            Sub::Expand(a) => {
                c.command = Some(Command::Expand);
                apply(
                    &mut c,
                    &[("seq", &a.seq), ("x", &a.x), ("n", &a.n), ("out", &a.out)],
                )?;
            }
            Sub::Stats(a) => {
                c.command = Some(Command::Stats);
                apply(
                    &mut c,
                    &[
                        ("seq", &a.seq),
                        ("input", &a.input),
                        ("checkpoints", &a.checkpoints),
                        ("blocks", &a.blocks),
                        ("max-norm", &a.max_norm),
                        ("out", &a.out),
                    ],
                )?;
            }
            Sub::Test(a) => {
                c.command = Some(Command::Test);
                apply(
                    &mut c,
                    &[
                        ("seq", &a.seq),
                        ("input", &a.input),
                        ("kind", &a.kind),
                        ("checkpoints", &a.checkpoints),
                        ("blocks", &a.blocks),
                        ("max-norm", &a.max_norm),
                        ("mode", &a.mode),
                        ("tol", &a.tol),
                        ("eps", &a.eps),
                        ("ell", &a.ell),
                        ("schedule", &a.schedule),
                        ("out", &a.out),
                        ("out-dir", &a.out_dir),
                    ],
                )?;
            }
            Sub::Construct(a) => {
                c.command = Some(Command::Construct);
                apply(
                    &mut c,
                    &[
                        ("target", &a.target),
                        ("seq", &a.seq),
                        ("seed", &a.seed),
                        ("n", &a.n),
                        ("point", &a.point),
                        ("count", &a.count),
                        ("out-dir", &a.out_dir),
                    ],
                )?;
            }
            Sub::Schedule(a) => {
                c.command = Some(Command::Schedule);
                apply(
                    &mut c,
                    &[
                        ("profile", &a.profile),
                        ("seq", &a.seq),
                        ("seed", &a.seed),
                        ("n", &a.n),
                        ("count", &a.count),
                        ("input", &a.input),
                        ("out", &a.out),
                    ],
                )?;
            }
        }
        Ok(c)
    }

    /// The `--config` file overlaid with the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let flags = self.flags()?;
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    crate::commands::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                RunConfig::parse_text(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(c) = cfg.command.filter(|&c| Some(c) != flags.command) {
            return Err(crate::commands::Usage(format!(
                "config file is for `{}` but `{}` was invoked",
                c.name(),
                flags.command.map_or("?", |f| f.name())
            ))
            .into());
        }
        cfg.overlay(&flags);
        Ok(cfg)
    }
}
