//! Text serializations: digit-stream files, report CSVs, plot columns,
//! surgery logs and certificate JSON.

use std::fmt::Write as _;

use serde::Serialize;

use crate::blocks::Block;
use crate::digits::DigitStream;
use crate::discrepancy::Point;
use crate::error::{Error, Result};
use crate::normality::DeviationReport;
use crate::sequences::BasicSequence;
use crate::surgery::{Reason, Schedule, SurgeryEntry, SurgeryLog};

pub const DIGITS_MAGIC: &str = "#cantor-digits v1 seq=";

/// The digit-stream file: a header line naming the sequence, then one digit
/// per line, LF-terminated.
pub fn digits_to_string(d: &DigitStream) -> String {
    let mut out = String::with_capacity(d.len() * 4 + 64);
    out.push_str(DIGITS_MAGIC);
    out.push_str(&d.seq().to_string());
    out.push('\n');
    for &a in d.digits() {
        writeln!(out, "{a}").expect("writing to a String");
    }
    out
}

fn data(line: usize, message: impl Into<String>) -> Error {
    Error::Data {
        line,
        message: message.into(),
    }
}

/// Parses a digit-stream file. When `expected` is given the header must name
/// the same sequence.
pub fn parse_digits(text: &str, expected: Option<&BasicSequence>) -> Result<DigitStream> {
    if text.contains('\r') {
        let line = text[..text.find('\r').unwrap()].matches('\n').count() + 1;
        return Err(data(line, "CR characters are not allowed; use LF line endings"));
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or("");
    let seq_text = header
        .strip_prefix(DIGITS_MAGIC)
        .ok_or_else(|| data(1, format!("expected header `{DIGITS_MAGIC}<sequence>`")))?;
    let seq: BasicSequence = seq_text
        .parse()
        .map_err(|e: Error| data(1, format!("bad sequence in header: {e}")))?;
    if let Some(want) = expected {
        if want != &seq {
            return Err(data(
                1,
                format!("header names `{seq}` but `{want}` was requested"),
            ));
        }
    }
    let mut digits = Vec::new();
    for (t, line) in lines.enumerate() {
        let lineno = t + 2;
        if line.is_empty() {
            return Err(data(lineno, "blank line"));
        }
        let a: u64 = line
            .parse()
            .map_err(|_| data(lineno, format!("`{line}` is not an unsigned decimal digit")))?;
        let i = digits.len() as u64 + 1;
        let q = seq
            .rule()
            .try_base_at(i)
            .ok_or_else(|| data(lineno, format!("base q_{i} exceeds u64")))?;
        if a >= q {
            return Err(data(lineno, format!("digit {a} at position {i} is not below q_{i} = {q}")));
        }
        digits.push(a);
    }
    if digits.is_empty() {
        return Err(data(1, "the stream has no digits"));
    }
    DigitStream::new(seq, digits)
}

fn csv_string<F>(f: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    f(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `checkpoint,block,count,expectation_num,expectation_den,deviation`.
pub fn report_csv(report: &DeviationReport) -> Result<String> {
    csv_string(|w| {
        w.write_record([
            "checkpoint",
            "block",
            "count",
            "expectation_num",
            "expectation_den",
            "deviation",
        ])?;
        for r in &report.rows {
            let (num, den) = r.expectation.as_fraction();
            w.write_record([
                r.checkpoint.to_string(),
                r.block.to_string(),
                r.count.to_string(),
                num.to_string(),
                den.to_string(),
                r.deviation.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// `checkpoint,first,second,deviation` for ratio-normality pairs.
pub fn pairs_csv(report: &DeviationReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(["checkpoint", "first", "second", "deviation"])?;
        for p in &report.pairs {
            w.write_record([
                p.checkpoint.to_string(),
                p.first.to_string(),
                p.second.to_string(),
                p.deviation.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn point_str(p: &Point) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

fn point_f64(p: &Point) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

/// `checkpoint,star,star_exact,extreme,extreme_exact,bin_<k>...`.
pub fn distribution_csv(report: &DeviationReport) -> Result<String> {
    csv_string(|w| {
        let ks: Vec<u64> = report
            .distribution
            .first()
            .map(|r| r.bins.iter().map(|b| b.0).collect())
            .unwrap_or_default();
        let mut header = vec![
            "checkpoint".to_string(),
            "star".into(),
            "star_exact".into(),
            "extreme".into(),
            "extreme_exact".into(),
        ];
        header.extend(ks.iter().map(|k| format!("bin_{k}")));
        w.write_record(&header)?;
        for r in &report.distribution {
            let mut rec = vec![
                r.checkpoint.to_string(),
                point_f64(&r.star).to_string(),
                point_str(&r.star),
                point_f64(&r.extreme).to_string(),
                point_str(&r.extreme),
            ];
            rec.extend(r.bins.iter().map(|(_, e)| point_f64(e).to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Two whitespace-separated columns `n deviation` for one block.
pub fn plot_series(report: &DeviationReport, block: &Block) -> String {
    let mut out = format!("# block {block}\n# n deviation\n");
    for (n, dev) in report.series(block) {
        writeln!(out, "{n} {dev}").expect("writing to a String");
    }
    out
}

/// File-name-safe label for a block, such as `b0-3` for `[0,3]`.
pub fn block_label(block: &Block) -> String {
    let parts: Vec<String> = block.word().iter().map(u64::to_string).collect();
    format!("b{}", parts.join("-"))
}

/// Aligned plain-text table of the block rows, followed by pair and
/// distribution summaries when present.
pub fn pretty_report(report: &DeviationReport) -> String {
    let mut out = String::new();
    let width = report
        .rows
        .iter()
        .map(|r| r.block.to_string().len())
        .max()
        .unwrap_or(5)
        .max(5);
    if !report.rows.is_empty() {
        writeln!(
            out,
            "{:>12}  {:<width$}  {:>10}  {:>14}  {:>12}",
            "checkpoint", "block", "count", "expectation", "deviation"
        )
        .unwrap();
        for r in &report.rows {
            writeln!(
                out,
                "{:>12}  {:<width$}  {:>10}  {:>14.6}  {:>12.6}",
                r.checkpoint,
                r.block.to_string(),
                r.count,
                r.expectation.approx,
                r.deviation.value()
            )
            .unwrap();
        }
    }
    if !report.pairs.is_empty() {
        writeln!(out, "pairs:").unwrap();
        for p in &report.pairs {
            writeln!(
                out,
                "{:>12}  {} / {}  {:>12.6}",
                p.checkpoint,
                p.first,
                p.second,
                p.deviation.value()
            )
            .unwrap();
        }
    }
    for d in &report.distribution {
        writeln!(
            out,
            "{:>12}  D* = {:.6}  D = {:.6}",
            d.checkpoint,
            point_f64(&d.star),
            point_f64(&d.extreme)
        )
        .unwrap();
    }
    if !report.excluded.is_empty() {
        let names: Vec<String> = report.excluded.iter().map(Block::to_string).collect();
        writeln!(out, "excluded (not good): {}", names.join(" ")).unwrap();
    }
    if let Some(m) = report.max_deviation() {
        writeln!(out, "max deviation: {m}").unwrap();
    }
    out
}

/// `index,old,new,reason`.
pub fn log_csv(log: &SurgeryLog) -> Result<String> {
    csv_string(|w| {
        w.write_record(["index", "old", "new", "reason"])?;
        for e in &log.entries {
            w.write_record([
                e.index.to_string(),
                e.old.to_string(),
                e.new.to_string(),
                e.reason.tag().to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn parse_log_csv(text: &str) -> Result<SurgeryLog> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (t, rec) in r.records().enumerate() {
        let line = t + 2;
        let rec = rec.map_err(|e| data(line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(data(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<u64> {
            rec[i]
                .parse()
                .map_err(|_| data(line, format!("`{}` is not an integer", &rec[i])))
        };
        let reason: Reason = rec[3].parse().map_err(|e: Error| data(line, e.to_string()))?;
        entries.push(SurgeryEntry {
            index: num(0)? as usize,
            old: num(1)?,
            new: num(2)?,
            reason,
        });
    }
    Ok(SurgeryLog { entries })
}

#[derive(Serialize)]
struct CertificateFile<'a> {
    target: &'a str,
    config: &'a str,
    schedule: &'a Schedule,
    warnings: &'a [String],
}

/// The certificate written next to a construction's output: the schedule
/// with every checked condition and margin, plus construction warnings.
pub fn certificate_json(
    target: &str,
    config: &str,
    schedule: &Schedule,
    warnings: &[String],
) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&CertificateFile {
        target,
        config,
        schedule,
        warnings,
    })?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surgery::make_reference;

    #[test]
    fn digits_round_trip() {
        let seq: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        let d = make_reference(&seq, 3, 50);
        let text = digits_to_string(&d);
        assert!(text.starts_with("#cantor-digits v1 seq=linear:1:1@div=1@iil=1\n"));
        assert!(text.ends_with('\n') && !text.ends_with("\n\n"));
        let back = parse_digits(&text, Some(&seq)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn digits_errors_name_lines() {
        let seq = BasicSequence::constant(2).unwrap();
        let err = |t: &str| match parse_digits(t, Some(&seq)) {
            Err(Error::Data { line, .. }) => line,
            other => panic!("expected data error, got {other:?}"),
        };
        assert_eq!(err("#cantor-digits v1 seq=const:2\n0\n2\n"), 3);
        assert_eq!(err("#cantor-digits v1 seq=const:2\n0\nx\n"), 3);
        assert_eq!(err("#cantor-digits v1 seq=const:2\n"), 1);
        assert_eq!(err("#cantor-digits v1 seq=const:3\n0\n"), 1);
        assert_eq!(err("#cantor-digits v1 seq=const:2\n0\n\n"), 3);
        assert_eq!(err("#cantor-digits v1 seq=const:2\r\n0\r\n"), 1);
        assert_eq!(err("garbage\n0\n"), 1);
    }

    #[test]
    fn log_round_trip() {
        let log = SurgeryLog {
            entries: vec![
                SurgeryEntry { index: 3, old: 0, new: 1, reason: Reason::Theta },
                SurgeryEntry { index: 9, old: 4, new: 9, reason: Reason::Xi },
            ],
        };
        let text = log_csv(&log).unwrap();
        assert_eq!(text, "index,old,new,reason\n3,0,1,theta\n9,4,9,xi\n");
        assert_eq!(parse_log_csv(&text).unwrap(), log);
        assert!(parse_log_csv("index,old,new,reason\n1,0,1,bogus\n").is_err());
    }

    #[test]
    fn block_labels() {
        assert_eq!(block_label(&"[0,3]".parse().unwrap()), "b0-3");
    }
}
