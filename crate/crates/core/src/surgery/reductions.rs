use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::blocks::{enumerate_blocks, expectation_cumulative, is_good, Block, Goodness, GoodnessConfig};
use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::exact::integer_root;
use crate::sequences::{BasicSequence, DivergenceProfile, Rule};

use super::ops::{theta_op, xi_op, RMap};
use super::reference::{make_reference, SeedSource};
use super::schedule::{Interval, Profile, Schedule};
use super::{clamp_input, ClampMode, Reason, ReductionInput, SurgeryLog};

/// Pivot bookkeeping of one `reduce_normal` interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotNote {
    pub block: Block,
    /// 1-based start of the surgery range `[m, b_n]`.
    pub m: usize,
    pub a: usize,
    pub a_prime: usize,
    pub a_double_prime: usize,
    /// `N_{b_n}(pivot)` of the output before and after this interval's surgery.
    pub count_before: usize,
    pub count_after: usize,
    /// `count_after - (count_before - |A''|)`.
    pub corrections: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalNote {
    pub n: usize,
    /// 0-based `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub open: bool,
    pub x_prime: u64,
    /// Human-readable description of the operations applied.
    pub operations: Vec<String>,
    pub changes: usize,
    pub pivot: Option<PivotNote>,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub stream: DigitStream,
    pub log: SurgeryLog,
    pub intervals: Vec<IntervalNote>,
    pub warnings: Vec<String>,
    /// The glued sequence `P_x` of `reduce_rn_not_n`.
    pub p_x: Option<BasicSequence>,
}

fn require_profile(sched: &Schedule, profile: Profile) -> Result<()> {
    if sched.profile != profile {
        return Err(Error::Config(format!(
            "this reduction needs a {profile} schedule, got {}",
            sched.profile
        )));
    }
    Ok(())
}

fn require_infinite_in_limit(seq: &BasicSequence, what: &str) -> Result<()> {
    match seq.meta().infinite_in_limit {
        Some(true) => Ok(()),
        Some(false) => Err(Error::Config(format!(
            "{what} needs a sequence that tends to infinity; {seq} is declared otherwise"
        ))),
        None => Err(Error::Config(format!(
            "{what} needs the infinite-in-limit flag declared on {seq}"
        ))),
    }
}

/// Order `k` for the `Theta` step: `fallback` when every order diverges,
/// the largest divergent order `k_0` otherwise.
fn theta_order(seq: &BasicSequence, fallback: u64) -> Result<u64> {
    match seq.meta().profile() {
        DivergenceProfile::Fully => Ok(fallback),
        DivergenceProfile::UpTo(k0) => Ok(k0 as u64),
        DivergenceProfile::Convergent => Err(Error::Config(format!(
            "{seq} is declared 1-convergent; no divergent order to thin"
        ))),
        DivergenceProfile::Unknown => Err(Error::Config(format!(
            "the divergence metadata of {seq} does not determine k0"
        ))),
    }
}

fn index(n: usize) -> u64 {
    n as u64
}

/// `reduce_dn`: raises digit `i` to the least `a` in `[z_i, q_i)` with
/// `a/q_i > 1/(x'(n)+2)` whenever the tail starting at digit `i` provably
/// lies below that threshold.
pub fn reduce_dn(
    x: &ReductionInput,
    z: &DigitStream,
    seq: &BasicSequence,
    sched: &Schedule,
) -> Result<Reduction> {
    require_profile(sched, Profile::Dn)?;
    let mut warnings = Vec::new();
    if seq.meta().infinite_in_limit != Some(true) {
        warnings.push(format!(
            "{seq} is not declared infinite in limit; the output need not be distribution normal"
        ));
    }
    const BITS: u32 = 62;
    let points = z.tail_points_available(BITS);
    let digits = z.digits();
    let bases = z.bases();
    let mut out = digits.to_vec();
    let mut reasons = vec![None; out.len()];
    let mut notes = Vec::new();
    for iv in sched.intervals(z.len())? {
        let xp = clamp_input(x, index(iv.n), ClampMode::Dn);
        let mut changes = 0;
        for i in iv.start..iv.end {
            let q = bases[i];
            if !tail_below_threshold(z, &points, i, xp, BITS)? {
                continue;
            }
            let a = (q / (xp + 2) + 1).max(digits[i]);
            if a >= q {
                return Err(Error::Construction(format!(
                    "no digit below q_{} = {q} exceeds the threshold 1/{}",
                    i + 1,
                    xp + 2
                )));
            }
            if a != digits[i] {
                out[i] = a;
                reasons[i] = Some(Reason::DnThreshold);
                changes += 1;
            }
        }
        notes.push(note(&iv, xp, vec![format!("threshold 1/{}", xp + 2)], changes));
    }
    finish(z, out, reasons, notes, warnings, None)
}

/// Whether `tau_i` (the tail starting at 0-based offset `i`) is at most
/// `1/(x'+2) - tol` with `tol = 1/(4 (x'+2) q_i)`, i.e. provably in the bin.
fn tail_below_threshold(
    z: &DigitStream,
    points: &[u128],
    i: usize,
    xp: u64,
    bits: u32,
) -> Result<bool> {
    let q = z.bases()[i] as u128;
    let c = 4 * (xp as u128 + 2) * q;
    if let Some(&v) = points.get(i) {
        // v / 2^bits approximates tau_i to within 3 / 2^bits <= tol.
        if 3u128.checked_mul(c).is_none_or(|t| t > 1u128 << bits) {
            return Err(Error::Precision {
                position: i,
                required_length: z.len(),
                available: z.len(),
            });
        }
        return Ok(v * c <= (1u128 << bits) * (4 * q - 1));
    }
    // Near the end of the stream: the tail lies in [S, S + 1/D] with S the
    // stored digits and D their base product; test the upper end.
    let (s, d) = stored_tail_fraction(&z.digits()[i..], &z.bases()[i..]);
    // (S + 1) / D <= (4q - 1) / c
    Ok((s + 1u8) * BigUint::from(c) <= d * BigUint::from(4 * q - 1))
}

/// Numerator and denominator `(S, D)` of `sum_t a_t / (q_1 ... q_t)`.
fn stored_tail_fraction(digits: &[u64], bases: &[u64]) -> (BigUint, BigUint) {
    let mut s = BigUint::from(0u8);
    let mut d = BigUint::from(1u8);
    for (&a, &q) in digits.iter().zip(bases) {
        s = s * q + a;
        d *= q;
    }
    (s, d)
}

fn note(iv: &Interval, xp: u64, operations: Vec<String>, changes: usize) -> IntervalNote {
    IntervalNote {
        n: iv.n,
        start: iv.start,
        end: iv.end,
        open: iv.open,
        x_prime: xp,
        operations,
        changes,
        pivot: None,
    }
}

fn finish(
    z: &DigitStream,
    out: Vec<u64>,
    reasons: Vec<Option<Reason>>,
    intervals: Vec<IntervalNote>,
    warnings: Vec<String>,
    p_x: Option<BasicSequence>,
) -> Result<Reduction> {
    let mut log = SurgeryLog::default();
    log.record_diff(0, z.digits(), &out, &reasons);
    let stream = DigitStream::new(z.seq().clone(), out)?;
    Ok(Reduction {
        stream,
        log,
        intervals,
        warnings,
        p_x,
    })
}

struct BlockTables {
    seq: BasicSequence,
    len: usize,
    cum: HashMap<Block, Vec<f64>>,
}

impl BlockTables {
    fn q(&mut self, b: &Block, n: usize) -> f64 {
        let (seq, len) = (&self.seq, self.len);
        self.cum.entry(b.clone()).or_insert_with(|| {
            let bases = seq.bases(len + b.len());
            expectation_cumulative(b, &bases, len)
        })[n]
    }
}

/// Occurrences of `b` starting at 1-based positions `from..=to` that fit
/// inside `digits`.
fn starts_in(digits: &[u64], b: &Block, from: usize, to: usize) -> Vec<usize> {
    let last = (digits.len() + 1).saturating_sub(b.len()).min(to);
    (from.max(1)..=last)
        .filter(|&s| b.occurs_at(digits, s - 1))
        .collect()
}

/// `reduce_normal`: per interval, lowers the count of a pivot block by
/// applying `r` at the last `floor(Q_{b_n}(pivot)/x'(n))` of its clear
/// occurrences in `[m, b_n]`.
pub fn reduce_normal(
    x: &ReductionInput,
    z: &DigitStream,
    seq: &BasicSequence,
    sched: &Schedule,
) -> Result<Reduction> {
    require_profile(sched, Profile::Normal)?;
    if seq.meta().declares_divergent(1) != Some(true) {
        return Err(Error::Config(format!(
            "reduce_normal needs a sequence declared 1-divergent; {seq} is not"
        )));
    }
    let goodness = GoodnessConfig::default();
    let digits = z.digits();
    let len = z.len();
    let mut tables = BlockTables {
        seq: seq.clone(),
        len,
        cum: HashMap::new(),
    };
    let mut out = digits.to_vec();
    let mut reasons = vec![None; len];
    let mut notes = Vec::new();
    let mut warnings = Vec::new();
    for iv in sched.intervals(len)? {
        let xp = clamp_input(x, index(iv.n), ClampMode::Normal);
        let p = integer_root(xp, 6) as usize;
        let mut good = Vec::new();
        for b in enumerate_blocks(p) {
            match is_good(&b, seq, &goodness) {
                Goodness::Good => good.push(b),
                Goodness::NotGood => {}
                Goodness::Unknown => {
                    return Err(Error::Config(format!("goodness of block {b} is unknown for {seq}")))
                }
            }
        }
        if good.is_empty() {
            return Err(Error::Construction(format!(
                "no good block among the first {p} blocks for {seq}"
            )));
        }
        let bn = iv.end;
        let lo = iv.start + 1;
        let x3 = xp as f64;

        // m(i): least m in [lo, bn) with N_{m,bn}^3 x' <= 8 Q^3.
        let mut ms = Vec::with_capacity(good.len());
        for b in &good {
            let q = tables.q(b, bn);
            let bound = 8.0 * q * q * q;
            let starts = starts_in(digits, b, lo, bn);
            let holds = |count: usize| {
                let c = count as f64;
                c * c * c * x3 <= bound
            };
            // starts are ascending; N_{m,bn} counts those >= m.
            let mut m_i = None;
            if holds(starts.len()) {
                m_i = Some(lo);
            } else {
                for (t, &s) in starts.iter().enumerate() {
                    if holds(starts.len() - t - 1) {
                        m_i = Some(s + 1);
                        break;
                    }
                }
            }
            match m_i {
                Some(m) if m < bn => ms.push(m),
                _ => {
                    let fallback = (bn - 1).max(lo);
                    warnings.push(format!(
                        "interval {}: m({b}) has no admissible value; using b_n - 1 = {fallback}",
                        iv.n
                    ));
                    ms.push(fallback);
                }
            }
        }
        let m = *ms.iter().max().expect("at least one good block");
        let i0 = ms.iter().position(|&v| v == m).expect("max is attained");
        let pivot = good[i0].clone();
        let q0 = tables.q(&pivot, bn);
        let root = x3.sqrt();
        let sparse: Vec<&Block> = good
            .iter()
            .filter(|b| {
                let k = b.len() as f64;
                tables.q(b, bn) * 4.0 * k * 4f64.powi(b.len() as i32) * root < q0
            })
            .collect();
        let r = RMap::for_pivot(&pivot);

        let a = starts_in(digits, &pivot, m, bn);
        let a_prime: Vec<usize> = a
            .iter()
            .copied()
            .filter(|&i| {
                sparse.iter().all(|bj| {
                    (0..bj.len()).all(|q| {
                        let Some(s) = i.checked_sub(q).filter(|&s| s >= 1) else {
                            return true;
                        };
                        let e = s + bj.len() - 1;
                        e > len || !r.maps_onto(&digits[s - 1..e], bj.word())
                    })
                })
            })
            .collect();
        let want = (q0 / x3).floor() as usize;
        let take = want.min(a_prime.len());
        if take < want {
            warnings.push(format!(
                "interval {}: |A''| clipped from {want} to |A'| = {}",
                iv.n,
                a_prime.len()
            ));
        }
        let ap = a_prime.len() as f64;
        if ap * ap * ap * x3 < q0 * q0 * q0 {
            warnings.push(format!(
                "interval {}: |A'| = {} is below Q_b_n(pivot)/x'^(1/3) = {:.3}",
                iv.n,
                a_prime.len(),
                q0 / x3.cbrt()
            ));
        }
        let chosen = &a_prime[a_prime.len() - take..];
        let count_before = starts_in(&out, &pivot, 1, bn).len();
        for &i in chosen {
            let new = r.apply(out[i - 1]);
            if new != out[i - 1] {
                out[i - 1] = new;
                reasons[i - 1] = Some(Reason::R);
            }
        }
        let count_after = starts_in(&out, &pivot, 1, bn).len();
        let mut n = note(
            &iv,
            xp,
            vec![format!("pivot {pivot}, p = {p}, {} sparse", sparse.len())],
            take,
        );
        n.pivot = Some(PivotNote {
            block: pivot,
            m,
            a: a.len(),
            a_prime: a_prime.len(),
            a_double_prime: take,
            count_before,
            count_after,
            corrections: count_after as i64 - (count_before as i64 - take as i64),
        });
        notes.push(n);
    }
    finish(z, out, reasons, notes, warnings, None)
}

/// `reduce_diff4`: per interval `Theta_{k, x'(2n)}` followed by
/// `Xi_{x'(2n+1)}`, with `k = x'(2n)` for fully divergent sequences and
/// `k = k_0` otherwise.
pub fn reduce_diff4(
    x: &ReductionInput,
    z: &DigitStream,
    seq: &BasicSequence,
    sched: &Schedule,
) -> Result<Reduction> {
    require_profile(sched, Profile::Diff4)?;
    require_infinite_in_limit(seq, "reduce_diff4")?;
    let mut out = z.digits().to_vec();
    let bases = z.bases();
    let mut reasons = vec![None; out.len()];
    let mut notes = Vec::new();
    for iv in sched.intervals(z.len())? {
        let n = index(iv.n);
        let ell = clamp_input(x, 2 * n, ClampMode::Diff4);
        let xi = clamp_input(x, 2 * n + 1, ClampMode::Diff4);
        let k = theta_order(seq, ell)?;
        let window = &mut out[iv.start..iv.end];
        let theta = theta_op(window, k as usize, ell as usize);
        for &j in &theta.changed {
            reasons[iv.start + j] = Some(Reason::Theta);
        }
        let xi_changed = xi_op(window, &bases[iv.start..iv.end], xi);
        for &j in &xi_changed {
            reasons[iv.start + j] = Some(Reason::Xi);
        }
        notes.push(note(
            &iv,
            ell,
            vec![format!("theta k={k} l={ell}"), format!("xi k={xi}")],
            theta.changed.len() + xi_changed.len(),
        ));
    }
    finish(z, out, reasons, notes, Vec::new(), None)
}

/// `reduce_rn_not_n`: glues windows of the reference streams `w_m` (normal
/// for the squeezed sequences `P_m`) along the schedule, then thins `0_k`
/// occurrences per interval. The result is read relative to `seq`; the
/// glued sequence `P_x` is returned alongside it.
pub fn reduce_rn_not_n(
    x: &ReductionInput,
    seq: &BasicSequence,
    sched: &Schedule,
    seeds: &SeedSource,
) -> Result<Reduction> {
    require_profile(sched, Profile::Hc)?;
    require_infinite_in_limit(seq, "reduce_rn_not_n")?;
    let len = sched.stream_length;
    let (glued, intervals) = glue(x, seq, sched, seeds)?;
    let Glued { y, p_bases, track } = glued;
    let z = DigitStream::new(seq.clone(), y)?;
    let mut out = z.digits().to_vec();
    let mut reasons = vec![None; len];
    let mut notes = Vec::new();
    for (iv, &mo) in intervals.iter().zip(&track) {
        let n = index(iv.n);
        let ell = clamp_input(x, 2 * n, ClampMode::Diff4);
        let k = theta_order(seq, ell)?;
        let theta = theta_op(&mut out[iv.start..iv.end], k as usize, ell as usize);
        for &j in &theta.changed {
            reasons[iv.start + j] = Some(Reason::Theta);
        }
        notes.push(note(
            iv,
            mo,
            vec![format!("window w_{mo}"), format!("theta k={k} l={ell}")],
            theta.changed.len(),
        ));
    }
    let tail_m = track.last().copied().unwrap_or(0);
    let p_x = BasicSequence::new(
        Rule::ExplicitThen {
            prefix: Arc::from(p_bases),
            tail: Box::new(Rule::Squeezed {
                m: tail_m,
                base: Box::new(seq.rule().clone()),
            }),
        },
        seq.meta().clone(),
    )?;
    let mut red = finish(&z, out, reasons, notes, Vec::new(), Some(p_x))?;
    red.warnings
        .extend(track.iter().zip(&intervals).filter(|(m, _)| **m == 0).map(|(_, iv)| {
            format!("interval {}: x'(2n+1) = 0 glues w_0", iv.n)
        }));
    Ok(red)
}

struct Glued {
    y: Vec<u64>,
    p_bases: Vec<u64>,
    /// `min(x(2n+1), 2n+1)` per interval.
    track: Vec<u64>,
}

fn glue(
    x: &ReductionInput,
    seq: &BasicSequence,
    sched: &Schedule,
    seeds: &SeedSource,
) -> Result<(Glued, Vec<Interval>)> {
    let len = sched.stream_length;
    let intervals = sched.intervals(len)?;
    let mut references: HashMap<u64, DigitStream> = HashMap::new();
    let mut y = vec![0u64; len];
    let mut p_bases = vec![0u64; len];
    let mut track = Vec::with_capacity(intervals.len());
    for iv in &intervals {
        let n = index(iv.n);
        let mo = x.value(2 * n + 1).min(2 * n + 1);
        if let std::collections::hash_map::Entry::Vacant(e) = references.entry(mo) {
            let w = make_reference(&seq.derive_pm(mo), seeds.seed_for(mo)?, len);
            e.insert(w);
        }
        let w = &references[&mo];
        y[iv.start..iv.end].copy_from_slice(&w.digits()[iv.start..iv.end]);
        p_bases[iv.start..iv.end].copy_from_slice(&w.bases()[iv.start..iv.end]);
        track.push(mo);
    }
    Ok((Glued { y, p_bases, track }, intervals))
}

/// The digits `y` assembled by [`reduce_rn_not_n`] before surgery, i.e. the
/// stream its log replays against.
pub fn glued_reference(
    x: &ReductionInput,
    seq: &BasicSequence,
    sched: &Schedule,
    seeds: &SeedSource,
) -> Result<DigitStream> {
    let (glued, _) = glue(x, seq, sched, seeds)?;
    DigitStream::new(seq.clone(), glued.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::Divergence;

    fn trivial(profile: Profile, seq: &BasicSequence, len: usize) -> Schedule {
        Schedule::trivial(profile, seq, len)
    }

    #[test]
    fn dn_example() {
        let seq = BasicSequence::constant(4).unwrap();
        let z = DigitStream::new(seq.clone(), vec![0, 2]).unwrap();
        let x = ReductionInput::Tabulated(vec![0]);
        let red = reduce_dn(&x, &z, &seq, &trivial(Profile::Dn, &seq, 2)).unwrap();
        assert_eq!(red.stream.digits(), &[3, 2]);
        assert_eq!(red.log.len(), 1);
        assert_eq!(red.log.entries[0].reason, Reason::DnThreshold);
    }

    #[test]
    fn dn_no_qualifying_positions() {
        let seq = BasicSequence::constant(4).unwrap();
        let z = DigitStream::new(seq.clone(), vec![3, 3, 2, 3, 3, 2]).unwrap();
        let x = ReductionInput::Identity;
        let red = reduce_dn(&x, &z, &seq, &trivial(Profile::Dn, &seq, 6)).unwrap();
        assert_eq!(red.stream.digits(), z.digits());
        assert!(red.log.is_empty());
    }

    #[test]
    fn dn_altered_digits_clear_threshold() {
        let seq = BasicSequence::linear(1, 1).unwrap();
        let z = make_reference(&seq, 5, 3000);
        let mut sched = trivial(Profile::Dn, &seq, 3000);
        sched.boundaries = vec![0, 10, 100, 1000];
        let red = reduce_dn(&ReductionInput::Identity, &z, &seq, &sched).unwrap();
        assert!(!red.log.is_empty());
        for e in &red.log.entries {
            let iv = red
                .intervals
                .iter()
                .find(|iv| iv.start < e.index && e.index <= iv.end)
                .unwrap();
            let q = z.bases()[e.index - 1];
            assert!(e.new * (iv.x_prime + 2) > q);
            assert!(e.new >= e.old);
        }
        assert_eq!(red.log.replay(z.digits()).unwrap(), red.stream.digits());
    }

    #[test]
    fn dn_rejects_wrong_profile() {
        let seq = BasicSequence::constant(4).unwrap();
        let z = DigitStream::new(seq.clone(), vec![0, 2]).unwrap();
        let err = reduce_dn(&ReductionInput::Identity, &z, &seq, &trivial(Profile::Normal, &seq, 2));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn normal_tiny_window() {
        let seq = BasicSequence::constant(10)
            .unwrap()
            .declare(Divergence::All, false);
        // Q_n((0)) = n/10, so 30 positions give floor(3/27) = 0 changes and
        // 300 give floor(30/27) = 1.
        let z = DigitStream::new(seq.clone(), [0, 0, 5, 0].repeat(75)).unwrap();
        let x = ReductionInput::Tabulated(vec![27]);
        let red = reduce_normal(&x, &z, &seq, &trivial(Profile::Normal, &seq, 300)).unwrap();
        let note = red.intervals[0].pivot.clone().unwrap();
        assert_eq!(note.block, Block::zeros(1));
        assert_eq!(note.a_double_prime, 1);
        assert_eq!(red.log.len(), 1);
        let e = &red.log.entries[0];
        assert_eq!((e.old, e.new, e.reason), (0, 1, Reason::R));
        assert!(e.index >= note.m);
        // The last zero of the window is the one flipped.
        assert_eq!(e.index, 300);
        assert_eq!(
            note.count_after as i64,
            note.count_before as i64 - note.a_double_prime as i64 + note.corrections
        );
    }

    #[test]
    fn normal_without_pivot_is_unchanged() {
        let seq = BasicSequence::constant(10)
            .unwrap()
            .declare(Divergence::All, false);
        let z = DigitStream::new(seq.clone(), vec![5; 300]).unwrap();
        let x = ReductionInput::Tabulated(vec![27]);
        let red = reduce_normal(&x, &z, &seq, &trivial(Profile::Normal, &seq, 300)).unwrap();
        assert_eq!(red.stream.digits(), z.digits());
    }

    #[test]
    fn diff4_composes_theta_then_xi() {
        let seq = BasicSequence::constant(10)
            .unwrap()
            .declare(Divergence::All, true);
        let z = DigitStream::new(seq.clone(), vec![0, 0, 0, 0, 8, 9, 2, 0]).unwrap();
        let x = ReductionInput::Tabulated(vec![2]);
        let red = reduce_diff4(&x, &z, &seq, &trivial(Profile::Diff4, &seq, 8)).unwrap();
        // Theta_{2,2}: starts {0,1,2}, last one -> offset 2; Xi_2: d >= 20/3.
        assert_eq!(red.stream.digits(), &[0, 0, 1, 0, 9, 9, 2, 0]);
        let tags: Vec<_> = red.log.entries.iter().map(|e| e.reason).collect();
        assert_eq!(tags, vec![Reason::Theta, Reason::Xi]);
    }

    #[test]
    fn diff4_needs_metadata() {
        let seq = BasicSequence::constant(10).unwrap();
        let z = DigitStream::new(seq.clone(), vec![0; 8]).unwrap();
        let x = ReductionInput::Identity;
        assert!(matches!(
            reduce_diff4(&x, &z, &seq, &trivial(Profile::Diff4, &seq, 8)),
            Err(Error::Config(_))
        ));
        let seq = seq.declare(Divergence::Undeclared, true);
        assert!(matches!(
            reduce_diff4(&x, &z, &seq, &trivial(Profile::Diff4, &seq, 8)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rn_not_n_glues_windows_and_replays() {
        let seq: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        let mut sched = trivial(Profile::Hc, &seq, 2000);
        sched.boundaries = vec![0, 50, 400];
        let x = ReductionInput::ConstantOnOdds(1);
        let seeds = SeedSource::Derived(7);
        let red = reduce_rn_not_n(&x, &seq, &sched, &seeds).unwrap();
        let y = glued_reference(&x, &seq, &sched, &seeds).unwrap();
        assert_eq!(red.log.replay(y.digits()).unwrap(), red.stream.digits());
        let p = red.p_x.unwrap();
        for i in 1..=2000u64 {
            let pi = p.base_at(i);
            assert!(pi <= seq.base_at(i));
            assert!(y.digits()[i as usize - 1] < pi);
        }
        // Odd track fixed at 1: every interval reads w_1.
        assert!(red.intervals.iter().all(|n| n.x_prime == 1));
        let missing = SeedSource::Explicit(Default::default());
        assert!(matches!(
            reduce_rn_not_n(&x, &seq, &sched, &missing),
            Err(Error::Config(_))
        ));
    }
}
