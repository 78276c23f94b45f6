use cantor_core::blocks::counts_at;
use cantor_core::normality::{test_normal, ReportOptions};
use cantor_core::surgery::{
    build_longest_schedule, make_reference, reduce_diff4, reduce_dn, reduce_normal,
    reduce_rn_not_n, Profile, Reduction, ReductionInput, ScheduleParams, SeedSource,
};
use cantor_core::{BasicSequence, DigitStream};

fn seq(text: &str) -> BasicSequence {
    text.parse().unwrap()
}

fn check_log(z: &DigitStream, red: &Reduction) {
    assert!(red.stream.validate(64).is_valid());
    assert_eq!(red.log.replay(z.digits()).unwrap(), red.stream.digits());
    let mut last = 0;
    for e in &red.log.entries {
        assert!(e.index > last && e.old != e.new);
        assert_eq!(z.digits()[e.index - 1], e.old);
        last = e.index;
    }
    let touched = red.log.entries.iter().map(|e| e.index - 1).collect::<Vec<_>>();
    for (i, (a, b)) in z.digits().iter().zip(red.stream.digits()).enumerate() {
        if a != b {
            assert!(touched.binary_search(&i).is_ok());
        }
    }
}

#[test]
fn dn_raises_digits_into_the_bin_and_replays() {
    let q = seq("linear:1:1@div=1@iil=1");
    let z = make_reference(&q, 11, 30_000);
    let sched = build_longest_schedule(&q, &z, Profile::Dn, 64, &ScheduleParams::default()).unwrap();
    let red = reduce_dn(&ReductionInput::Tabulated(vec![3, 1, 4]), &z, &q, &sched).unwrap();
    check_log(&z, &red);
    assert!(!red.log.is_empty());
    for iv in &red.intervals {
        for e in red.log.entries.iter().filter(|e| e.index > iv.start && e.index <= iv.end) {
            let qi = q.base_at(e.index as u64);
            assert!(e.new > e.old);
            assert!(e.new * (iv.x_prime + 2) > qi, "digit {} of {qi} at {}", e.new, e.index);
        }
    }
}

#[test]
fn normal_surgery_stays_inside_its_range_and_recounts() {
    let q = seq("const:3@div=all@iil=0");
    let z = make_reference(&q, 5, 200_000);
    let sched = build_longest_schedule(&q, &z, Profile::Normal, 8, &ScheduleParams::default()).unwrap();
    assert!(sched.count() >= 2);
    let red = reduce_normal(&ReductionInput::Identity, &z, &q, &sched).unwrap();
    check_log(&z, &red);
    assert!(red.intervals.iter().any(|iv| iv.pivot.as_ref().is_some_and(|p| p.a_double_prime > 0)));
    for iv in red.intervals.iter().filter(|iv| !iv.open) {
        let Some(p) = &iv.pivot else { continue };
        for e in red.log.entries.iter().filter(|e| e.index > iv.start && e.index <= iv.end) {
            assert!(e.index >= p.m && e.index <= iv.end);
        }
        let overhang = red
            .log
            .entries
            .iter()
            .any(|e| e.index > iv.end && e.index < iv.end + p.block.len());
        if !overhang {
            assert_eq!(counts_at(red.stream.digits(), &p.block, &[iv.end])[0], p.count_after);
        }
        assert_eq!(
            p.count_after as i64,
            p.count_before as i64 - p.a_double_prime as i64 + p.corrections
        );
    }
}

#[test]
fn diff4_with_identity_tracks_keeps_reference_statistics() {
    let q = seq("linear:1:1@div=all@iil=1");
    let n = 100_000;
    let z = make_reference(&q, 9, n);
    let sched = build_longest_schedule(&q, &z, Profile::Diff4, 8, &ScheduleParams::default()).unwrap();
    let red = reduce_diff4(&ReductionInput::Identity, &z, &q, &sched).unwrap();
    check_log(&z, &red);
    let opts = ReportOptions::default();
    let dev = |d: &DigitStream| test_normal(d, 4, &[n - 8], &opts).unwrap().max_deviation_at(n - 8).unwrap();
    let (out, reference) = (dev(&red.stream), dev(&z));
    assert!(out < 2.0 * reference, "{out} vs {reference}");
}

#[test]
fn constructions_are_deterministic() {
    let q = seq("linear:1:1@div=1@iil=1");
    let z = make_reference(&q, 21, 20_000);
    let ps = ScheduleParams {
        seeds: Some(SeedSource::Derived(21)),
        ..Default::default()
    };
    let run = || {
        let a = build_longest_schedule(&q, &z, Profile::Diff4, 8, &ps).unwrap();
        let b = build_longest_schedule(&q, &z, Profile::Hc, 2, &ps).unwrap();
        let x = ReductionInput::ConstantOnOdds(1);
        (
            reduce_diff4(&x, &z, &q, &a).unwrap().stream.into_digits(),
            reduce_rn_not_n(&x, &q, &b, &SeedSource::Derived(21)).unwrap().stream.into_digits(),
        )
    };
    assert_eq!(run(), run());
    assert_eq!(make_reference(&q, 21, 20_000).digits(), z.digits());
}
