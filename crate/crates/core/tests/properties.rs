use cantor_core::blocks::{count, enumerate_blocks, expectation, Block, BlockCollection};
use cantor_core::digits::{digits_of_rational, psi_map, DigitStream};
use cantor_core::discrepancy::{extreme_discrepancy, star_discrepancy, Point};
use cantor_core::formats::{digits_to_string, log_csv, parse_digits, parse_log_csv};
use cantor_core::normality::{test_collection, test_normal, CollectionVariant, ReportOptions};
use cantor_core::surgery::{make_reference, theta_op, xi_op};
use cantor_core::BasicSequence;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn simple_seq() -> impl Strategy<Value = BasicSequence> {
    prop_oneof![
        (2u64..9).prop_map(|b| BasicSequence::constant(b).unwrap()),
        (1u64..4, 0i64..4).prop_map(|(s, o)| BasicSequence::linear(s, o + 2 - s as i64).unwrap()),
    ]
}

fn any_seq() -> impl Strategy<Value = BasicSequence> {
    prop_oneof![
        3 => simple_seq(),
        1 => (prop::collection::vec(2u64..7, 1..6), simple_seq())
            .prop_map(|(p, t)| BasicSequence::explicit_then(p, t).unwrap()),
    ]
}

fn block() -> impl Strategy<Value = Block> {
    prop::collection::vec(0u64..4, 1..4).prop_map(|w| Block::new(w).unwrap())
}

fn direct_q(seq: &BasicSequence, k: usize, from: u64, to: u64) -> BigRational {
    let mut s = BigRational::zero();
    for j in from..=to {
        let den: BigInt = (0..k as u64).map(|t| BigInt::from(seq.base_at(j + t))).product();
        s += BigRational::new(BigInt::one(), den);
    }
    s
}

#[test]
fn bases_are_at_least_two_and_squeezed_terms_are_dominated() {
    let rules = [
        "const:2",
        "const:7",
        "linear:1:1",
        "linear:3:-1",
        "explicit:5,2,9;linear:2:0",
        "pm:4;linear:1:1",
    ];
    for text in rules {
        let seq: BasicSequence = text.parse().unwrap();
        let squeezed: Vec<BasicSequence> = [0, 1, 5, 27].map(|m| seq.derive_pm(m)).to_vec();
        for i in 1..=100_000u64 {
            let q = seq.base_at(i);
            assert!(q >= 2, "{text} at {i}");
            for p in &squeezed {
                let v = p.base_at(i);
                assert!(v >= 2 && v <= q, "{p} at {i}");
            }
        }
    }
}

#[test]
fn enumeration_lengths_are_bounded_by_position() {
    for (i, b) in enumerate_blocks(1000).iter().enumerate() {
        assert!(b.len() <= i + 1, "block {i} is {b}");
    }
}

#[test]
fn counts_match_a_naive_rescan_on_long_streams() {
    for seed in 0..4 {
        let seq: BasicSequence = "const:3".parse().unwrap();
        let d = make_reference(&seq, seed, 10_000);
        for b in enumerate_blocks(20) {
            let last = d.len() + 1 - b.len();
            let naive = (0..last).filter(|&s| d.digits()[s..s + b.len()] == *b.word()).count();
            assert_eq!(count(&d, &b, 1, last).unwrap(), naive, "{b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn partial_expectations_are_additive(seq in any_seq(), k in 1usize..4, m in 0usize..40, extra in 0usize..40) {
        let n = m + extra;
        let diff = seq.partial_expectation_0k(k, n) - seq.partial_expectation_0k(k, m);
        let want = if n > m { direct_q(&seq, k, m as u64 + 1, n as u64) } else { BigRational::zero() };
        prop_assert_eq!(diff, want);
    }

    #[test]
    fn rational_expansions_bracket_their_value(seq in any_seq(), den in 1i64..10_000, num in 0i64..10_000, n in 1usize..60) {
        let x = BigRational::new(BigInt::from(num % den), BigInt::from(den));
        let d = digits_of_rational(&x, &seq, n).unwrap();
        let lower = d.prefix_value(n).unwrap();
        let prod: BigInt = d.bases()[..n].iter().map(|&q| BigInt::from(q)).product();
        prop_assert!(lower <= x);
        prop_assert!(x < lower + BigRational::new(BigInt::one(), prod));
    }

    #[test]
    fn psi_output_is_valid(p in any_seq(), q in any_seq(), seed in any::<u64>()) {
        let x = make_reference(&p, seed, 300);
        prop_assert!(psi_map(&x, &q).validate(64).is_valid());
    }

    #[test]
    fn tail_values_meet_their_tolerance(seq in any_seq(), seed in any::<u64>(), n in 0usize..40, t in 1u32..40) {
        let d = make_reference(&seq, seed, 120);
        let tol = BigRational::new(BigInt::one(), BigInt::one() << t);
        if let Ok(v) = d.tail_value(n, &tol) {
            let exact = d.stored_tail(n);
            let err = if v > exact { &v - &exact } else { &exact - &v };
            prop_assert!(err < tol);
        }
    }

    #[test]
    fn expectations_split_and_are_dominated(seq in simple_seq(), b in block(), m in 1u64..40, extra in 0u64..40) {
        let n = m + extra;
        let whole = expectation(&b, 1, n, &seq);
        prop_assert_eq!(&whole, &(expectation(&b, 1, m - 1, &seq) + expectation(&b, m, n, &seq)));
        let bound = seq.partial_expectation_0k(b.len(), n as usize);
        let all_fit = (1..=n).all(|j| b.indicator(j, &seq));
        prop_assert!(whole <= bound);
        prop_assert_eq!(whole == bound, all_fit);
    }

    #[test]
    fn counts_split_over_start_indices(seq in any_seq(), seed in any::<u64>(), b in block(), m in 1usize..150, extra in 0usize..150) {
        let n = m + extra;
        let d = make_reference(&seq, seed, n + b.len());
        let whole = count(&d, &b, 1, n).unwrap();
        let left = if m > 1 { count(&d, &b, 1, m - 1).unwrap() } else { 0 };
        prop_assert_eq!(whole, left + count(&d, &b, m, n).unwrap());
    }

    #[test]
    fn extreme_is_at_most_twice_star(us in prop::collection::vec(0i128..997, 1..200)) {
        let pts: Vec<Point> = us.iter().map(|&u| Point::new(u, 997)).collect();
        let star = star_discrepancy(&pts).unwrap();
        let ext = extreme_discrepancy(&pts).unwrap().value;
        let n = pts.len() as i128;
        prop_assert!(ext <= star * 2);
        prop_assert!(star >= Point::new(1, 2 * n) && star <= Point::one());
        prop_assert!(ext >= star && ext <= Point::one());
    }

    #[test]
    fn theta_flips_a_fixed_share_of_zero_runs(w in prop::collection::vec(0u64..3, 1..120), k in 1usize..4, ell in 1usize..5) {
        let mut out = w.clone();
        let res = theta_op(&mut out, k, ell);
        prop_assert_eq!(res.changed.len(), res.before / ell);
        for i in 0..w.len() {
            if res.changed.contains(&i) {
                prop_assert_eq!((w[i], out[i]), (0, 1));
            } else {
                prop_assert_eq!(w[i], out[i]);
            }
        }
    }

    #[test]
    fn xi_is_idempotent_and_only_raises_to_the_top(seq in any_seq(), seed in any::<u64>(), k in 1u64..6) {
        let d = make_reference(&seq, seed, 200);
        let bases = d.bases().to_vec();
        let mut once = d.digits().to_vec();
        let changed = xi_op(&mut once, &bases, k);
        for &j in &changed {
            prop_assert!(once[j] == bases[j] - 1 && d.digits()[j] < once[j]);
        }
        let mut twice = once.clone();
        prop_assert!(xi_op(&mut twice, &bases, k).is_empty());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn digit_files_round_trip(seq in any_seq(), seed in any::<u64>(), n in 1usize..300) {
        let d = make_reference(&seq, seed, n);
        let text = digits_to_string(&d);
        let back: DigitStream = parse_digits(&text, Some(&seq)).unwrap();
        prop_assert_eq!(back.digits(), d.digits());
        prop_assert_eq!(digits_to_string(&back), text);
    }

    #[test]
    fn full_collections_reproduce_the_normal_report(seed in any::<u64>()) {
        let seq: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
        let d = make_reference(&seq, seed, 3000);
        let opts = ReportOptions::default();
        let full = BlockCollection::up_to_norm(4);
        let a = test_normal(&d, 4, &[100, 1000, 2990], &opts).unwrap();
        let b = test_collection(&d, &full, &[100, 1000, 2990], CollectionVariant::Normal, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn surgery_logs_survive_csv() {
    use cantor_core::surgery::{build_longest_schedule, reduce_dn, Profile, ReductionInput, ScheduleParams};
    let seq: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
    let z = make_reference(&seq, 3, 20_000);
    let sched = build_longest_schedule(&seq, &z, Profile::Dn, 8, &ScheduleParams::default()).unwrap();
    let red = reduce_dn(&ReductionInput::Identity, &z, &seq, &sched).unwrap();
    let log = parse_log_csv(&log_csv(&red.log).unwrap()).unwrap();
    assert_eq!(log, red.log);
    assert_eq!(log.replay(z.digits()).unwrap(), red.stream.digits());
}
