use cantor_core::normality::{test_normal, ReportOptions};
use cantor_core::surgery::make_reference;
use cantor_core::BasicSequence;

#[test]
fn reference_deviation_shrinks_from_ten_thousand_to_a_million() {
    let q: BasicSequence = "linear:1:1@div=1@iil=1".parse().unwrap();
    let n = 1_000_000;
    let z = make_reference(&q, 7, n);
    let rep = test_normal(&z, 4, &[10_000, n - 8], &ReportOptions::default()).unwrap();
    let early = rep.max_deviation_at(10_000).unwrap();
    let late = rep.max_deviation_at(n - 8).unwrap();
    assert!(late < early, "{late} >= {early}");
}
