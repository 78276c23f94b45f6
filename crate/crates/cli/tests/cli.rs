use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cantor_core::formats::parse_digits;

fn cantor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn expand_writes_the_greedy_digits() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("x.txt");
    let out = cantor(&["expand", "--seq", "const:2", "--x", "1/3", "--n", "6", "--out", path(&file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(&file).unwrap(),
        "#cantor-digits v1 seq=const:2\n0\n1\n0\n1\n0\n1\n"
    );
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cantor(&["expand", "--seq", "const:2", "--x", "3/2", "--n", "4"])), 2);
    assert_eq!(code(&cantor(&["expand", "--seq", "const:1", "--x", "1/2", "--n", "4"])), 2);
    assert_eq!(code(&cantor(&["bogus"])), 2);

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "#cantor-digits v1 seq=const:2\n").unwrap();
    assert_eq!(code(&cantor(&["stats", "--input", path(&empty)])), 3);

    let mismatch = dir.path().join("mismatch.txt");
    fs::write(&mismatch, "#cantor-digits v1 seq=const:3\n0\n2\n").unwrap();
    assert_eq!(code(&cantor(&["stats", "--seq", "const:2", "--input", path(&mismatch)])), 3);
    assert_eq!(code(&cantor(&["stats", "--input", path(&dir.path().join("missing"))])), 3);

    let out = cantor(&[
        "construct",
        "--target",
        "n",
        "--seq",
        "linear:1:1@div=none@iil=1",
        "--seed",
        "1",
        "--n",
        "200",
        "--out-dir",
        path(&dir.path().join("c")),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn construct_outputs_revalidate_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("dn");
    let out = cantor(&[
        "construct",
        "--target",
        "dn",
        "--seq",
        "linear:1:1@div=1@iil=1",
        "--seed",
        "3",
        "--n",
        "5000",
        "--out-dir",
        path(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let digits = parse_digits(&fs::read_to_string(out_dir.join("digits.txt")).unwrap(), None).unwrap();
    assert_eq!(digits.len(), 5000);
    assert!(digits.validate(64).is_valid());
    let log = cantor_core::formats::parse_log_csv(&fs::read_to_string(out_dir.join("log.csv")).unwrap()).unwrap();
    let z = cantor_core::surgery::make_reference(digits.seq(), 3, 5000);
    assert_eq!(log.replay(z.digits()).unwrap(), digits.digits());
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["target"], "dn");
    assert_eq!(cert["schedule"]["profile"], "DN");
}

#[test]
fn config_files_are_equivalent_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# seeded run\ncommand=construct\ntarget=dn-not-n\nseq=linear:1:1@div=1@iil=1\nseed=4\nn=3000/1\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&cantor(&["construct", "--config", path(&cfg), "--out-dir", path(&a)])), 0);
    let flags = cantor(&[
        "construct",
        "--target",
        "dn-not-n",
        "--seq",
        "linear:1:1@div=1@iil=1",
        "--seed",
        "4",
        "--n",
        "3000",
        "--out-dir",
        path(&b),
    ]);
    assert_eq!(code(&flags), 0);
    for f in ["digits.txt", "log.csv", "certificate.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    fs::write(&cfg, "command=test\nseq=const:2\n").unwrap();
    let wrong = cantor(&["construct", "--config", path(&cfg), "--out-dir", path(&a)]);
    assert_eq!(code(&wrong), 2);
    fs::write(&cfg, "seq=const:2\nnot a setting\n").unwrap();
    assert_eq!(code(&cantor(&["seq", "--config", path(&cfg)])), 3);
}

#[test]
fn test_reports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let digits = dir.path().join("d.txt");
    let out = cantor(&["expand", "--seq", "const:3", "--x", "5/7", "--n", "3000", "--out", path(&digits)]);
    assert_eq!(code(&out), 0);
    let rep = dir.path().join("rep");
    let out = cantor(&[
        "test",
        "--input",
        path(&digits),
        "--kind",
        "normal",
        "--max-norm",
        "3",
        "--checkpoints",
        "100,1000",
        "--out-dir",
        path(&rep),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(rep.join("report.csv")).unwrap();
    assert!(csv.starts_with("checkpoint,block,count,expectation_num,expectation_den,deviation\n"));
    assert!(csv.lines().count() > 2);
}
