use std::process::{Command, Output};

fn cvdistill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .env("RAYON_NUM_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SWEEP: [&str; 10] = [
    "sweep",
    "--lambda",
    "0.1:0.5:5",
    "--eta",
    "0.5,1",
    "--t",
    "0.9",
    "--detector",
    "onoff,pnr:2,threshold:2",
    "--path",
];

#[test]
fn sweep_output_is_byte_identical_across_runs_and_thread_counts() {
    for out in ["csv", "json"] {
        let mut args = SWEEP.to_vec();
        args.extend(["both", "--out", out]);
        let a = with_threads("1", &args);
        let b = with_threads("4", &args);
        let c = with_threads("4", &args);
        assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(b.stdout, c.stdout);
    }
}

#[test]
fn csv_has_fixed_header_and_twelve_significant_digits() {
    let o = cvdistill(&["before", "--lambda", "0.5", "--eta", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("index,detector,lambda,eta,t,path,en_before,en_after"));
    let row = lines.next().unwrap();
    assert!(row.contains(",5.84962500721e-1,"), "{row}");
    assert!(!text.contains('\r'));
}

#[test]
fn json_has_meta_and_rows() {
    let o = cvdistill(&[
        "distill",
        "--lambda",
        "0.5",
        "--eta",
        "0.5",
        "--t",
        "0.95",
        "--detector",
        "pnr:1",
        "--out",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("{\n  \"meta\": {"));
    assert!(text.contains("\"rows\": ["));
    assert!(text.contains("\"command\": \"distill\""));
    assert!(text.contains("\"en_after\": 0.722215167"));
}

#[test]
fn output_flag_writes_the_file() {
    let dir = std::env::temp_dir().join(format!("cvdistill-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tl.csv");
    let o = cvdistill(&["tl", "--lambda", "0.5", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(
        text.contains("onoff,1.00000000000e0,5.00000000000e-1,7.4822810759"),
        "{text}"
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["distill", "--lambda", "1.5", "--eta", "0.5", "--t", "0.9"],
        vec![
            "distill",
            "--lambda",
            "0.5",
            "--eta",
            "0.5",
            "--t",
            "0.9",
            "--detector",
            "apd",
        ],
        vec!["distill", "--lambda", "0.5", "--eta", "0.5"],
        vec!["sweep", "--lambda", "0.1:0.5"],
        vec!["figure", "fig9"],
        vec![
            "distill",
            "--lambda",
            "0.5",
            "--eta",
            "0.5",
            "--t",
            "0.9",
            "--path",
            "threshold:1",
            "--detector",
            "threshold:1",
        ],
        vec![
            "distill",
            "--lambda",
            "0.5",
            "--eta",
            "0.5",
            "--t",
            "0.9",
            "--path",
            "analytic",
            "--detector",
            "threshold:1",
        ],
        vec!["validate", "--xi-flip", "40,1"],
    ] {
        let o = cvdistill(&args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn truncation_failure_exits_with_three() {
    let o = cvdistill(&[
        "distill", "--lambda", "0.9", "--eta", "1", "--t", "0.9", "--path", "oracle",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_keeps_failed_points_inline() {
    let o = cvdistill(&[
        "sweep",
        "--lambda",
        "0.3",
        "--detector",
        "onoff,threshold:1",
        "--path",
        "analytic",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("1,threshold:1,"));
}

#[test]
fn mutated_beamsplitter_fails_validation_with_one() {
    let o = cvdistill(&["validate", "--xi-flip", "3,1"]);
    assert_eq!(code(&o), 1);
    let csv = String::from_utf8(o.stdout).unwrap();
    for id in ["U1", "U2", "1a"] {
        let line = csv
            .lines()
            .find(|l| l.starts_with(&format!("{id},")))
            .unwrap();
        assert!(line.contains(",fail,"), "{line}");
    }
}
