use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dcnet::cli::run;
use flate2::write::GzEncoder;
use flate2::Compression;
use tempfile::TempDir;

fn dcnet(args: &[&str]) -> i32 {
    let mut argv = vec!["dcnet"];
    argv.extend_from_slice(args);
    run(argv)
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulated_ticks(dir: &TempDir) -> PathBuf {
    let ticks = p(dir, "ticks.csv");
    let code = dcnet(&[
        "simulate",
        "--sigma",
        "0.01",
        "--step",
        "1s",
        "--steps",
        "100000",
        "--seed",
        "7",
        "-o",
        s(&ticks),
    ]);
    assert_eq!(code, 0);
    ticks
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(dcnet(&[]), 2);
    assert_eq!(dcnet(&["frobnicate"]), 2);
    assert_eq!(dcnet(&["dissect", "-i", "x.csv"]), 2, "no ladder source");
    assert_eq!(
        dcnet(&["dissect", "-i", "x.csv", "--defaults", "--deltas", "0.01"]),
        2
    );
    assert_eq!(
        dcnet(&["matrix", "--deltas", "0.02,0.01"]),
        2,
        "decreasing ladder"
    );
    assert_eq!(
        dcnet(&["liquidity", "--defaults", "-i", "x.csv", "--window=0s"]),
        2
    );
    assert_eq!(
        dcnet(&[
            "liquidity",
            "--defaults",
            "-i",
            "x.csv",
            "--cadence=5 parsecs"
        ]),
        2
    );
    assert_eq!(dcnet(&["verify", "nonsense"]), 2);
}

#[test]
fn help_exits_with_0() {
    assert_eq!(dcnet(&["--help"]), 0);
    assert_eq!(dcnet(&["dissect", "--help"]), 0);
}

#[test]
fn missing_or_malformed_input_exits_with_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        dcnet(&["dissect", "--defaults", "-i", s(&p(&dir, "absent.csv"))]),
        1
    );
    let bad = p(&dir, "bad.csv");
    fs::write(&bad, "timestamp_ms,bid,ask\n0,1.19,1.20\n1000,1.20,1.19\n").unwrap();
    let out = p(&dir, "events.csv");
    assert_eq!(
        dcnet(&["dissect", "--defaults", "-i", s(&bad), "-o", s(&out)]),
        1
    );
    assert!(!out.exists(), "no partial output on failure");
}

#[test]
fn failed_verification_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let report = p(&dir, "report.csv");
    assert_eq!(dcnet(&["verify", "scales", "--report", s(&report)]), 3);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("suite,check,status,detail"));
    assert!(text.contains(",pass,") && text.contains(",fail,"));
    assert_eq!(dcnet(&["verify", "contraction", "entropy-bound"]), 0);
}

#[test]
fn staged_and_one_shot_pipelines_agree() {
    let dir = TempDir::new().unwrap();
    let ticks = simulated_ticks(&dir);
    let events = p(&dir, "events.csv");
    let trans = p(&dir, "transitions.csv");
    let staged = p(&dir, "staged.csv");
    let direct = p(&dir, "direct.csv");
    let trans_direct = p(&dir, "transitions_direct.csv");
    let ladder = ["--n", "4", "--delta1", "0.001", "--lambda", "2"];
    let liq = [
        "--window",
        "2h",
        "--cadence",
        "10m",
        "--chain-length",
        "100000",
    ];

    assert_eq!(
        dcnet(&[&["dissect", "-i", s(&ticks), "-o", s(&events)][..], &ladder].concat()),
        0
    );
    assert_eq!(
        dcnet(
            &[
                &["transitions", "--events", s(&events), "-o", s(&trans)][..],
                &ladder
            ]
            .concat()
        ),
        0
    );
    assert_eq!(
        dcnet(
            &[
                &["transitions", "-i", s(&ticks), "-o", s(&trans_direct)][..],
                &ladder
            ]
            .concat()
        ),
        0
    );
    assert_eq!(fs::read(&trans).unwrap(), fs::read(&trans_direct).unwrap());

    assert_eq!(
        dcnet(
            &[
                &["liquidity", "--transitions", s(&trans), "-o", s(&staged)][..],
                &ladder,
                &liq
            ]
            .concat()
        ),
        0
    );
    assert_eq!(
        dcnet(
            &[
                &["liquidity", "-i", s(&ticks), "-o", s(&direct)][..],
                &ladder,
                &liq
            ]
            .concat()
        ),
        0
    );
    let a = fs::read_to_string(&staged).unwrap();
    assert_eq!(a, fs::read_to_string(&direct).unwrap());
    assert!(a.starts_with("time_ms,K,surprise_nats,z,liquidity,low_confidence\n"));
    assert!(a.lines().count() > 10);
}

#[test]
fn gzip_input_reads_like_plain() {
    let dir = TempDir::new().unwrap();
    let ticks = simulated_ticks(&dir);
    let gz = p(&dir, "ticks.csv.gz");
    let mut enc = GzEncoder::new(fs::File::create(&gz).unwrap(), Compression::default());
    enc.write_all(&fs::read(&ticks).unwrap()).unwrap();
    enc.finish().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    assert_eq!(
        dcnet(&[
            "dissect",
            "--deltas",
            "0.001,0.003",
            "-i",
            s(&ticks),
            "-o",
            s(&a)
        ]),
        0
    );
    assert_eq!(
        dcnet(&[
            "dissect",
            "--deltas",
            "0.001,0.003",
            "-i",
            s(&gz),
            "-o",
            s(&b)
        ]),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let ticks = simulated_ticks(&dir);
    let cfg = p(&dir, "run.toml");
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    let code = dcnet(&[
        "liquidity",
        "--deltas",
        "0.001,0.0025,0.004",
        "--window",
        "3h",
        "--cadence",
        "15m",
        "--k-min",
        "10",
        "--chain-length",
        "50000",
        "--seed",
        "9",
        "--initial-mode",
        "expect-down",
        "-i",
        s(&ticks),
        "-o",
        s(&a),
        "--save-config",
        s(&cfg),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("window = \"3h\""));
    assert!(text.contains("initial_mode = \"expect-down\""));
    assert_eq!(
        dcnet(&[
            "liquidity",
            "--config",
            s(&cfg),
            "-i",
            s(&ticks),
            "-o",
            s(&b)
        ]),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn contracting_the_analytic_matrix_drops_the_first_threshold() {
    let dir = TempDir::new().unwrap();
    let (full, reduced, contracted) = (
        p(&dir, "full.csv"),
        p(&dir, "reduced.csv"),
        p(&dir, "c.csv"),
    );
    assert_eq!(
        dcnet(&["matrix", "--deltas", "0.001,0.002,0.005", "-o", s(&full)]),
        0
    );
    assert_eq!(
        dcnet(&["matrix", "--deltas", "0.002,0.005", "-o", s(&reduced)]),
        0
    );
    assert_eq!(
        dcnet(&["contract", "-m", s(&full), "-o", s(&contracted)]),
        0
    );
    let parse = |path: &Path| -> Vec<(String, String, f64)> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<_> = l.split(',').collect();
                (f[0].to_owned(), f[1].to_owned(), f[2].parse().unwrap())
            })
            .collect()
    };
    let (x, y) = (parse(&contracted), parse(&reduced));
    assert_eq!(x.len(), y.len());
    for (a, b) in x.iter().zip(&y) {
        assert_eq!((&a.0, &a.1), (&b.0, &b.1));
        assert!((a.2 - b.2).abs() < 1e-12);
    }
}

#[test]
fn empirical_matrix_from_transitions() {
    let dir = TempDir::new().unwrap();
    let ticks = simulated_ticks(&dir);
    let (trans, matrix) = (p(&dir, "t.csv"), p(&dir, "m.csv"));
    assert_eq!(
        dcnet(&[
            "transitions",
            "--deltas",
            "0.001,0.002",
            "-i",
            s(&ticks),
            "-o",
            s(&trans)
        ]),
        0
    );
    assert_eq!(
        dcnet(&[
            "matrix",
            "--deltas",
            "0.001,0.002",
            "--transitions",
            s(&trans),
            "-o",
            s(&matrix)
        ]),
        0
    );
    let text = fs::read_to_string(&matrix).unwrap();
    assert!(text.contains("0,1,1\n"));
    assert!(text.contains("3,2,1\n"));
}

#[test]
fn calibration_writes_a_usable_config() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "cal.toml");
    let out = p(&dir, "m.csv");
    assert_eq!(
        dcnet(&[
            "calibrate",
            "--objective",
            "max-h1",
            "--n",
            "2",
            "--delta1",
            "0.001",
            "-o",
            s(&cfg)
        ]),
        0
    );
    assert_eq!(dcnet(&["matrix", "--config", s(&cfg), "-o", s(&out)]), 0);
    let lines: Vec<_> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    // entropy of a two-way split peaks at a fair coin
    let p13: f64 = lines.iter().find(|l| l.starts_with("1,3,")).unwrap()[4..]
        .parse()
        .unwrap();
    assert!((p13 - 0.5).abs() < 1e-3);
}
