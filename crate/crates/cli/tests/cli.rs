//! End-to-end runs of the `casad` binary over temporary files.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use casad::frame::{read_annotations, read_log, CanFrame, CanId, FrameLog, ReadOptions};
use casad::ssa::read_scores_csv;
use tempfile::TempDir;

fn casad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casad"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = casad(dir, args);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "{args:?} failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    casad(dir, args).status.code().expect("exit code")
}

fn read_frames(path: &Path) -> FrameLog {
    read_log(
        BufReader::new(fs::File::open(path).unwrap()),
        "test",
        ReadOptions::default(),
    )
    .unwrap()
    .log
}

/// Handmade log: `frames` frames of eight bytes, one per millisecond, payload from `byte`.
fn write_log(path: &Path, frames: usize, byte: impl Fn(usize) -> u8) {
    let id = CanId::standard(0x10).unwrap();
    let text: String = (0..frames)
        .map(|k| {
            let payload: Vec<u8> = (0..8).map(|j| byte(8 * k + j)).collect();
            let frame = CanFrame::new(k as u64 * 1000, id, payload, "can0").unwrap();
            casad::frame::serialize_frame(&frame) + "\n"
        })
        .collect();
    fs::write(path, text).unwrap();
}

fn line_with<'a>(stdout: &'a str, needle: &str) -> &'a str {
    stdout
        .lines()
        .find(|l| l.contains(needle))
        .unwrap_or_else(|| panic!("no `{needle}` in:\n{stdout}"))
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn simulate_default_prototype() {
    let ws = Workspace::new();
    let stdout = ok(ws.path(), &["simulate", "--out", "base.log"]);
    assert!(stdout.starts_with("casad "));
    assert!(line_with(&stdout, "casad").contains("seed"));
    let log = read_frames(&ws.file("base.log"));
    let ones = log.frames().iter().filter(|f| f.id.raw() == 0x01).count();
    assert_eq!(ones, 4000);
    assert!(line_with(&stdout, "payload bytes").contains("67200"));
    assert_eq!(
        fs::read_to_string(ws.file("base.annotations.csv")).unwrap().trim(),
        "label,start_ts,end_ts"
    );
}

#[test]
fn simulate_annotates_the_attack() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &["simulate", "--attack", "conquest", "--start", "20", "--out", "c.log"],
    );
    let text = fs::read_to_string(ws.file("c.annotations.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("conquest,20.0"), "{row}");
    let ann = read_annotations(text.as_bytes()).unwrap();
    assert_eq!(ann[0].start_us, 20_000_000);
}

#[test]
fn same_seed_same_files() {
    let ws = Workspace::new();
    let run = |name: &str, seed: &str| {
        ok(
            ws.path(),
            &[
                "simulate",
                "--attack",
                "conquest",
                "--attack-duration",
                "5",
                "--seed",
                seed,
                "--out",
                name,
            ],
        );
        fs::read(ws.file(name)).unwrap()
    };
    let a = run("a.log", "7");
    assert_eq!(a, run("b.log", "7"));
    // Conquest redraws from the observed pool, so the seed shows in the bytes.
    assert_ne!(a, run("c.log", "8"));
}

#[test]
fn train_prints_the_model_and_is_reproducible() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--out", "base.log"]);
    let args = [
        "train", "--log", "base.log", "--N", "40000", "--L", "500", "--energy", "0.90", "--out",
    ];
    let stdout = ok(ws.path(), &[&args[..], &["m1.bin"]].concat());
    let line = line_with(&stdout, "leading eigenvalue share");
    let r: usize = line
        .split("r = ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((1..500).contains(&r), "{line}");
    assert!(line.contains("L = 500") && line.contains("training score max"));
    ok(ws.path(), &[&args[..], &["m2.bin"]].concat());
    assert_eq!(
        fs::read(ws.file("m1.bin")).unwrap(),
        fs::read(ws.file("m2.bin")).unwrap()
    );
}

#[test]
fn train_rejects_rank_not_below_lag() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--duration", "2", "--out", "s.log"]);
    assert_eq!(
        code(
            ws.path(),
            &["train", "--log", "s.log", "--N", "100", "--L", "10", "--r", "10", "--out", "m.bin"]
        ),
        1
    );
    assert!(!ws.file("m.bin").exists());
}

#[test]
fn attack_free_run_raises_no_alarms() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--out", "base.log"]);
    // 40% training, 40% validation, detection on the last 20%.
    ok(
        ws.path(),
        &[
            "train", "--log", "base.log", "--N", "26880", "--L", "400", "--out", "m.bin",
        ],
    );
    let stdout = ok(
        ws.path(),
        &[
            "detect",
            "--model",
            "m.bin",
            "--log",
            "base.log",
            "--validate",
            "--validation-len",
            "26880",
            "--after-training",
            "--out",
            "s.csv",
        ],
    );
    assert!(stdout.contains(": 0 alarms"), "{stdout}");
    assert!(stdout.contains("no alarms"));
    let (scores, alarms) = read_scores_csv(fs::File::open(ws.file("s.csv")).unwrap()).unwrap();
    assert_eq!(scores.start_index, 53760);
    assert_eq!(scores.end_index(), 67200);
    assert!(alarms.iter().all(|a| !a));
    let report = ok(
        ws.path(),
        &["report", "--scores", "s.csv", "--log", "base.log", "--L", "400"],
    );
    assert!(report.contains("false alarms: 0"));
}

#[test]
fn conquest_alarm_falls_inside_the_window() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "simulate",
            "--attack",
            "conquest",
            "--attack-duration",
            "10",
            "--out",
            "c.log",
        ],
    );
    ok(
        ws.path(),
        &["train", "--log", "c.log", "--N", "6720", "--L", "400", "--out", "m.bin"],
    );
    let stdout = ok(
        ws.path(),
        &[
            "detect",
            "--model",
            "m.bin",
            "--log",
            "c.log",
            "--validate",
            "--out",
            "s.csv",
        ],
    );
    let first: usize = line_with(&stdout, "first alarm at byte")
        .split("byte ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let log = read_frames(&ws.file("c.log"));
    let series = casad::frame::extract_byte_series(&log, None).unwrap();
    let window = series.byte_range(20_000_000, 30_000_000);
    assert!(window.contains(&first), "{first} outside {window:?}");
    assert!(first - window.start <= 800);

    let report = ok(
        ws.path(),
        &["report", "--scores", "s.csv", "--log", "c.log", "--L", "400"],
    );
    let line = line_with(&report, "attack conquest");
    assert!(line.contains(&format!("first alarm at byte {first}")), "{line}");
    assert!(
        line.contains(&format!("latency {} bytes", first - window.start)),
        "{line}"
    );
}

#[test]
fn zero_threshold_alarms_on_the_first_score() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--duration", "5", "--out", "s.log"]);
    ok(
        ws.path(),
        &["train", "--log", "s.log", "--N", "2000", "--L", "40", "--out", "m.bin"],
    );
    let stdout = ok(
        ws.path(),
        &[
            "detect",
            "--model",
            "m.bin",
            "--log",
            "s.log",
            "--threshold",
            "0",
            "--out",
            "s.csv",
        ],
    );
    assert!(stdout.contains("first alarm at byte 39,"), "{stdout}");
}

#[test]
fn log_shorter_than_the_lag_is_a_data_error() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--duration", "5", "--out", "s.log"]);
    ok(
        ws.path(),
        &["train", "--log", "s.log", "--N", "2000", "--L", "40", "--out", "m.bin"],
    );
    write_log(&ws.file("short.log"), 4, |i| i as u8);
    let out = casad(
        ws.path(),
        &["detect", "--model", "m.bin", "--log", "short.log", "--out", "s.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("need 40 bytes"));
}

#[test]
fn tune_reproduces_the_repeated_masquerade_protocol() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "simulate",
            "--attack",
            "masquerade",
            "--repeat",
            "10",
            "--attack-duration",
            "20",
            "--spacing",
            "30",
            "--duration",
            "325",
            "--out",
            "m.log",
        ],
    );
    let stdout = ok(
        ws.path(),
        &[
            "tune",
            "--log",
            "m.log",
            "--N",
            "6720",
            "--L",
            "250,100",
            "--out-dir",
            ".",
        ],
    );
    assert!(stdout.contains("L =  100") && stdout.contains("L =  250"));

    let curves = fs::read_to_string(ws.file("curves.csv")).unwrap();
    let mut rows = curves.lines();
    assert_eq!(rows.next(), Some("L,r,theta,delta"));
    let parsed: Vec<(usize, f64, f64)> = rows
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    for lag in [100, 250] {
        let curve: Vec<_> = parsed.iter().filter(|r| r.0 == lag).collect();
        assert_eq!(curve.len(), 1000);
        assert!(curve.windows(2).all(|w| w[0].1 < w[1].1 && w[0].2 <= w[1].2));
    }
    let result = casad::tuner::TuneResult::from_toml(&fs::read_to_string(ws.file("result.toml")).unwrap()).unwrap();
    assert_eq!(result.lag, 250);
    assert!(result.delay <= 0.05);
    assert!(parsed.iter().any(|r| r.0 == 250 && r.1 == result.threshold));

    let detect = ok(
        ws.path(),
        &[
            "detect",
            "--model",
            "model.bin",
            "--log",
            "m.log",
            "--tuned",
            "result.toml",
            "--after-training",
            "--out",
            "s.csv",
        ],
    );
    assert!(detect.contains("first alarm"));
    let report = ok(
        ws.path(),
        &[
            "report",
            "--scores",
            "s.csv",
            "--log",
            "m.log",
            "--tuned",
            "result.toml",
        ],
    );
    assert_eq!(
        report.lines().filter(|l| l.starts_with("attack masquerade")).count(),
        10
    );
    assert!(!report.contains("not detected"));
}

#[test]
fn tune_with_one_lag_selects_it() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "simulate",
            "--attack",
            "suspension",
            "--attack-duration",
            "10",
            "--duration",
            "40",
            "--out",
            "s.log",
        ],
    );
    let stdout = ok(
        ws.path(),
        &[
            "tune",
            "--log",
            "s.log",
            "--N",
            "6720",
            "--L",
            "100",
            "--thresholds",
            "50",
            "--out-dir",
            ".",
        ],
    );
    assert!(stdout.contains("chosen L* = 100"));
    assert_eq!(fs::read_to_string(ws.file("curves.csv")).unwrap().lines().count(), 51);
}

#[test]
fn tune_on_constant_traffic_is_a_numerical_failure() {
    let ws = Workspace::new();
    write_log(&ws.file("flat.log"), 2000, |_| 0x42);
    fs::write(
        ws.file("flat.annotations.csv"),
        "label,start_ts,end_ts\nx,1.500000,1.800000\n",
    )
    .unwrap();
    assert_eq!(
        code(
            ws.path(),
            &[
                "tune",
                "--log",
                "flat.log",
                "--N",
                "4000",
                "--L",
                "20",
                "--out-dir",
                "."
            ]
        ),
        3
    );
}

#[test]
fn tune_refuses_attacks_inside_the_training_prefix() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "simulate",
            "--attack",
            "suspension",
            "--start",
            "1",
            "--attack-duration",
            "5",
            "--out",
            "s.log",
        ],
    );
    assert_eq!(
        code(
            ws.path(),
            &["tune", "--log", "s.log", "--N", "6720", "--L", "100", "--out-dir", "."]
        ),
        2
    );
}

#[test]
fn report_latency_in_bytes_and_seconds() {
    let ws = Workspace::new();
    // 2000 frames of 8 bytes, 1 ms apart: byte i belongs to the frame at i/8 ms.
    write_log(&ws.file("h.log"), 2000, |i| (i % 251) as u8);
    fs::write(
        ws.file("h.annotations.csv"),
        "label,start_ts,end_ts\nfab,1.500000,1.600000\n",
    )
    .unwrap();
    let mut csv = String::from("byte_index,score,alarm\n");
    for i in 9..16000 {
        csv.push_str(&format!("{i},1.0,{}\n", u8::from(i == 12345 || i == 300)));
    }
    fs::write(ws.file("s.csv"), csv).unwrap();
    let report = ok(
        ws.path(),
        &[
            "report",
            "--scores",
            "s.csv",
            "--log",
            "h.log",
            "--L",
            "10",
            "--plot-out",
            "p.csv",
            "--plot-points",
            "100",
        ],
    );
    let line = line_with(&report, "attack fab");
    assert!(line.contains("bytes 12000..12809"), "{line}");
    assert!(line.contains("first alarm at byte 12345, latency 345 bytes"), "{line}");
    // Frame 1543 minus frame 1500, from the index map.
    assert!(line.contains("0.043000 s"), "{line}");
    assert!(report.contains("false alarms: 1"));
    let plot = fs::read_to_string(ws.file("p.csv")).unwrap();
    assert_eq!(plot.lines().count(), 101);
    assert_eq!(plot.lines().next(), Some("byte_index,time_s,score,alarm,in_attack"));
}

#[test]
fn report_without_attacks_or_alarms() {
    let ws = Workspace::new();
    write_log(&ws.file("h.log"), 100, |i| i as u8);
    let csv: String = std::iter::once("byte_index,score,alarm\n".to_string())
        .chain((4..800).map(|i| format!("{i},0.5,0\n")))
        .collect();
    fs::write(ws.file("s.csv"), csv).unwrap();
    let report = ok(
        ws.path(),
        &["report", "--scores", "s.csv", "--log", "h.log", "--L", "5"],
    );
    assert!(report.contains("false alarms: 0"));
    // Indices past the log's bytes are rejected.
    write_log(&ws.file("tiny.log"), 10, |i| i as u8);
    assert_eq!(
        code(
            ws.path(),
            &["report", "--scores", "s.csv", "--log", "tiny.log", "--L", "5"]
        ),
        2
    );
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--duration", "5", "--out", "s.log"]);
    fs::write(
        ws.file("casad.toml"),
        "version = 1\n[train]\nlog = \"s.log\"\nN = 2000\nL = 40\nr = 3\nout = \"m.bin\"\n",
    )
    .unwrap();
    let stdout = ok(ws.path(), &["--config", "casad.toml", "train"]);
    assert!(stdout.contains("L = 40, r = 3"), "{stdout}");
    let stdout = ok(
        ws.path(),
        &["train", "--config", "casad.toml", "--L", "20", "--energy", "0.5"],
    );
    assert!(stdout.contains("L = 20, r = "), "{stdout}");
    assert!(!stdout.contains("r = 3,"), "{stdout}");

    fs::write(ws.file("typo.toml"), "version = 1\n[train]\nlagg = 3\n").unwrap();
    let out = casad(ws.path(), &["--config", "typo.toml", "train"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lagg"));
}

#[test]
fn config_seed_reaches_the_simulator() {
    let ws = Workspace::new();
    fs::write(
        ws.file("casad.toml"),
        "version = 1\nseed = 99\n[simulate]\nduration = 2.0\nout = \"s.log\"\n",
    )
    .unwrap();
    let stdout = ok(ws.path(), &["--config", "casad.toml", "simulate"]);
    assert!(stdout.lines().next().unwrap().contains("seed 99"), "{stdout}");
    let stdout = ok(ws.path(), &["--config", "casad.toml", "simulate", "--seed", "5"]);
    assert!(stdout.lines().next().unwrap().contains("seed 5"), "{stdout}");
}

#[test]
fn skip_bad_lines_and_log_level() {
    let ws = Workspace::new();
    ok(ws.path(), &["simulate", "--duration", "5", "--out", "s.log"]);
    let mut text = fs::read_to_string(ws.file("s.log")).unwrap();
    text.insert_str(0, "(0.000000) can0 XYZ#00\n");
    fs::write(ws.file("s.log"), text).unwrap();
    let args = ["train", "--log", "s.log", "--N", "2000", "--L", "40", "--out", "m.bin"];
    assert_eq!(code(ws.path(), &args), 2);
    let skip = [&args[..], &["--skip-bad-lines"]].concat();
    let out = casad(ws.path(), &skip);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("skipped 1 malformed lines"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s.log:1"));
    let quiet = Command::new(env!("CARGO_BIN_EXE_casad"))
        .current_dir(ws.path())
        .env("CASAD_LOG_LEVEL", "error")
        .args(&skip)
        .output()
        .unwrap();
    assert!(quiet.status.success());
    assert!(quiet.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_one() {
    let ws = Workspace::new();
    assert_eq!(code(ws.path(), &["frobnicate"]), 1);
    assert_eq!(code(ws.path(), &["train", "--N", "x"]), 1);
    assert_eq!(
        code(
            ws.path(),
            &[
                "train",
                "--log",
                "missing.log",
                "--N",
                "10",
                "--L",
                "2",
                "--out",
                "m.bin"
            ]
        ),
        1
    );
    assert_eq!(code(ws.path(), &["simulate"]), 1);
    assert_eq!(code(ws.path(), &["simulate", "--start", "3", "--out", "x.log"]), 1);
    assert_eq!(code(ws.path(), &["--help"]), 0);
    assert_eq!(code(ws.path(), &["--version"]), 0);
}
