//! End-to-end command-line tests: every subcommand through temp files.
//! Exit codes: 0 success, 1 usage, 2 data error.

use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Mutex, MutexGuard};

use dleval::device::{compute_ratios, partition};
use dleval::kb::{load_kb, RoleId};

/// Tests that measure or depend on wall time inside the spawned binary
/// hold this lock so they never contend for the CPU with each other.
fn timing_lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn dleval(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dleval"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn assert_code(output: &Output, expected: i32) {
    let code = output.status.code().expect("no signal");
    assert_eq!(
        code,
        expected,
        "stdout:\n{}\nstderr:\n{}",
        stdout(output),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn gen_unique_subject_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen",
        "--regime",
        "unique-subject",
        "--assertions",
        "100000",
        "--out",
        "kb.txt",
        "--seed",
        "5",
    ];
    assert_code(&dleval(&args, dir.path()), 0);
    let first = std::fs::read_to_string(dir.path().join("kb.txt")).unwrap();

    let kb = load_kb(&first).unwrap();
    let asserts = kb.role_assertions(RoleId(0)).unwrap();
    assert_eq!(asserts.len(), 100000);
    let mut subjects: Vec<u32> = asserts.iter().map(|a| a.subj).collect();
    subjects.sort_unstable();
    subjects.dedup();
    assert_eq!(subjects.len(), 100000, "subjects must be distinct");

    // Same flags and seed produce identical bytes.
    assert_code(&dleval(&args, dir.path()), 0);
    let second = std::fs::read_to_string(dir.path().join("kb.txt")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn gen_accepts_an_empty_kb() {
    let dir = tempfile::tempdir().unwrap();
    let output = dleval(
        &["gen", "--individuals", "0", "--concepts", "0", "--out", "empty.txt"],
        dir.path(),
    );
    assert_code(&output, 0);
    let kb = load_kb(&std::fs::read_to_string(dir.path().join("empty.txt")).unwrap()).unwrap();
    assert_eq!(kb.num_individuals(), 0);
}

fn write_family_kb(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("family.txt");
    std::fs::write(
        &path,
        "#concepts\nPerson\nDoctor\nRich\n#roles\nhasChild\n#individuals\na\nb\nc\nd\ne\n\
         #concept-assertions\nPerson a\nPerson b\nDoctor c\nDoctor d\nRich c\n\
         #role-assertions\nhasChild a c\nhasChild a d\nhasChild b e\n\
         #examples\n+ a\n- b\n+ c\n",
    )
    .unwrap();
    path
}

#[test]
fn eval_single_hypothesis_matches_hand_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let kb = write_family_kb(dir.path());
    // SOME hasChild Doctor covers a (positive); b's child e is not a
    // doctor.
    let output = dleval(
        &["eval", "--kb", kb.to_str().unwrap(), "(SOME hasChild Doctor)"],
        dir.path(),
    );
    assert_code(&output, 0);
    assert_eq!(stdout(&output), "pos=1 neg=0\n");
}

#[test]
fn eval_strategies_agree() {
    let dir = tempfile::tempdir().unwrap();
    let kb = write_family_kb(dir.path());
    let text = "(AND Person (NOT Doctor))";
    let mut lines = Vec::new();
    for strategy in ["sequential", "scalar", "vector", "emulated"] {
        let output = dleval(
            &["eval", "--kb", kb.to_str().unwrap(), "--strategy", strategy, text],
            dir.path(),
        );
        assert_code(&output, 0);
        lines.push(stdout(&output));
    }
    assert!(lines.windows(2).all(|w| w[0] == w[1]), "{lines:?}");
}

#[test]
fn eval_batch_preserves_input_order() {
    let _serial = timing_lock();
    let dir = tempfile::tempdir().unwrap();
    let kb_path = dir.path().join("kb.txt");
    assert_code(
        &dleval(
            &["gen", "--assertions", "200", "--concepts", "8", "--out", "kb.txt", "--seed", "3",
              "--hypotheses", "1000", "--template", "conj5", "--hyp-out", "batch.txt"],
            dir.path(),
        ),
        0,
    );
    let batch_path = dir.path().join("batch.txt");
    let output = dleval(
        &[
            "eval",
            "--kb",
            kb_path.to_str().unwrap(),
            "--hyp-file",
            batch_path.to_str().unwrap(),
            "--devices",
            "vector:workers=2,emulated:workers=2",
        ],
        dir.path(),
    );
    assert_code(&output, 0);
    let batch_lines = stdout(&output);
    let results: Vec<&str> = batch_lines.lines().collect();
    assert_eq!(results.len(), 1000);

    // Spot-check positions against single evaluation.
    let texts: Vec<String> = std::fs::read_to_string(&batch_path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    for index in [0usize, 1, 499, 999] {
        let single = dleval(
            &["eval", "--kb", kb_path.to_str().unwrap(), &texts[index]],
            dir.path(),
        );
        assert_code(&single, 0);
        assert_eq!(stdout(&single).trim_end(), results[index], "hypothesis {index}");
    }
}

#[test]
fn probe_prints_ratios_that_sum_to_one() {
    let _serial = timing_lock();
    let dir = tempfile::tempdir().unwrap();
    assert_code(
        &dleval(
            &["gen", "--assertions", "0", "--individuals", "150000", "--concepts", "5", "--out", "kb.txt"],
            dir.path(),
        ),
        0,
    );
    let output = dleval(&["probe", "--kb", "kb.txt"], dir.path());
    assert_code(&output, 0);
    let text = stdout(&output);
    assert!(text.contains("ratio sum = 1.000"), "{text}");
    // Single default device gets the whole ratio.
    assert!(text.contains("1.000\n") || text.lines().any(|l| l.trim_end().ends_with("1.000")), "{text}");

    // Medians over repeated probe runs; a single probe of the debug
    // binary is at the mercy of the scheduler.
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for _ in 0..5 {
        let output = dleval(
            &[
                "probe",
                "--kb",
                "kb.txt",
                "--devices",
                "scalar:workers=1,scalar:workers=1:slowdown=2,scalar:workers=1:slowdown=4",
            ],
            dir.path(),
        );
        assert_code(&output, 0);
        let text = stdout(&output);
        assert!(text.contains("ratio sum = 1.000"), "{text}");
        let ratios: Vec<f64> = text
            .lines()
            .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
            .filter_map(|l| l.split_whitespace().last()?.parse().ok())
            .collect();
        assert_eq!(ratios.len(), 3, "{text}");
        for (device, ratio) in ratios.into_iter().enumerate() {
            samples[device].push(ratio);
        }
    }
    let expected = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
    for (device, want) in expected.into_iter().enumerate() {
        samples[device].sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = samples[device][samples[device].len() / 2];
        assert!(
            (got - want).abs() <= want * 0.25,
            "device {device}: median ratio {got:.3} vs expected {want:.3} ({:?})",
            samples[device]
        );
    }
}

#[test]
fn devices_lists_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("devices.conf");
    std::fs::write(&config, "device = vector\ndevice = emulated workers=4 slowdown=2\nsmall_batch_threshold = 5\n").unwrap();
    let output = dleval(&["devices", "--config", config.to_str().unwrap()], dir.path());
    assert_code(&output, 0);
    let text = stdout(&output);
    assert!(text.contains("vector#0"), "{text}");
    assert!(text.contains("emulated#1 (slowdown 2)"), "{text}");
    assert!(text.contains("small_batch_threshold=5"), "{text}");
}

#[test]
fn bench_conjunction_sweep_is_well_formed() {
    let _serial = timing_lock();
    let dir = tempfile::tempdir().unwrap();
    let output = dleval(
        &[
            "bench",
            "--suite",
            "conjunction",
            "--max-individuals",
            "100000",
            "--runs",
            "3",
            "--out",
            "report.csv",
        ],
        dir.path(),
    );
    assert_code(&output, 0);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "suite,workload,size,mode,time_us,speedup,detail");

    let mut baseline_times = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7, "{line}");
        if cols[1] == "conjunction-of-5-concepts" && cols[3] == "baseline" {
            baseline_times.push((cols[2].parse::<u64>().unwrap(), cols[4].parse::<u64>().unwrap()));
            // Baseline vs itself is exactly 1.0.
            assert_eq!(cols[5], "1.000", "{line}");
        }
    }
    assert_eq!(
        baseline_times.iter().map(|&(n, _)| n).collect::<Vec<_>>(),
        vec![10, 100, 1000, 10000, 100000],
        "one row per individuals count"
    );
    // Non-decreasing up to the 1us measurement quantum; entries below a
    // microsecond cannot be ordered more finely.
    assert!(
        baseline_times.windows(2).all(|w| w[0].1 <= w[1].1 + 1),
        "baseline times must be non-decreasing: {baseline_times:?}"
    );
}

#[test]
fn bench_batch_counts_match_partition() {
    let _serial = timing_lock();
    let dir = tempfile::tempdir().unwrap();
    let output = dleval(
        &[
            "bench",
            "--suite",
            "batch",
            "--max-individuals",
            "20000",
            "--max-batch",
            "100",
            "--devices",
            "scalar:workers=1,scalar:workers=1:slowdown=2",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_code(&output, 0);
    let csv = stdout(&output);
    let row = csv
        .lines()
        .find(|l| l.contains("all-devices") && l.split(',').nth(2) == Some("100"))
        .unwrap_or_else(|| panic!("missing all-devices row:\n{csv}"));
    let detail = row.split(',').nth(6).unwrap();
    let probe_part = detail.strip_prefix("probe_us=").unwrap().split(';').next().unwrap();
    let probe_times: Vec<u64> = probe_part.split('/').map(|t| t.parse().unwrap()).collect();
    let counts_part = detail.split("counts=").nth(1).unwrap();
    let reported: Vec<usize> = counts_part.split('/').map(|c| c.parse().unwrap()).collect();

    let ratios = compute_ratios(&probe_times).unwrap();
    let expected = partition(100, &ratios, 10).counts();
    assert_eq!(reported, expected, "report counts must match the partition arithmetic");
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: usage error.
    assert_code(&dleval(&["eval", "--no-such-flag"], dir.path()), 1);
    // Unknown subcommand: usage error.
    assert_code(&dleval(&["frobnicate"], dir.path()), 1);
    // Missing KB file: data error.
    assert_code(&dleval(&["eval", "--kb", "missing.txt", "Person"], dir.path()), 2);
    // Hypothesis parse error: data error.
    let kb = write_family_kb(dir.path());
    assert_code(
        &dleval(&["eval", "--kb", kb.to_str().unwrap(), "(AND Person"], dir.path()),
        2,
    );
    // Malformed KB document: data error.
    std::fs::write(dir.path().join("bad.txt"), "#concepts\nPerson\nPerson\n").unwrap();
    assert_code(&dleval(&["eval", "--kb", "bad.txt", "Person"], dir.path()), 2);
    // Infeasible generator spec: data error.
    assert_code(
        &dleval(
            &["gen", "--regime", "unique-subject", "--assertions", "10", "--individuals", "5", "--out", "x.txt"],
            dir.path(),
        ),
        2,
    );
    // Help is a successful exit.
    assert_code(&dleval(&["--help"], dir.path()), 0);
}
