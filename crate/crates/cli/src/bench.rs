//! Benchmark sweeps shaped like the evaluation tables: operator sweeps
//! over individuals/concepts/assertions in both assertion regimes, and
//! a batch-throughput sweep across the configured devices.
//!
//! Reports use a long row format with a fixed column order:
//! `suite,workload,size,mode,time_us,speedup,detail`. Speedups are
//! always computed as `baseline_time / mode_time` from the measured
//! values. Rows that would not fit in memory are emitted with an empty
//! time and a `skipped: insufficient memory` marker.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use dleval::device::{detect_devices, evaluate_batch, partition, profile_devices, BatchOptions};
use dleval::hyp::evaluate;
use dleval::kb::{load_kb, KnowledgeBase, RoleId};
use dleval::ops::{CardinalityKind, DlOps, ExecutionStrategy, NumericComparator};
use dleval::synth::{
    gen_dataset, gen_hypothesis_batch, AssertionKind, BatchTemplate, DatasetRegime, DatasetSpec,
    FIXED_NUMERIC_VALUE, FIXED_STRING_VALUE,
};
use dleval::{NumericRoleId, StringRoleId};

use crate::{Cli, ReportFormat};

#[derive(Args)]
pub struct BenchArgs {
    /// Which sweep to run.
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Report output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap for the individuals sweep.
    #[arg(long, default_value_t = 1_000_000)]
    max_individuals: usize,
    /// Cap for the assertions sweep.
    #[arg(long, default_value_t = 1_000_000)]
    max_assertions: usize,
    /// Cap for the batch-size sweep.
    #[arg(long, default_value_t = 1_000)]
    max_batch: usize,
    /// Timed runs averaged per operator row.
    #[arg(long, default_value_t = 5)]
    runs: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Suite {
    Conjunction,
    Disjunction,
    Restrictions,
    Batch,
    All,
}

#[derive(Serialize)]
struct BenchRow {
    suite: &'static str,
    workload: String,
    size: u64,
    mode: String,
    time_us: Option<u64>,
    speedup: Option<f64>,
    detail: String,
}

pub fn run(cli: &Cli, args: &BenchArgs) -> Result<()> {
    let mut rows = Vec::new();
    if matches!(args.suite, Suite::Conjunction | Suite::All) {
        boolean_suite(cli, args, true, &mut rows)?;
    }
    if matches!(args.suite, Suite::Disjunction | Suite::All) {
        boolean_suite(cli, args, false, &mut rows)?;
    }
    if matches!(args.suite, Suite::Restrictions | Suite::All) {
        restriction_suite(cli, args, &mut rows)?;
    }
    if matches!(args.suite, Suite::Batch | Suite::All) {
        batch_suite(cli, args, &mut rows)?;
    }
    emit(cli, args, &rows)
}

fn emit(cli: &Cli, args: &BenchArgs, rows: &[BenchRow]) -> Result<()> {
    let text = match cli.format {
        ReportFormat::Csv => {
            let mut csv = String::from("suite,workload,size,mode,time_us,speedup,detail\n");
            for row in rows {
                let time = row.time_us.map(|t| t.to_string()).unwrap_or_default();
                let speedup = row.speedup.map(|s| format!("{s:.3}")).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.suite, row.workload, row.size, row.mode, time, speedup, row.detail
                ));
            }
            csv
        }
        ReportFormat::Json => serde_json::to_string_pretty(rows)? + "\n",
    };
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

const SWEEP: [usize; 7] = [10, 100, 1_000, 10_000, 100_000, 1_000_000, 10_000_000];
const CONCEPT_SWEEP: [usize; 6] = [1, 2, 4, 8, 16, 32];
const BATCH_SWEEP: [usize; 9] = [1, 10, 100, 200, 400, 600, 800, 1_000, 10_000];

fn mem_available_bytes() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("MemAvailable:") {
            let kib: u64 = rest.trim().trim_end_matches(" kB").trim().parse().ok()?;
            return Some(kib * 1024);
        }
    }
    None
}

/// Rough resident cost of a generated KB: name maps dominate.
fn kb_estimate_bytes(individuals: usize, concepts: usize, assertions: usize) -> u64 {
    (individuals as u64) * (90 + concepts as u64) + (assertions as u64) * 40
}

fn fits_in_memory(estimate: u64) -> bool {
    match mem_available_bytes() {
        Some(available) => estimate <= available * 6 / 10,
        None => true,
    }
}

fn average_us(runs: u32, mut body: impl FnMut()) -> u64 {
    // Accumulate in nanoseconds; truncating each run separately would
    // lose up to 1us per run.
    let mut total = 0u128;
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        body();
        total += start.elapsed().as_nanos();
    }
    (total / runs.max(1) as u128 / 1_000) as u64
}

fn speedup(baseline: u64, time: u64) -> f64 {
    baseline.max(1) as f64 / time.max(1) as f64
}

fn boolean_kb(individuals: usize, concepts: usize, seed: u64) -> Result<KnowledgeBase> {
    let doc = gen_dataset(&DatasetSpec {
        regime: DatasetRegime::SingleSubject,
        num_assertions: 0,
        num_individuals: individuals,
        num_concepts: concepts,
        density: 0.5,
        seed,
        assertion_kind: AssertionKind::Role,
    })?;
    Ok(load_kb(&doc).expect("generated documents always load"))
}

const OPERATOR_MODES: [(&str, ExecutionStrategy); 4] = [
    ("baseline", ExecutionStrategy::SequentialScalar),
    ("scalar", ExecutionStrategy::ParallelScalar),
    ("vector", ExecutionStrategy::ParallelVector),
    ("emulated", ExecutionStrategy::EmulatedDeviceParallel),
];

fn boolean_suite(cli: &Cli, args: &BenchArgs, and: bool, rows: &mut Vec<BenchRow>) -> Result<()> {
    let suite = if and { "conjunction" } else { "disjunction" };
    let workload = format!("{suite}-of-5-concepts");

    for &individuals in SWEEP.iter().filter(|&&n| n <= args.max_individuals) {
        if !fits_in_memory(kb_estimate_bytes(individuals, 5, 0)) {
            rows.push(skipped_row(suite, &workload, individuals as u64));
            continue;
        }
        let kb = boolean_kb(individuals, 5, cli.seed)?;
        let ops = DlOps::new(&kb);
        let operand_rows: Vec<&[u8]> = (0..5).map(|c| kb.concepts().row(c)).collect();
        let negated = vec![false; 5];
        let mut baseline = 0;
        for (mode, strategy) in OPERATOR_MODES {
            let time = average_us(args.runs, || {
                let result = if and {
                    ops.conjunction(&operand_rows, &negated, strategy)
                } else {
                    ops.disjunction(&operand_rows, &negated, strategy)
                };
                result.expect("boolean ops accept every strategy");
            });
            if mode == "baseline" {
                baseline = time;
            }
            rows.push(BenchRow {
                suite,
                workload: workload.clone(),
                size: individuals as u64,
                mode: mode.to_owned(),
                time_us: Some(time),
                speedup: Some(speedup(baseline, time)),
                detail: String::new(),
            });
        }
    }

    // Operand-count sweep at a fixed individual count.
    let individuals = args.max_individuals.min(1_000_000);
    if individuals > 0 && fits_in_memory(kb_estimate_bytes(individuals, 32, 0)) {
        let kb = boolean_kb(individuals, 32, cli.seed)?;
        let ops = DlOps::new(&kb);
        let workload = format!("{suite}-concepts-on-{individuals}");
        for &concepts in &CONCEPT_SWEEP {
            let operand_rows: Vec<&[u8]> = (0..concepts).map(|c| kb.concepts().row(c as u32)).collect();
            let negated = vec![false; concepts];
            let mut baseline = 0;
            for (mode, strategy) in OPERATOR_MODES {
                let time = average_us(args.runs, || {
                    let result = if and {
                        ops.conjunction(&operand_rows, &negated, strategy)
                    } else {
                        ops.disjunction(&operand_rows, &negated, strategy)
                    };
                    result.expect("boolean ops accept every strategy");
                });
                if mode == "baseline" {
                    baseline = time;
                }
                rows.push(BenchRow {
                    suite,
                    workload: workload.clone(),
                    size: concepts as u64,
                    mode: mode.to_owned(),
                    time_us: Some(time),
                    speedup: Some(speedup(baseline, time)),
                    detail: String::new(),
                });
            }
        }
    }
    Ok(())
}

const RESTRICTION_MODES: [(&str, ExecutionStrategy); 3] = [
    ("baseline", ExecutionStrategy::SequentialScalar),
    ("scalar", ExecutionStrategy::ParallelScalar),
    ("emulated", ExecutionStrategy::EmulatedDeviceParallel),
];

fn restriction_suite(cli: &Cli, args: &BenchArgs, rows: &mut Vec<BenchRow>) -> Result<()> {
    let suite = "restrictions";
    for regime in [DatasetRegime::SingleSubject, DatasetRegime::UniqueSubject] {
        for kind in [AssertionKind::Role, AssertionKind::Numeric, AssertionKind::String] {
            for &assertions in SWEEP.iter().filter(|&&n| n <= args.max_assertions) {
                let individuals = DatasetSpec::minimal_individuals(regime, kind, assertions);
                let concepts = if kind == AssertionKind::Role { 1 } else { 0 };
                if !fits_in_memory(kb_estimate_bytes(individuals, concepts, assertions)) {
                    for op in kind_ops(kind) {
                        rows.push(skipped_row(suite, &format!("{op}-{}", regime.name()), assertions as u64));
                    }
                    continue;
                }
                let doc = gen_dataset(&DatasetSpec {
                    regime,
                    num_assertions: assertions,
                    num_individuals: individuals,
                    num_concepts: concepts,
                    density: 0.5,
                    seed: cli.seed,
                    assertion_kind: kind,
                })?;
                let kb = load_kb(&doc).expect("generated documents always load");
                let ops = DlOps::new(&kb);
                for op in kind_ops(kind) {
                    let workload = format!("{op}-{}", regime.name());
                    let mut baseline = 0;
                    for (mode, strategy) in RESTRICTION_MODES {
                        let time = average_us(args.runs, || run_restriction(&ops, &kb, op, strategy));
                        if mode == "baseline" {
                            baseline = time;
                        }
                        rows.push(BenchRow {
                            suite,
                            workload: workload.clone(),
                            size: assertions as u64,
                            mode: mode.to_owned(),
                            time_us: Some(time),
                            speedup: Some(speedup(baseline, time)),
                            detail: String::new(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn kind_ops(kind: AssertionKind) -> &'static [&'static str] {
    match kind {
        AssertionKind::Role => &["exists", "forall", "min-cardinality", "max-cardinality"],
        AssertionKind::Numeric => &["numeric-min"],
        AssertionKind::String => &["string-equal", "string-contain"],
    }
}

fn run_restriction(ops: &DlOps<'_>, kb: &KnowledgeBase, op: &str, strategy: ExecutionStrategy) {
    match op {
        "exists" => {
            ops.exists_role(RoleId(0), kb.concepts().row(0), false, strategy).unwrap();
        }
        "forall" => {
            ops.forall_role(RoleId(0), kb.concepts().row(0), false, strategy).unwrap();
        }
        "min-cardinality" => {
            ops.cardinality_role(RoleId(0), kb.concepts().row(0), CardinalityKind::Min, 1, false, strategy)
                .unwrap();
        }
        "max-cardinality" => {
            ops.cardinality_role(RoleId(0), kb.concepts().row(0), CardinalityKind::Max, 1, false, strategy)
                .unwrap();
        }
        "numeric-min" => {
            ops.exists_numeric(NumericRoleId(0), NumericComparator::Min, FIXED_NUMERIC_VALUE, strategy)
                .unwrap();
        }
        "string-equal" => {
            ops.string_equal(StringRoleId(0), FIXED_STRING_VALUE, strategy).unwrap();
        }
        "string-contain" => {
            ops.string_contain(StringRoleId(0), &FIXED_STRING_VALUE[..5], strategy).unwrap();
        }
        other => unreachable!("unknown restriction op {other}"),
    }
}

fn batch_suite(cli: &Cli, args: &BenchArgs, rows: &mut Vec<BenchRow>) -> Result<()> {
    let suite = "batch";
    let individuals = args.max_individuals.min(1_000_000);
    if !fits_in_memory(kb_estimate_bytes(individuals, 8, 0)) {
        rows.push(skipped_row(suite, "conj5-batch", 0));
        return Ok(());
    }
    let kb = boolean_kb(individuals, 8, cli.seed)?;

    let config = cli.device_config()?;
    let devices = detect_devices(&config)?;
    let (profiles, ratios) = profile_devices(&devices, &kb)?;
    let options = BatchOptions::from_config(&config);
    let probe_detail = profiles
        .iter()
        .map(|p| p.probe_time_us.to_string())
        .collect::<Vec<_>>()
        .join("/");

    for &size in BATCH_SWEEP.iter().filter(|&&n| n <= args.max_batch) {
        let workload = format!("conj5-batch-on-{individuals}");
        let batch = gen_hypothesis_batch(size, BatchTemplate::Conj5, &kb, cli.seed)?;

        // Single-thread baseline, one reading.
        let start = Instant::now();
        for text in &batch {
            evaluate(text, &kb, ExecutionStrategy::SequentialScalar)?;
        }
        let baseline = start.elapsed().as_micros() as u64;
        rows.push(BenchRow {
            suite,
            workload: workload.clone(),
            size: size as u64,
            mode: "baseline".to_owned(),
            time_us: Some(baseline),
            speedup: Some(1.0),
            detail: String::new(),
        });

        for device in &devices {
            let singleton = std::slice::from_ref(device);
            let single_ratio = dleval::device::compute_ratios(&[1]).expect("one device");
            let start = Instant::now();
            evaluate_batch(&batch, &kb, singleton, &single_ratio, &options)?;
            let time = start.elapsed().as_micros() as u64;
            rows.push(BenchRow {
                suite,
                workload: workload.clone(),
                size: size as u64,
                mode: device.label(),
                time_us: Some(time),
                speedup: Some(speedup(baseline, time)),
                detail: String::new(),
            });
        }

        if devices.len() > 1 {
            let assignment = partition(size, &ratios, options.small_batch_threshold);
            let counts = assignment
                .counts()
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("/");
            let start = Instant::now();
            evaluate_batch(&batch, &kb, &devices, &ratios, &options)?;
            let time = start.elapsed().as_micros() as u64;
            rows.push(BenchRow {
                suite,
                workload,
                size: size as u64,
                mode: "all-devices".to_owned(),
                time_us: Some(time),
                speedup: Some(speedup(baseline, time)),
                detail: format!("probe_us={probe_detail};counts={counts}"),
            });
        }
    }
    Ok(())
}

fn skipped_row(suite: &'static str, workload: &str, size: u64) -> BenchRow {
    BenchRow {
        suite,
        workload: workload.to_owned(),
        size,
        mode: "baseline".to_owned(),
        time_us: None,
        speedup: None,
        detail: "skipped: insufficient memory".to_owned(),
    }
}
