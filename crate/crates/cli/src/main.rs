//! Command-line front end: dataset generation, single and batch
//! hypothesis evaluation, device probing, and benchmark sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/runtime error.

mod bench;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dleval::device::{
    detect_devices, evaluate_batch, profile_devices, BatchOptions, DeviceConfig,
};
use dleval::hyp::evaluate;
use dleval::kb::{load_kb, KnowledgeBase};
use dleval::ops::ExecutionStrategy;
use dleval::synth::{
    gen_dataset, gen_hypothesis_batch, AssertionKind, BatchTemplate, DatasetRegime, DatasetSpec,
};

#[derive(Parser)]
#[command(name = "dleval", version, about = "DL hypothesis evaluation engine")]
struct Cli {
    /// Path to a knowledge base document.
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Device configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Compact device list, e.g. `vector,emulated:workers=4:slowdown=2`.
    #[arg(long, global = true)]
    devices: Option<String>,
    /// RNG seed for generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Execution strategy for single-hypothesis evaluation.
    #[arg(long, global = true, default_value = "vector")]
    strategy: ExecutionStrategy,
    /// Report format for bench output.
    #[arg(long, global = true, default_value = "csv")]
    format: ReportFormat,
    /// Split large batches into sub-batches of the configured chunk size.
    #[arg(long, global = true)]
    chunk_batches: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic knowledge base (and optionally a hypothesis batch).
    Gen(GenArgs),
    /// Evaluate one hypothesis or a batch file against a knowledge base.
    Eval(EvalArgs),
    /// Run benchmark sweeps and emit a report.
    Bench(bench::BenchArgs),
    /// Probe every configured device and print the scheduling table.
    Probe,
    /// List the configured devices without probing.
    Devices,
}

#[derive(Args)]
struct GenArgs {
    /// Assertion layout regime.
    #[arg(long, default_value = "unique-subject")]
    regime: DatasetRegime,
    /// Number of role (or concrete-role) assertions.
    #[arg(long, default_value_t = 0)]
    assertions: usize,
    /// Number of individuals; defaults to the smallest feasible count.
    #[arg(long)]
    individuals: Option<usize>,
    /// Number of concepts.
    #[arg(long, default_value_t = 5)]
    concepts: usize,
    /// Concept membership density in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Assertion table to populate: role, numeric, or string.
    #[arg(long, default_value = "role")]
    kind: AssertionKind,
    /// Output path for the knowledge base document.
    #[arg(long)]
    out: PathBuf,
    /// Also generate this many hypotheses.
    #[arg(long)]
    hypotheses: Option<usize>,
    /// Hypothesis batch template.
    #[arg(long, default_value = "conj5")]
    template: BatchTemplate,
    /// Output path for the hypothesis batch (one per line).
    #[arg(long)]
    hyp_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Hypothesis text (s-expression).
    hypothesis: Option<String>,
    /// File with one hypothesis per line; routed through the device layer.
    #[arg(long)]
    hyp_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(&cli, args),
        Command::Eval(args) => cmd_eval(&cli, args),
        Command::Bench(args) => bench::run(&cli, args),
        Command::Probe => cmd_probe(&cli),
        Command::Devices => cmd_devices(&cli),
    }
}

impl Cli {
    fn load_kb(&self) -> Result<KnowledgeBase> {
        let path = self.kb.as_ref().context("--kb <path> is required")?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        load_kb(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn device_config(&self) -> Result<DeviceConfig> {
        let mut config = match (&self.devices, &self.config) {
            (Some(list), _) => DeviceConfig::from_device_list(list)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                DeviceConfig::parse(&text)?
            }
            (None, None) => DeviceConfig::default(),
        };
        if self.chunk_batches {
            config.chunk_batches = true;
        }
        Ok(config)
    }
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> Result<()> {
    let individuals = args.individuals.unwrap_or_else(|| {
        DatasetSpec::minimal_individuals(args.regime, args.kind, args.assertions)
    });
    let spec = DatasetSpec {
        regime: args.regime,
        num_assertions: args.assertions,
        num_individuals: individuals,
        num_concepts: args.concepts,
        density: args.density,
        seed: cli.seed,
        assertion_kind: args.kind,
    };
    let document = gen_dataset(&spec)?;
    std::fs::write(&args.out, &document)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {}: {} individuals, {} concepts, {} assertions ({})",
        args.out.display(),
        spec.num_individuals,
        spec.num_concepts,
        spec.num_assertions,
        spec.regime.name(),
    );

    if let Some(n) = args.hypotheses {
        let hyp_out = args
            .hyp_out
            .as_ref()
            .context("--hyp-out <path> is required with --hypotheses")?;
        let kb = load_kb(&document).expect("generated documents always load");
        let batch = gen_hypothesis_batch(n, args.template, &kb, cli.seed)?;
        let mut text = String::new();
        for hyp in &batch {
            text.push_str(hyp);
            text.push('\n');
        }
        std::fs::write(hyp_out, text).with_context(|| format!("writing {}", hyp_out.display()))?;
        println!("wrote {}: {} hypotheses", hyp_out.display(), batch.len());
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let kb = cli.load_kb()?;
    match (&args.hypothesis, &args.hyp_file) {
        (Some(text), None) => {
            let start = Instant::now();
            let result = evaluate(text, &kb, cli.strategy)?;
            let elapsed = start.elapsed().as_micros();
            println!("pos={} neg={}", result.pos, result.neg);
            eprintln!("wall_time_us={elapsed}");
            Ok(())
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let texts: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with(';'))
                .collect();
            let config = cli.device_config()?;
            let devices = detect_devices(&config)?;
            let (_, ratios) = profile_devices(&devices, &kb)?;
            let options = BatchOptions::from_config(&config);
            let start = Instant::now();
            let results = evaluate_batch(&texts, &kb, &devices, &ratios, &options)?;
            let elapsed = start.elapsed().as_micros();
            let mut out = String::new();
            for result in &results {
                let _ = writeln!(out, "pos={} neg={}", result.pos, result.neg);
            }
            print!("{out}");
            eprintln!("wall_time_us={elapsed} hypotheses={}", results.len());
            Ok(())
        }
        (Some(_), Some(_)) => bail!("pass either a hypothesis or --hyp-file, not both"),
        (None, None) => bail!("pass a hypothesis or --hyp-file"),
    }
}

fn cmd_probe(cli: &Cli) -> Result<()> {
    let kb = cli.load_kb()?;
    let config = cli.device_config()?;
    let devices = detect_devices(&config)?;
    let (profiles, ratios) = profile_devices(&devices, &kb)?;
    println!("{:<4} {:<24} {:>8} {:>10} {:>12} {:>8}", "id", "device", "workers", "slowdown", "probe_us", "ratio");
    for (device, profile) in devices.iter().zip(&profiles) {
        println!(
            "{:<4} {:<24} {:>8} {:>10} {:>12} {:>8.3}",
            device.id(),
            device.label(),
            device.spec().workers,
            device.spec().slowdown,
            profile.probe_time_us,
            profile.ratio,
        );
    }
    let sum: f64 = ratios.ratios().iter().sum();
    println!("ratio sum = {sum:.3}");
    println!("fastest device: {}", devices[ratios.fastest()].label());
    Ok(())
}

fn cmd_devices(cli: &Cli) -> Result<()> {
    let config = cli.device_config()?;
    let devices = detect_devices(&config)?;
    println!("{:<4} {:<24} {:>8} {:>10}", "id", "device", "workers", "slowdown");
    for device in &devices {
        println!(
            "{:<4} {:<24} {:>8} {:>10}",
            device.id(),
            device.label(),
            device.spec().workers,
            device.spec().slowdown,
        );
    }
    println!(
        "small_batch_threshold={} chunk_batches={} chunk_size={}",
        config.small_batch_threshold, config.chunk_batches, config.chunk_size
    );
    Ok(())
}
