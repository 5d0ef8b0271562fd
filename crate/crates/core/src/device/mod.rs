//! Heterogeneous evaluation backends and static batch scheduling.
//!
//! Each device wraps one execution strategy and a dedicated worker
//! pool, sharing a read-only view of the knowledge base. At
//! initialization every device evaluates the same probing hypothesis (a
//! conjunction of up to five concepts over the full knowledge base);
//! the measured times yield static inverse-time ratios that decide how
//! every later batch is split. Batch evaluation generates all plans in
//! parallel, dispatches the partitions to all devices concurrently, and
//! blocks until every device has finished.

mod config;

pub use config::{BackendKind, DeviceConfig, DeviceSpec};

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::hyp::{
    count_coverage, execute_plan, plan, CoverageResult, EvaluationPlan, Hypothesis, HypothesisError,
};
use crate::kb::KnowledgeBase;
use crate::ops::ExecutionStrategy;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("no evaluation devices configured")]
    EmptyDeviceList,
    #[error("probe times must be positive")]
    ZeroProbeTime,
    #[error("probing requires at least one declared concept")]
    ProbeInfeasible,
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("failed to build a worker pool: {0}")]
    Pool(String),
    #[error("hypothesis {index}: {source}")]
    ParseAt {
        index: usize,
        source: HypothesisError,
    },
    #[error("device {device}: {msg}")]
    DeviceFailed { device: String, msg: String },
}

/// One evaluation backend with its own worker pool.
///
/// Every device reads the same knowledge base; results rows and
/// counters are private to each evaluation call, so devices never
/// coordinate beyond the final fork-join.
pub struct Device {
    id: usize,
    spec: DeviceSpec,
    pool: rayon::ThreadPool,
}

impl Device {
    fn build(id: usize, spec: DeviceSpec) -> Result<Self, DeviceError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| DeviceError::Pool(e.to_string()))?;
        Ok(Self { id, spec, pool })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn kind(&self) -> BackendKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &DeviceSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        let mut label = format!("{}#{}", self.spec.kind.name(), self.id);
        if self.spec.slowdown > 1 {
            label.push_str(&format!(" (slowdown {})", self.spec.slowdown));
        }
        label
    }

    pub fn strategy(&self) -> ExecutionStrategy {
        match self.spec.kind {
            BackendKind::Scalar => ExecutionStrategy::ParallelScalar,
            BackendKind::Vector => ExecutionStrategy::ParallelVector,
            BackendKind::Emulated => ExecutionStrategy::EmulatedDeviceParallel,
        }
    }

    /// Evaluates planned hypotheses in order, writing one coverage
    /// result per job. The artificial slowdown factor repeats the whole
    /// evaluation, acting as a deterministic busy-multiplier.
    pub fn evaluate_batch_on_device(
        &self,
        jobs: &[(Hypothesis, EvaluationPlan)],
        kb: &KnowledgeBase,
        out: &mut [CoverageResult],
    ) -> Result<(), DeviceError> {
        assert_eq!(jobs.len(), out.len());
        let strategy = self.strategy();
        self.pool.install(|| {
            for ((hyp, plan), slot) in jobs.iter().zip(out.iter_mut()) {
                let mut result = CoverageResult::default();
                for _ in 0..self.spec.slowdown.max(1) {
                    let row = execute_plan(plan, hyp, kb, strategy).map_err(|e| {
                        DeviceError::DeviceFailed { device: self.label(), msg: e.to_string() }
                    })?;
                    result = count_coverage(&row, kb, strategy).map_err(|e| {
                        DeviceError::DeviceFailed { device: self.label(), msg: e.to_string() }
                    })?;
                }
                *slot = result;
            }
            Ok(())
        })
    }
}

impl std::fmt::Debug for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Device")
            .field("id", &self.id)
            .field("spec", &self.spec)
            .finish()
    }
}

/// Builds the configured devices. Errors when the configuration yields
/// no devices at all.
pub fn detect_devices(config: &DeviceConfig) -> Result<Vec<Device>, DeviceError> {
    if config.devices.is_empty() {
        return Err(DeviceError::EmptyDeviceList);
    }
    config
        .devices
        .iter()
        .enumerate()
        .map(|(id, spec)| Device::build(id, spec.clone()))
        .collect()
}

/// The probing hypothesis: a conjunction of the first five concepts
/// (or all of them when fewer are declared).
pub fn probe_hypothesis(kb: &KnowledgeBase) -> Result<String, DeviceError> {
    let available = kb.num_concepts();
    if available == 0 {
        return Err(DeviceError::ProbeInfeasible);
    }
    let names: Vec<&str> = (0..available.min(5))
        .map(|c| kb.names().concepts.name(c as u32).unwrap())
        .collect();
    Ok(format!("(AND {})", names.join(" ")))
}

/// Measures one device's wall time for the probing hypothesis over the
/// full knowledge base: median of 3 runs after 1 warm-up, in
/// microseconds (at least 1).
pub fn probe(device: &Device, kb: &KnowledgeBase) -> Result<u64, DeviceError> {
    let text = probe_hypothesis(kb)?;
    let hyp = Hypothesis::parse(&text, kb)
        .map_err(|e| DeviceError::DeviceFailed { device: device.label(), msg: e.to_string() })?;
    let job = vec![(hyp.clone(), plan(&hyp))];
    let mut out = vec![CoverageResult::default()];

    device.evaluate_batch_on_device(&job, kb, &mut out)?; // warm-up
    let mut times = [0u64; 3];
    for t in &mut times {
        let start = Instant::now();
        device.evaluate_batch_on_device(&job, kb, &mut out)?;
        *t = start.elapsed().as_micros() as u64;
    }
    times.sort_unstable();
    Ok(times[1].max(1))
}

/// One probed device: measured time and derived workload fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceProfile {
    pub device_id: usize,
    pub probe_time_us: u64,
    pub ratio: f64,
}

/// Inverse-probe-time workload fractions; they sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleRatios {
    ratios: Vec<f64>,
    fastest: usize,
}

impl ScheduleRatios {
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Index of the device with the smallest probe time.
    pub fn fastest(&self) -> usize {
        self.fastest
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

/// `ratio_d = (1/t_d) / Σ_e (1/t_e)`, computed exactly over integer
/// microseconds when the products fit 128 bits.
pub fn compute_ratios(probe_times_us: &[u64]) -> Result<ScheduleRatios, DeviceError> {
    if probe_times_us.is_empty() {
        return Err(DeviceError::EmptyDeviceList);
    }
    if probe_times_us.contains(&0) {
        return Err(DeviceError::ZeroProbeTime);
    }
    let fastest = probe_times_us
        .iter()
        .enumerate()
        .min_by_key(|(_, &t)| t)
        .map(|(i, _)| i)
        .unwrap();

    // Product of the other times, per device: 1/t_d over a common
    // denominator without intermediate rounding.
    let exact: Option<Vec<u128>> = probe_times_us
        .iter()
        .enumerate()
        .map(|(d, _)| {
            probe_times_us
                .iter()
                .enumerate()
                .filter(|(e, _)| *e != d)
                .try_fold(1u128, |acc, (_, &t)| acc.checked_mul(t as u128))
        })
        .collect();
    let ratios = match exact.and_then(|nums| {
        nums.iter()
            .try_fold(0u128, |acc, &n| acc.checked_add(n))
            .map(|denom| (nums, denom))
    }) {
        Some((nums, denom)) => nums.iter().map(|&n| n as f64 / denom as f64).collect(),
        None => {
            let weights: Vec<f64> = probe_times_us.iter().map(|&t| 1.0 / t as f64).collect();
            let total: f64 = weights.iter().sum();
            weights.iter().map(|w| w / total).collect()
        }
    };
    Ok(ScheduleRatios { ratios, fastest })
}

/// Per-device contiguous `(start, count)` ranges into a batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchAssignment {
    ranges: Vec<(usize, usize)>,
}

impl BatchAssignment {
    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn counts(&self) -> Vec<usize> {
        self.ranges.iter().map(|&(_, count)| count).collect()
    }
}

/// Largest-remainder apportionment of the batch by ratio, leftovers
/// going to the largest remainders (fastest device first on ties).
/// Batches of at most `small_batch_threshold` hypotheses all go to the
/// fastest device.
pub fn partition(batch_size: usize, ratios: &ScheduleRatios, small_batch_threshold: usize) -> BatchAssignment {
    let n = ratios.len();
    let mut counts = vec![0usize; n];
    if batch_size > 0 {
        if batch_size <= small_batch_threshold {
            counts[ratios.fastest()] = batch_size;
        } else {
            let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(n);
            let mut assigned = 0usize;
            for (d, &ratio) in ratios.ratios().iter().enumerate() {
                let quota = ratio * batch_size as f64;
                let floor = quota.floor() as usize;
                counts[d] = floor;
                assigned += floor;
                remainders.push((d, quota - floor as f64));
            }
            let fastest = ratios.fastest();
            remainders.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then_with(|| (b.0 == fastest).cmp(&(a.0 == fastest)))
                    .then_with(|| a.0.cmp(&b.0))
            });
            let mut leftover = batch_size - assigned;
            let mut i = 0;
            while leftover > 0 {
                counts[remainders[i % n].0] += 1;
                leftover -= 1;
                i += 1;
            }
        }
    }
    let mut ranges = Vec::with_capacity(n);
    let mut start = 0usize;
    for &count in &counts {
        ranges.push((start, count));
        start += count;
    }
    BatchAssignment { ranges }
}

/// Batch evaluation knobs; `chunk_size` bounds how many hypotheses one
/// dispatch handles when chunking is enabled.
#[derive(Clone, Debug)]
pub struct BatchOptions {
    pub small_batch_threshold: usize,
    pub chunk_batches: bool,
    pub chunk_size: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { small_batch_threshold: 10, chunk_batches: false, chunk_size: 1000 }
    }
}

impl BatchOptions {
    pub fn from_config(config: &DeviceConfig) -> Self {
        Self {
            small_batch_threshold: config.small_batch_threshold,
            chunk_batches: config.chunk_batches,
            chunk_size: config.chunk_size,
        }
    }
}

/// Evaluates a batch of hypothesis texts across all devices.
///
/// Plans are generated in parallel up front; a parse failure aborts the
/// whole batch with the offending index. The partitions then run on all
/// devices concurrently and the call blocks until every device is done.
/// The output order matches the input order.
pub fn evaluate_batch<S: AsRef<str> + Sync>(
    texts: &[S],
    kb: &KnowledgeBase,
    devices: &[Device],
    ratios: &ScheduleRatios,
    options: &BatchOptions,
) -> Result<Vec<CoverageResult>, DeviceError> {
    if devices.is_empty() {
        return Err(DeviceError::EmptyDeviceList);
    }
    assert_eq!(devices.len(), ratios.len(), "one ratio per device");

    let jobs: Vec<(Hypothesis, EvaluationPlan)> = texts
        .par_iter()
        .enumerate()
        .map(|(index, text)| {
            Hypothesis::parse(text.as_ref(), kb)
                .map(|hyp| {
                    let plan = plan(&hyp);
                    (hyp, plan)
                })
                .map_err(|source| DeviceError::ParseAt { index, source })
        })
        .collect::<Result<_, _>>()?;

    let mut results = vec![CoverageResult::default(); jobs.len()];
    let step = if options.chunk_batches { options.chunk_size.max(1) } else { jobs.len().max(1) };
    let mut offset = 0;
    while offset < jobs.len() {
        let end = (offset + step).min(jobs.len());
        dispatch(&jobs[offset..end], kb, devices, ratios, options, &mut results[offset..end])?;
        offset = end;
    }
    Ok(results)
}

/// Fork-join dispatch of one (sub-)batch according to the static ratios.
fn dispatch(
    jobs: &[(Hypothesis, EvaluationPlan)],
    kb: &KnowledgeBase,
    devices: &[Device],
    ratios: &ScheduleRatios,
    options: &BatchOptions,
    results: &mut [CoverageResult],
) -> Result<(), DeviceError> {
    let assignment = partition(jobs.len(), ratios, options.small_batch_threshold);

    // Slice the output into the disjoint per-device ranges.
    let mut slices: Vec<Option<&mut [CoverageResult]>> = Vec::with_capacity(devices.len());
    let mut rest = results;
    let mut consumed = 0;
    for &(start, count) in assignment.ranges() {
        debug_assert_eq!(start, consumed);
        let (head, tail) = rest.split_at_mut(count);
        slices.push(Some(head));
        rest = tail;
        consumed += count;
    }

    let errors = std::sync::Mutex::new(Vec::<DeviceError>::new());
    std::thread::scope(|scope| {
        for (device, (&(start, count), slice)) in
            devices.iter().zip(assignment.ranges().iter().zip(slices.iter_mut()))
        {
            if count == 0 {
                continue;
            }
            let out = slice.take().unwrap();
            let errors = &errors;
            scope.spawn(move || {
                if let Err(e) = device.evaluate_batch_on_device(&jobs[start..start + count], kb, out) {
                    errors.lock().unwrap().push(e);
                }
            });
        }
    });
    match errors.into_inner().unwrap().into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Probes every device and derives the schedule: the one-time
/// initialization step before batch evaluation.
pub fn profile_devices(
    devices: &[Device],
    kb: &KnowledgeBase,
) -> Result<(Vec<DeviceProfile>, ScheduleRatios), DeviceError> {
    if devices.is_empty() {
        return Err(DeviceError::EmptyDeviceList);
    }
    let times: Vec<u64> = devices
        .iter()
        .map(|device| probe(device, kb))
        .collect::<Result<_, _>>()?;
    let ratios = compute_ratios(&times)?;
    let profiles = devices
        .iter()
        .zip(&times)
        .zip(ratios.ratios())
        .map(|((device, &probe_time_us), &ratio)| DeviceProfile {
            device_id: device.id(),
            probe_time_us,
            ratio,
        })
        .collect();
    Ok((profiles, ratios))
}
