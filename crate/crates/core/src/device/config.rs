//! Device configuration: which backends run, with how many workers,
//! and the batch scheduling knobs.
//!
//! File format is line-oriented `key = value`; `;` or `#` start a
//! comment line. The `device` key may repeat, one backend per line:
//!
//! ```text
//! device = vector
//! device = emulated workers=4 slowdown=2
//! small_batch_threshold = 10
//! chunk_batches = false
//! chunk_size = 1000
//! ```
//!
//! The compact list form used by command-line flags separates devices
//! with commas and options with colons: `vector,emulated:workers=4`.

use super::DeviceError;

/// The evaluation strategy a device wraps.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BackendKind {
    /// Multithreaded scalar workers.
    Scalar,
    /// Multithreaded workers using 16-lane vector arithmetic.
    Vector,
    /// Emulated per-assertion-parallel device.
    Emulated,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Scalar => "scalar",
            BackendKind::Vector => "vector",
            BackendKind::Emulated => "emulated",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "scalar" => Some(BackendKind::Scalar),
            "vector" => Some(BackendKind::Vector),
            "emulated" => Some(BackendKind::Emulated),
            _ => None,
        }
    }
}

/// One device entry: backend, worker count (0 = all hardware threads),
/// and an artificial slowdown factor for simulated heterogeneity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceSpec {
    pub kind: BackendKind,
    pub workers: usize,
    pub slowdown: u32,
}

impl DeviceSpec {
    pub fn new(kind: BackendKind) -> Self {
        Self { kind, workers: 0, slowdown: 1 }
    }

    fn parse_parts<'a>(
        kind: &str,
        options: impl Iterator<Item = &'a str>,
        line: usize,
    ) -> Result<Self, DeviceError> {
        let kind = BackendKind::parse(kind).ok_or_else(|| DeviceError::Config {
            line,
            msg: format!("unknown device kind `{kind}` (expected scalar, vector, or emulated)"),
        })?;
        let mut spec = DeviceSpec::new(kind);
        for option in options {
            let (key, value) = option.split_once('=').ok_or_else(|| DeviceError::Config {
                line,
                msg: format!("device option `{option}` is not `key=value`"),
            })?;
            match key {
                "workers" => {
                    spec.workers = value.parse().map_err(|_| DeviceError::Config {
                        line,
                        msg: format!("invalid worker count `{value}`"),
                    })?;
                }
                "slowdown" => {
                    spec.slowdown = value.parse().ok().filter(|&s| s >= 1).ok_or_else(|| {
                        DeviceError::Config {
                            line,
                            msg: format!("invalid slowdown factor `{value}` (must be >= 1)"),
                        }
                    })?;
                }
                other => {
                    return Err(DeviceError::Config {
                        line,
                        msg: format!("unknown device option `{other}`"),
                    })
                }
            }
        }
        Ok(spec)
    }
}

/// Full device-layer configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceConfig {
    pub devices: Vec<DeviceSpec>,
    pub small_batch_threshold: usize,
    pub chunk_batches: bool,
    pub chunk_size: usize,
}

impl Default for DeviceConfig {
    /// One vector-pool device using all hardware threads.
    fn default() -> Self {
        Self {
            devices: vec![DeviceSpec::new(BackendKind::Vector)],
            small_batch_threshold: 10,
            chunk_batches: false,
            chunk_size: 1000,
        }
    }
}

impl DeviceConfig {
    /// Parses the key-value configuration file format.
    pub fn parse(text: &str) -> Result<Self, DeviceError> {
        let mut devices = Vec::new();
        let mut config = DeviceConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DeviceError::Config {
                line: line_no,
                msg: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "device" => {
                    let mut parts = value.split_whitespace();
                    let kind = parts.next().ok_or_else(|| DeviceError::Config {
                        line: line_no,
                        msg: "missing device kind".into(),
                    })?;
                    devices.push(DeviceSpec::parse_parts(kind, parts, line_no)?);
                }
                "small_batch_threshold" => {
                    config.small_batch_threshold =
                        value.parse().map_err(|_| DeviceError::Config {
                            line: line_no,
                            msg: format!("invalid threshold `{value}`"),
                        })?;
                }
                "chunk_batches" => {
                    config.chunk_batches = parse_bool(value).ok_or_else(|| DeviceError::Config {
                        line: line_no,
                        msg: format!("invalid flag `{value}` (expected true/false)"),
                    })?;
                }
                "chunk_size" => {
                    config.chunk_size =
                        value.parse().ok().filter(|&n| n >= 1).ok_or_else(|| DeviceError::Config {
                            line: line_no,
                            msg: format!("invalid chunk size `{value}`"),
                        })?;
                }
                other => {
                    return Err(DeviceError::Config {
                        line: line_no,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if !devices.is_empty() {
            config.devices = devices;
        }
        Ok(config)
    }

    /// Parses the compact comma-separated device list
    /// (`vector,emulated:workers=4:slowdown=2`), keeping the other
    /// knobs at their defaults.
    pub fn from_device_list(list: &str) -> Result<Self, DeviceError> {
        let mut devices = Vec::new();
        for entry in list.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let mut parts = entry.split(':');
            let kind = parts.next().unwrap();
            devices.push(DeviceSpec::parse_parts(kind, parts, 0)?);
        }
        if devices.is_empty() {
            return Err(DeviceError::EmptyDeviceList);
        }
        Ok(Self { devices, ..Self::default() })
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}
