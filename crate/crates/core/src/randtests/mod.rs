//! Frequency, block-frequency and runs tests over extracted bitstreams.
//!
//! Statistics follow the usual frequency-test battery definitions; p-values
//! come from [`special`].

pub mod bits;
pub mod special;

use serde::Serialize;
use thiserror::Error;

pub use bits::{extract_bits, BitPolicy, BitStream};
use special::{erfc, igamc};

pub const MIN_BITS: usize = 100;
pub const MIN_BLOCK_LEN: usize = 20;
pub const DEFAULT_BLOCK_LEN: usize = 128;
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum RandTestError {
    #[error("too few bits: {n} < {min}")]
    TooFewBits { n: usize, min: usize },
    #[error("block length {0} is below the minimum of {MIN_BLOCK_LEN}")]
    BlockTooShort(usize),
    #[error("block length {m} leaves no complete block in {n} bits")]
    NoBlocks { m: usize, n: usize },
    #[error("significance level {0} is outside (0, 0.5)")]
    InvalidAlpha(f64),
    #[error("bitfile: {0}")]
    BitFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum TestStatus {
    Ok,
    /// Frequency prerequisite of the runs test not met; counts as a failure.
    PrerequisiteFailed,
    /// Parameters outside the test's domain; the test was not applicable.
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub n_bits: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
    pub status: TestStatus,
}

impl TestReport {
    fn computed(name: &str, n_bits: usize, statistic: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.to_string(),
            n_bits,
            statistic,
            p_value,
            pass: p_value >= alpha,
            status: TestStatus::Ok,
        }
    }

    fn errored(name: &str, n_bits: usize, err: &RandTestError) -> Self {
        Self {
            name: name.to_string(),
            n_bits,
            statistic: 0.0,
            p_value: 0.0,
            pass: false,
            status: TestStatus::Error(err.to_string()),
        }
    }

    pub fn is_applicable(&self) -> bool {
        !matches!(self.status, TestStatus::Error(_))
    }
}

fn require_bits(bits: &BitStream) -> Result<(), RandTestError> {
    if bits.len() < MIN_BITS {
        Err(RandTestError::TooFewBits {
            n: bits.len(),
            min: MIN_BITS,
        })
    } else {
        Ok(())
    }
}

/// Returns `(s_obs, p)`.
fn monobit_statistic(bits: &BitStream) -> (f64, f64) {
    let n = bits.len() as f64;
    let sum = 2 * bits.ones() as i64 - bits.len() as i64;
    let s_obs = (sum as f64).abs() / n.sqrt();
    (s_obs, erfc(s_obs / std::f64::consts::SQRT_2))
}

pub fn monobit(bits: &BitStream, alpha: f64) -> Result<TestReport, RandTestError> {
    require_bits(bits)?;
    let (s_obs, p) = monobit_statistic(bits);
    Ok(TestReport::computed("monobit", bits.len(), s_obs, p, alpha))
}

/// Returns `(χ², p)`; trailing bits past the last full block are dropped.
fn block_frequency_statistic(bits: &BitStream, m: usize) -> (f64, f64) {
    let blocks = bits.len() / m;
    let chi2: f64 = bits
        .bits()
        .chunks_exact(m)
        .map(|block| {
            let pi = block.iter().filter(|&&b| b).count() as f64 / m as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    (chi2, igamc(blocks as f64 / 2.0, chi2 / 2.0))
}

pub fn block_frequency(bits: &BitStream, m: usize, alpha: f64) -> Result<TestReport, RandTestError> {
    require_bits(bits)?;
    if m < MIN_BLOCK_LEN {
        return Err(RandTestError::BlockTooShort(m));
    }
    if bits.len() / m == 0 {
        return Err(RandTestError::NoBlocks { m, n: bits.len() });
    }
    let (chi2, p) = block_frequency_statistic(bits, m);
    Ok(TestReport::computed("block_frequency", bits.len(), chi2, p, alpha))
}

struct RunsOutcome {
    pi: f64,
    runs: u64,
    p_value: Option<f64>,
}

/// `p_value` is `None` when the frequency prerequisite `|π − ½| < 2/√n`
/// does not hold.
fn runs_statistic(bits: &BitStream) -> RunsOutcome {
    let n = bits.len() as f64;
    let pi = bits.ones() as f64 / n;
    let runs = 1 + bits.bits().windows(2).filter(|w| w[0] != w[1]).count() as u64;
    let p_value = if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        None
    } else {
        let spread = pi * (1.0 - pi);
        Some(erfc(
            (runs as f64 - 2.0 * n * spread).abs() / (2.0 * (2.0 * n).sqrt() * spread),
        ))
    };
    RunsOutcome { pi, runs, p_value }
}

pub fn runs_test(bits: &BitStream, alpha: f64) -> Result<TestReport, RandTestError> {
    require_bits(bits)?;
    let outcome = runs_statistic(bits);
    Ok(match outcome.p_value {
        Some(p) => TestReport::computed("runs", bits.len(), outcome.runs as f64, p, alpha),
        None => TestReport {
            name: "runs".to_string(),
            n_bits: bits.len(),
            statistic: outcome.pi,
            p_value: 0.0,
            pass: false,
            status: TestStatus::PrerequisiteFailed,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub alpha: f64,
    pub n_bits: usize,
    pub tests: Vec<TestReport>,
    /// At least one test applied and every applicable test passed.
    pub pass: bool,
}

impl BatteryReport {
    pub fn test(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name == name)
    }
}

/// Runs monobit, block frequency (`block_len`) and runs at significance `alpha`.
pub fn run_battery_with(bits: &BitStream, alpha: f64, block_len: usize) -> Result<BatteryReport, RandTestError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(RandTestError::InvalidAlpha(alpha));
    }
    let n = bits.len();
    let tests = vec![
        monobit(bits, alpha).unwrap_or_else(|e| TestReport::errored("monobit", n, &e)),
        block_frequency(bits, block_len, alpha).unwrap_or_else(|e| TestReport::errored("block_frequency", n, &e)),
        runs_test(bits, alpha).unwrap_or_else(|e| TestReport::errored("runs", n, &e)),
    ];
    let applicable: Vec<_> = tests.iter().filter(|t| t.is_applicable()).collect();
    let pass = !applicable.is_empty() && applicable.iter().all(|t| t.pass);
    Ok(BatteryReport {
        alpha,
        n_bits: n,
        tests,
        pass,
    })
}

pub fn run_battery(bits: &BitStream, alpha: f64) -> Result<BatteryReport, RandTestError> {
    run_battery_with(bits, alpha, DEFAULT_BLOCK_LEN)
}
