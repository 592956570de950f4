//! Seeded generation of elementary events, six-vectors and filtered records.
//!
//! Generator contract:
//!
//! * Each shard `k` draws from a `ChaCha8Rng` seeded with
//!   `ChaCha8Rng::seed_from_u64(shard_seed(seed, k))`.
//! * `shard_seed(seed, k) = splitmix64_mix(seed + (k + 1) · 0x9E3779B97F4A7C15)`
//!   with wrapping arithmetic, where `splitmix64_mix` is the SplitMix64 output
//!   finalizer.
//! * A uniform deviate is `(next_u64 >> 11) · 2⁻⁵³`, in `[0, 1)`.
//! * One deviate selects one atom by inverse CDF over the canonical atom order.
//!
//! Shard `k` covers records `[k · shard_size, min((k + 1) · shard_size, n))`;
//! shards are concatenated in index order, so the worker count never changes
//! the output.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{build_measure, AngleConfig, Measure, OmegaPoint, SettingIndex, Sign};

pub const DEFAULT_SHARD_SIZE: u64 = 65_536;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplerError {
    #[error("malformed six-vector {0:?}: zero pattern contradicts the setting selectors")]
    MalformedVector(SixVector),
    #[error("shard size must be at least 1")]
    ZeroShardSize,
    #[error("could not build worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub seed: u64,
    shard_size: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, shard_size: u64) -> Result<Self, SamplerError> {
        if shard_size == 0 {
            return Err(SamplerError::ZeroShardSize);
        }
        Ok(Self { seed, shard_size })
    }

    pub fn with_default_shards(seed: u64) -> Self {
        Self {
            seed,
            shard_size: DEFAULT_SHARD_SIZE,
        }
    }

    pub fn shard_size(&self) -> u64 {
        self.shard_size
    }

    pub fn shard_count(&self, n: u64) -> u64 {
        n.div_ceil(self.shard_size)
    }

    pub fn shard_range(&self, k: u64, n: u64) -> std::ops::Range<u64> {
        let start = k.saturating_mul(self.shard_size).min(n);
        let end = start.saturating_add(self.shard_size).min(n);
        start..end
    }
}

/// SplitMix64 output finalizer.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn shard_seed(seed: u64, shard: u64) -> u64 {
    splitmix64_mix(seed.wrapping_add(shard.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// The deterministic uniform source for one shard.
pub struct EventRng(ChaCha8Rng);

impl EventRng {
    pub fn for_shard(seed: u64, shard: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(shard_seed(seed, shard)))
    }

    pub fn from_seed_u64(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Inverse-CDF table over the 16 atoms in canonical order.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    cdf: [f64; 16],
    last_positive: usize,
}

impl AtomSampler {
    pub fn new(measure: &Measure) -> Self {
        let mut cdf = [0.0; 16];
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (k, &w) in measure.weights().iter().enumerate() {
            acc += w;
            cdf[k] = acc;
            if w > 0.0 {
                last_positive = k;
            }
        }
        Self { cdf, last_positive }
    }

    /// Maps `u ∈ [0, 1)` to the first atom whose cumulative weight exceeds
    /// `u`. Rounding slack at the top end goes to the last atom with mass.
    pub fn atom_for(&self, u: f64) -> OmegaPoint {
        let k = self.cdf.iter().position(|&c| u < c).unwrap_or(self.last_positive);
        OmegaPoint::from_canonical_index(k)
    }

    pub fn sample(&self, rng: &mut EventRng) -> OmegaPoint {
        self.atom_for(rng.next_uniform())
    }
}

/// Draws one atom with probability `weight(ω)`, consuming one deviate.
pub fn sample_omega(rng: &mut EventRng, measure: &Measure) -> OmegaPoint {
    AtomSampler::new(measure).sample(rng)
}

/// `(A¹, A², B¹, B², η_L, η_R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SixVector {
    pub a1: i8,
    pub a2: i8,
    pub b1: i8,
    pub b2: i8,
    pub eta_left: SettingIndex,
    pub eta_right: SettingIndex,
}

pub fn to_six_vector(omega: OmegaPoint) -> SixVector {
    let [a1, a2, b1, b2] = omega.coords();
    SixVector {
        a1,
        a2,
        b1,
        b2,
        eta_left: omega.eta_left(),
        eta_right: omega.eta_right(),
    }
}

/// A zero-filtered observation `(a, b, i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Record {
    pub a: Sign,
    pub b: Sign,
    pub i: SettingIndex,
    pub j: SettingIndex,
}

impl Record {
    pub fn new(a: Sign, b: Sign, i: SettingIndex, j: SettingIndex) -> Self {
        Self { a, b, i, j }
    }

    pub fn from_omega(omega: OmegaPoint) -> Self {
        Self {
            a: omega.left_outcome(),
            b: omega.right_outcome(),
            i: omega.eta_left(),
            j: omega.eta_right(),
        }
    }

    /// All 16 record values in canonical atom order.
    pub fn all() -> [Record; 16] {
        OmegaPoint::all().map(Record::from_omega)
    }

    pub fn to_omega(self) -> OmegaPoint {
        OmegaPoint::from_parts(self.i, self.j, self.a, self.b)
    }

    /// Rebuilds the six-vector; the record carries everything it needs.
    pub fn to_six_vector(self) -> SixVector {
        to_six_vector(self.to_omega())
    }
}

pub fn filter_record(v: SixVector) -> Result<Record, SamplerError> {
    let pick = |first: i8, second: i8, sel: SettingIndex| -> Option<Sign> {
        let (chosen, other) = match sel {
            SettingIndex::One => (first, second),
            SettingIndex::Two => (second, first),
        };
        match (chosen, other) {
            (1, 0) => Some(Sign::Plus),
            (-1, 0) => Some(Sign::Minus),
            _ => None,
        }
    };
    let a = pick(v.a1, v.a2, v.eta_left);
    let b = pick(v.b1, v.b2, v.eta_right);
    match (a, b) {
        (Some(a), Some(b)) => Ok(Record::new(a, b, v.eta_left, v.eta_right)),
        _ => Err(SamplerError::MalformedVector(v)),
    }
}

/// Records of shard `k` of an `n`-record stream.
pub fn generate_shard(seeds: &SeedSpec, k: u64, n: u64, sampler: &AtomSampler) -> Vec<Record> {
    let range = seeds.shard_range(k, n);
    let mut rng = EventRng::for_shard(seeds.seed, k);
    (range.start..range.end)
        .map(|_| Record::from_omega(sampler.sample(&mut rng)))
        .collect()
}

/// Sequential iterator over the full stream, shard by shard.
pub struct RecordStream {
    seeds: SeedSpec,
    n: u64,
    sampler: AtomSampler,
    produced: u64,
    shard: u64,
    rng: EventRng,
}

impl RecordStream {
    pub fn new(seeds: SeedSpec, n: u64, angles: &AngleConfig) -> Self {
        Self::with_measure(seeds, n, &build_measure(angles))
    }

    pub fn with_measure(seeds: SeedSpec, n: u64, measure: &Measure) -> Self {
        Self {
            seeds,
            n,
            sampler: AtomSampler::new(measure),
            produced: 0,
            shard: 0,
            rng: EventRng::for_shard(seeds.seed, 0),
        }
    }
}

impl Iterator for RecordStream {
    type Item = Record;

    fn next(&mut self) -> Option<Record> {
        if self.produced >= self.n {
            return None;
        }
        let shard = self.produced / self.seeds.shard_size;
        if shard != self.shard {
            self.shard = shard;
            self.rng = EventRng::for_shard(self.seeds.seed, shard);
        }
        self.produced += 1;
        Some(Record::from_omega(self.sampler.sample(&mut self.rng)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.n - self.produced) as usize;
        (left, Some(left))
    }
}

/// Serial generation of exactly `n` records.
pub fn generate_stream(seeds: &SeedSpec, n: u64, angles: &AngleConfig) -> Vec<Record> {
    RecordStream::new(*seeds, n, angles).collect()
}

/// Same output as [`generate_stream`], shards spread over `workers` threads.
pub fn generate_stream_parallel(
    seeds: &SeedSpec,
    n: u64,
    angles: &AngleConfig,
    workers: usize,
) -> Result<Vec<Record>, SamplerError> {
    let sampler = AtomSampler::new(&build_measure(angles));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SamplerError::WorkerPool(e.to_string()))?;
    let shards: Vec<Vec<Record>> = pool.install(|| {
        (0..seeds.shard_count(n))
            .into_par_iter()
            .map(|k| generate_shard(seeds, k, n, &sampler))
            .collect()
    });
    Ok(shards.concat())
}
