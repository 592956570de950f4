//! Classical conditional-probability realization of CHSH statistics.
//!
//! A 16-atom Kolmogorov space whose conditionals, given the setting
//! selectors, reproduce the cosine pair probabilities; a seeded generator of
//! filtered Bell-test records; estimators with standard errors; a small
//! randomness battery; and a two-wing delivery harness.

pub mod cli;
pub mod model;
pub mod randtests;
pub mod sampler;
pub mod stats;
pub mod wire;

pub use model::{AngleConfig, ChshPattern, Measure, OmegaPoint, PairProbTable, SettingIndex, Sign};
pub use sampler::{Record, SeedSpec, SixVector};
