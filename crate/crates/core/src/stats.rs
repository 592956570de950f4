//! Empirical estimation from record streams.
//!
//! Setting blocks are disjoint subsamples of an i.i.d. stream, so the
//! standard error of the CHSH estimate is the root-sum-square of the
//! per-block correlation errors.

use std::ops::{Add, AddAssign};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    outcome_pairs, setting_pairs, ChshPattern, ExactChsh, PairProbTable, SettingIndex, Sign, EXACT_TOL,
};
use crate::sampler::Record;

/// Default violation and flagging threshold, in standard errors.
pub const DEFAULT_THRESHOLD: f64 = 4.0;
pub const CLASSICAL_BOUND: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("insufficient data: setting pair ({i}, {j}) has no records")]
    EmptyBlock { i: u8, j: u8 },
}

/// Cell counts `n[i][j][a][b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    cells: [[[[u64; 2]; 2]; 2]; 2],
}

impl Counts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let mut c = Self::new();
        for r in records {
            c.accumulate(r);
        }
        c
    }

    pub fn accumulate(&mut self, r: &Record) {
        self.cells[r.i.index()][r.j.index()][r.a.index()][r.b.index()] += 1;
    }

    pub fn merge(&self, other: &Counts) -> Counts {
        *self + *other
    }

    pub fn get(&self, i: SettingIndex, j: SettingIndex, a: Sign, b: Sign) -> u64 {
        self.cells[i.index()][j.index()][a.index()][b.index()]
    }

    pub fn block(&self, i: SettingIndex, j: SettingIndex) -> u64 {
        self.cells[i.index()][j.index()].iter().flatten().sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().flatten().sum()
    }

    fn require_blocks(&self) -> Result<(), StatsError> {
        for (i, j) in setting_pairs() {
            if self.block(i, j) == 0 {
                return Err(StatsError::EmptyBlock {
                    i: i.value(),
                    j: j.value(),
                });
            }
        }
        Ok(())
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(mut self, rhs: Counts) -> Counts {
        self += rhs;
        self
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        for (i, j) in setting_pairs() {
            for (a, b) in outcome_pairs() {
                self.cells[i.index()][j.index()][a.index()][b.index()] += rhs.get(i, j, a, b);
            }
        }
    }
}

impl<'a> Extend<&'a Record> for Counts {
    fn extend<T: IntoIterator<Item = &'a Record>>(&mut self, iter: T) {
        for r in iter {
            self.accumulate(r);
        }
    }
}

/// Functional form of [`Counts::accumulate`].
pub fn accumulate(mut counts: Counts, r: &Record) -> Counts {
    counts.accumulate(r);
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
}

/// `p̂_ij(a, b)` with plug-in binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalConditionals {
    cells: [[[[Estimate; 2]; 2]; 2]; 2],
    block_counts: [[u64; 2]; 2],
}

impl EmpiricalConditionals {
    pub fn get(&self, i: SettingIndex, j: SettingIndex, a: Sign, b: Sign) -> Estimate {
        self.cells[i.index()][j.index()][a.index()][b.index()]
    }

    pub fn block_count(&self, i: SettingIndex, j: SettingIndex) -> u64 {
        self.block_counts[i.index()][j.index()]
    }

    pub fn to_table(&self) -> PairProbTable {
        PairProbTable::from_fn(|i, j, a, b| self.get(i, j, a, b).estimate)
    }
}

pub fn empirical_conditionals(counts: &Counts) -> Result<EmpiricalConditionals, StatsError> {
    counts.require_blocks()?;
    let zero = Estimate { estimate: 0.0, se: 0.0 };
    let mut cells = [[[[zero; 2]; 2]; 2]; 2];
    let mut block_counts = [[0; 2]; 2];
    for (i, j) in setting_pairs() {
        let n = counts.block(i, j);
        block_counts[i.index()][j.index()] = n;
        for (a, b) in outcome_pairs() {
            let p = counts.get(i, j, a, b) as f64 / n as f64;
            cells[i.index()][j.index()][a.index()][b.index()] = Estimate {
                estimate: p,
                se: (p * (1.0 - p) / n as f64).sqrt(),
            };
        }
    }
    Ok(EmpiricalConditionals { cells, block_counts })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    pub correlations: [[f64; 2]; 2],
    pub se_correlations: [[f64; 2]; 2],
    pub pattern: ChshPattern,
    pub s: f64,
    pub se_s: f64,
    pub block_counts: [[u64; 2]; 2],
}

pub fn empirical_chsh(counts: &Counts, pattern: ChshPattern) -> Result<ChshEstimate, StatsError> {
    use Sign::{Minus, Plus};
    counts.require_blocks()?;
    let mut correlations = [[0.0; 2]; 2];
    let mut se_correlations = [[0.0; 2]; 2];
    let mut block_counts = [[0; 2]; 2];
    for (i, j) in setting_pairs() {
        let n = counts.block(i, j);
        let agree = counts.get(i, j, Plus, Plus) + counts.get(i, j, Minus, Minus);
        let disagree = counts.get(i, j, Plus, Minus) + counts.get(i, j, Minus, Plus);
        let e = (agree as f64 - disagree as f64) / n as f64;
        correlations[i.index()][j.index()] = e;
        se_correlations[i.index()][j.index()] = ((1.0 - e * e).max(0.0) / n as f64).sqrt();
        block_counts[i.index()][j.index()] = n;
    }
    let se_s = se_correlations.iter().flatten().map(|s| s * s).sum::<f64>().sqrt();
    Ok(ChshEstimate {
        correlations,
        se_correlations,
        pattern,
        s: pattern.combine(&correlations),
        se_s,
        block_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ViolatesClassical,
    WithinClassicalBound,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ViolatesClassical => "VIOLATES_CLASSICAL",
            Verdict::WithinClassicalBound => "WITHIN_CLASSICAL_BOUND",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub i: u8,
    pub j: u8,
    pub a: i8,
    pub b: i8,
    pub exact: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationComparison {
    pub i: u8,
    pub j: u8,
    pub exact: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub threshold: f64,
    pub cells: Vec<CellComparison>,
    pub correlations: Vec<CorrelationComparison>,
    pub pattern: String,
    pub s_exact: f64,
    pub s_hat: f64,
    pub se_s: f64,
    pub s_z: f64,
    /// No cell or correlation deviates from the model by more than the threshold.
    pub agrees_with_model: bool,
    pub verdict: Verdict,
}

impl ComparisonReport {
    pub fn flagged_cells(&self) -> impl Iterator<Item = &CellComparison> {
        self.cells.iter().filter(|c| c.flagged)
    }
}

/// `(estimate − exact) / se`; a zero error bar yields 0 for a match and ±∞
/// otherwise.
pub fn z_score(estimate: f64, exact: f64, se: f64) -> f64 {
    let diff = estimate - exact;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= EXACT_TOL {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

pub fn compare(
    exact: &ExactChsh,
    table: &PairProbTable,
    est: &ChshEstimate,
    conditionals: &EmpiricalConditionals,
    threshold: f64,
) -> ComparisonReport {
    let mut cells = Vec::with_capacity(16);
    let mut correlations = Vec::with_capacity(4);
    for (i, j) in setting_pairs() {
        for (a, b) in outcome_pairs() {
            let e = conditionals.get(i, j, a, b);
            let want = table.get(i, j, a, b);
            let z = z_score(e.estimate, want, e.se);
            cells.push(CellComparison {
                i: i.value(),
                j: j.value(),
                a: a.value(),
                b: b.value(),
                exact: want,
                estimate: e.estimate,
                se: e.se,
                z,
                flagged: z.abs() > threshold,
            });
        }
        let (ii, jj) = (i.index(), j.index());
        let z = z_score(
            est.correlations[ii][jj],
            exact.correlations[ii][jj],
            est.se_correlations[ii][jj],
        );
        correlations.push(CorrelationComparison {
            i: i.value(),
            j: j.value(),
            exact: exact.correlations[ii][jj],
            estimate: est.correlations[ii][jj],
            se: est.se_correlations[ii][jj],
            z,
            flagged: z.abs() > threshold,
        });
    }
    let s_exact = est.pattern.combine(&exact.correlations);
    let agrees_with_model = !cells.iter().any(|c| c.flagged) && !correlations.iter().any(|c| c.flagged);
    let verdict = if est.s - CLASSICAL_BOUND > threshold * est.se_s {
        Verdict::ViolatesClassical
    } else {
        Verdict::WithinClassicalBound
    };
    ComparisonReport {
        threshold,
        cells,
        correlations,
        pattern: est.pattern.label().to_string(),
        s_exact,
        s_hat: est.s,
        se_s: est.se_s,
        s_z: z_score(est.s, s_exact, est.se_s),
        agrees_with_model,
        verdict,
    }
}
