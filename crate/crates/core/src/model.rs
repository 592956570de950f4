//! Exact representation of the 16-atom probability space.
//!
//! Quantum pair probabilities enter only through the closed form
//!
//! ```text
//! p_ij(e, e)  = ½ cos²((θ_i − θ'_j) / 2)
//! p_ij(e, −e) = ½ sin²((θ_i − θ'_j) / 2)
//! ```
//!
//! Every setting pair `(i, j)` owns four atoms of Ω, each carrying
//! `¼ · p_ij(e, e')`. Conditioning on the setting selectors `η_L = i`,
//! `η_R = j` recovers the pair table exactly.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for bound checks.
pub const BOUND_TOL: f64 = 1e-9;
/// Mass of each setting pair under the measure.
pub const SETTING_MASS: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("angle {name} is not finite: {value}")]
    NonFiniteAngle { name: &'static str, value: f64 },
    #[error("invalid sign value {0}; expected -1 or +1")]
    InvalidSign(i64),
    #[error("invalid setting index {0}; expected 1 or 2")]
    InvalidSetting(i64),
    #[error("invalid elementary event {0:?}: need exactly one nonzero in (x1, x2) and in (x3, x4)")]
    InvalidOmega([i8; 4]),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("degenerate conditioning: setting pair ({i}, {j}) has mass {mass}, expected 0.25")]
    DegenerateConditioning { i: u8, j: u8, mass: f64 },
}

/// The four analyzer orientations, in radians. Stored as given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1p: f64,
    pub theta2p: f64,
}

impl AngleConfig {
    pub fn new(theta1: f64, theta2: f64, theta1p: f64, theta2p: f64) -> Result<Self, ModelError> {
        for (name, value) in [
            ("theta1", theta1),
            ("theta2", theta2),
            ("theta1p", theta1p),
            ("theta2p", theta2p),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFiniteAngle { name, value });
            }
        }
        Ok(Self {
            theta1,
            theta2,
            theta1p,
            theta2p,
        })
    }

    /// θ₁ = 0, θ₂ = π/2, θ′₁ = π/4, θ′₂ = −π/4: reaches S = 2√2 with the
    /// minus sign on the (2, 2) term.
    pub fn tsirelson() -> Self {
        Self {
            theta1: 0.0,
            theta2: FRAC_PI_2,
            theta1p: FRAC_PI_4,
            theta2p: -FRAC_PI_4,
        }
    }

    pub fn uniform(theta: f64) -> Result<Self, ModelError> {
        Self::new(theta, theta, theta, theta)
    }

    pub fn left(&self, i: SettingIndex) -> f64 {
        match i {
            SettingIndex::One => self.theta1,
            SettingIndex::Two => self.theta2,
        }
    }

    pub fn right(&self, j: SettingIndex) -> f64 {
        match j {
            SettingIndex::One => self.theta1p,
            SettingIndex::Two => self.theta2p,
        }
    }
}

impl AngleConfig {
    /// Parses four `key=value` lines (`theta1`, `theta2`, `theta1p`,
    /// `theta2p`, radians). Blank lines and `#` comments are ignored.
    pub fn from_config_str(text: &str) -> Result<Self, AngleParseError> {
        let mut values: [Option<f64>; 4] = [None; 4];
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| AngleParseError { line: k + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let slot = match key.trim() {
                "theta1" => 0,
                "theta2" => 1,
                "theta1p" => 2,
                "theta2p" => 3,
                other => return Err(bad(format!("unknown key {other:?}"))),
            };
            if values[slot].is_some() {
                return Err(bad(format!("duplicate key {:?}", key.trim())));
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|e| bad(format!("value {:?}: {e}", value.trim())))?;
            values[slot] = Some(v);
        }
        let names = ["theta1", "theta2", "theta1p", "theta2p"];
        let mut out = [0.0; 4];
        for (k, v) in values.iter().enumerate() {
            out[k] = v.ok_or_else(|| AngleParseError {
                line: 0,
                message: format!("missing key {}", names[k]),
            })?;
        }
        Self::new(out[0], out[1], out[2], out[3]).map_err(|e| AngleParseError {
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "theta1={:?}\ntheta2={:?}\ntheta1p={:?}\ntheta2p={:?}\n",
            self.theta1, self.theta2, self.theta1p, self.theta2p
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("angle config line {line}: {message}")]
pub struct AngleParseError {
    pub line: usize,
    pub message: String,
}

impl Default for AngleConfig {
    fn default() -> Self {
        Self::tsirelson()
    }
}

/// A ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// 0 for `+1`, 1 for `−1`; the canonical outcome order.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i64> for Sign {
    type Error = ModelError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(ModelError::InvalidSign(other)),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => f.write_str("+"),
            Sign::Minus => f.write_str("-"),
        }
    }
}

/// Which of the two orientations a side used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingIndex {
    One,
    Two,
}

impl SettingIndex {
    pub const BOTH: [SettingIndex; 2] = [SettingIndex::One, SettingIndex::Two];

    pub fn value(self) -> u8 {
        match self {
            SettingIndex::One => 1,
            SettingIndex::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.value() as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            SettingIndex::One
        } else {
            SettingIndex::Two
        }
    }
}

impl TryFrom<i64> for SettingIndex {
    type Error = ModelError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(SettingIndex::One),
            2 => Ok(SettingIndex::Two),
            other => Err(ModelError::InvalidSetting(other)),
        }
    }
}

impl fmt::Display for SettingIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The four setting pairs in canonical order (1,1), (1,2), (2,1), (2,2).
pub fn setting_pairs() -> [(SettingIndex, SettingIndex); 4] {
    use SettingIndex::*;
    [(One, One), (One, Two), (Two, One), (Two, Two)]
}

/// The four outcome pairs in canonical order (+,+), (+,−), (−,+), (−,−).
pub fn outcome_pairs() -> [(Sign, Sign); 4] {
    use Sign::*;
    [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
}

/// An elementary event of Ω, kept as the literal 4-tuple `(x1, x2, x3, x4)`.
///
/// Exactly one of `x1, x2` and exactly one of `x3, x4` is nonzero; the
/// positions of the nonzero entries encode the setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OmegaPoint([i8; 4]);

impl OmegaPoint {
    pub fn new(coords: [i8; 4]) -> Result<Self, ModelError> {
        let ok_value = |x: i8| (-1..=1).contains(&x);
        let one_of = |p: i8, q: i8| (p != 0) ^ (q != 0);
        if coords.iter().all(|&x| ok_value(x)) && one_of(coords[0], coords[1]) && one_of(coords[2], coords[3]) {
            Ok(Self(coords))
        } else {
            Err(ModelError::InvalidOmega(coords))
        }
    }

    /// Builds the atom whose left side uses setting `i` with outcome `a` and
    /// whose right side uses setting `j` with outcome `b`.
    pub fn from_parts(i: SettingIndex, j: SettingIndex, a: Sign, b: Sign) -> Self {
        let mut coords = [0i8; 4];
        coords[i.index()] = a.value();
        coords[2 + j.index()] = b.value();
        Self(coords)
    }

    /// All 16 atoms in canonical order: setting pairs (1,1), (1,2), (2,1),
    /// (2,2); within each, outcomes (+,+), (+,−), (−,+), (−,−).
    pub fn all() -> [OmegaPoint; 16] {
        let mut out = [OmegaPoint([1, 0, 1, 0]); 16];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = Self::from_canonical_index(k);
        }
        out
    }

    pub fn from_canonical_index(k: usize) -> Self {
        assert!(k < 16, "canonical atom index out of range: {k}");
        let pair = k / 4;
        let (a, b) = outcome_pairs()[k % 4];
        let (i, j) = setting_pairs()[pair];
        Self::from_parts(i, j, a, b)
    }

    pub fn canonical_index(&self) -> usize {
        let pair = self.eta_left().index() * 2 + self.eta_right().index();
        let outcome = self.left_outcome().index() * 2 + self.right_outcome().index();
        pair * 4 + outcome
    }

    pub fn coords(&self) -> [i8; 4] {
        self.0
    }

    pub fn eta_left(&self) -> SettingIndex {
        if self.0[0] != 0 {
            SettingIndex::One
        } else {
            SettingIndex::Two
        }
    }

    pub fn eta_right(&self) -> SettingIndex {
        if self.0[2] != 0 {
            SettingIndex::One
        } else {
            SettingIndex::Two
        }
    }

    pub fn left_outcome(&self) -> Sign {
        if self.0[0] + self.0[1] > 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn right_outcome(&self) -> Sign {
        if self.0[2] + self.0[3] > 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Values of the random variables `A¹, A², B¹, B², η_L, η_R` at one atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variables {
    pub a1: i8,
    pub a2: i8,
    pub b1: i8,
    pub b2: i8,
    pub eta_left: SettingIndex,
    pub eta_right: SettingIndex,
}

impl Variables {
    pub fn a(&self, i: SettingIndex) -> i8 {
        match i {
            SettingIndex::One => self.a1,
            SettingIndex::Two => self.a2,
        }
    }

    pub fn b(&self, j: SettingIndex) -> i8 {
        match j {
            SettingIndex::One => self.b1,
            SettingIndex::Two => self.b2,
        }
    }
}

/// Random variables are the coordinates themselves; zero off their support.
pub fn evaluate_variables(omega: OmegaPoint) -> Variables {
    let [x1, x2, x3, x4] = omega.coords();
    Variables {
        a1: x1,
        a2: x2,
        b1: x3,
        b2: x4,
        eta_left: omega.eta_left(),
        eta_right: omega.eta_right(),
    }
}

/// `p_ij(e, e')` for one setting pair and outcome pair.
pub fn pair_prob(angles: &AngleConfig, i: SettingIndex, j: SettingIndex, eps: Sign, epsp: Sign) -> f64 {
    let half = (angles.left(i) - angles.right(j)) / 2.0;
    if eps == epsp {
        0.5 * half.cos().powi(2)
    } else {
        0.5 * half.sin().powi(2)
    }
}

/// Probabilities `p[i][j][e][e']`, indexed by [`SettingIndex::index`] and
/// [`Sign::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProbTable {
    p: [[[[f64; 2]; 2]; 2]; 2],
}

impl PairProbTable {
    pub fn from_fn(mut f: impl FnMut(SettingIndex, SettingIndex, Sign, Sign) -> f64) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (i, j) in setting_pairs() {
            for (a, b) in outcome_pairs() {
                p[i.index()][j.index()][a.index()][b.index()] = f(i, j, a, b);
            }
        }
        Self { p }
    }

    pub fn get(&self, i: SettingIndex, j: SettingIndex, eps: Sign, epsp: Sign) -> f64 {
        self.p[i.index()][j.index()][eps.index()][epsp.index()]
    }

    pub fn block_sum(&self, i: SettingIndex, j: SettingIndex) -> f64 {
        outcome_pairs().iter().map(|&(a, b)| self.get(i, j, a, b)).sum()
    }

    /// `Σ e·e'·p_ij(e, e')`.
    pub fn correlation(&self, i: SettingIndex, j: SettingIndex) -> f64 {
        outcome_pairs()
            .iter()
            .map(|&(a, b)| f64::from(a.value() * b.value()) * self.get(i, j, a, b))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &PairProbTable) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j) in setting_pairs() {
            for (a, b) in outcome_pairs() {
                worst = worst.max((self.get(i, j, a, b) - other.get(i, j, a, b)).abs());
            }
        }
        worst
    }
}

pub fn build_pair_table(angles: &AngleConfig) -> PairProbTable {
    PairProbTable::from_fn(|i, j, a, b| pair_prob(angles, i, j, a, b))
}

/// Probability weights over the 16 atoms, stored in canonical atom order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    weights: [f64; 16],
}

impl Measure {
    /// Accepts any nonnegative weights summing to 1 (within 1e−12). The
    /// per-setting-pair mass is checked only where conditioning needs it.
    pub fn from_weights(weights: [f64; 16]) -> Result<Self, ModelError> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(ModelError::InvalidMeasure(format!("weight {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(ModelError::InvalidMeasure(format!("total mass {total} != 1")));
        }
        Ok(Self { weights })
    }

    pub fn weight(&self, omega: OmegaPoint) -> f64 {
        self.weights[omega.canonical_index()]
    }

    pub fn weights(&self) -> &[f64; 16] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `P(η_L = i, η_R = j)`.
    pub fn setting_mass(&self, i: SettingIndex, j: SettingIndex) -> f64 {
        let base = (i.index() * 2 + j.index()) * 4;
        self.weights[base..base + 4].iter().sum()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (OmegaPoint, f64)> + '_ {
        OmegaPoint::all().into_iter().zip(self.weights.iter().copied())
    }
}

pub fn build_measure(angles: &AngleConfig) -> Measure {
    let table = build_pair_table(angles);
    let mut weights = [0.0; 16];
    for (k, omega) in OmegaPoint::all().into_iter().enumerate() {
        weights[k] = SETTING_MASS
            * table.get(
                omega.eta_left(),
                omega.eta_right(),
                omega.left_outcome(),
                omega.right_outcome(),
            );
    }
    Measure { weights }
}

/// `P(A^(i) = e, B^(j) = e' | η_L = i, η_R = j)` for every cell.
pub fn conditional_table(measure: &Measure) -> Result<PairProbTable, ModelError> {
    for (i, j) in setting_pairs() {
        let mass = measure.setting_mass(i, j);
        if (mass - SETTING_MASS).abs() > BOUND_TOL {
            return Err(ModelError::DegenerateConditioning {
                i: i.value(),
                j: j.value(),
                mass,
            });
        }
    }
    Ok(PairProbTable::from_fn(|i, j, a, b| {
        measure.weight(OmegaPoint::from_parts(i, j, a, b)) / SETTING_MASS
    }))
}

/// `E_ij = Σ e·e'·p_ij(e, e')`, which equals `cos(θ_i − θ'_j)`.
pub fn correlation(angles: &AngleConfig, i: SettingIndex, j: SettingIndex) -> f64 {
    outcome_pairs()
        .iter()
        .map(|&(a, b)| f64::from(a.value() * b.value()) * pair_prob(angles, i, j, a, b))
        .sum()
}

/// Which of the four terms of `E₁₁ + E₁₂ + E₂₁ + E₂₂` carries the minus sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChshPattern {
    Minus11,
    Minus12,
    Minus21,
    #[default]
    Minus22,
}

impl ChshPattern {
    pub const ALL: [ChshPattern; 4] = [
        ChshPattern::Minus11,
        ChshPattern::Minus12,
        ChshPattern::Minus21,
        ChshPattern::Minus22,
    ];

    pub fn negated(self) -> (SettingIndex, SettingIndex) {
        setting_pairs()[self as usize]
    }

    pub fn coefficient(self, i: SettingIndex, j: SettingIndex) -> f64 {
        if self.negated() == (i, j) {
            -1.0
        } else {
            1.0
        }
    }

    /// Signed sum of a 2×2 correlation matrix.
    pub fn combine(self, e: &[[f64; 2]; 2]) -> f64 {
        setting_pairs()
            .iter()
            .map(|&(i, j)| self.coefficient(i, j) * e[i.index()][j.index()])
            .sum()
    }

    pub fn label(self) -> &'static str {
        match self {
            ChshPattern::Minus11 => "11",
            ChshPattern::Minus12 => "12",
            ChshPattern::Minus21 => "21",
            ChshPattern::Minus22 => "22",
        }
    }
}

impl std::str::FromStr for ChshPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChshPattern::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| format!("unknown CHSH pattern {s:?}; expected 11, 12, 21 or 22"))
    }
}

impl fmt::Display for ChshPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactChsh {
    /// `correlations[i][j]` with zero-based setting indices.
    pub correlations: [[f64; 2]; 2],
    pub pattern: ChshPattern,
    pub s: f64,
    pub s_max: f64,
    pub s_max_pattern: ChshPattern,
}

pub fn chsh_value(angles: &AngleConfig, pattern: ChshPattern) -> ExactChsh {
    let mut correlations = [[0.0; 2]; 2];
    for (i, j) in setting_pairs() {
        correlations[i.index()][j.index()] = correlation(angles, i, j);
    }
    let (s_max_pattern, s_max) = ChshPattern::ALL
        .into_iter()
        .map(|p| (p, p.combine(&correlations)))
        .fold((ChshPattern::Minus11, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    ExactChsh {
        correlations,
        pattern,
        s: pattern.combine(&correlations),
        s_max,
        s_max_pattern,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use SettingIndex::{One, Two};
    use Sign::{Minus, Plus};

    // Frozen with a 40-digit evaluator, rounded to f64.
    const HALF_COS2_PI_8: f64 = 0.426_776_695_296_636_9;
    const EIGHTH_SIN2_PI_8: f64 = 0.018_305_826_175_840_78;
    const HALF_COS2_3PI_8: f64 = 0.073_223_304_703_363_12;
    const COS_PI_4: f64 = std::f64::consts::FRAC_1_SQRT_2;
    const TWO_SQRT2: f64 = 2.828_427_124_746_19;

    fn with_diff(d: f64) -> AngleConfig {
        AngleConfig::new(d, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn pair_prob_boundary_values() {
        assert_eq!(pair_prob(&with_diff(0.0), One, One, Plus, Plus), 0.5);
        assert!((pair_prob(&with_diff(PI / 2.0), One, One, Plus, Plus) - 0.25).abs() < EXACT_TOL);
        assert!((pair_prob(&with_diff(PI), One, One, Plus, Minus) - 0.5).abs() < EXACT_TOL);
        let a = AngleConfig::new(0.0, 0.0, 0.0, -PI / 4.0).unwrap();
        assert!((pair_prob(&a, One, Two, Plus, Plus) - HALF_COS2_PI_8).abs() < EXACT_TOL);
    }

    #[test]
    fn pair_table_blocks_normalize() {
        let t = build_pair_table(&AngleConfig::new(0.3, -1.7, 2.9, 11.0).unwrap());
        for (i, j) in setting_pairs() {
            assert!((t.block_sum(i, j) - 1.0).abs() < EXACT_TOL);
        }
        let t = build_pair_table(&AngleConfig::tsirelson());
        assert!((t.get(One, One, Plus, Plus) - HALF_COS2_PI_8).abs() < EXACT_TOL);
    }

    #[test]
    fn equal_angles_give_perfect_correlation_table() {
        let t = build_pair_table(&AngleConfig::uniform(0.42).unwrap());
        for (i, j) in setting_pairs() {
            for (a, b) in outcome_pairs() {
                let want = if a == b { 0.5 } else { 0.0 };
                assert_eq!(t.get(i, j, a, b), want);
            }
        }
    }

    #[test]
    fn measure_weights() {
        let m = build_measure(&AngleConfig::tsirelson());
        assert!((m.total() - 1.0).abs() < EXACT_TOL);
        let w = m.weight(OmegaPoint::new([1, 0, -1, 0]).unwrap());
        assert!((w - EIGHTH_SIN2_PI_8).abs() < EXACT_TOL);

        let m = build_measure(&AngleConfig::new(0.7, 1.0, 0.7, 2.0).unwrap());
        assert!((m.weight(OmegaPoint::new([1, 0, 1, 0]).unwrap()) - 0.125).abs() < EXACT_TOL);
    }

    #[test]
    fn variables_follow_positions() {
        let v = evaluate_variables(OmegaPoint::new([1, 0, -1, 0]).unwrap());
        assert_eq!((v.a1, v.a2, v.b1, v.b2), (1, 0, -1, 0));
        assert_eq!((v.eta_left, v.eta_right), (One, One));

        let v = evaluate_variables(OmegaPoint::new([1, 0, 0, 1]).unwrap());
        assert_eq!((v.a1, v.a2, v.b1, v.b2), (1, 0, 0, 1));
        assert_eq!((v.eta_left, v.eta_right), (One, Two));

        let v = evaluate_variables(OmegaPoint::new([0, -1, 0, -1]).unwrap());
        assert_eq!((v.a1, v.a2, v.b1, v.b2), (0, -1, 0, -1));
        assert_eq!((v.eta_left, v.eta_right), (Two, Two));
    }

    #[test]
    fn omega_rejects_bad_zero_patterns() {
        for bad in [[0, 0, 1, 0], [1, 1, 1, 0], [1, 0, 1, 1], [1, 0, 0, 0], [2, 0, 1, 0]] {
            assert!(matches!(OmegaPoint::new(bad), Err(ModelError::InvalidOmega(_))));
        }
    }

    #[test]
    fn canonical_order_round_trips() {
        let all = OmegaPoint::all();
        assert_eq!(all[0].coords(), [1, 0, 1, 0]);
        assert_eq!(all[1].coords(), [1, 0, -1, 0]);
        assert_eq!(all[4].coords(), [1, 0, 0, 1]);
        assert_eq!(all[15].coords(), [0, -1, 0, -1]);
        for (k, w) in all.iter().enumerate() {
            assert_eq!(w.canonical_index(), k);
        }
    }

    #[test]
    fn conditional_table_round_trip_and_degenerate() {
        let a = AngleConfig::tsirelson();
        let cond = conditional_table(&build_measure(&a)).unwrap();
        assert!(cond.max_abs_diff(&build_pair_table(&a)) < EXACT_TOL);
        assert!((cond.get(Two, Two, Plus, Plus) - HALF_COS2_3PI_8).abs() < EXACT_TOL);

        let uniform = Measure::from_weights([1.0 / 16.0; 16]).unwrap();
        let cond = conditional_table(&uniform).unwrap();
        for (i, j) in setting_pairs() {
            for (x, y) in outcome_pairs() {
                assert!((cond.get(i, j, x, y) - 0.25).abs() < EXACT_TOL);
            }
        }

        let mut w = [0.0; 16];
        w[0] = 1.0;
        let point = Measure::from_weights(w).unwrap();
        assert!(matches!(
            conditional_table(&point),
            Err(ModelError::DegenerateConditioning { i: 1, j: 1, .. })
        ));
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::from_weights([0.0; 16]).is_err());
        let mut w = [1.0 / 16.0; 16];
        w[3] = -w[3];
        assert!(Measure::from_weights(w).is_err());
    }

    #[test]
    fn correlation_values() {
        assert!((correlation(&with_diff(0.0), One, One) - 1.0).abs() < EXACT_TOL);
        assert!(correlation(&with_diff(PI / 2.0), One, One).abs() < EXACT_TOL);
        assert!((correlation(&with_diff(PI / 4.0), One, One) - COS_PI_4).abs() < EXACT_TOL);
    }

    #[test]
    fn chsh_at_tsirelson_and_classical_configs() {
        let c = chsh_value(&AngleConfig::tsirelson(), ChshPattern::Minus22);
        assert!((c.s - TWO_SQRT2).abs() < EXACT_TOL);
        assert!((c.s_max - TWO_SQRT2).abs() < EXACT_TOL);
        assert_eq!(c.s_max_pattern, ChshPattern::Minus22);

        let c = chsh_value(&AngleConfig::uniform(1.1).unwrap(), ChshPattern::Minus22);
        for row in c.correlations {
            for e in row {
                assert!((e - 1.0).abs() < EXACT_TOL);
            }
        }
        assert!((c.s_max - 2.0).abs() < EXACT_TOL);
    }

    #[test]
    fn rejects_non_finite_angles() {
        assert!(AngleConfig::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(AngleConfig::new(0.0, 0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn angle_config_file_round_trip() {
        let a = AngleConfig::new(0.1, -2.5, 3.25, 1e-3).unwrap();
        assert_eq!(AngleConfig::from_config_str(&a.to_config_string()).unwrap(), a);
        let text = "# analyzer\ntheta1 = 0\n\ntheta2=1.5707963267948966\ntheta1p=0.7853981633974483\ntheta2p=-0.7853981633974483\n";
        assert_eq!(AngleConfig::from_config_str(text).unwrap(), AngleConfig::tsirelson());
    }

    #[test]
    fn angle_config_file_errors() {
        assert!(AngleConfig::from_config_str("theta1=0\ntheta2=0\ntheta1p=0\n").is_err());
        assert_eq!(AngleConfig::from_config_str("theta1=0\ntheta1=1").unwrap_err().line, 2);
        assert!(AngleConfig::from_config_str("phi=0").is_err());
        assert!(AngleConfig::from_config_str("theta1=x").is_err());
        assert!(AngleConfig::from_config_str("theta1=inf\ntheta2=0\ntheta1p=0\ntheta2p=0").is_err());
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!("21".parse::<ChshPattern>().unwrap(), ChshPattern::Minus21);
        assert!("33".parse::<ChshPattern>().is_err());
        assert_eq!(ChshPattern::default(), ChshPattern::Minus22);
    }
}
