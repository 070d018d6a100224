//! Unimodal toy UBQPs and the smoothed objective
//! `g(x) = (1 − λ)·f(x) + λ·α·f̂(x)`.
//!
//! Every toy matrix factors into a sign pattern and a magnitude matrix. The
//! sign of entry `(i, j)` is `+` exactly when `x*_i = x*_j = 1` and `−`
//! otherwise (pairs where both anchor bits are 0 are negative too). The
//! magnitude depends on the kind:
//!
//! | kind            | magnitude `w_ij` (one-based `i`, `j`)  |
//! |-----------------|----------------------------------------|
//! | `PlusMinusOne`  | `1`                                    |
//! | `PlusMinusI`    | `max(i, j)`                            |
//! | `Random`        | uniform integer in `[1, 100]`, mirrored |
//!
//! Whatever the magnitudes, the anchor is the only point without a strictly
//! improving flip: from any other point either some bit outside the anchor is
//! set (clearing it removes only negative terms) or some anchor bit is clear
//! (setting it adds only positive terms).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::budget::{Budget, BudgetUnit};
use crate::error::{Error, Result};
use crate::qcore::{check_dim, check_index, Form, QuadraticForm, Solution, UbqpInstance};
use crate::rng::Rng64;

/// Smoothed flip deltas at or below this are not improvements.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

/// Upper bound of the random magnitudes.
pub const RANDOM_MAGNITUDE_MAX: u8 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToyKind {
    /// Entries `±1`.
    PlusMinusOne,
    /// Entries `±max(i, j)`.
    PlusMinusI,
    /// Entries `±u`, `u` uniform in `[1, 100]`.
    Random,
}

impl ToyKind {
    pub const ALL: [ToyKind; 3] = [ToyKind::PlusMinusOne, ToyKind::PlusMinusI, ToyKind::Random];

    pub fn label(self) -> &'static str {
        match self {
            ToyKind::PlusMinusOne => "plusminus1",
            ToyKind::PlusMinusI => "plusminusi",
            ToyKind::Random => "random",
        }
    }

    /// α used for the 18-variable landscape study (original entries in
    /// `[-100, 100]`, mean magnitude about 50).
    pub fn landscape_preset_alpha(self) -> f64 {
        match self {
            ToyKind::PlusMinusOne => 50.0,
            ToyKind::PlusMinusI => 2.8,
            ToyKind::Random => 1.0,
        }
    }

    /// α used on the 2500-variable ORLIB instances.
    pub fn bqp2500_preset_alpha(self) -> f64 {
        match self {
            ToyKind::PlusMinusOne => 5.0,
            ToyKind::PlusMinusI => 0.002,
            ToyKind::Random => 0.05,
        }
    }
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plusminus1" | "pm1" | "q1" | "1" => Ok(ToyKind::PlusMinusOne),
            "plusminusi" | "pmi" | "q2" | "2" => Ok(ToyKind::PlusMinusI),
            "random" | "q3" | "3" => Ok(ToyKind::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown toy kind {other:?} (expected plusminus1, plusminusi or random)"
            ))),
        }
    }
}

impl fmt::Display for ToyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A unimodal toy UBQP whose unique local optimum is `anchor`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyMatrix {
    kind: ToyKind,
    anchor: Solution,
    /// Row-major `n × n` symmetric magnitudes, present only for `Random`.
    magnitudes: Option<Vec<u8>>,
    seed: u64,
}

impl ToyMatrix {
    /// Builds the toy for `anchor`. `seed` only affects [`ToyKind::Random`].
    pub fn construct(kind: ToyKind, anchor: Solution, seed: u64) -> Self {
        let magnitudes = match kind {
            ToyKind::Random => Some(random_magnitudes(anchor.len(), seed)),
            _ => None,
        };
        Self {
            kind,
            anchor,
            magnitudes,
            seed,
        }
    }

    /// Re-anchors the toy. The deterministic kinds only swap the anchor;
    /// `Random` draws fresh magnitudes from `seed`.
    pub fn reconstruct(&mut self, anchor: &Solution, seed: u64) {
        debug_assert_eq!(anchor.len(), self.anchor.len());
        self.anchor.clone_from(anchor);
        self.seed = seed;
        if self.kind == ToyKind::Random {
            self.magnitudes = Some(random_magnitudes(anchor.len(), seed));
        }
    }

    pub fn kind(&self) -> ToyKind {
        self.kind
    }

    pub fn anchor(&self) -> &Solution {
        &self.anchor
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn magnitude(&self, i: usize, j: usize) -> i64 {
        match (&self.magnitudes, self.kind) {
            (_, ToyKind::PlusMinusOne) => 1,
            (_, ToyKind::PlusMinusI) => (i.max(j) + 1) as i64,
            (Some(m), ToyKind::Random) => i64::from(m[i * self.anchor.len() + j]),
            (None, ToyKind::Random) => unreachable!("random toy without magnitudes"),
        }
    }

    /// Largest `|Q̂_ij|`.
    pub fn max_magnitude(&self) -> i64 {
        match (&self.magnitudes, self.kind) {
            (_, ToyKind::PlusMinusOne) => i64::from(!self.anchor.is_empty()),
            (_, ToyKind::PlusMinusI) => self.anchor.len() as i64,
            (Some(m), ToyKind::Random) => m.iter().copied().max().map_or(0, i64::from),
            (None, ToyKind::Random) => 0,
        }
    }

    pub fn to_instance(&self) -> Result<UbqpInstance> {
        UbqpInstance::from_form(self)
    }
}

fn random_magnitudes(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = <Rng64 as rand::SeedableRng>::seed_from_u64(seed);
    let mut m = vec![0u8; n * n];
    // Lower triangle in row-major order, mirrored.
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(1..=RANDOM_MAGNITUDE_MAX);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

impl QuadraticForm for ToyMatrix {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> i64 {
        let w = self.magnitude(i, j);
        if self.anchor.is_set(i) && self.anchor.is_set(j) {
            w
        } else {
            -w
        }
    }

    fn evaluate_form(&self, x: &Solution, form: Form) -> Result<i64> {
        check_dim(self.dim(), x)?;
        if self.kind == ToyKind::PlusMinusOne {
            return Ok(plus_minus_one_closed_form(&self.anchor, x, form));
        }
        let ones: Vec<usize> = x.ones_indices().collect();
        let w = form.pair_weight();
        let mut total = 0i64;
        for (a, &i) in ones.iter().enumerate() {
            total += self.entry(i, i);
            for &j in &ones[a + 1..] {
                total += w * self.entry(i, j);
            }
        }
        Ok(total)
    }
}

/// Value of the `±1` toy from two counts: `b` ones shared with the anchor and
/// `t` ones in total. Full form: `2b² − t²`; upper triangle: `b(b+1) − t(t+1)/2`.
pub fn plus_minus_one_closed_form(anchor: &Solution, x: &Solution, form: Form) -> i64 {
    let t = x.count_ones() as i64;
    let b = x
        .bits()
        .iter()
        .zip(anchor.bits())
        .filter(|(&a, &s)| a == 1 && s == 1)
        .count() as i64;
    match form {
        Form::Full => 2 * b * b - t * t,
        Form::UpperTriangle => b * (b + 1) - t * (t + 1) / 2,
    }
}

/// `f̂(x) = x^T Q̂ x`.
pub fn toy_evaluate(toy: &ToyMatrix, x: &Solution) -> Result<i64> {
    toy.evaluate(x)
}

/// Default target bound for α: the mean absolute entry of the instance,
/// rounded to an integer (kept unrounded when it would round to zero).
pub fn default_target_bound(inst: &UbqpInstance) -> Result<f64> {
    let mean = inst.mean_abs();
    let rounded = mean.round();
    let bound = if rounded > 0.0 { rounded } else { mean };
    if bound > 0.0 {
        Ok(bound)
    } else {
        Err(Error::InvalidParameter(
            "instance has no nonzero entries; α cannot be derived".into(),
        ))
    }
}

/// `target_bound / max|Q̂_ij|`: scales the toy so its largest entry equals the bound.
pub fn auto_alpha(toy: &ToyMatrix, target_bound: f64) -> Result<f64> {
    if !(target_bound.is_finite() && target_bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target bound must be positive, got {target_bound}"
        )));
    }
    let max = toy.max_magnitude();
    if max == 0 {
        return Err(Error::DegenerateToy);
    }
    Ok(target_bound / max as f64)
}

/// How α is chosen for a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSpec {
    /// `round(mean_abs(Q)) / max|Q̂|`.
    Auto,
    /// `bound / max|Q̂|`.
    Target(f64),
    Fixed(f64),
    LandscapePreset,
    Bqp2500Preset,
}

impl AlphaSpec {
    pub fn resolve(self, inst: &UbqpInstance, toy: &ToyMatrix) -> Result<f64> {
        let alpha = match self {
            AlphaSpec::Auto => auto_alpha(toy, default_target_bound(inst)?)?,
            AlphaSpec::Target(bound) => auto_alpha(toy, bound)?,
            AlphaSpec::Fixed(a) => a,
            AlphaSpec::LandscapePreset => toy.kind().landscape_preset_alpha(),
            AlphaSpec::Bqp2500Preset => toy.kind().bqp2500_preset_alpha(),
        };
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "α must be positive, got {alpha}"
            )));
        }
        Ok(alpha)
    }
}

/// `auto`, `target:<bound>`, `landscape`, `bqp2500`, or a positive number.
impl FromStr for AlphaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(AlphaSpec::Auto),
            "landscape" | "preset-landscape" => Ok(AlphaSpec::LandscapePreset),
            "bqp2500" | "preset-bqp2500" => Ok(AlphaSpec::Bqp2500Preset),
            _ => {
                let parse = |v: &str| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|a| a.is_finite() && *a > 0.0)
                        .ok_or_else(|| {
                            Error::InvalidParameter(format!("bad α specification {s:?}"))
                        })
                };
                match s.strip_prefix("target:") {
                    Some(bound) => Ok(AlphaSpec::Target(parse(bound)?)),
                    None => Ok(AlphaSpec::Fixed(parse(s)?)),
                }
            }
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Auto => f.write_str("auto"),
            AlphaSpec::Target(b) => write!(f, "target:{b}"),
            AlphaSpec::Fixed(a) => write!(f, "{a}"),
            AlphaSpec::LandscapePreset => f.write_str("landscape"),
            AlphaSpec::Bqp2500Preset => f.write_str("bqp2500"),
        }
    }
}

/// `g(x) = (1 − λ)·f(x) + λ·α·f̂(x)`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothedObjective<'a> {
    instance: &'a UbqpInstance,
    toy: &'a ToyMatrix,
    lambda: f64,
    alpha: f64,
}

impl<'a> SmoothedObjective<'a> {
    pub fn new(instance: &'a UbqpInstance, toy: &'a ToyMatrix, lambda: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
        }
        if toy.dim() != instance.n() {
            return Err(Error::DimensionMismatch {
                expected: instance.n(),
                found: toy.dim(),
            });
        }
        Ok(Self {
            instance,
            toy,
            lambda,
            alpha,
        })
    }

    pub fn instance(&self) -> &'a UbqpInstance {
        self.instance
    }

    pub fn toy(&self) -> &'a ToyMatrix {
        self.toy
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(1 − λ, λ·α)`.
    #[inline]
    pub fn weights(&self) -> (f64, f64) {
        (1.0 - self.lambda, self.lambda * self.alpha)
    }

    /// Combines an original-objective quantity with a toy quantity.
    #[inline]
    pub fn combine(&self, original: i64, toy: i64) -> f64 {
        let (wo, wt) = self.weights();
        wo * original as f64 + wt * toy as f64
    }

    pub fn evaluate(&self, x: &Solution) -> Result<f64> {
        self.evaluate_form(x, Form::Full)
    }

    pub fn evaluate_form(&self, x: &Solution, form: Form) -> Result<f64> {
        Ok(self.combine(
            self.instance.evaluate_form(x, form)?,
            self.toy.evaluate_form(x, form)?,
        ))
    }

    pub fn flip_delta(&self, x: &Solution, k: usize) -> Result<f64> {
        check_index(self.instance.n(), k)?;
        Ok(self.combine(self.instance.flip_delta(x, k)?, self.toy.flip_delta(x, k)?))
    }
}

/// `(1 − λ)·f(x) + λ·α·f̂(x)`.
pub fn smoothed_evaluate(g: &SmoothedObjective<'_>, x: &Solution) -> Result<f64> {
    g.evaluate(x)
}

#[inline]
pub fn is_improving(delta: f64) -> bool {
    delta > IMPROVEMENT_TOLERANCE
}

/// Piecewise-constant λ over consumed budget.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSchedule {
    unit: BudgetUnit,
    steps: Vec<(f64, f64)>,
}

/// Step values used on the ORLIB benchmarks: raised by 0.001 every fifth of
/// the budget up to 0.004.
pub const STEP_VALUES: [f64; 4] = [0.001, 0.002, 0.003, 0.004];
pub const STEP_FRACTIONS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const STEP_LAMBDA_MAX: f64 = 0.004;

impl LambdaSchedule {
    /// `steps` are `(threshold, value)` pairs; thresholds strictly increase
    /// and every value lies in `[0, lambda_max]`.
    pub fn new(unit: BudgetUnit, steps: Vec<(f64, f64)>, lambda_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_max) {
            return Err(Error::LambdaOutOfRange(lambda_max));
        }
        for w in steps.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter(format!(
                    "schedule thresholds must strictly increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, v) in &steps {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParameter(format!("bad schedule threshold {t}")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::LambdaOutOfRange(v));
            }
            if v > lambda_max {
                return Err(Error::InvalidParameter(format!(
                    "schedule value {v} exceeds λ_max {lambda_max}"
                )));
            }
        }
        Ok(Self { unit, steps })
    }

    pub fn constant(unit: BudgetUnit, value: f64) -> Result<Self> {
        Self::new(unit, vec![(0.0, value)], 1.0)
    }

    pub fn zero(unit: BudgetUnit) -> Self {
        Self {
            unit,
            steps: Vec::new(),
        }
    }

    /// 0 → 0.001 at 200 s, 0.002 at 400 s, 0.003 at 600 s, 0.004 at 800 s.
    pub fn stepped() -> Self {
        Self::stepped_for(Budget::seconds(1000.0))
    }

    /// The benchmark schedule stretched over `budget`: steps at 20/40/60/80 %.
    pub fn stepped_for(budget: Budget) -> Self {
        let steps = STEP_FRACTIONS
            .iter()
            .zip(STEP_VALUES)
            .map(|(f, v)| (f * budget.amount, v))
            .collect();
        Self {
            unit: budget.unit,
            steps,
        }
    }

    /// Parses `stepped`, `none`, `const:<v>`, or `steps:<t>=<v>,...` where a
    /// threshold may be written as a percentage of `budget` (`20%=0.001`).
    pub fn parse(text: &str, budget: Budget) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("λ schedule {text:?}: {msg}"));
        match text {
            "stepped" => return Ok(Self::stepped_for(budget)),
            "none" | "zero" => return Ok(Self::zero(budget.unit)),
            _ => {}
        }
        if let Some(v) = text.strip_prefix("const:") {
            let v: f64 = v.parse().map_err(|_| bad(format!("bad value {v:?}")))?;
            return Self::constant(budget.unit, v);
        }
        let body = text
            .strip_prefix("steps:")
            .ok_or_else(|| bad("expected stepped, none, const:<v> or steps:<t>=<v>,...".into()))?;
        let mut steps = Vec::new();
        for item in body.split(',').filter(|s| !s.is_empty()) {
            let (t, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("step {item:?} lacks '='")))?;
            let threshold = match t.strip_suffix('%') {
                Some(pct) => {
                    let p: f64 = pct.parse().map_err(|_| bad(format!("bad percentage {t:?}")))?;
                    p / 100.0 * budget.amount
                }
                None => t.parse().map_err(|_| bad(format!("bad threshold {t:?}")))?,
            };
            let value: f64 = v.parse().map_err(|_| bad(format!("bad value {v:?}")))?;
            steps.push((threshold, value));
        }
        Self::new(budget.unit, steps, 1.0)
    }

    pub fn unit(&self) -> BudgetUnit {
        self.unit
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    /// Value of the last step whose threshold does not exceed `consumed`;
    /// 0 before the first step.
    pub fn lambda_at(&self, consumed: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(t, _)| *t <= consumed)
            .last()
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn max_value(&self) -> f64 {
        self.steps.iter().map(|&(_, v)| v).fold(0.0, f64::max)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.steps.iter().all(|&(_, v)| v == 0.0)
    }
}

impl fmt::Display for LambdaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return write!(f, "none ({})", self.unit.label());
        }
        f.write_str("steps:")?;
        for (i, (t, v)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}={v}")?;
        }
        write!(f, " ({})", self.unit.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn anchor5() -> Solution {
        "01011".parse().unwrap()
    }

    fn materialize(toy: &ToyMatrix) -> Vec<Vec<i64>> {
        let n = toy.dim();
        (0..n).map(|i| (0..n).map(|j| toy.entry(i, j)).collect()).collect()
    }

    #[test]
    fn worked_example_plus_minus_one() {
        let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, anchor5(), 0);
        let expect = vec![
            vec![-1, -1, -1, -1, -1],
            vec![-1, 1, -1, 1, 1],
            vec![-1, -1, -1, -1, -1],
            vec![-1, 1, -1, 1, 1],
            vec![-1, 1, -1, 1, 1],
        ];
        assert_eq!(materialize(&toy), expect);
        assert_eq!(toy.to_instance().unwrap().evaluate(&anchor5()).unwrap(), 9);
    }

    #[test]
    fn worked_example_plus_minus_i() {
        let toy = ToyMatrix::construct(ToyKind::PlusMinusI, anchor5(), 0);
        let expect = vec![
            vec![-1, -2, -3, -4, -5],
            vec![-2, 2, -3, 4, 5],
            vec![-3, -3, -3, -4, -5],
            vec![-4, 4, -4, 4, 5],
            vec![-5, 5, -5, 5, 5],
        ];
        assert_eq!(materialize(&toy), expect);
        assert_eq!(toy_evaluate(&toy, &anchor5()).unwrap(), 39);
    }

    #[test]
    fn random_kind_shares_sign_pattern() {
        let pm1 = materialize(&ToyMatrix::construct(ToyKind::PlusMinusOne, anchor5(), 0));
        for seed in 0..20 {
            let toy = ToyMatrix::construct(ToyKind::Random, anchor5(), seed);
            for (i, row) in materialize(&toy).iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    assert_eq!(v.signum(), pm1[i][j]);
                    assert!((1..=100).contains(&v.abs()));
                    assert_eq!(v, toy.entry(j, i));
                }
            }
        }
    }

    #[test]
    fn random_kind_is_seed_deterministic() {
        let a = ToyMatrix::construct(ToyKind::Random, anchor5(), 9);
        let b = ToyMatrix::construct(ToyKind::Random, anchor5(), 9);
        let c = ToyMatrix::construct(ToyKind::Random, anchor5(), 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn reconstruct_is_idempotent_for_deterministic_kinds() {
        for kind in [ToyKind::PlusMinusOne, ToyKind::PlusMinusI] {
            let mut toy = ToyMatrix::construct(kind, anchor5(), 0);
            let before = materialize(&toy);
            toy.reconstruct(&anchor5(), 77);
            assert_eq!(materialize(&toy), before);
        }
    }

    #[test]
    fn anchor_value_is_square_of_support_for_plus_minus_one() {
        let mut rng = Rng64::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(1..30);
            let anchor = Solution::random(n, &mut rng);
            let k = anchor.count_ones() as i64;
            let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, anchor.clone(), 0);
            assert_eq!(toy.evaluate(&anchor).unwrap(), k * k);
            let dense = toy.to_instance().unwrap();
            assert_eq!(dense.evaluate(&anchor).unwrap(), k * k);
        }
    }

    #[test]
    fn zeros_evaluate_to_zero() {
        for kind in ToyKind::ALL {
            let toy = ToyMatrix::construct(kind, anchor5(), 3);
            assert_eq!(toy.evaluate(&Solution::zeros(5)).unwrap(), 0);
        }
    }

    #[test]
    fn closed_form_matches_matrix_exhaustively() {
        let mut rng = Rng64::seed_from_u64(8);
        for n in 1..=14 {
            let anchor = Solution::random(n, &mut rng);
            let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, anchor.clone(), 0);
            let dense = toy.to_instance().unwrap();
            for mask in 0..(1u64 << n) {
                let x = Solution::from_mask(mask, n);
                for form in [Form::Full, Form::UpperTriangle] {
                    assert_eq!(
                        plus_minus_one_closed_form(&anchor, &x, form),
                        dense.evaluate_form(&x, form).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn materialized_entries_follow_piecewise_rule() {
        let mut rng = Rng64::seed_from_u64(100);
        for trial in 0..100 {
            let n = rng.gen_range(1..=20);
            let anchor = Solution::random(n, &mut rng);
            for kind in ToyKind::ALL {
                let toy = ToyMatrix::construct(kind, anchor.clone(), trial);
                for i in 0..n {
                    for j in 0..n {
                        let positive = anchor.bit(i) * anchor.bit(j) == 1;
                        let v = toy.entry(i, j);
                        assert_eq!(v > 0, positive);
                        let one_based_max = (i.max(j) + 1) as i64;
                        match kind {
                            ToyKind::PlusMinusOne => assert_eq!(v.abs(), 1),
                            ToyKind::PlusMinusI => assert_eq!(v.abs(), one_based_max),
                            ToyKind::Random => assert!((1..=100).contains(&v.abs())),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn auto_alpha_matches_benchmark_values() {
        let anchor = Solution::zeros(2500);
        let pm1 = ToyMatrix::construct(ToyKind::PlusMinusOne, anchor.clone(), 0);
        let pmi = ToyMatrix::construct(ToyKind::PlusMinusI, anchor.clone(), 0);
        assert_eq!(auto_alpha(&pm1, 5.0).unwrap(), 5.0);
        assert!((auto_alpha(&pmi, 5.0).unwrap() - 0.002).abs() < 1e-15);
        // The random toy's largest magnitude is 100 with overwhelming
        // probability at this size.
        let rnd = ToyMatrix::construct(ToyKind::Random, Solution::zeros(200), 1);
        assert_eq!(rnd.max_magnitude(), 100);
        assert!((auto_alpha(&rnd, 5.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(auto_alpha(&pm1, 0.0).is_err());
    }

    #[test]
    fn alpha_spec_parsing() {
        assert_eq!("auto".parse::<AlphaSpec>().unwrap(), AlphaSpec::Auto);
        assert_eq!("2.8".parse::<AlphaSpec>().unwrap(), AlphaSpec::Fixed(2.8));
        assert_eq!("target:5".parse::<AlphaSpec>().unwrap(), AlphaSpec::Target(5.0));
        assert_eq!("landscape".parse::<AlphaSpec>().unwrap(), AlphaSpec::LandscapePreset);
        assert!("-1".parse::<AlphaSpec>().is_err());
        assert!("zero".parse::<AlphaSpec>().is_err());
    }

    #[test]
    fn smoothed_objective_endpoints_and_arithmetic() {
        let inst = UbqpInstance::from_dense(2, vec![1, 2, 2, 3]).unwrap();
        let toy = ToyMatrix::construct(ToyKind::PlusMinusI, "10".parse().unwrap(), 0);
        for mask in 0..4 {
            let x = Solution::from_mask(mask, 2);
            let fo = inst.evaluate(&x).unwrap();
            let ft = toy.evaluate(&x).unwrap();
            let g0 = SmoothedObjective::new(&inst, &toy, 0.0, 3.0).unwrap();
            assert_eq!(g0.evaluate(&x).unwrap(), fo as f64);
            let g1 = SmoothedObjective::new(&inst, &toy, 1.0, 3.0).unwrap();
            assert_eq!(g1.evaluate(&x).unwrap(), 3.0 * ft as f64);
        }
        let g = SmoothedObjective::new(&inst, &toy, 0.5, 1.0).unwrap();
        assert_eq!(g.combine(10, 4), 7.0);
        assert!(matches!(
            SmoothedObjective::new(&inst, &toy, 1.5, 1.0),
            Err(Error::LambdaOutOfRange(_))
        ));
        assert!(SmoothedObjective::new(&inst, &toy, 0.5, 0.0).is_err());
    }

    #[test]
    fn smoothed_delta_matches_recomputation() {
        let n = 30;
        let mut rng = Rng64::seed_from_u64(30);
        let inst = UbqpInstance::from_fn(n, |i, j| ((i * 31 + j * 31 + i * j) % 201) as i64 - 100).unwrap();
        for kind in ToyKind::ALL {
            let toy = ToyMatrix::construct(kind, Solution::random(n, &mut rng), 5);
            let g = SmoothedObjective::new(&inst, &toy, 0.37, 0.81).unwrap();
            for _ in 0..10_000 {
                let x = Solution::random(n, &mut rng);
                let k = rng.gen_range(0..n);
                let d = g.flip_delta(&x, k).unwrap();
                let full = g.evaluate(&x.flipped(k)).unwrap() - g.evaluate(&x).unwrap();
                let scale = full.abs().max(1.0);
                assert!((d - full).abs() <= 1e-9 * scale, "{d} vs {full}");
                let back = g.flip_delta(&x.flipped(k), k).unwrap();
                assert!((d + back).abs() <= 1e-12 * scale);
            }
            let g0 = SmoothedObjective::new(&inst, &toy, 0.0, 0.81).unwrap();
            let x = Solution::random(n, &mut rng);
            assert_eq!(g0.flip_delta(&x, 3).unwrap(), inst.flip_delta(&x, 3).unwrap() as f64);
        }
    }

    #[test]
    fn stepped_schedule_lookup() {
        let s = LambdaSchedule::stepped();
        assert_eq!(s.lambda_at(0.0), 0.0);
        assert_eq!(s.lambda_at(150.0), 0.0);
        assert_eq!(s.lambda_at(200.0), 0.001);
        assert_eq!(s.lambda_at(450.0), 0.002);
        assert_eq!(s.lambda_at(999.0), 0.004);
        assert_eq!(s.max_value(), STEP_LAMBDA_MAX);
    }

    #[test]
    fn schedule_parsing_and_validation() {
        let budget = Budget::evaluations(1000);
        let s = LambdaSchedule::parse("steps:20%=0.001,40%=0.002,60%=0.003,80%=0.004", budget).unwrap();
        assert_eq!(s, LambdaSchedule::stepped_for(budget));
        assert_eq!(s.lambda_at(799.0), 0.003);
        let s = LambdaSchedule::parse("steps:200=0.001,400=0.002", Budget::seconds(1000.0)).unwrap();
        assert_eq!(s.lambda_at(401.0), 0.002);
        assert_eq!(LambdaSchedule::parse("const:1", budget).unwrap().lambda_at(0.0), 1.0);
        assert!(LambdaSchedule::parse("none", budget).unwrap().is_identically_zero());
        assert!(LambdaSchedule::parse("steps:400=0.1,200=0.2", budget).is_err());
        assert!(LambdaSchedule::parse("steps:100=1.5", budget).is_err());
        assert!(LambdaSchedule::new(BudgetUnit::Seconds, vec![(0.0, 0.01)], 0.004).is_err());
    }
}
