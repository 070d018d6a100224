//! One-flip local search, random perturbation, ILS, and landscape-smoothing
//! ILS (LSILS).
//!
//! Both algorithms share one engine. ILS runs it on the original objective.
//! LSILS rebuilds a toy UBQP around the best solution found so far, descends on
//! the smoothed objective, and scores every accepted move under the original
//! objective so the best-so-far solution can move mid-descent.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::bench_io::RunLogRecord;
use crate::budget::{Budget, BudgetUnit};
use crate::error::{Error, Result};
use crate::qcore::{check_dim, Form, Gains, QuadraticForm, Solution, UbqpInstance};
use crate::rng::{derive_seed, stream};
use crate::smoothing::{
    is_improving, AlphaSpec, LambdaSchedule, SmoothedObjective, ToyKind, ToyMatrix,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PivotRule {
    /// Take the best strictly improving flip; ties go to the lowest index.
    #[default]
    BestImprovement,
    /// Take the first strictly improving flip in index order.
    FirstImprovement,
}

impl FromStr for PivotRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" | "best-improvement" => Ok(PivotRule::BestImprovement),
            "first" | "first-improvement" => Ok(PivotRule::FirstImprovement),
            other => Err(Error::InvalidParameter(format!(
                "unknown pivot rule {other:?} (expected best or first)"
            ))),
        }
    }
}

impl fmt::Display for PivotRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotRule::BestImprovement => "best",
            PivotRule::FirstImprovement => "first",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub pivot: PivotRule,
    /// Bits flipped per perturbation; `None` means `max(1, ⌊n/4⌋)`.
    pub perturbation_bits: Option<usize>,
    pub budget: Budget,
    /// Ignored by ILS.
    pub lambda_schedule: LambdaSchedule,
    /// Ignored by ILS.
    pub toy_kind: ToyKind,
    /// Ignored by ILS.
    pub alpha: AlphaSpec,
    pub seed: u64,
    /// Spacing of run-log records, in budget units.
    pub log_interval: f64,
    /// Record every LSILS iteration in [`RunResult::trace`].
    pub trace: bool,
}

impl SearchConfig {
    /// Defaults: best improvement, `n/4` perturbation, the benchmark λ schedule
    /// stretched over `budget`, the `±i` toy, automatic α, 100 log records.
    pub fn new(budget: Budget) -> Self {
        Self {
            pivot: PivotRule::default(),
            perturbation_bits: None,
            budget,
            lambda_schedule: LambdaSchedule::stepped_for(budget),
            toy_kind: ToyKind::PlusMinusI,
            alpha: AlphaSpec::Auto,
            seed: 0,
            log_interval: budget.amount / 100.0,
            trace: false,
        }
    }

    pub fn perturbation_bits_for(&self, n: usize) -> usize {
        self.perturbation_bits.unwrap_or((n / 4).max(1))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bits = self.perturbation_bits_for(n);
        if bits == 0 || bits > n {
            return Err(Error::InvalidParameter(format!(
                "perturbation flips {bits} bits but n = {n}"
            )));
        }
        if !(self.budget.amount.is_finite() && self.budget.amount > 0.0) {
            return Err(Error::InvalidParameter("budget must be positive".into()));
        }
        if !(self.log_interval.is_finite() && self.log_interval > 0.0) {
            return Err(Error::InvalidParameter("log interval must be positive".into()));
        }
        if self.lambda_schedule.unit() != self.budget.unit {
            return Err(Error::InvalidParameter(format!(
                "λ schedule counts {} but the budget counts {}",
                self.lambda_schedule.unit().label(),
                self.budget.unit.label()
            )));
        }
        Ok(())
    }
}

/// The objective a local search climbs.
#[derive(Clone, Copy, Debug)]
pub enum Objective<'a> {
    Original(&'a UbqpInstance),
    Smoothed(SmoothedObjective<'a>),
}

impl<'a> Objective<'a> {
    pub fn instance(&self) -> &'a UbqpInstance {
        match self {
            Objective::Original(inst) => inst,
            Objective::Smoothed(g) => g.instance(),
        }
    }
}

/// Best solution under the original objective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestSoFar {
    pub solution: Solution,
    pub value: i64,
}

impl BestSoFar {
    pub fn new(inst: &UbqpInstance, solution: Solution) -> Result<Self> {
        let value = inst.evaluate(&solution)?;
        Ok(Self { solution, value })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSearchOutcome {
    pub solution: Solution,
    /// Accepted flips.
    pub flips: u64,
    /// One-flip gain evaluations spent.
    pub evaluations: u64,
}

/// Picks `bits` distinct positions of `0..n` by a partial Fisher–Yates shuffle.
pub fn sample_positions<R: Rng + ?Sized>(n: usize, bits: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..bits {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(bits);
    idx
}

/// Flips exactly `bits` distinct, uniformly chosen positions.
pub fn perturb<R: Rng + ?Sized>(x: &Solution, bits: usize, rng: &mut R) -> Result<Solution> {
    if bits == 0 || bits > x.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot flip {bits} bits of a {}-bit solution",
            x.len()
        )));
    }
    let mut out = x.clone();
    for k in sample_positions(x.len(), bits, rng) {
        out.flip(k);
    }
    Ok(out)
}

/// Climbs from `start` until no flip strictly improves `objective`.
///
/// With a tracker, every accepted flip is scored under the original objective
/// and the tracker takes the new point whenever it is strictly better.
pub fn local_search(
    objective: &Objective<'_>,
    start: Solution,
    pivot: PivotRule,
    tracker: Option<&mut BestSoFar>,
) -> Result<LocalSearchOutcome> {
    let inst = objective.instance();
    check_dim(inst.n(), &start)?;
    let mut walker = Walker::new(inst, start)?;
    if let Objective::Smoothed(g) = objective {
        walker.set_toy(Cow::Borrowed(g.toy()), g.lambda(), g.alpha())?;
    }
    let tracking = tracker.is_some();
    if let Some(t) = tracker.as_deref() {
        check_dim(inst.n(), &t.solution)?;
        walker.best = t.solution.clone();
        walker.best_value = t.value;
    }
    let mut meter = Meter::unlimited();
    let flips = walker.descend(pivot, &mut meter, tracking);
    if let Some(t) = tracker {
        if walker.best_value > t.value {
            t.solution = walker.best.clone();
            t.value = walker.best_value;
        }
    }
    Ok(LocalSearchOutcome {
        solution: walker.x,
        flips,
        evaluations: meter.evaluations,
    })
}

/// Time-stamped best-so-far trace.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub unit: BudgetUnit,
    pub records: Vec<RunLogRecord>,
}

/// One LSILS iteration, recorded when [`SearchConfig::trace`] is set.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub lambda: f64,
    /// Anchor of the toy used in this iteration (`None` while λ = 0).
    pub anchor: Option<Solution>,
    /// Local optimum of the smoothed objective reached in this iteration.
    pub local_optimum: Solution,
    pub best_value: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: Solution,
    pub best_value: i64,
    pub log: RunLog,
    pub evaluations: u64,
    /// Perturbation + descent rounds after the initial descent.
    pub iterations: u64,
    /// Toy constructions (LSILS only).
    pub toy_constructions: u64,
    /// Initial local optimum on the original objective.
    pub initial_local_optimum: Solution,
    pub trace: Vec<IterationTrace>,
}

/// Iterated local search on the original objective. Each round perturbs the
/// current local optimum and descends again; the new local optimum always
/// becomes current.
pub fn ils(inst: &UbqpInstance, config: &SearchConfig) -> Result<RunResult> {
    run(inst, config, false)
}

/// Landscape-smoothing ILS.
pub fn lsils(inst: &UbqpInstance, config: &SearchConfig) -> Result<RunResult> {
    run(inst, config, true)
}

fn run(inst: &UbqpInstance, config: &SearchConfig, smoothing: bool) -> Result<RunResult> {
    let n = inst.n();
    config.validate(n)?;
    let bits = config.perturbation_bits_for(n);
    let mut init_rng = stream(config.seed, "init", 0);
    let mut perturb_rng = stream(config.seed, "perturb", 0);

    let mut meter = Meter::new(config.budget, config.log_interval);
    let mut walker = Walker::new(inst, Solution::random(n, &mut init_rng))?;

    // x(0): one descent on the original objective.
    walker.descend(config.pivot, &mut meter, true);
    let initial_local_optimum = walker.x.clone();
    walker.anchor_dirty = true;

    let mut lambda = 0.0;
    let mut alpha = None;
    let mut constructions = 0u64;
    let mut iterations = 0u64;
    let mut trace = Vec::new();
    if smoothing {
        lambda = config.lambda_schedule.lambda_at(meter.consumed());
    }
    meter.checkpoint(walker.best_value, lambda);

    while !meter.exhausted() {
        if smoothing && lambda > 0.0 {
            let needs_toy = walker.toy.is_none() || walker.anchor_dirty;
            if needs_toy {
                let seed = derive_seed(config.seed, "toy", constructions);
                let toy = match walker.toy.take() {
                    Some(term) => {
                        let mut m = term.matrix.into_owned();
                        m.reconstruct(&walker.best, seed);
                        m
                    }
                    None => ToyMatrix::construct(config.toy_kind, walker.best.clone(), seed),
                };
                constructions += 1;
                let a = match alpha {
                    Some(a) => a,
                    None => {
                        let a = config.alpha.resolve(inst, &toy)?;
                        alpha = Some(a);
                        a
                    }
                };
                walker.set_toy(Cow::Owned(toy), lambda, a)?;
                walker.anchor_dirty = false;
            } else if let Some(term) = walker.toy.as_mut() {
                term.set_weights(lambda, alpha.expect("α resolved with the first toy"));
            }
        } else {
            walker.toy = None;
        }
        let anchor = walker.toy.as_ref().map(|t| t.matrix.anchor().clone());

        for k in sample_positions(n, bits, &mut perturb_rng) {
            walker.flip(k);
        }
        walker.descend(config.pivot, &mut meter, true);
        iterations += 1;

        if config.trace {
            trace.push(IterationTrace {
                lambda,
                anchor,
                local_optimum: walker.x.clone(),
                best_value: walker.best_value,
            });
        }
        if smoothing {
            lambda = config.lambda_schedule.lambda_at(meter.consumed());
        }
        meter.checkpoint(walker.best_value, lambda);
    }
    meter.finish(walker.best_value, lambda);

    debug_assert_eq!(inst.evaluate(&walker.best).ok(), Some(walker.best_value));
    Ok(RunResult {
        best: walker.best,
        best_value: walker.best_value,
        log: RunLog {
            unit: config.budget.unit,
            records: meter.records,
        },
        evaluations: meter.evaluations,
        iterations,
        toy_constructions: constructions,
        initial_local_optimum,
        trace,
    })
}

/// Budget accounting and run-log emission.
struct Meter {
    unit: BudgetUnit,
    limit: f64,
    evaluations: u64,
    start: Instant,
    interval: f64,
    next_log: f64,
    records: Vec<RunLogRecord>,
}

impl Meter {
    fn new(budget: Budget, interval: f64) -> Self {
        Self {
            unit: budget.unit,
            limit: budget.amount,
            evaluations: 0,
            start: Instant::now(),
            interval,
            next_log: interval,
            records: Vec::new(),
        }
    }

    fn unlimited() -> Self {
        Self::new(Budget::evaluations(u64::MAX), f64::INFINITY)
    }

    #[inline]
    fn charge(&mut self, evaluations: u64) {
        self.evaluations += evaluations;
    }

    fn consumed(&self) -> f64 {
        match self.unit {
            BudgetUnit::Evaluations => self.evaluations as f64,
            BudgetUnit::Seconds => self.start.elapsed().as_secs_f64(),
        }
    }

    fn exhausted(&self) -> bool {
        self.consumed() >= self.limit
    }

    fn push(&mut self, elapsed: f64, best_f: i64, lambda: f64) {
        self.records.push(RunLogRecord {
            elapsed,
            evaluations: self.evaluations,
            best_f,
            lambda,
            excess: None,
        });
    }

    fn checkpoint(&mut self, best_f: i64, lambda: f64) {
        let now = self.consumed();
        if now >= self.next_log {
            self.push(now, best_f, lambda);
            while self.next_log <= now {
                self.next_log += self.interval;
            }
        }
    }

    fn finish(&mut self, best_f: i64, lambda: f64) {
        let now = self.consumed();
        if self.records.last().is_none_or(|r| r.elapsed < now) {
            self.push(now, best_f, lambda);
        }
    }
}

struct ToyTerm<'t> {
    matrix: Cow<'t, ToyMatrix>,
    gains: Gains,
    w_orig: f64,
    w_toy: f64,
}

impl ToyTerm<'_> {
    fn set_weights(&mut self, lambda: f64, alpha: f64) {
        self.w_orig = 1.0 - lambda;
        self.w_toy = lambda * alpha;
    }
}

/// Current solution with gain caches for the original objective and,
/// optionally, a toy; plus best-so-far under the original objective.
struct Walker<'a, 't> {
    inst: &'a UbqpInstance,
    x: Solution,
    gains: Gains,
    value: i64,
    toy: Option<ToyTerm<'t>>,
    best: Solution,
    best_value: i64,
    anchor_dirty: bool,
}

impl<'a, 't> Walker<'a, 't> {
    fn new(inst: &'a UbqpInstance, x: Solution) -> Result<Self> {
        let gains = Gains::build(inst, &x, Form::Full)?;
        let value = inst.evaluate(&x)?;
        Ok(Self {
            inst,
            best: x.clone(),
            best_value: value,
            x,
            gains,
            value,
            toy: None,
            anchor_dirty: false,
        })
    }

    fn set_toy(&mut self, matrix: Cow<'t, ToyMatrix>, lambda: f64, alpha: f64) -> Result<()> {
        let gains = Gains::build(matrix.as_ref(), &self.x, Form::Full)?;
        let mut term = ToyTerm {
            matrix,
            gains,
            w_orig: 0.0,
            w_toy: 0.0,
        };
        term.set_weights(lambda, alpha);
        self.toy = Some(term);
        Ok(())
    }

    #[inline]
    fn flip(&mut self, k: usize) {
        self.value += self.gains.get(k);
        self.gains.update_dense(self.inst, &self.x, k);
        if let Some(t) = self.toy.as_mut() {
            t.gains.update(t.matrix.as_ref(), &self.x, k);
        }
        self.x.flip(k);
    }

    fn track(&mut self) {
        if self.value > self.best_value {
            self.best.clone_from(&self.x);
            self.best_value = self.value;
            self.anchor_dirty = true;
        }
    }

    /// Next move under the pivot rule, charging the meter for every gain read.
    fn select(&self, pivot: PivotRule, meter: &mut Meter) -> Option<usize> {
        let n = self.x.len();
        let orig = self.gains.as_slice();
        match (&self.toy, pivot) {
            (None, PivotRule::BestImprovement) => {
                meter.charge(n as u64);
                let mut best: Option<(usize, i64)> = None;
                for (k, &g) in orig.iter().enumerate() {
                    if g > 0 && best.is_none_or(|(_, b)| g > b) {
                        best = Some((k, g));
                    }
                }
                best.map(|(k, _)| k)
            }
            (None, PivotRule::FirstImprovement) => {
                let found = orig.iter().position(|&g| g > 0);
                meter.charge(found.map_or(n, |k| k + 1) as u64);
                found
            }
            (Some(t), PivotRule::BestImprovement) => {
                meter.charge(n as u64);
                let toy = t.gains.as_slice();
                let mut best: Option<(usize, f64)> = None;
                for (k, (&go, &gt)) in orig.iter().zip(toy).enumerate() {
                    let g = t.w_orig * go as f64 + t.w_toy * gt as f64;
                    if is_improving(g) && best.is_none_or(|(_, b)| g > b) {
                        best = Some((k, g));
                    }
                }
                best.map(|(k, _)| k)
            }
            (Some(t), PivotRule::FirstImprovement) => {
                let toy = t.gains.as_slice();
                let found = orig
                    .iter()
                    .zip(toy)
                    .position(|(&go, &gt)| is_improving(t.w_orig * go as f64 + t.w_toy * gt as f64));
                meter.charge(found.map_or(n, |k| k + 1) as u64);
                found
            }
        }
    }

    fn descend(&mut self, pivot: PivotRule, meter: &mut Meter, tracking: bool) -> u64 {
        let mut flips = 0;
        while let Some(k) = self.select(pivot, meter) {
            self.flip(k);
            flips += 1;
            if tracking {
                self.track();
            }
        }
        flips
    }
}
