//! Exhaustive landscape analysis for small instances.
//!
//! All `2^n` solutions are visited in reflected binary Gray-code order, so
//! consecutive solutions differ in one bit and objective values and flip
//! gains update in O(n) per step. The space is split on the high-order bits
//! and the parts are walked in parallel with private accumulators.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{Form, Gains, QuadraticForm, Solution, UbqpInstance};
use crate::smoothing::{is_improving, AlphaSpec, SmoothedObjective, ToyKind, ToyMatrix};

/// Enumeration refuses anything larger.
pub const MAX_ENUMERATION_VARS: usize = 25;
pub const DEFAULT_OPTIMA_CAP: usize = 1000;
/// Bin width for real-valued (smoothed) objective values.
pub const SMOOTHED_QUANTUM: f64 = 1e-9;

/// Number of high-order bits fixed per parallel part.
const SPLIT_BITS: usize = 6;

#[derive(Clone, Copy, Debug)]
pub enum LandscapeObjective<'a> {
    Original(&'a UbqpInstance),
    Toy(&'a ToyMatrix),
    Smoothed(SmoothedObjective<'a>),
}

impl LandscapeObjective<'_> {
    pub fn dim(&self) -> usize {
        match self {
            LandscapeObjective::Original(q) => q.n(),
            LandscapeObjective::Toy(t) => t.dim(),
            LandscapeObjective::Smoothed(g) => g.instance().n(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LandscapeObjective::Original(_) => "original".into(),
            LandscapeObjective::Toy(t) => format!("toy:{}", t.kind()),
            LandscapeObjective::Smoothed(g) => format!(
                "smoothed:{} lambda={} alpha={}",
                g.toy().kind(),
                g.lambda(),
                g.alpha()
            ),
        }
    }

    fn is_integer(&self) -> bool {
        !matches!(self, LandscapeObjective::Smoothed(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub form: Form,
    /// Local optima beyond this count are counted but not kept.
    pub optima_cap: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            form: Form::Full,
            optima_cap: DEFAULT_OPTIMA_CAP,
        }
    }
}

/// Exact value counts over the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `None` for integer objectives; the bin width otherwise.
    quantum: Option<f64>,
    counts: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn from_counts(quantum: Option<f64>, counts: BTreeMap<i64, u64>) -> Self {
        Self { quantum, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn distinct_values(&self) -> usize {
        self.counts.len()
    }

    /// `(value, count)` in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (self.value_of(k), c))
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn is_integer(&self) -> bool {
        self.quantum.is_none()
    }

    fn value_of(&self, key: i64) -> f64 {
        match self.quantum {
            None => key as f64,
            Some(q) => key as f64 * q,
        }
    }

    pub fn min_value(&self) -> Option<f64> {
        self.counts.keys().next().map(|&k| self.value_of(k))
    }

    pub fn max_value(&self) -> Option<f64> {
        self.counts.keys().next_back().map(|&k| self.value_of(k))
    }

    /// `value,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,count\n");
        for (&k, &c) in &self.counts {
            match self.quantum {
                None => writeln!(out, "{k},{c}"),
                Some(q) => writeln!(out, "{:.9},{c}", k as f64 * q),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Probability that two independent uniform solutions share a value:
/// `Σ_v (count(v) / total)²`. Larger means flatter.
pub fn collision_probability(histogram: &Histogram) -> f64 {
    let total = histogram.total();
    if total == 0 {
        return 0.0;
    }
    let sum_sq: u128 = histogram
        .counts
        .values()
        .map(|&c| u128::from(c) * u128::from(c))
        .sum();
    let total = total as f64;
    sum_sq as f64 / (total * total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeReport {
    pub n: usize,
    pub objective: String,
    pub form: Form,
    pub local_optima_count: u64,
    /// Sorted; empty when the count exceeded the cap.
    pub local_optima: Vec<Solution>,
    pub optima_truncated: bool,
    pub histogram: Histogram,
    pub collision_probability: f64,
}

impl LandscapeReport {
    /// Line-oriented `key value` text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(out, "{k} {v}").expect("writing to a String");
        };
        line("n", &self.n);
        line("objective", &self.objective);
        line("form", &self.form);
        line("solutions", &self.histogram.total());
        line("local_optima_count", &self.local_optima_count);
        for x in &self.local_optima {
            line("local_optimum", x);
        }
        if self.optima_truncated {
            line("local_optima_truncated", &true);
        }
        line("distinct_values", &self.histogram.distinct_values());
        if let (Some(lo), Some(hi)) = (self.histogram.min_value(), self.histogram.max_value()) {
            line("min_value", &lo);
            line("max_value", &hi);
        }
        line(
            "collision_probability",
            &format_args!("{:.9}", self.collision_probability),
        );
        out
    }
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::EnumerationTooLarge {
            n,
            max: MAX_ENUMERATION_VARS,
        });
    }
    Ok(())
}

/// Local optima census, value histogram, and collision probability in one pass.
pub fn analyze(obj: &LandscapeObjective<'_>, opts: &EnumerationOptions) -> Result<LandscapeReport> {
    let n = obj.dim();
    guard(n)?;
    let acc = enumerate(obj, opts)?;
    let histogram = Histogram {
        quantum: (!obj.is_integer()).then_some(SMOOTHED_QUANTUM),
        counts: acc.hist.into_iter().collect(),
    };
    let mut optima = acc.optima;
    let truncated = acc.optima_count > opts.optima_cap as u64;
    if truncated {
        optima.clear();
    } else {
        optima.sort();
    }
    Ok(LandscapeReport {
        n,
        objective: obj.describe(),
        form: opts.form,
        local_optima_count: acc.optima_count,
        local_optima: optima,
        optima_truncated: truncated,
        collision_probability: collision_probability(&histogram),
        histogram,
    })
}

/// Solutions without a strictly improving one-bit flip.
pub fn enumerate_local_optima(
    obj: &LandscapeObjective<'_>,
    opts: &EnumerationOptions,
) -> Result<(u64, Vec<Solution>)> {
    let report = analyze(obj, opts)?;
    Ok((report.local_optima_count, report.local_optima))
}

pub fn value_histogram(obj: &LandscapeObjective<'_>, form: Form) -> Result<Histogram> {
    let opts = EnumerationOptions {
        form,
        optima_cap: 0,
    };
    Ok(analyze(obj, &opts)?.histogram)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub local_optima: u64,
}

/// Local optima count of `(1−λ)f + λαf̂` for each λ in `grid`.
pub fn lambda_sweep(
    inst: &UbqpInstance,
    kind: ToyKind,
    anchor: &Solution,
    alpha: AlphaSpec,
    grid: &[f64],
    toy_seed: u64,
    form: Form,
) -> Result<Vec<SweepPoint>> {
    guard(inst.n())?;
    let toy = ToyMatrix::construct(kind, anchor.clone(), toy_seed);
    let alpha = alpha.resolve(inst, &toy)?;
    let opts = EnumerationOptions {
        form,
        optima_cap: 0,
    };
    grid.iter()
        .map(|&lambda| {
            let g = SmoothedObjective::new(inst, &toy, lambda, alpha)?;
            let (count, _) = enumerate_local_optima(&LandscapeObjective::Smoothed(g), &opts)?;
            Ok(SweepPoint {
                lambda,
                local_optima: count,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("lambda,count\n");
    for p in points {
        writeln!(out, "{:.6},{}", p.lambda, p.local_optima).expect("writing to a String");
    }
    out
}

/// `start:end:step` (inclusive) or a comma-separated list of values in `[0, 1]`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::InvalidParameter(format!("λ grid {text:?}: {m}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(bad("expected start:end:step"));
        };
        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad("need start <= end and a positive step"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let v = a + i as f64 * step;
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        text.split(',').map(parse).collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(bad("empty"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::LambdaOutOfRange(*v));
    }
    Ok(values)
}

#[derive(Default)]
struct Accumulator {
    optima_count: u64,
    optima: Vec<Solution>,
    hist: HashMap<i64, u64>,
}

impl Accumulator {
    fn merge(mut self, other: Accumulator, cap: usize) -> Self {
        self.optima_count += other.optima_count;
        for x in other.optima {
            if self.optima.len() <= cap {
                self.optima.push(x);
            }
        }
        for (k, c) in other.hist {
            *self.hist.entry(k).or_insert(0) += c;
        }
        self
    }
}

enum Term<'a> {
    Dense(&'a UbqpInstance),
    Toy(&'a ToyMatrix),
}

impl Term<'_> {
    fn value(&self, x: &Solution, form: Form) -> Result<i64> {
        match self {
            Term::Dense(q) => q.evaluate_form(x, form),
            Term::Toy(t) => t.evaluate_form(x, form),
        }
    }

    fn gains(&self, x: &Solution, form: Form) -> Result<Gains> {
        match self {
            Term::Dense(q) => Gains::build(*q, x, form),
            Term::Toy(t) => Gains::build(*t, x, form),
        }
    }

    #[inline]
    fn update(&self, gains: &mut Gains, x: &Solution, k: usize) {
        match self {
            Term::Dense(q) => gains.update_dense(q, x, k),
            Term::Toy(t) => gains.update(*t, x, k),
        }
    }
}

/// Walks every solution whose high bits equal `prefix`.
struct Walk<'a> {
    terms: Vec<Term<'a>>,
    /// `None`: single integer term. `Some((w0, w1))`: weighted real sum.
    weights: Option<(f64, f64)>,
    form: Form,
    cap: usize,
}

impl Walk<'_> {
    fn run(&self, n: usize, low_bits: usize, prefix: u64) -> Result<Accumulator> {
        let mut x = Solution::from_mask(prefix << low_bits, n);
        let mut values = Vec::with_capacity(self.terms.len());
        let mut gains = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            values.push(t.value(&x, self.form)?);
            gains.push(t.gains(&x, self.form)?);
        }
        let mut acc = Accumulator::default();
        self.visit(&x, &values, &gains, &mut acc);
        for step in 1u64..(1u64 << low_bits) {
            let k = step.trailing_zeros() as usize;
            for ((t, v), g) in self.terms.iter().zip(values.iter_mut()).zip(gains.iter_mut()) {
                *v += g.get(k);
                t.update(g, &x, k);
            }
            x.flip(k);
            self.visit(&x, &values, &gains, &mut acc);
        }
        Ok(acc)
    }

    #[inline]
    fn visit(&self, x: &Solution, values: &[i64], gains: &[Gains], acc: &mut Accumulator) {
        let (key, local_opt) = match self.weights {
            None => (values[0], gains[0].as_slice().iter().all(|&g| g <= 0)),
            Some((w0, w1)) => {
                let v = w0 * values[0] as f64 + w1 * values[1] as f64;
                let key = (v / SMOOTHED_QUANTUM).round() as i64;
                let g0 = gains[0].as_slice();
                let g1 = gains[1].as_slice();
                let lo = g0
                    .iter()
                    .zip(g1)
                    .all(|(&a, &b)| !is_improving(w0 * a as f64 + w1 * b as f64));
                (key, lo)
            }
        };
        *acc.hist.entry(key).or_insert(0) += 1;
        if local_opt {
            acc.optima_count += 1;
            if acc.optima.len() <= self.cap {
                acc.optima.push(x.clone());
            }
        }
    }
}

fn enumerate(obj: &LandscapeObjective<'_>, opts: &EnumerationOptions) -> Result<Accumulator> {
    let n = obj.dim();
    let walk = match obj {
        LandscapeObjective::Original(q) => Walk {
            terms: vec![Term::Dense(q)],
            weights: None,
            form: opts.form,
            cap: opts.optima_cap,
        },
        LandscapeObjective::Toy(t) => Walk {
            terms: vec![Term::Toy(t)],
            weights: None,
            form: opts.form,
            cap: opts.optima_cap,
        },
        LandscapeObjective::Smoothed(g) => Walk {
            terms: vec![Term::Dense(g.instance()), Term::Toy(g.toy())],
            weights: Some(g.weights()),
            form: opts.form,
            cap: opts.optima_cap,
        },
    };
    let high = SPLIT_BITS.min(n);
    let low = n - high;
    (0..(1u64 << high))
        .into_par_iter()
        .map(|prefix| walk.run(n, low, prefix))
        .try_reduce(Accumulator::default, |a, b| Ok(a.merge(b, opts.optima_cap)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench_io::gen_random_instance;
    use crate::rng::Rng64;
    use crate::search::{local_search, Objective, PivotRule};
    use rand::{Rng, SeedableRng};

    /// Direct evaluation of every point; independent of the Gray-code walk.
    fn brute_force(obj: &LandscapeObjective<'_>, form: Form) -> (BTreeMap<i64, u64>, Vec<Solution>) {
        let n = obj.dim();
        let value = |x: &Solution| -> (i64, f64) {
            match obj {
                LandscapeObjective::Original(q) => {
                    let v = q.evaluate_form(x, form).unwrap();
                    (v, v as f64)
                }
                LandscapeObjective::Toy(t) => {
                    let v = t.evaluate_form(x, form).unwrap();
                    (v, v as f64)
                }
                LandscapeObjective::Smoothed(g) => {
                    let v = g.evaluate_form(x, form).unwrap();
                    ((v / SMOOTHED_QUANTUM).round() as i64, v)
                }
            }
        };
        let mut hist = BTreeMap::new();
        let mut optima = Vec::new();
        for mask in 0..(1u64 << n) {
            let x = Solution::from_mask(mask, n);
            let (key, v) = value(&x);
            *hist.entry(key).or_insert(0) += 1;
            if (0..n).all(|k| !is_improving(value(&x.flipped(k)).1 - v)) {
                optima.push(x);
            }
        }
        optima.sort();
        (hist, optima)
    }

    #[test]
    fn gray_walk_matches_brute_force() {
        let mut rng = Rng64::seed_from_u64(1);
        for trial in 0..6u64 {
            let n = 4 + trial as usize;
            let inst = gen_random_instance(n, 1.0, -100, 100, trial).unwrap();
            let toy = ToyMatrix::construct(ToyKind::Random, Solution::random(n, &mut rng), trial);
            let g = SmoothedObjective::new(&inst, &toy, 0.3, 0.7).unwrap();
            for obj in [
                LandscapeObjective::Original(&inst),
                LandscapeObjective::Toy(&toy),
                LandscapeObjective::Smoothed(g),
            ] {
                for form in [Form::Full, Form::UpperTriangle] {
                    let opts = EnumerationOptions { form, optima_cap: 1 << 12 };
                    let report = analyze(&obj, &opts).unwrap();
                    let (hist, optima) = brute_force(&obj, form);
                    assert_eq!(report.histogram.counts(), &hist);
                    assert_eq!(report.local_optima, optima);
                    assert_eq!(report.local_optima_count, optima.len() as u64);
                }
            }
        }
    }

    #[test]
    fn two_variable_example() {
        let inst = UbqpInstance::from_dense(2, vec![1, 0, 0, 1]).unwrap();
        let (count, optima) =
            enumerate_local_optima(&LandscapeObjective::Original(&inst), &Default::default()).unwrap();
        assert_eq!(count, 1);
        assert_eq!(optima, vec![Solution::ones(2)]);
    }

    #[test]
    fn constant_objective() {
        let inst = UbqpInstance::zeros(9).unwrap();
        let report = analyze(&LandscapeObjective::Original(&inst), &Default::default()).unwrap();
        assert_eq!(report.local_optima_count, 512);
        assert_eq!(report.histogram.distinct_values(), 1);
        assert_eq!(report.histogram.total(), 512);
        assert_eq!(report.collision_probability, 1.0);
    }

    #[test]
    fn toys_are_unimodal() {
        let mut rng = Rng64::seed_from_u64(7);
        for kind in ToyKind::ALL {
            for _ in 0..5 {
                let n = rng.gen_range(8..=14);
                let anchor = Solution::random(n, &mut rng);
                let toy = ToyMatrix::construct(kind, anchor.clone(), rng.gen());
                for form in [Form::Full, Form::UpperTriangle] {
                    let opts = EnumerationOptions { form, ..Default::default() };
                    let (count, optima) =
                        enumerate_local_optima(&LandscapeObjective::Toy(&toy), &opts).unwrap();
                    assert_eq!(count, 1);
                    assert_eq!(optima, vec![anchor.clone()]);
                }
            }
        }
    }

    #[test]
    fn plus_minus_one_bins_bounded_by_closed_form() {
        let mut rng = Rng64::seed_from_u64(3);
        for n in [6usize, 10, 13] {
            let anchor = Solution::random(n, &mut rng);
            let k = anchor.count_ones() as i64;
            let mut possible = std::collections::BTreeSet::new();
            for b in 0..=k {
                for t in b..=b + (n as i64 - k) {
                    possible.insert(2 * b * b - t * t);
                }
            }
            let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, anchor, 0);
            let h = value_histogram(&LandscapeObjective::Toy(&toy), Form::Full).unwrap();
            assert!(h.distinct_values() <= possible.len());
            assert!(h.counts().keys().all(|v| possible.contains(v)));
        }
    }

    #[test]
    fn collision_ignores_value_relabeling() {
        let inst = gen_random_instance(10, 1.0, -20, 20, 4).unwrap();
        let h = value_histogram(&LandscapeObjective::Original(&inst), Form::Full).unwrap();
        let relabeled: BTreeMap<i64, u64> =
            h.counts().iter().map(|(&v, &c)| (3 * v * v * v + 7 * v - 11, c)).collect();
        let h2 = Histogram::from_counts(None, relabeled);
        assert_eq!(collision_probability(&h), collision_probability(&h2));
        let single = Histogram::from_counts(None, BTreeMap::from([(5, 64)]));
        assert_eq!(collision_probability(&single), 1.0);
    }

    #[test]
    fn local_optima_are_local_search_fixed_points() {
        for seed in 0..4 {
            let n = 9 + seed as usize;
            let inst = gen_random_instance(n, 1.0, -100, 100, seed).unwrap();
            let (_, optima) =
                enumerate_local_optima(&LandscapeObjective::Original(&inst), &Default::default())
                    .unwrap();
            let obj = Objective::Original(&inst);
            for pivot in [PivotRule::BestImprovement, PivotRule::FirstImprovement] {
                let mut fixed = Vec::new();
                for mask in 0..(1u64 << n) {
                    let x = Solution::from_mask(mask, n);
                    let out = local_search(&obj, x.clone(), pivot, None).unwrap();
                    assert!(optima.binary_search(&out.solution).is_ok());
                    if out.solution == x {
                        fixed.push(x);
                    }
                }
                fixed.sort();
                assert_eq!(fixed, optima);
            }
        }
    }

    #[test]
    fn guard_rejects_large_dimensions() {
        let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, Solution::zeros(26), 0);
        let err = analyze(&LandscapeObjective::Toy(&toy), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { n: 26, max: 25 }));
        assert!(err.to_string().contains("at most 25"));
    }

    #[test]
    fn sweep_endpoints() {
        let inst = gen_random_instance(12, 1.0, -100, 100, 5).unwrap();
        let anchor = Solution::random(12, &mut Rng64::seed_from_u64(5));
        let original =
            enumerate_local_optima(&LandscapeObjective::Original(&inst), &Default::default())
                .unwrap()
                .0;
        for kind in ToyKind::ALL {
            let pts = lambda_sweep(&inst, kind, &anchor, AlphaSpec::Auto, &[0.0, 1.0], 1, Form::Full)
                .unwrap();
            assert_eq!(pts[0].local_optima, original);
            assert_eq!(pts[1].local_optima, 1);
        }
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:1:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:2:0.5").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
    }

    #[test]
    fn report_text_and_csv() {
        let toy = ToyMatrix::construct(ToyKind::PlusMinusOne, "01011".parse().unwrap(), 0);
        let report = analyze(&LandscapeObjective::Toy(&toy), &Default::default()).unwrap();
        let text = report.to_text();
        assert!(text.contains("local_optima_count 1\n"));
        assert!(text.contains("local_optimum 01011\n"));
        assert!(text.contains("solutions 32\n"));
        let csv = report.histogram.to_csv();
        assert!(csv.starts_with("value,count\n"));
        let total: u64 = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 32);
        let pts = [SweepPoint { lambda: 0.1, local_optima: 3 }];
        assert_eq!(sweep_csv(&pts), "lambda,count\n0.100000,3\n");
    }
}
