//! UBQP instances, binary solutions, and exact objective evaluation.
//!
//! The objective is maximized: `f(x) = x^T Q x = Σ_i Σ_j Q_ij x_i x_j` over
//! `x ∈ {0,1}^n`. All arithmetic is signed 64-bit integer arithmetic.
//!
//! Besides the full double sum, [`Form::UpperTriangle`] evaluates
//! `Σ_{i≤j} Q_ij x_i x_j`, which counts each off-diagonal pair once. Both forms
//! share the same flip-gain machinery; only the weight on off-diagonal terms
//! differs (2 for the full form, 1 for the triangle).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A point of `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    bits: Vec<u8>,
}

impl Solution {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![1; n] }
    }

    /// Builds a solution from 0/1 values. Any other byte is rejected.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidSolution(format!(
                "entry {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            bits: bits.into_iter().map(u8::from).collect(),
        }
    }

    /// Bit `i` is the `i`-th lowest bit of `mask`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        assert!(n <= 64, "mask holds at most 64 bits");
        Self {
            bits: (0..n).map(|i| ((mask >> i) & 1) as u8).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    #[inline]
    pub fn is_set(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.flip(i);
        out
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn ones_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
    }

    pub fn hamming(&self, other: &Solution) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Inverse of [`Solution::from_mask`]; `None` above 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        if self.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i)),
        )
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Accepts `"01011"` or a comma/space separated list such as `"0,1,0,1,1"`.
impl FromStr for Solution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let bits = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '\t'))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidSolution(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if bits.is_empty() {
            return Err(Error::InvalidSolution("empty bit string".into()));
        }
        Ok(Self { bits })
    }
}

/// Which pairs of a symmetric matrix enter the quadratic form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Form {
    /// `Σ_i Σ_j Q_ij x_i x_j`
    #[default]
    Full,
    /// `Σ_{i≤j} Q_ij x_i x_j`
    UpperTriangle,
}

impl Form {
    /// Multiplier applied to off-diagonal contributions.
    #[inline]
    pub fn pair_weight(self) -> i64 {
        match self {
            Form::Full => 2,
            Form::UpperTriangle => 1,
        }
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Form::Full),
            "upper" | "upper-triangle" => Ok(Form::UpperTriangle),
            other => Err(Error::InvalidParameter(format!(
                "unknown form {other:?} (expected full or upper)"
            ))),
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Full => "full",
            Form::UpperTriangle => "upper",
        })
    }
}

/// A symmetric integer matrix viewed as a quadratic pseudo-boolean function.
///
/// Implementors must guarantee `entry(i, j) == entry(j, i)`.
pub trait QuadraticForm {
    fn dim(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> i64;

    fn evaluate(&self, x: &Solution) -> Result<i64> {
        self.evaluate_form(x, Form::Full)
    }

    fn evaluate_form(&self, x: &Solution, form: Form) -> Result<i64> {
        check_dim(self.dim(), x)?;
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

    /// `evaluate(flip_k(x)) − evaluate(x)`.
    fn flip_delta(&self, x: &Solution, k: usize) -> Result<i64> {
        self.flip_delta_form(x, k, Form::Full)
    }

    fn flip_delta_form(&self, x: &Solution, k: usize, form: Form) -> Result<i64> {
        check_dim(self.dim(), x)?;
        check_index(self.dim(), k)?;
        Ok(raw_flip_delta(self, x, k, form))
    }
}

#[inline]
pub(crate) fn check_dim(n: usize, x: &Solution) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn check_index(n: usize, k: usize) -> Result<()> {
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    Ok(())
}

fn raw_flip_delta<Q: QuadraticForm + ?Sized>(q: &Q, x: &Solution, k: usize, form: Form) -> i64 {
    let cross: i64 = x
        .ones_indices()
        .filter(|&j| j != k)
        .map(|j| q.entry(k, j))
        .sum();
    let sign = 1 - 2 * i64::from(x.bit(k));
    sign * (q.entry(k, k) + form.pair_weight() * cross)
}

/// A UBQP instance: maximize `x^T Q x` for a symmetric integer `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UbqpInstance {
    n: usize,
    q: Vec<i64>,
    nonzeros: usize,
}

impl UbqpInstance {
    /// Builds an instance from a row-major `n × n` matrix.
    pub fn from_dense(n: usize, q: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("dimension must be at least 1".into()));
        }
        if q.len() != n * n {
            return Err(Error::InvalidInstance(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                q.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if q[i * n + j] != q[j * n + i] {
                    return Err(Error::InvalidInstance(format!(
                        "matrix is not symmetric at ({i}, {j}): {} != {}",
                        q[i * n + j],
                        q[j * n + i]
                    )));
                }
            }
        }
        let max_abs = q.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
        let cells = (n as u128) * (n as u128);
        if cells * u128::from(max_abs) > i64::MAX as u128 {
            return Err(Error::InvalidInstance(format!(
                "n² · max|Q| = {} · {max_abs} overflows 64-bit objective values",
                cells
            )));
        }
        let nonzeros = q.iter().filter(|&&v| v != 0).count();
        Ok(Self { n, q, nonzeros })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> i64) -> Result<Self> {
        let mut q = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                q.push(f(i, j));
            }
        }
        Self::from_dense(n, q)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_dense(n, vec![0; n * n])
    }

    /// Materializes any symmetric quadratic form as a dense instance.
    pub fn from_form<Q: QuadraticForm + ?Sized>(form: &Q) -> Result<Self> {
        Self::from_fn(form.dim(), |i, j| form.entry(i, j))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.q
    }

    /// Fraction of nonzero cells over all `n²` cells.
    pub fn density(&self) -> f64 {
        self.nonzeros as f64 / (self.n * self.n) as f64
    }

    pub fn nonzeros(&self) -> usize {
        self.nonzeros
    }

    /// Mean of `|Q_ij|` over all `n²` entries, zeros included.
    pub fn mean_abs(&self) -> f64 {
        let (sum, count) = self.abs_sum();
        sum as f64 / count as f64
    }

    /// Numerator and denominator of [`mean_abs`](Self::mean_abs).
    pub fn abs_sum(&self) -> (u128, u128) {
        let sum = self.q.iter().map(|v| u128::from(v.unsigned_abs())).sum();
        (sum, (self.n * self.n) as u128)
    }

    pub fn max_abs(&self) -> i64 {
        self.q.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn total(&self) -> i64 {
        self.q.iter().sum()
    }
}

impl QuadraticForm for UbqpInstance {
    fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> i64 {
        self.q[i * self.n + j]
    }

    fn evaluate_form(&self, x: &Solution, form: Form) -> Result<i64> {
        check_dim(self.n, x)?;
        let w = form.pair_weight();
        let mut total = 0i64;
        for i in x.ones_indices() {
            let row = self.row(i);
            total += row[i];
            total += w * row[i + 1..]
                .iter()
                .zip(&x.bits()[i + 1..])
                .map(|(&q, &b)| q * i64::from(b))
                .sum::<i64>();
        }
        Ok(total)
    }
}

/// Exact one-flip gains of a quadratic form at a solution.
///
/// `values[k]` is the change of the objective when bit `k` is flipped. The
/// vector does not own the solution; callers pass the pre-flip solution to
/// [`Gains::update`] and flip the bit afterwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gains {
    values: Vec<i64>,
    form: Form,
}

impl Gains {
    pub fn build<Q: QuadraticForm + ?Sized>(q: &Q, x: &Solution, form: Form) -> Result<Self> {
        check_dim(q.dim(), x)?;
        let n = q.dim();
        let w = form.pair_weight();
        let ones: Vec<usize> = x.ones_indices().collect();
        let values = (0..n)
            .map(|k| {
                let cross: i64 = ones
                    .iter()
                    .filter(|&&j| j != k)
                    .map(|&j| q.entry(k, j))
                    .sum();
                let sign = 1 - 2 * i64::from(x.bit(k));
                sign * (q.entry(k, k) + w * cross)
            })
            .collect();
        Ok(Self { values, form })
    }

    #[inline]
    pub fn get(&self, k: usize) -> i64 {
        self.values[k]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.values
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// Updates every gain for a flip of bit `k`. `x` must be the solution
    /// *before* the flip. O(n).
    #[inline]
    pub fn update<Q: QuadraticForm + ?Sized>(&mut self, q: &Q, x: &Solution, k: usize) {
        let w = self.form.pair_weight();
        // +1 when bit k turns on, -1 when it turns off.
        let dk = 1 - 2 * i64::from(x.bit(k));
        for (j, g) in self.values.iter_mut().enumerate() {
            if j == k {
                *g = -*g;
            } else {
                let sj = 1 - 2 * i64::from(x.bit(j));
                *g += sj * w * q.entry(j, k) * dk;
            }
        }
    }

    /// Specialization of [`Gains::update`] reading a dense row directly.
    #[inline]
    pub fn update_dense(&mut self, inst: &UbqpInstance, x: &Solution, k: usize) {
        let w = self.form.pair_weight();
        let dk = 1 - 2 * i64::from(x.bit(k));
        let row = inst.row(k);
        for (j, ((g, &q), &b)) in self.values.iter_mut().zip(row).zip(x.bits()).enumerate() {
            if j == k {
                *g = -*g;
            } else {
                *g += (1 - 2 * i64::from(b)) * w * q * dk;
            }
        }
    }
}

/// A solution together with its objective value and exact one-flip gains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GainCache {
    solution: Solution,
    value: i64,
    gains: Gains,
}

impl GainCache {
    pub fn new<Q: QuadraticForm + ?Sized>(q: &Q, solution: Solution, form: Form) -> Result<Self> {
        let value = q.evaluate_form(&solution, form)?;
        let gains = Gains::build(q, &solution, form)?;
        Ok(Self {
            solution,
            value,
            gains,
        })
    }

    /// Flips bit `k`, returning the objective change.
    pub fn apply_flip<Q: QuadraticForm + ?Sized>(&mut self, q: &Q, k: usize) -> Result<i64> {
        check_dim(q.dim(), &self.solution)?;
        check_index(q.dim(), k)?;
        let delta = self.gains.get(k);
        self.gains.update(q, &self.solution, k);
        self.solution.flip(k);
        self.value += delta;
        Ok(delta)
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn into_solution(self) -> Solution {
        self.solution
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    #[inline]
    pub fn gain(&self, k: usize) -> i64 {
        self.gains.get(k)
    }
}

/// `x^T Q x`.
pub fn evaluate(inst: &UbqpInstance, x: &Solution) -> Result<i64> {
    inst.evaluate(x)
}

/// `evaluate(flip_k(x)) − evaluate(x)`.
pub fn flip_delta(inst: &UbqpInstance, x: &Solution, k: usize) -> Result<i64> {
    inst.flip_delta(x, k)
}
