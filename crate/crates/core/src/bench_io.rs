//! Instance files, generated instances, known optima, run logs, and excess.
//!
//! ORLIB (Beasley) layout: a whitespace-separated integer stream. The first
//! token is the number of instances; each instance is `n m` followed by `m`
//! triples `i j value` with one-based indices. A triple sets both `Q_ij` and
//! `Q_ji`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::qcore::{QuadraticForm, UbqpInstance};
use crate::rng::Rng64;

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)));
        Self {
            iter: Box::new(iter),
            last_line: 1,
        }
    }

    fn next_i64(&mut self, what: &str) -> Result<(usize, &'a str, i64)> {
        let (line, tok) = self.iter.next().ok_or_else(|| Error::Parse {
            line: self.last_line,
            token: String::new(),
            message: format!("unexpected end of input while reading {what}"),
        })?;
        self.last_line = line;
        let v = tok.parse::<i64>().map_err(|_| Error::Parse {
            line,
            token: tok.to_string(),
            message: format!("expected an integer for {what}"),
        })?;
        Ok((line, tok, v))
    }

    fn next_count(&mut self, what: &str) -> Result<(usize, &'a str, usize)> {
        let (line, tok, v) = self.next_i64(what)?;
        let v = usize::try_from(v).map_err(|_| Error::Parse {
            line,
            token: tok.to_string(),
            message: format!("{what} must be non-negative"),
        })?;
        Ok((line, tok, v))
    }
}

pub fn parse_orlib(text: &str) -> Result<Vec<UbqpInstance>> {
    let mut tokens = Tokens::new(text);
    let (_, _, count) = tokens.next_count("instance count")?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, tok, n) = tokens.next_count("dimension")?;
        if n == 0 {
            return Err(Error::Parse {
                line,
                token: tok.to_string(),
                message: "dimension must be at least 1".into(),
            });
        }
        let (_, _, m) = tokens.next_count("nonzero count")?;
        let mut q = vec![0i64; n * n];
        let mut seen = HashSet::with_capacity(m);
        for _ in 0..m {
            let index = |tokens: &mut Tokens<'_>, what: &str| -> Result<usize> {
                let (line, tok, v) = tokens.next_i64(what)?;
                if v < 1 || v as usize > n {
                    return Err(Error::Parse {
                        line,
                        token: tok.to_string(),
                        message: format!("{what} {v} outside [1, {n}]"),
                    });
                }
                Ok(v as usize - 1)
            };
            let i = index(&mut tokens, "row index")?;
            let j = index(&mut tokens, "column index")?;
            let (line, tok, value) = tokens.next_i64("entry value")?;
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Parse {
                    line,
                    token: tok.to_string(),
                    message: format!("duplicate entry for ({}, {})", i + 1, j + 1),
                });
            }
            q[i * n + j] = value;
            q[j * n + i] = value;
        }
        out.push(UbqpInstance::from_dense(n, q).map_err(|e| Error::Parse {
            line: tokens.last_line,
            token: String::new(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_orlib(path: &Path) -> Result<Vec<UbqpInstance>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_orlib(&text)
}

/// Writes the upper triangle (`i ≤ j`) of each instance, one triple per line.
pub fn serialize_orlib(instances: &[UbqpInstance]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", instances.len()).expect("writing to a String");
    for inst in instances {
        let n = inst.n();
        let triples: Vec<(usize, usize, i64)> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = inst.entry(i, j);
                (v != 0).then_some((i + 1, j + 1, v))
            })
            .collect();
        writeln!(out, "{} {}", n, triples.len()).expect("writing to a String");
        for (i, j, v) in triples {
            writeln!(out, "{i} {j} {v}").expect("writing to a String");
        }
    }
    out
}

pub fn write_orlib(path: &Path, instances: &[UbqpInstance]) -> Result<()> {
    fs::write(path, serialize_orlib(instances)).map_err(|e| Error::io(path, e))
}

/// Random symmetric instance. Each upper-triangle cell (diagonal included) is
/// nonzero with probability `density`; nonzero cells are uniform on
/// `[lo, hi] \ {0}`. At density 1 every cell is uniform on `[lo, hi]`.
pub fn gen_random_instance(n: usize, density: f64, lo: i64, hi: i64, seed: u64) -> Result<UbqpInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty value range [{lo}, {hi}]")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density {density} outside (0, 1]")));
    }
    let sparse = density < 1.0;
    if sparse && lo == 0 && hi == 0 {
        return Err(Error::InvalidParameter(
            "range [0, 0] has no nonzero values".into(),
        ));
    }
    let mut rng = Rng64::seed_from_u64(seed);
    let mut q = vec![0i64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = if sparse {
                if !rng.gen_bool(density) {
                    continue;
                }
                loop {
                    let v = rng.gen_range(lo..=hi);
                    if v != 0 {
                        break v;
                    }
                }
            } else {
                rng.gen_range(lo..=hi)
            };
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    UbqpInstance::from_dense(n, q)
}

/// `n=18,density=1,range=-100:100,seed=7`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub density: f64,
    pub lo: i64,
    pub hi: i64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<UbqpInstance> {
        gen_random_instance(self.n, self.density, self.lo, self.hi, self.seed)
    }

    /// Name used for output files.
    pub fn name(&self) -> String {
        format!("gen-n{}-d{}-s{}", self.n, self.density, self.seed)
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("generator {s:?}: {m}"));
        let mut out = GeneratorSpec {
            n: 0,
            density: 1.0,
            lo: -100,
            hi: 100,
            seed: 0,
        };
        let mut have_n = false;
        for part in s.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("{part:?} is not key=value")))?;
            match k.trim() {
                "n" => {
                    out.n = v.parse().map_err(|_| bad(format!("bad n {v:?}")))?;
                    have_n = true;
                }
                "density" => out.density = v.parse().map_err(|_| bad(format!("bad density {v:?}")))?,
                "seed" => out.seed = v.parse().map_err(|_| bad(format!("bad seed {v:?}")))?,
                "range" => {
                    let (a, b) = v
                        .split_once(':')
                        .ok_or_else(|| bad(format!("range {v:?} must be lo:hi")))?;
                    out.lo = a.parse().map_err(|_| bad(format!("bad range start {a:?}")))?;
                    out.hi = b.parse().map_err(|_| bad(format!("bad range end {b:?}")))?;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if !have_n {
            return Err(bad("missing n".into()));
        }
        Ok(out)
    }
}

/// Known best objective values by instance name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OptimaTable {
    values: BTreeMap<String, i64>,
}

impl OptimaTable {
    /// `<name> <integer>` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: idx + 1,
                    token: line.to_string(),
                    message: "expected `<instance-name> <integer>`".into(),
                });
            };
            let v: i64 = v.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                token: v.to_string(),
                message: "optimum must be an integer".into(),
            })?;
            values.insert(name.to_string(), v);
        }
        Ok(Self { values })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: i64) {
        self.values.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Relative deviation `(best − opt) / opt`. Non-positive when `best ≤ opt`
/// and `opt > 0`; plots use its magnitude.
pub fn excess(best_f: i64, opt_f: i64) -> Result<f64> {
    if opt_f == 0 {
        return Err(Error::ZeroOptimum);
    }
    Ok((best_f - opt_f) as f64 / opt_f as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLogRecord {
    /// Budget units consumed (evaluations or seconds).
    pub elapsed: f64,
    pub evaluations: u64,
    pub best_f: i64,
    pub lambda: f64,
    pub excess: Option<f64>,
}

/// Where the excess reference value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// A published optimum from an optima table.
    Optimum,
    /// The best value found across the runs of a batch.
    BestFound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reference {
    pub kind: ReferenceKind,
    pub value: i64,
}

impl Reference {
    fn header(&self) -> String {
        let kind = match self.kind {
            ReferenceKind::Optimum => "optimum",
            ReferenceKind::BestFound => "best-found",
        };
        format!("# reference={kind} value={}", self.value)
    }

    fn parse_header(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# reference=")?;
        let (kind, value) = rest.split_once(" value=")?;
        let kind = match kind {
            "optimum" => ReferenceKind::Optimum,
            "best-found" => ReferenceKind::BestFound,
            _ => return None,
        };
        Some(Self {
            kind,
            value: value.trim().parse().ok()?,
        })
    }
}

pub const RUNLOG_HEADER: [&str; 5] = ["elapsed", "evaluations", "best_f", "lambda", "excess"];

/// Fills every record's excess from `reference`.
pub fn apply_reference(records: &mut [RunLogRecord], reference: &Reference) -> Result<()> {
    for r in records {
        r.excess = Some(excess(r.best_f, reference.value)?);
    }
    Ok(())
}

/// CSV text of a run log. With a reference, a `# reference=<kind> value=<v>`
/// line precedes the header.
pub fn runlog_csv(records: &[RunLogRecord], reference: Option<&Reference>) -> String {
    let mut out = String::new();
    if let Some(r) = reference {
        out.push_str(&r.header());
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(RUNLOG_HEADER).expect("in-memory csv");
    for r in records {
        w.write_record([
            r.elapsed.to_string(),
            r.evaluations.to_string(),
            r.best_f.to_string(),
            format!("{:.6}", r.lambda),
            r.excess.map(|e| format!("{e:.8}")).unwrap_or_default(),
        ])
        .expect("in-memory csv");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv"));
    out
}

pub fn write_runlog_csv(records: &[RunLogRecord], reference: Option<&Reference>, path: &Path) -> Result<()> {
    fs::write(path, runlog_csv(records, reference)).map_err(|e| Error::io(path, e))
}

pub fn parse_runlog_csv(text: &str, origin: &Path) -> Result<(Option<Reference>, Vec<RunLogRecord>)> {
    let (reference, body) = match text.strip_prefix('#') {
        Some(_) => {
            let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
            let reference = Reference::parse_header(first.trim_end()).ok_or_else(|| Error::Parse {
                line: 1,
                token: first.to_string(),
                message: "unrecognized reference line".into(),
            })?;
            (Some(reference), rest)
        }
        None => (None, text),
    };
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::csv(origin, e))?.clone();
    if headers.iter().ne(RUNLOG_HEADER) {
        return Err(Error::Parse {
            line: 1 + usize::from(reference.is_some()),
            token: headers.iter().collect::<Vec<_>>().join(","),
            message: "unexpected run-log header".into(),
        });
    }
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(origin, e))?;
        let line = row + 2 + usize::from(reference.is_some());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| Error::Parse {
                line,
                token: field(i).to_string(),
                message: format!("bad {} value", RUNLOG_HEADER[i]),
            })
        };
        let int = |i: usize| -> Result<i64> {
            field(i).parse().map_err(|_| Error::Parse {
                line,
                token: field(i).to_string(),
                message: format!("bad {} value", RUNLOG_HEADER[i]),
            })
        };
        records.push(RunLogRecord {
            elapsed: num(0)?,
            evaluations: int(1)? as u64,
            best_f: int(2)?,
            lambda: num(3)?,
            excess: if field(4).is_empty() { None } else { Some(num(4)?) },
        });
    }
    Ok((reference, records))
}

pub fn read_runlog_csv(path: &Path) -> Result<(Option<Reference>, Vec<RunLogRecord>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_runlog_csv(&text, path)
}

/// `<instance>_<algo>_<seed>.csv`.
pub fn run_file_name(instance: &str, algorithm: &str, seed: usize) -> String {
    format!("{instance}_{algorithm}_{seed}.csv")
}

/// Splits a run-log file name back into `(instance, algorithm, seed)`.
pub fn parse_run_file_name(file_name: &str) -> Option<(String, String, usize)> {
    let stem = file_name.strip_suffix(".csv")?;
    let (rest, seed) = stem.rsplit_once('_')?;
    let (instance, algo) = rest.rsplit_once('_')?;
    Some((instance.to_string(), algo.to_string(), seed.parse().ok()?))
}
