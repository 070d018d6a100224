use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What a budget, log interval, or schedule threshold is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BudgetUnit {
    /// Wall-clock seconds since the run started.
    Seconds,
    /// Number of one-flip gain evaluations; a full neighborhood scan costs `n`.
    Evaluations,
}

impl BudgetUnit {
    pub fn label(self) -> &'static str {
        match self {
            BudgetUnit::Seconds => "secs",
            BudgetUnit::Evaluations => "evals",
        }
    }
}

impl FromStr for BudgetUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "secs" | "seconds" | "s" => Ok(BudgetUnit::Seconds),
            "evals" | "evaluations" => Ok(BudgetUnit::Evaluations),
            other => Err(Error::InvalidParameter(format!(
                "unknown budget unit {other:?} (expected secs or evals)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub unit: BudgetUnit,
    pub amount: f64,
}

impl Budget {
    pub fn new(unit: BudgetUnit, amount: f64) -> Result<Self> {
        if !(amount.is_finite() && amount > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "budget amount must be positive, got {amount}"
            )));
        }
        Ok(Self { unit, amount })
    }

    pub fn evaluations(amount: u64) -> Self {
        Self {
            unit: BudgetUnit::Evaluations,
            amount: amount as f64,
        }
    }

    pub fn seconds(amount: f64) -> Self {
        Self {
            unit: BudgetUnit::Seconds,
            amount,
        }
    }
}

/// `evals:2e8` or `secs:1000`.
impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (unit, amount) = s.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!("budget {s:?} must look like evals:2e8 or secs:1000"))
        })?;
        let amount: f64 = amount
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad budget amount {amount:?}")))?;
        Budget::new(unit.parse()?, amount)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.unit.label(), self.amount)
    }
}
