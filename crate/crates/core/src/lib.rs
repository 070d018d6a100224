//! Iterated local search for unconstrained binary quadratic programming, with
//! optional landscape smoothing through small "toy" problems anchored at the
//! incumbent.
//!
//! ```
//! use lsils::{bench_io::gen_random_instance, lsils, Budget, QuadraticForm, SearchConfig};
//!
//! let inst = gen_random_instance(30, 0.5, -100, 100, 7).unwrap();
//! let config = SearchConfig::new(Budget::evaluations(20_000));
//! let run = lsils(&inst, &config).unwrap();
//! assert_eq!(inst.evaluate(&run.best).unwrap(), run.best_value);
//! ```

pub mod bench_io;
pub mod budget;
pub mod error;
pub mod experiment;
pub mod landscape;
pub mod qcore;
pub mod rng;
pub mod search;
pub mod smoothing;

pub use budget::{Budget, BudgetUnit};
pub use error::{Error, Result};
pub use experiment::{run_batch, Algorithm, BatchResult, BatchSpec};
pub use landscape::{analyze, collision_probability, lambda_sweep, EnumerationOptions, LandscapeObjective, LandscapeReport};
pub use qcore::{Form, GainCache, QuadraticForm, Solution, UbqpInstance};
pub use search::{ils, local_search, lsils, Objective, PivotRule, RunResult, SearchConfig};
pub use smoothing::{AlphaSpec, LambdaSchedule, SmoothedObjective, ToyKind, ToyMatrix};
