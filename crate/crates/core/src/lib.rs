//! Time-inconsistent optimal stopping on finite Markov chains under
//! nonexponential discounting.
//!
//! The crate computes hitting-time payoffs `J(x, S, f)` with certified
//! enclosures, checks (ε-, pseudo-) equilibrium conditions, builds the
//! smallest optimal equilibrium `S*` by fixed-point iteration, enumerates
//! equilibrium catalogs, and runs stability experiments over sequences of
//! models `(f^n, Q^n) → (f^∞, Q^∞)`.

pub mod chain;
pub mod discount;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod model;
pub mod region;
pub mod repro;
pub mod stability;
pub mod value;

pub use chain::{hitting_distribution, kernel_tv_gap, tv_distance, HittingDistribution, Kernel};
pub use discount::{AssumptionReport, DiscountFunction, Time};
pub use equilibrium::{
    check_region, enumerate, enumerate_exhaustive, intersection_oracle, optimal_values,
    relaxed_values, shifted_model, smallest_equilibrium, Catalog, Condition, Enumerator,
    EquilibriumKind, IterationTrace, OptimalValues, RelaxedValues, Side, Status, Sup, Verdict,
};
pub use error::{Error, Result};
pub use model::{MarkovModel, NumericPolicy};
pub use region::StoppingRegion;
pub use value::{
    constrained_sup_value, constrained_sup_values, j_value, j_values, superset_sup_value,
    ValueInterval,
};
