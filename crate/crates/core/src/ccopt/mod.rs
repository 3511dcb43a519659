//! Cooperative-coevolution optimization driven by a decomposition.

pub mod cc;
pub mod es;

pub use cc::{allocate_shared, allocate_shared_n, cc_optimize, cc_optimize_counted, AllocationPlan, CcOptions, CcOutcome, ContextVector, ContributionLedger, Scheduling};
pub use es::{phase_evaluations, Covariance, population_size, subsolver_phase, SubsolverState, GENERATIONS_PER_PHASE};
