//! Overlapping differential grouping: benchmark generation, interaction
//! detection, decomposers, accuracy metrics and a cooperative-coevolution
//! optimizer.

pub mod bench;
pub mod ccopt;
pub mod decompose;
pub mod error;
pub mod experiment;
pub mod interaction;
pub mod metrics;
pub mod problem;
pub mod scalar;
pub mod seed;
pub mod varset;

pub use error::{Error, Result};
pub use problem::{evaluate, BlackBox, EvaluationCounter, GroundTruth, Objective, OverlappingProblem, Phase};
pub use scalar::Scalar;
pub use varset::VarSet;

/// Double-precision problem.
pub type Problem = OverlappingProblem<f64>;
/// Single-precision problem.
pub type Problem32 = OverlappingProblem<f32>;
/// Detection context over double-precision problems.
pub type Detector<'a> = interaction::DetectionContext<'a, f64>;
