//! Overlapping benchmark generation.

pub mod base;
pub mod compose;
pub mod descriptor;
pub mod rotation;
pub mod suite;
pub mod topology;

pub use base::{eval_base, BaseKind};
pub use compose::{compose_overlapping, Composite, SubcomponentSpec};
pub use descriptor::InstanceDescriptor;
pub use suite::{suite, suite_descriptors, Scale, SuiteName, SuiteOptions};
pub use topology::{build_line, build_ring, ctoc, generate, parse_sizes, CtocOutcome, CtocParams, TopologyConfig};
