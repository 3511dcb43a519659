//! Decomposers producing formed subcomponents with their shared variables.

pub mod dg2;
pub mod oedg;
pub mod ordg;
pub mod rdg3;
pub mod result;

pub use dg2::{dg2, dg2_counted, Dg2Threshold, InteractionMatrix};
pub use oedg::{oedg, oedg_counted, sd, sud, OedgOptions};
pub use ordg::{ordg, ordg_counted, OrdgOptions};
pub use rdg3::{rdg3, rdg3_counted, DEFAULT_EPS_N};
pub use result::{DecompositionReport, DecompositionResult};
