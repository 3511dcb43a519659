//! JSON instance descriptors.
//!
//! A descriptor stores the generating configuration together with every
//! drawn quantity (permutation, weights, shifts, rotations), so a problem can
//! be rebuilt from the file alone. Floats are written in shortest round-trip
//! form, so reloading reproduces every value bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::compose::{compose_overlapping, SubcomponentSpec};
use super::topology::TopologyConfig;
use crate::error::{Error, Result};
use crate::problem::{GroundTruth, OverlappingProblem};
use crate::scalar::Scalar;
use crate::varset::VarSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub name: String,
    pub config: TopologyConfig,
    pub dimension: usize,
    pub permutation: Vec<usize>,
    pub subcomponents: Vec<SubcomponentSpec>,
}

impl InstanceDescriptor {
    pub fn build<T: Scalar>(&self) -> Result<OverlappingProblem<T>> {
        let mut p = compose_overlapping(
            self.name.clone(),
            self.dimension,
            self.config.bounds,
            &self.subcomponents,
            self.config.topology,
            self.config.conflict,
        )?;
        p.set_meta(self.config.topology, self.config.conflict);
        Ok(p)
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth::from_subcomponents(
            self.subcomponents
                .iter()
                .map(|s| s.indices.iter().copied().collect::<VarSet>())
                .collect(),
        )
    }

    /// Re-checks ground-truth invariants and the permutation.
    pub fn verify(&self) -> Result<()> {
        self.truth().validate(self.dimension)?;
        let mut seen = vec![false; self.dimension];
        for &p in &self.permutation {
            if p >= self.dimension || std::mem::replace(&mut seen[p], true) {
                return Err(Error::structure("permutation is not a bijection"));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::structure("permutation is not a bijection"));
        }
        self.build::<f64>().map(|_| ())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::base::BaseKind;
    use crate::bench::topology::{generate, CtocParams, TopologyConfig};
    use crate::problem::{BlackBox, Conflict};

    #[test]
    fn json_round_trip_is_bit_exact() {
        let cfg = TopologyConfig::complex(
            CtocParams { n_sub: 6, s: 12, p: 0.3 },
            2,
            BaseKind::Rastrigin,
            Conflict::Conflicting,
            21,
        );
        let d = generate(&cfg).unwrap();
        let back = InstanceDescriptor::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(d, back);
        for (a, b) in d.subcomponents.iter().zip(&back.subcomponents) {
            assert!(a.rotation.iter().zip(&b.rotation).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        back.verify().unwrap();

        let p1: OverlappingProblem<f64> = d.build().unwrap();
        let p2: OverlappingProblem<f64> = back.build().unwrap();
        let x: Vec<f64> = (0..p1.dimension()).map(|i| (i as f64 * 0.37).sin() * 90.0).collect();
        assert_eq!(p1.value(&x).to_bits(), p2.value(&x).to_bits());
    }

    #[test]
    fn verify_catches_broken_permutation() {
        let cfg = TopologyConfig::line(vec![6; 3], 1, BaseKind::Elliptic, Conflict::Conforming, 2);
        let mut d = generate(&cfg).unwrap();
        d.permutation[0] = d.permutation[1];
        assert!(d.verify().is_err());
    }
}
