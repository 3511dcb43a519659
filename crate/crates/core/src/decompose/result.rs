use serde::{Deserialize, Serialize};

use crate::varset::VarSet;

/// Formed subcomponents and the shared-variable group of each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub algorithm: String,
    pub seed: u64,
    pub fes_used: u64,
    pub subcomponents: Vec<VarSet>,
    pub shared_groups: Vec<VarSet>,
    /// False when refinement met a group it flagged as a union but could not split.
    #[serde(default = "yes")]
    pub refined: bool,
}

fn yes() -> bool {
    true
}

/// JSON view with sorted 1-based index arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub algorithm: String,
    pub seed: u64,
    pub fes_used: u64,
    pub refined: bool,
    #[serde(rename = "N")]
    pub subcomponents: Vec<Vec<usize>>,
    #[serde(rename = "OV")]
    pub shared_groups: Vec<Vec<usize>>,
}

impl DecompositionResult {
    /// Checks `|N| = |OV|`, `OV_i ⊆ N_i` and that `N` covers `0..n`.
    pub fn is_consistent(&self, n: usize) -> bool {
        if self.subcomponents.len() != self.shared_groups.len() {
            return false;
        }
        if !self
            .subcomponents
            .iter()
            .zip(&self.shared_groups)
            .all(|(g, s)| s.is_subset(g))
        {
            return false;
        }
        let mut seen = vec![false; n];
        for g in &self.subcomponents {
            for v in g {
                if v >= n {
                    return false;
                }
                seen[v] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            algorithm: self.algorithm.clone(),
            seed: self.seed,
            fes_used: self.fes_used,
            refined: self.refined,
            subcomponents: self.subcomponents.iter().map(VarSet::one_based).collect(),
            shared_groups: self.shared_groups.iter().map(VarSet::one_based).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(&self.report())
    }

    /// Formed groups as a sorted multiset, for order-insensitive comparison.
    pub fn sorted_subcomponents(&self) -> Vec<VarSet> {
        let mut v = self.subcomponents.clone();
        v.sort();
        v
    }

    /// The trivial plan with every variable in one group.
    pub fn single_group(n: usize) -> Self {
        DecompositionResult {
            algorithm: "single".into(),
            seed: 0,
            fes_used: 0,
            subcomponents: vec![VarSet::full(n)],
            shared_groups: vec![VarSet::new()],
            refined: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_one_based() {
        let r = DecompositionResult {
            algorithm: "oedg".into(),
            seed: 3,
            fes_used: 10,
            subcomponents: vec![VarSet::from([0, 1]), VarSet::from([1, 2])],
            shared_groups: vec![VarSet::from([1]), VarSet::from([1])],
            refined: true,
        };
        assert!(r.is_consistent(3));
        let json = r.to_json().unwrap();
        assert_eq!(
            json,
            r#"{"algorithm":"oedg","seed":3,"fes_used":10,"refined":true,"N":[[1,2],[2,3]],"OV":[[2],[2]]}"#
        );
    }
}
