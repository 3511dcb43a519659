//! Registry of the benchmark suites: line (LTO), ring (RTO), complex (CTO)
//! and multi-degree (MDO) overlapping problems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::base::BaseKind;
use super::descriptor::InstanceDescriptor;
use super::topology::{generate, parse_sizes, CtocParams, TopologyConfig};
use crate::error::{Error, Result};
use crate::problem::{Conflict, OverlappingProblem};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, hash_str};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuiteName {
    #[serde(rename = "LTO")]
    Lto,
    #[serde(rename = "RTO")]
    Rto,
    #[serde(rename = "CTO")]
    Cto,
    #[serde(rename = "MDO")]
    Mdo,
    /// Non-additive overlapping problems; declared but not generated.
    #[serde(rename = "NAO")]
    Nao,
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LTO" => Ok(SuiteName::Lto),
            "RTO" => Ok(SuiteName::Rto),
            "CTO" => Ok(SuiteName::Cto),
            "MDO" => Ok(SuiteName::Mdo),
            "NAO" => Ok(SuiteName::Nao),
            _ => Err(Error::config("suite", format!("unknown suite `{s}`"))),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteName::Lto => "LTO",
            SuiteName::Rto => "RTO",
            SuiteName::Cto => "CTO",
            SuiteName::Mdo => "MDO",
            SuiteName::Nao => "NAO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" | "full" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::config("scale", format!("unknown scale `{s}` (paper | desk)"))),
        }
    }
}

/// Knobs for shrinking suites to desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteOptions {
    /// Divisor applied to subcomponent sizes (and, for MDO, to the number of
    /// subcomponents) at desk scale.
    pub factor: usize,
    /// Overlap size used by the desk LTO, RTO and CTO suites.
    pub desk_overlap: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            factor: 5,
            desk_overlap: 2,
        }
    }
}

const NONUNIFORM: &str = "100x5+50x5+25x10";
const UNIFORM: &str = "50x20";
const PAPER_OVERLAP: usize = 5;
const MDO_CHAIN_OVERLAPS: [usize; 5] = [1, 3, 5, 10, 15];
const MDO_COMPLEX_OVERLAPS: [usize; 5] = [3, 5, 8, 12, 16];

fn scaled_sizes(spec: &str, scale: Scale, opts: &SuiteOptions) -> Result<Vec<usize>> {
    let sizes = parse_sizes(spec)?;
    Ok(match scale {
        Scale::Paper => sizes,
        Scale::Desk => sizes
            .into_iter()
            .map(|s| ((s as f64 / opts.factor as f64).round() as usize).max(1))
            .collect(),
    })
}

/// Generates the descriptors of every problem in a suite.
pub fn suite_descriptors(
    name: SuiteName,
    scale: Scale,
    master_seed: u64,
    opts: &SuiteOptions,
) -> Result<Vec<InstanceDescriptor>> {
    if opts.factor == 0 {
        return Err(Error::config("factor", "desk factor must be positive"));
    }
    let seed_for = |i: usize| derive_seed(master_seed, &[hash_str(&name.to_string()), i as u64]);
    let overlap = match scale {
        Scale::Paper => PAPER_OVERLAP,
        Scale::Desk => opts.desk_overlap,
    };
    let mut configs = Vec::new();
    match name {
        SuiteName::Lto | SuiteName::Rto => {
            let offset = if name == SuiteName::Lto { 1 } else { 13 };
            for base in BaseKind::ALL {
                for (conflict, sizes) in [
                    (Conflict::Conforming, NONUNIFORM),
                    (Conflict::Conflicting, NONUNIFORM),
                    (Conflict::Conforming, UNIFORM),
                    (Conflict::Conflicting, UNIFORM),
                ] {
                    let i = configs.len();
                    let sizes = scaled_sizes(sizes, scale, opts)?;
                    let cfg = if name == SuiteName::Lto {
                        TopologyConfig::line(sizes, overlap, base, conflict, seed_for(i))
                    } else {
                        TopologyConfig::ring(sizes, overlap, base, conflict, seed_for(i))
                    };
                    configs.push(cfg.named(format!("{name}-f{}", offset + i)));
                }
            }
        }
        SuiteName::Cto => {
            let s = match scale {
                Scale::Paper => 50,
                Scale::Desk => (50 / opts.factor).max(overlap + 1),
            };
            for base in BaseKind::ALL {
                for conflict in [Conflict::Conforming, Conflict::Conflicting] {
                    for p in [0.1, 0.2] {
                        let i = configs.len();
                        let params = CtocParams { n_sub: 20, s, p };
                        configs.push(
                            TopologyConfig::complex(params, overlap, base, conflict, seed_for(i))
                                .named(format!("CTO-f{}", 25 + i)),
                        );
                    }
                }
            }
        }
        SuiteName::Mdo => {
            let n_sub = match scale {
                Scale::Paper => 20,
                Scale::Desk => (20 / opts.factor).max(3),
            };
            let sizes = vec![50; n_sub];
            let base = BaseKind::Elliptic;
            let conflict = Conflict::Conforming;
            for &m in &MDO_CHAIN_OVERLAPS {
                let i = configs.len();
                configs.push(TopologyConfig::line(sizes.clone(), m, base, conflict, seed_for(i)).named(format!("MDO-f{}", i + 1)));
            }
            for &m in &MDO_CHAIN_OVERLAPS {
                let i = configs.len();
                configs.push(TopologyConfig::ring(sizes.clone(), m, base, conflict, seed_for(i)).named(format!("MDO-f{}", i + 1)));
            }
            for &m in &MDO_COMPLEX_OVERLAPS {
                let i = configs.len();
                let params = CtocParams { n_sub, s: 50, p: 0.2 };
                configs.push(TopologyConfig::complex(params, m, base, conflict, seed_for(i)).named(format!("MDO-f{}", i + 1)));
            }
        }
        SuiteName::Nao => {
            return Err(Error::Unsupported(
                "suite NAO".into(),
                "non-additive overlapping problems need a non-additive interaction detector".into(),
            ))
        }
    }
    configs.iter().map(generate).collect()
}

/// Generates and builds every problem in a suite.
pub fn suite<T: Scalar>(
    name: SuiteName,
    scale: Scale,
    master_seed: u64,
    opts: &SuiteOptions,
) -> Result<Vec<OverlappingProblem<T>>> {
    suite_descriptors(name, scale, master_seed, opts)?
        .iter()
        .map(InstanceDescriptor::build)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BlackBox;

    #[test]
    fn paper_line_and_ring_dimensions() {
        let opts = SuiteOptions::default();
        let lto = suite_descriptors(SuiteName::Lto, Scale::Paper, 1, &opts).unwrap();
        assert_eq!(lto.len(), 12);
        assert!(lto.iter().all(|d| d.dimension == 905));
        let rto = suite_descriptors(SuiteName::Rto, Scale::Paper, 1, &opts).unwrap();
        assert_eq!(rto.len(), 12);
        assert!(rto.iter().all(|d| d.dimension == 900));
        assert_eq!(rto[0].name, "RTO-f13");
    }

    #[test]
    fn desk_suites_keep_shape() {
        let opts = SuiteOptions::default();
        for name in [SuiteName::Lto, SuiteName::Rto, SuiteName::Cto, SuiteName::Mdo] {
            let ps = suite::<f64>(name, Scale::Desk, 3, &opts).unwrap();
            let expected = if name == SuiteName::Mdo { 15 } else { 12 };
            assert_eq!(ps.len(), expected, "{name}");
            for p in &ps {
                p.truth().validate(p.dimension()).unwrap();
            }
        }
        let lto = suite_descriptors(SuiteName::Lto, Scale::Desk, 3, &opts).unwrap();
        assert_eq!(lto[0].dimension, 200 - 19 * 2);
        let rto = suite_descriptors(SuiteName::Rto, Scale::Desk, 3, &opts).unwrap();
        assert_eq!(rto[0].dimension, 200 - 20 * 2);
    }

    #[test]
    fn seeded_suites_repeat_exactly() {
        let opts = SuiteOptions::default();
        let a = suite_descriptors(SuiteName::Lto, Scale::Desk, 7, &opts).unwrap();
        let b = suite_descriptors(SuiteName::Lto, Scale::Desk, 7, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_and_unsupported_suites() {
        assert!("XYZ".parse::<SuiteName>().is_err());
        let err = suite_descriptors(SuiteName::Nao, Scale::Desk, 1, &SuiteOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(..)));
    }
}
