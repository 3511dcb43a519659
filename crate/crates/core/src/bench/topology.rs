//! Line, ring and complex overlapping layouts and instance generation.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::base::BaseKind;
use super::compose::SubcomponentSpec;
use super::descriptor::InstanceDescriptor;
use super::rotation::random_orthogonal;
use crate::error::{Error, Result};
use crate::problem::{Conflict, OverlappingProblem, Topology};
use crate::scalar::Scalar;
use crate::seed;
use crate::varset::VarSet;

pub const DEFAULT_BOUNDS: (f64, f64) = (-100.0, 100.0);

/// Retry budget for oversubscribed link draws in [`ctoc`].
const CTOC_RETRIES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtocParams {
    /// Number of subcomponents.
    pub n_sub: usize,
    /// Size of every subcomponent.
    pub s: usize,
    /// Probability of linking to each additional earlier subcomponent.
    pub p: f64,
}

/// Everything needed to generate one benchmark instance deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub name: String,
    pub topology: Topology,
    /// Subcomponent sizes for line and ring layouts.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Overlap size `m` between linked subcomponents.
    pub overlap: usize,
    #[serde(default)]
    pub ctoc: Option<CtocParams>,
    pub conflict: Conflict,
    pub base: BaseKind,
    pub seed: u64,
    #[serde(default = "default_bounds")]
    pub bounds: (f64, f64),
}

fn default_bounds() -> (f64, f64) {
    DEFAULT_BOUNDS
}

impl TopologyConfig {
    pub fn line(sizes: Vec<usize>, overlap: usize, base: BaseKind, conflict: Conflict, seed: u64) -> Self {
        TopologyConfig {
            name: "line".into(),
            topology: Topology::Line,
            sizes,
            overlap,
            ctoc: None,
            conflict,
            base,
            seed,
            bounds: DEFAULT_BOUNDS,
        }
    }

    pub fn ring(sizes: Vec<usize>, overlap: usize, base: BaseKind, conflict: Conflict, seed: u64) -> Self {
        TopologyConfig {
            name: "ring".into(),
            topology: Topology::Ring,
            ..Self::line(sizes, overlap, base, conflict, seed)
        }
    }

    pub fn complex(params: CtocParams, overlap: usize, base: BaseKind, conflict: Conflict, seed: u64) -> Self {
        TopologyConfig {
            name: "complex".into(),
            topology: Topology::Complex,
            sizes: Vec::new(),
            overlap,
            ctoc: Some(params),
            conflict,
            base,
            seed,
            bounds: DEFAULT_BOUNDS,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Parses group-size notation such as `100x5+50x5+25x10` (`×` also accepted).
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::config("sizes", format!("cannot parse `{spec}`; expected e.g. 100x5+50x5"));
    let mut out = Vec::new();
    for part in spec.split('+').map(str::trim) {
        let part = part.replace('×', "x");
        let (size, count) = match part.split_once(['x', 'X']) {
            Some((s, c)) => (s.trim(), c.trim()),
            None => (part.trim(), "1"),
        };
        let size: usize = size.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        out.extend(std::iter::repeat_n(size, count));
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Logical (pre-permutation) layout of a line or ring problem.
fn chain_layout(sizes: &[usize], m: usize, ring: bool) -> Result<(usize, Vec<Vec<usize>>)> {
    let j = sizes.len();
    if j == 0 {
        return Err(Error::config("sizes", "no subcomponents"));
    }
    let min = *sizes.iter().min().unwrap();
    if m >= min {
        return Err(Error::config(
            "overlap",
            format!("overlap {m} must be smaller than the smallest subcomponent ({min})"),
        ));
    }
    if ring && j < 3 {
        return Err(Error::config("sizes", "a ring needs at least 3 subcomponents"));
    }
    // subcomponents overlapping on both sides must hold both overlaps
    for (i, &s) in sizes.iter().enumerate() {
        let two_sided = ring || (i > 0 && i + 1 < j);
        if two_sided && s < 2 * m {
            return Err(Error::config(
                "overlap",
                format!("subcomponent {i} of size {s} cannot overlap {m} variables on both sides"),
            ));
        }
    }
    let total: usize = sizes.iter().sum();
    let n = if ring { total - j * m } else { total - (j - 1) * m };
    let mut start = 0;
    let mut groups = Vec::with_capacity(j);
    for &s in sizes {
        groups.push((start..start + s).map(|v| v % n).collect());
        start += s - m;
    }
    Ok((n, groups))
}

/// Outcome of a complex-topology construction: logical groups plus the
/// earlier subcomponents each group was linked to.
#[derive(Debug, Clone)]
pub struct CtocOutcome {
    pub groups: Vec<VarSet>,
    /// `links[i]` lists the earlier subcomponents `g_i` drew shared variables
    /// from; the first entry is the mandatory connection.
    pub links: Vec<Vec<usize>>,
    pub dimension: usize,
}

/// Complex-topology construction over fresh logical variables `0..`.
///
/// The first group takes `s` fresh variables. Each later group draws `m`
/// variables from one random earlier group and, with probability `p` per
/// other earlier group, `m` more from it; the rest is padded with fresh
/// variables. Oversubscribed draws (more than `s` shared variables) re-draw
/// the optional links up to 20 times before failing.
pub fn ctoc<R: Rng + ?Sized>(n_sub: usize, s: usize, m: usize, p: f64, rng: &mut R) -> Result<CtocOutcome> {
    if n_sub < 2 {
        return Err(Error::config("nsub", "need at least 2 subcomponents"));
    }
    if m >= s {
        return Err(Error::config("m", format!("overlap {m} must be smaller than size {s}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("p", format!("probability {p} outside [0, 1]")));
    }
    let mut groups: Vec<VarSet> = vec![VarSet::full(s)];
    let mut links = vec![Vec::new()];
    let mut fresh = s;
    for i in 1..n_sub {
        let k = rng.random_range(0..groups.len());
        let pick = |g: &VarSet, rng: &mut R| -> VarSet {
            index::sample(rng, g.len(), m).into_iter().map(|t| g.as_slice()[t]).collect()
        };
        let mandatory = pick(&groups[k], rng);
        let mut accepted = None;
        for _ in 0..CTOC_RETRIES {
            let mut v = mandatory.clone();
            let mut linked = vec![k];
            for j in 0..groups.len() {
                if j == k {
                    continue;
                }
                if rng.random::<f64>() < p {
                    v = v.union(&pick(&groups[j], rng));
                    linked.push(j);
                }
            }
            if v.len() <= s {
                accepted = Some((v, linked));
                break;
            }
        }
        let (mut v, linked) = accepted.ok_or_else(|| {
            Error::structure(format!(
                "subcomponent {i}: shared draws exceed size {s} after {CTOC_RETRIES} retries"
            ))
        })?;
        while v.len() < s {
            v.insert(fresh);
            fresh += 1;
        }
        groups.push(v);
        links.push(linked);
    }
    debug_assert_eq!(links.len(), groups.len());
    Ok(CtocOutcome {
        groups,
        links,
        dimension: fresh,
    })
}

/// Generates the full instance descriptor for `config`.
pub fn generate(config: &TopologyConfig) -> Result<InstanceDescriptor> {
    let (lo, hi) = config.bounds;
    if !(lo < hi) {
        return Err(Error::config("bounds", "lower bound must be below upper bound"));
    }
    let mut rng = seed::rng(config.seed);
    let m = config.overlap;
    let (n, logical): (usize, Vec<Vec<usize>>) = match config.topology {
        Topology::Line => chain_layout(&config.sizes, m, false)?,
        Topology::Ring => chain_layout(&config.sizes, m, true)?,
        Topology::Complex => {
            let c = config
                .ctoc
                .ok_or_else(|| Error::config("ctoc", "complex topology needs nsub, s and p"))?;
            let out = ctoc(c.n_sub, c.s, m, c.p, &mut rng)?;
            (out.dimension, out.groups.into_iter().map(VarSet::into_vec).collect())
        }
        Topology::Custom => {
            return Err(Error::config("topology", "custom problems are built with compose_overlapping"))
        }
    };

    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut rng);

    let margin = 0.1 * (hi - lo);
    let draw_shift = |rng: &mut seed::Rng| lo + margin + (hi - lo - 2.0 * margin) * rng.random::<f64>();
    let global_shift: Vec<f64> = (0..n).map(|_| draw_shift(&mut rng)).collect();

    let mut occurrences = vec![0usize; n];
    for g in &logical {
        for &v in g {
            occurrences[v] += 1;
        }
    }

    let mut specs = Vec::with_capacity(logical.len());
    for g in &logical {
        let d = g.len();
        let z: f64 = rng.sample(StandardNormal);
        let weight = 10f64.powf(3.0 * z.abs());
        let rotation = random_orthogonal(d, &mut rng);
        let shift = g
            .iter()
            .map(|&v| match config.conflict {
                Conflict::Conflicting if occurrences[v] >= 2 => draw_shift(&mut rng),
                _ => global_shift[v],
            })
            .collect();
        specs.push(SubcomponentSpec {
            indices: g.iter().map(|&v| permutation[v]).collect(),
            rotation,
            shift,
            weight,
            base: config.base,
        });
    }

    Ok(InstanceDescriptor {
        name: config.name.clone(),
        config: config.clone(),
        dimension: n,
        permutation,
        subcomponents: specs,
    })
}

/// Generates and builds a line-topology problem.
pub fn build_line<T: Scalar>(config: &TopologyConfig) -> Result<OverlappingProblem<T>> {
    if config.topology != Topology::Line {
        return Err(Error::config("topology", "build_line expects a line configuration"));
    }
    generate(config)?.build()
}

/// Generates and builds a ring-topology problem.
pub fn build_ring<T: Scalar>(config: &TopologyConfig) -> Result<OverlappingProblem<T>> {
    if config.topology != Topology::Ring {
        return Err(Error::config("topology", "build_ring expects a ring configuration"));
    }
    generate(config)?.build()
}
