use std::collections::BTreeSet;

use ::oedg::bench::{ctoc, generate, BaseKind, TopologyConfig};
use ::oedg::ccopt::{allocate_shared, ContributionLedger};
use ::oedg::metrics::{accuracy_of_groups, rank_sum};
use ::oedg::problem::Conflict;
use ::oedg::{seed, VarSet};
use proptest::prelude::*;

fn varset() -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0usize..40, 0..20)
}

fn vs(s: &BTreeSet<usize>) -> VarSet {
    s.iter().copied().collect()
}

fn base() -> impl Strategy<Value = BaseKind> {
    prop_oneof![Just(BaseKind::Elliptic), Just(BaseKind::Rastrigin), Just(BaseKind::Schwefel12)]
}

fn conflict() -> impl Strategy<Value = Conflict> {
    prop_oneof![Just(Conflict::Conforming), Just(Conflict::Conflicting)]
}

proptest! {
    #[test]
    fn varset_algebra_matches_btreeset(a in varset(), b in varset()) {
        let (x, y) = (vs(&a), vs(&b));
        prop_assert_eq!(x.union(&y).into_vec(), a.union(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(x.intersection(&y).into_vec(), a.intersection(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(x.difference(&y).into_vec(), a.difference(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(x.intersection_len(&y), a.intersection(&b).count());
        prop_assert_eq!(x.is_disjoint(&y), a.is_disjoint(&b));
        prop_assert_eq!(x.is_subset(&y), a.is_subset(&b));
        let (h1, h2) = x.halves();
        prop_assert_eq!(h1.union(&h2), x.clone());
        prop_assert!(h1.is_disjoint(&h2));
    }

    #[test]
    fn accuracy_stays_in_unit_interval(
        truth in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..6), 1..4),
        formed in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..6), 1..4),
    ) {
        let t: Vec<VarSet> = truth.iter().map(vs).collect();
        let f: Vec<VarSet> = formed.iter().map(vs).collect();
        let da = accuracy_of_groups(&t, &f).unwrap();
        prop_assert!((0.0..=1.0).contains(&da));
        let all: VarSet = truth.iter().flatten().copied().collect();
        prop_assert_eq!(accuracy_of_groups(&t, &[all]).unwrap(), 1.0);
    }

    #[test]
    fn rank_sum_mirrors(
        a in prop::collection::vec(-1e3f64..1e3, 5..25),
        b in prop::collection::vec(-1e3f64..1e3, 5..25),
    ) {
        let ab = rank_sum(&a, &b, 0.05).unwrap();
        let ba = rank_sum(&b, &a, 0.05).unwrap();
        prop_assert_eq!(ab.verdict.mirror(), ba.verdict);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn allocation_partitions_the_variables(
        groups in prop::collection::vec(prop::collection::btree_set(0usize..15, 1..6), 1..6),
        contributions in prop::collection::vec(0.0f64..10.0, 7),
    ) {
        let mut groups = groups;
        let top = groups.iter().flatten().copied().max().unwrap();
        let covered: BTreeSet<usize> = groups.iter().flatten().copied().collect();
        let missing: BTreeSet<usize> = (0..=top).filter(|v| !covered.contains(v)).collect();
        if !missing.is_empty() {
            groups.push(missing);
        }
        let g: Vec<VarSet> = groups.iter().map(vs).collect();
        let mut ledger = ContributionLedger::new(g.len());
        for (i, c) in contributions.iter().take(g.len()).enumerate() {
            ledger.record(i, *c);
        }
        let plan = allocate_shared(&g, &ledger).unwrap();
        let covered: BTreeSet<usize> = groups.iter().flatten().copied().collect();
        let mut seen = BTreeSet::new();
        for (i, a) in plan.active.iter().enumerate() {
            prop_assert!(a.is_subset(&g[i]));
            for v in a.iter() {
                prop_assert!(seen.insert(v), "variable {} owned twice", v);
            }
        }
        prop_assert_eq!(seen, covered);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_truth_is_valid(
        (m, sizes) in (0usize..3).prop_flat_map(|m| (Just(m), prop::collection::vec(2 * m + 1..2 * m + 10, 3..7))),
        base in base(),
        conflict in conflict(),
        seed_ in any::<u64>(),
        ring in any::<bool>(),
    ) {
        let cfg = if ring {
            TopologyConfig::ring(sizes.clone(), m, base, conflict, seed_)
        } else {
            TopologyConfig::line(sizes.clone(), m, base, conflict, seed_)
        };
        let d = generate(&cfg).unwrap();
        let truth = d.truth();
        truth.validate(d.dimension).unwrap();
        let links = if ring { sizes.len() } else { sizes.len() - 1 };
        prop_assert_eq!(d.dimension, sizes.iter().sum::<usize>() - links * m);
        let mut p = d.permutation.clone();
        p.sort_unstable();
        prop_assert_eq!(p, (0..d.dimension).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_is_line_minus_one_overlap(
        (m, sizes) in (1usize..4).prop_flat_map(|m| (Just(m), prop::collection::vec(2 * m + 1..2 * m + 16, 3..8))),
        seed_ in any::<u64>(),
    ) {
        let line = generate(&TopologyConfig::line(sizes.clone(), m, BaseKind::Elliptic, Conflict::Conforming, seed_)).unwrap();
        let ring = generate(&TopologyConfig::ring(sizes, m, BaseKind::Elliptic, Conflict::Conforming, seed_)).unwrap();
        prop_assert_eq!(ring.dimension + m, line.dimension);
    }

    #[test]
    fn ctoc_tree_overlaps(n_sub in 2usize..12, s in 4usize..20, seed_ in any::<u64>()) {
        let m = s / 3;
        prop_assume!(m >= 1);
        let out = ctoc(n_sub, s, m, 0.0, &mut seed::rng(seed_)).unwrap();
        prop_assert!(out.groups.iter().all(|g| g.len() == s));
        for i in 1..n_sub {
            prop_assert_eq!(out.links[i].len(), 1);
            prop_assert_eq!(out.groups[i].intersection_len(&out.groups[out.links[i][0]]), m);
        }
        prop_assert_eq!(out.dimension, s + (n_sub - 1) * (s - m));
    }
}
