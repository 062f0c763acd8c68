//! Skeletons, correspondence coverage, skeleton pruning and renamings.

mod renaming;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use renaming::{
    check_validity, count_all, enumerate_renamings, for_each_renaming, Binding, ModeCounts, Renaming, SkeletonContext,
    ValidityMode,
};

use crate::alignment::{Alignment, CorrespondenceKind, Side};
use crate::association::{all_semantic_associations, AssociationLimits, SemanticAssociation};
use crate::Setting;

/// A source SA paired with a target SA, with the indexes (into the
/// alignment's correspondence list) of the correspondences it covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub source: Arc<SemanticAssociation>,
    pub target: Arc<SemanticAssociation>,
    pub coverage: Vec<usize>,
}

impl Skeleton {
    pub fn coverage_ids<'a>(&self, a: &'a Alignment) -> BTreeSet<&'a str> {
        self.coverage.iter().map(|&i| a.correspondences()[i].id.as_str()).collect()
    }

    pub fn label(&self) -> String {
        format!("{}__{}", self.source.root_concept().local_name(), self.target.root_concept().local_name())
    }
}

/// Correspondence indexes one SA can witness on its own side: c2c whose
/// concept occurs, a2a whose attribute variable exists, r2r whose endpoint
/// nodes are connected through the side's path. A skeleton covers the
/// intersection of its two halves.
pub fn half_coverage(sa: &SemanticAssociation, a: &Alignment) -> BTreeSet<usize> {
    let side = sa.side;
    let concepts: BTreeSet<_> = sa.nodes.iter().map(|n| &n.concept).collect();
    let mut out = BTreeSet::new();
    for (i, c) in a.correspondences().iter().enumerate() {
        let witnessed = match &c.kind {
            CorrespondenceKind::C2c { source, target } => concepts.contains(if side == Side::Source { source } else { target }),
            CorrespondenceKind::A2a { source, target } => {
                let dp = if side == Side::Source { source } else { target };
                sa.nodes.iter().any(|n| n.concept == dp.concept && n.attributes.iter().any(|(p, _)| *p == dp.path))
            }
            CorrespondenceKind::R2r { source, target } => {
                let rp = if side == Side::Source { source } else { target };
                connected_pairs(sa, &rp.endpoints.0, &rp.endpoints.1, rp.path.steps()).next().is_some()
            }
        };
        if witnessed {
            out.insert(i);
        }
    }
    out
}

/// Node pairs (n1, n2) with the given concepts whose tree path spells
/// `steps`.
pub(crate) fn connected_pairs<'a>(
    sa: &'a SemanticAssociation,
    c1: &'a crate::rdf::Iri,
    c2: &'a crate::rdf::Iri,
    steps: &'a [crate::alignment::Step],
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let first: Vec<usize> = sa.nodes.iter().filter(|n| &n.concept == c1).map(|n| n.id).collect();
    let second: Vec<usize> = sa.nodes.iter().filter(|n| &n.concept == c2).map(|n| n.id).collect();
    first
        .into_iter()
        .flat_map(move |x| second.clone().into_iter().map(move |y| (x, y)))
        .filter(move |&(x, y)| sa.tree_path(x, y) == steps)
}

/// Coverage of a pair of SAs, as correspondence ids.
pub fn coverage_of(source: &SemanticAssociation, target: &SemanticAssociation, a: &Alignment) -> BTreeSet<String> {
    let s = half_coverage(source, a);
    let t = half_coverage(target, a);
    s.intersection(&t).map(|&i| a.correspondences()[i].id.clone()).collect()
}

/// All (source, target) pairs that cover at least one correspondence, in
/// (source, target) input order.
pub fn enumerate_skeletons(sources: &[Arc<SemanticAssociation>], targets: &[Arc<SemanticAssociation>], a: &Alignment) -> Vec<Skeleton> {
    let words = a.len().div_ceil(64);
    let bits = |sa: &SemanticAssociation| {
        let mut v = vec![0u64; words];
        for i in half_coverage(sa, a) {
            v[i / 64] |= 1 << (i % 64);
        }
        v
    };
    let sbits: Vec<Vec<u64>> = sources.iter().map(|s| bits(s)).collect();
    let tbits: Vec<Vec<u64>> = targets.iter().map(|t| bits(t)).collect();
    let mut out = Vec::new();
    for (si, s) in sources.iter().enumerate() {
        for (ti, t) in targets.iter().enumerate() {
            let mut coverage = Vec::new();
            for w in 0..words {
                let mut x = sbits[si][w] & tbits[ti][w];
                while x != 0 {
                    let b = x.trailing_zeros() as usize;
                    coverage.push(w * 64 + b);
                    x &= x - 1;
                }
            }
            if !coverage.is_empty() {
                out.push(Skeleton { source: Arc::clone(s), target: Arc::clone(t), coverage });
            }
        }
    }
    out
}

/// SAs for both sides, skeletons with non-empty coverage, optionally
/// pruned.
pub fn build_skeletons(setting: &Setting, limits: AssociationLimits, prune: Option<PruneScope>) -> Vec<Skeleton> {
    let side = |schema, side| -> Vec<Arc<SemanticAssociation>> {
        all_semantic_associations(schema, &setting.alignment, side, limits).into_iter().map(Arc::new).collect()
    };
    let s = side(&setting.source.schema, Side::Source);
    let t = side(&setting.target.schema, Side::Target);
    let sks = enumerate_skeletons(&s, &t, &setting.alignment);
    match prune {
        Some(scope) => prune_redundant_skeletons(sks, scope),
        None => sks,
    }
}

/// Renaming counts per validity mode summed over `skeletons`.
pub fn count_mappings(skeletons: &[Skeleton], a: &Alignment, injective: bool) -> ModeCounts {
    let mut total = ModeCounts::default();
    for sk in skeletons {
        total += count_all(sk, a, injective);
    }
    total
}

/// Which skeletons compete when pruning redundant ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PruneScope {
    /// Skeletons with equal coverage compete regardless of their source SA.
    #[default]
    AnySource,
    /// Only skeletons sharing the source SA compete.
    SameSource,
}

/// Keep one skeleton per coverage set: the one with the fewest target
/// variables, then fewest source variables, then earliest position.
pub fn prune_redundant_skeletons(skeletons: Vec<Skeleton>, scope: PruneScope) -> Vec<Skeleton> {
    let mut best: BTreeMap<(Option<usize>, Vec<usize>), (usize, usize, usize)> = BTreeMap::new();
    let source_ids: Vec<usize> = {
        let mut seen: Vec<*const SemanticAssociation> = Vec::new();
        skeletons
            .iter()
            .map(|sk| {
                let p = Arc::as_ptr(&sk.source);
                seen.iter().position(|q| *q == p).unwrap_or_else(|| {
                    seen.push(p);
                    seen.len() - 1
                })
            })
            .collect()
    };
    for (i, sk) in skeletons.iter().enumerate() {
        let group = match scope {
            PruneScope::AnySource => None,
            PruneScope::SameSource => Some(source_ids[i]),
        };
        let key = (sk.target.variable_count(), sk.source.variable_count(), i);
        best.entry((group, sk.coverage.clone())).and_modify(|b| *b = (*b).min(key)).or_insert(key);
    }
    let keep: BTreeSet<usize> = best.values().map(|&(_, _, i)| i).collect();
    skeletons.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, sk)| sk).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sas(setting: &crate::Setting, limits: AssociationLimits) -> (Vec<Arc<SemanticAssociation>>, Vec<Arc<SemanticAssociation>>) {
        let s = all_semantic_associations(&setting.source.schema, &setting.alignment, Side::Source, limits).into_iter().map(Arc::new).collect();
        let t = all_semantic_associations(&setting.target.schema, &setting.alignment, Side::Target, limits).into_iter().map(Arc::new).collect();
        (s, t)
    }

    fn find<'a>(sks: &'a [Skeleton], s: &str, t: &str) -> Option<&'a Skeleton> {
        sks.iter().find(|sk| sk.source.root_concept().local_name() == s && sk.target.root_concept().local_name() == t)
    }

    #[test]
    fn person_pair_covers_collective_correspondences() {
        let mut st = fixtures::RUNNING.load().unwrap();
        st.alignment = st.alignment.filtered(|c| ["C1", "C2", "C3"].contains(&c.id.as_str()));
        let (s, t) = sas(&st, AssociationLimits { max_path_depth: 2, max_assoc_length: 4 });
        let sks = enumerate_skeletons(&s, &t, &st.alignment);
        let person = find(&sks, "Person", "Person").expect("person pair");
        assert_eq!(person.coverage_ids(&st.alignment), BTreeSet::from(["C1", "C2", "C3"]));
    }

    #[test]
    fn employee_pair_covers_all_nine() {
        let st = fixtures::RUNNING.load().unwrap();
        let (s, t) = sas(&st, AssociationLimits::default());
        let sks = enumerate_skeletons(&s, &t, &st.alignment);
        let emp = find(&sks, "Employee", "Employee").unwrap();
        assert_eq!(emp.coverage.len(), 9);
        assert_eq!(coverage_of(&emp.source, &emp.target, &st.alignment).len(), 9);
        // Country vs Address shares nothing
        assert!(find(&sks, "Country", "Address").is_none());
        assert!(enumerate_skeletons(&s, &t, &Alignment::default()).is_empty());
    }

    #[test]
    fn missing_attribute_is_not_covered() {
        let st = fixtures::RUNNING.load().unwrap();
        let (s, t) = sas(&st, AssociationLimits::default());
        let sks = enumerate_skeletons(&s, &t, &st.alignment);
        // SA(trgt:Organization) has no Address node, so C2 is not covered
        let org = find(&sks, "Organization", "Organization").unwrap();
        assert!(!org.coverage_ids(&st.alignment).contains("C2"));
        assert!(org.coverage_ids(&st.alignment).contains("C6"));
    }

    #[test]
    fn pruning_prefers_smaller_target() {
        let st = fixtures::RUNNING.load().unwrap();
        let (s, t) = sas(&st, AssociationLimits::default());
        let sks = enumerate_skeletons(&s, &t, &st.alignment);
        let country_person = find(&sks, "Country", "Person").unwrap();
        let country_country = find(&sks, "Country", "Country").unwrap();
        assert_eq!(country_person.coverage, country_country.coverage);
        for scope in [PruneScope::SameSource, PruneScope::AnySource] {
            let pruned = prune_redundant_skeletons(sks.clone(), scope);
            assert!(find(&pruned, "Country", "Country").is_some());
            assert!(find(&pruned, "Country", "Person").is_none());
        }
        let single = vec![country_person.clone()];
        assert_eq!(prune_redundant_skeletons(single.clone(), PruneScope::AnySource), single);
        let two = vec![country_person.clone(), find(&sks, "Employee", "Employee").unwrap().clone()];
        assert_eq!(prune_redundant_skeletons(two.clone(), PruneScope::SameSource).len(), 2);
    }

    #[test]
    fn pruning_preserves_coverage_union() {
        let st = fixtures::RUNNING.load().unwrap();
        let (s, t) = sas(&st, AssociationLimits::default());
        let sks = enumerate_skeletons(&s, &t, &st.alignment);
        let union = |v: &[Skeleton]| v.iter().flat_map(|sk| sk.coverage.iter().copied()).collect::<BTreeSet<_>>();
        for scope in [PruneScope::SameSource, PruneScope::AnySource] {
            let pruned = prune_redundant_skeletons(sks.clone(), scope);
            assert_eq!(union(&pruned), union(&sks));
            let distinct: BTreeSet<_> = sks.iter().map(|sk| sk.coverage.clone()).collect();
            if scope == PruneScope::AnySource {
                assert_eq!(pruned.len(), distinct.len());
            }
        }
    }
}
