//! Knowledge fragment selection: restrict one side of a setting to the
//! schema neighbourhood of its aligned elements.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::alignment::{Alignment, CorrespondenceKind, Side};
use crate::rdf::{extract_schema, vocab, Graph, Iri, Kb, Schema, Term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FragmentConfig {
    pub recursion_depth: usize,
}

/// Concepts and properties named by correspondences on `side`, including
/// the properties on their paths.
pub fn aligned_elements(a: &Alignment, side: Side, schema: &Schema) -> BTreeSet<Iri> {
    let mut out = a.aligned_concepts(side, schema);
    for c in a.correspondences() {
        match &c.kind {
            CorrespondenceKind::C2c { .. } => {}
            CorrespondenceKind::A2a { source, target } => {
                let dp = if side == Side::Source { source } else { target };
                out.extend(dp.path.steps().iter().map(|s| s.property.clone()));
            }
            CorrespondenceKind::R2r { source, target } => {
                let rp = if side == Side::Source { source } else { target };
                out.insert(rp.endpoints.0.clone());
                out.insert(rp.endpoints.1.clone());
                out.extend(rp.path.steps().iter().map(|s| s.property.clone()));
            }
        }
    }
    out.retain(|x| schema.is_concept(x) || schema.is_attribute(x) || schema.is_object_property(x));
    out
}

/// Schema elements within `depth` of the aligned ones. Following a
/// domain/range edge from a concept to a property, or a subclass edge,
/// costs one; a property brings its endpoints, a concept its attributes and
/// equivalence axioms their partner, all at no cost.
pub fn reachable_elements(schema: &Schema, start: &BTreeSet<Iri>, depth: usize) -> BTreeMap<Iri, usize> {
    let mut dist: BTreeMap<Iri, usize> = BTreeMap::new();
    let mut queue: VecDeque<(Iri, usize)> = start.iter().map(|x| (x.clone(), 0)).collect();
    while let Some((x, d)) = queue.pop_front() {
        if d > depth || dist.get(&x).is_some_and(|&e| e <= d) {
            continue;
        }
        dist.insert(x.clone(), d);
        let mut free = Vec::new();
        let mut step = Vec::new();
        if schema.is_concept(&x) {
            free.extend(schema.attributes_of(&x).cloned());
            for (p, (dom, rng)) in schema.object_properties() {
                if *dom == x || *rng == x {
                    step.push(p.clone());
                }
            }
            step.extend(schema.parents(&x).cloned());
            step.extend(schema.children(&x).cloned());
            for (l, r) in schema.equivalent_classes() {
                if *l == x {
                    free.push(r.clone());
                } else if *r == x {
                    free.push(l.clone());
                }
            }
        } else if let Some((dom, rng)) = schema.object_properties().get(&x) {
            free.push(dom.clone());
            free.push(rng.clone());
        } else if let Some(dom) = schema.attributes().get(&x) {
            free.push(dom.clone());
        }
        if !schema.is_concept(&x) {
            for (l, r) in schema.equivalent_properties() {
                if *l == x {
                    free.push(r.clone());
                } else if *r == x {
                    free.push(l.clone());
                }
            }
        }
        // zero-cost neighbours go to the front so distances stay minimal
        for y in free {
            queue.push_front((y, d));
        }
        for y in step {
            queue.push_back((y, d + 1));
        }
    }
    dist
}

/// The part of `kb` within `cfg.recursion_depth` of the elements aligned on
/// `side`: the selected schema elements and the instance triples that use
/// them.
pub fn select_fragment(kb: &Kb, a: &Alignment, side: Side, cfg: FragmentConfig) -> Kb {
    let start = aligned_elements(a, side, &kb.schema);
    let keep: BTreeSet<Iri> = reachable_elements(&kb.schema, &start, cfg.recursion_depth).into_keys().collect();
    let schema = restrict_schema(&kb.schema, &keep);

    let ty = vocab::iri(vocab::RDF_TYPE);
    let label = vocab::iri(vocab::RDFS_LABEL);
    let typed_kept: BTreeSet<&Term> = kb
        .instances
        .with_predicate(&ty)
        .filter(|t| t.object.as_iri().is_some_and(|c| keep.contains(c)))
        .map(|t| &t.subject)
        .collect();
    let mut instances = Graph::new();
    *instances.prefixes_mut() = kb.instances.prefixes().clone();
    for t in kb.instances.iter() {
        let kept = if t.predicate == ty {
            t.object.as_iri().is_some_and(|c| keep.contains(c))
        } else if t.predicate == label {
            typed_kept.contains(&t.subject)
        } else {
            keep.contains(&t.predicate)
        };
        if kept {
            instances.insert(t.clone());
        }
    }
    Kb { schema, instances }
}

fn restrict_schema(schema: &Schema, keep: &BTreeSet<Iri>) -> Schema {
    let full = schema.to_graph();
    let mut g = Graph::new();
    for t in full.iter() {
        let subject_kept = t.subject.as_iri().is_some_and(|s| keep.contains(s));
        let object_ok = match t.object.as_iri() {
            Some(o) if schema.is_concept(o) || schema.is_attribute(o) || schema.is_object_property(o) => keep.contains(o),
            _ => true,
        };
        if subject_kept && object_ok {
            g.insert(t.clone());
        }
    }
    extract_schema(&g).expect("a closed subset of a valid schema is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::{all_semantic_associations, AssociationLimits};
    use crate::fixtures::RUNNING;
    use crate::rdf::parse_ntriples;
    use crate::scenario::{gen_sink_properties, ScenarioParams};

    fn names(s: &Schema) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = s.concepts().iter().map(|c| c.local_name().to_string()).collect();
        out.extend(s.attributes().keys().map(|c| c.local_name().to_string()));
        out.extend(s.object_properties().keys().map(|c| c.local_name().to_string()));
        out
    }

    fn is_sub(a: &Kb, b: &Kb) -> bool {
        let ga = a.schema.to_graph();
        let gb = b.schema.to_graph();
        ga.iter().all(|t| gb.contains(t)) && a.instances.iter().all(|t| b.instances.contains(t))
    }

    #[test]
    fn depth_zero_is_the_aligned_elements_and_their_attributes() {
        let mut st = RUNNING.load().unwrap();
        st.alignment = st.alignment.filtered(|c| ["C1", "C3"].contains(&c.id.as_str()));
        let f = select_fragment(&st.source, &st.alignment, Side::Source, FragmentConfig { recursion_depth: 0 });
        let expected: BTreeSet<String> = std::iter::once("Person".to_string())
            .chain(st.source.schema.attributes_of(&vocab::iri("http://example.org/src#Person")).map(|a| a.local_name().to_string()))
            .collect();
        assert_eq!(names(&f.schema), expected);
        let typed: Vec<String> = f.instances.iter().filter(|t| t.predicate.local_name() == "type").map(|t| t.subject.to_string()).collect();
        assert_eq!(typed, vec!["<http://example.org/src#bob>".to_string()]);
    }

    #[test]
    fn large_depth_saturates() {
        let st = RUNNING.load().unwrap();
        for side in [Side::Source, Side::Target] {
            let kb = if side == Side::Source { &st.source } else { &st.target };
            let f = select_fragment(kb, &st.alignment, side, FragmentConfig { recursion_depth: 50 });
            assert_eq!(&f, kb);
            let limits = AssociationLimits::default();
            assert_eq!(
                all_semantic_associations(&f.schema, &st.alignment, side, limits),
                all_semantic_associations(&kb.schema, &st.alignment, side, limits)
            );
        }
    }

    #[test]
    fn equivalent_class_costs_nothing() {
        let text = "\
<http://e/A> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://e/B> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://e/C> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://e/A> <http://www.w3.org/2002/07/owl#equivalentClass> <http://e/B> .
<http://e/C> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://e/A> .
";
        let kb = Kb::from_graph(&parse_ntriples(text).unwrap()).unwrap();
        let a = Alignment::parse(
            r#"{"prefixes": {"e": "http://e/"}, "correspondences": [{"id": "X", "kind": "c2c", "source": "e:A", "target": "e:A"}]}"#,
        )
        .unwrap();
        let f0 = select_fragment(&kb, &a, Side::Source, FragmentConfig { recursion_depth: 0 });
        assert_eq!(names(&f0.schema), BTreeSet::from(["A".to_string(), "B".to_string()]));
        let f1 = select_fragment(&kb, &a, Side::Source, FragmentConfig { recursion_depth: 1 });
        assert_eq!(f1.schema.concepts().len(), 3);
    }

    #[test]
    fn fragments_grow_with_depth_and_keep_aligned_elements() {
        let st = RUNNING.load().unwrap();
        let synth = gen_sink_properties(&ScenarioParams::new(3, 2, 4)).unwrap();
        for (kb, a) in [(&st.source, &st.alignment), (&synth.source, &synth.alignment)] {
            let aligned = aligned_elements(a, Side::Source, &kb.schema);
            let mut prev = select_fragment(kb, a, Side::Source, FragmentConfig { recursion_depth: 0 });
            for d in 0..6 {
                let next = select_fragment(kb, a, Side::Source, FragmentConfig { recursion_depth: d + 1 });
                assert!(is_sub(&prev, &next), "depth {d}");
                assert!(is_sub(&next, kb));
                let present = |x: &Iri| prev.schema.is_concept(x) || prev.schema.is_attribute(x) || prev.schema.is_object_property(x);
                assert!(aligned.iter().all(present));
                prev = next;
            }
        }
    }
}
