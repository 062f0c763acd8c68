//! Running mapping rules over source instances, and review examples built
//! from per-renaming query solutions.

use crate::interpretation::{Renaming, Skeleton};
use crate::querygen::{build_renaming_query, BlankMode, QueryGenError};
use crate::rdf::{serialize_ntriples, vocab, BlankNode, Graph, Kb, PrefixMap, Term, Triple};
use crate::sparql::{evaluate_pattern, execute_construct, instantiate, Element, GroupPattern, Query, SparqlError, TriplePattern};

/// Instance triples plus an `rdf:type` triple for every superclass of every
/// asserted type. Queries are evaluated without entailment, so a pattern
/// `?x a src:Person` only sees employees after this step.
pub fn materialize_types(kb: &Kb) -> Graph {
    let ty = vocab::iri(vocab::RDF_TYPE);
    let mut out = kb.instances.clone();
    for t in kb.instances.with_predicate(&ty) {
        let Term::Iri(c) = &t.object else { continue };
        for sup in kb.schema.ancestors(c) {
            out.insert(Triple { subject: t.subject.clone(), predicate: ty.clone(), object: Term::Iri(sup) });
        }
    }
    out
}

/// Execute every query over `source` and merge the results. Blank nodes
/// produced by query `k` get the label prefix `q{k}`, so two queries never
/// share a blank node.
pub fn exchange(source: &Graph, queries: &[Query]) -> Result<Graph, SparqlError> {
    let mut out = Graph::new();
    for (k, q) in queries.iter().enumerate() {
        let g = execute_construct(source, q)?;
        out.extend(&relabel_blanks(&g, &format!("q{k}")));
    }
    Ok(out)
}

/// Prefix every blank-node label of `g` with `prefix`.
pub fn relabel_blanks(g: &Graph, prefix: &str) -> Graph {
    let fix = |t: &Term| match t {
        Term::BlankNode(b) => Term::BlankNode(BlankNode::new(format!("{prefix}{}", b.label())).expect("prefixing keeps labels valid")),
        other => other.clone(),
    };
    let mut out = Graph::new();
    *out.prefixes_mut() = g.prefixes().clone();
    for t in g.iter() {
        out.insert(Triple { subject: fix(&t.subject), predicate: t.predicate.clone(), object: fix(&t.object) });
    }
    out
}

/// Canonical N-Triples of an exchanged graph.
pub fn canonical_ntriples(g: &Graph) -> String {
    serialize_ntriples(g)
}

/// One query solution shown as the source facts it matched and the target
/// facts it produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub source: Graph,
    pub target: Graph,
}

impl Example {
    pub fn render(&self) -> String {
        format!("# source\n{}# target\n{}", serialize_ntriples(&self.source), serialize_ntriples(&self.target))
    }
}

fn pattern_triples<'a>(g: &'a GroupPattern, out: &mut Vec<&'a TriplePattern>) {
    for e in &g.elements {
        match e {
            Element::Triple(t) => out.push(t),
            Element::Optional(g) | Element::Group(g) => pattern_triples(g, out),
            Element::Union(bs) => bs.iter().for_each(|b| pattern_triples(b, out)),
            Element::Bind(..) => {}
        }
    }
}

/// Up to `limit` examples for one renaming, in solution order. Solutions
/// whose target side is empty are skipped.
pub fn generate_examples(kb: &Kb, sk: &Skeleton, re: &Renaming, prefixes: &PrefixMap, limit: usize) -> Result<Vec<Example>, QueryGenError> {
    if limit == 0 {
        return Ok(Vec::new());
    }
    let q = build_renaming_query(sk, re, prefixes, BlankMode::Scoped)?;
    let template = q.template().expect("mapping queries are CONSTRUCT queries");
    let mut source_patterns = Vec::new();
    pattern_triples(&q.pattern, &mut source_patterns);
    let g = materialize_types(kb);
    let mut out = Vec::new();
    for (i, sol) in evaluate_pattern(&g, &q.pattern).iter().enumerate() {
        let mut target = Graph::new();
        for t in template {
            if let Some(t) = instantiate(t, sol, i) {
                target.insert(t);
            }
        }
        if target.is_empty() {
            continue;
        }
        let mut source = Graph::new();
        for t in &source_patterns {
            if let Some(t) = instantiate(t, sol, i) {
                source.insert(t);
            }
        }
        out.push(Example { source, target });
        if out.len() == limit {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::AssociationLimits;
    use crate::fixtures::{OFFICES, RUNNING};
    use crate::interpretation::{build_skeletons, enumerate_renamings, Binding, ValidityMode};
    use crate::querygen::{build_mapping_query, query_prefixes};
    use crate::rdf::{parse_ntriples, Iri};

    fn src(local: &str) -> Term {
        Term::Iri(Iri::new(format!("http://example.org/src#{local}")).unwrap())
    }

    #[test]
    fn types_are_closed_under_subclass() {
        let st = RUNNING.load().unwrap();
        let g = materialize_types(&st.source);
        let person = Triple::new(src("alice"), vocab::iri(vocab::RDF_TYPE), src("Person")).unwrap();
        assert!(!st.source.instances.contains(&person));
        assert!(g.contains(&person));
        assert_eq!(g.len(), st.source.instances.len() + 1);
    }

    #[test]
    fn queries_never_share_blank_nodes() {
        let st = OFFICES.load().unwrap();
        let sk = build_skeletons(&st, AssociationLimits::default(), None).into_iter().find(|sk| sk.label() == "Office__Office").unwrap();
        let re = enumerate_renamings(&sk, &st.alignment, ValidityMode::Kensho, true).remove(0);
        let q = build_mapping_query(&sk, &[re], &query_prefixes(&st), BlankMode::Scoped).unwrap();
        let g = materialize_types(&st.source);
        let once = exchange(&g, std::slice::from_ref(&q)).unwrap();
        let twice = exchange(&g, &[q.clone(), q]).unwrap();
        let blanks = |g: &Graph| g.iter().filter(|t| matches!(t.subject, Term::BlankNode(_))).count();
        assert_eq!(blanks(&twice), 2 * blanks(&once));
    }

    #[test]
    fn empty_instances_exchange_to_nothing() {
        let st = OFFICES.load().unwrap();
        let sk = build_skeletons(&st, AssociationLimits::default(), None).into_iter().find(|sk| sk.label() == "Office__Office").unwrap();
        let re = enumerate_renamings(&sk, &st.alignment, ValidityMode::Kensho, true).remove(0);
        let q = build_mapping_query(&sk, &[re], &query_prefixes(&st), BlankMode::Scoped).unwrap();
        assert!(exchange(&Graph::new(), &[q]).unwrap().is_empty());
    }

    fn person_skeleton() -> (crate::Setting, Skeleton, Renaming) {
        let mut st = RUNNING.load().unwrap();
        st.alignment = st.alignment.filtered(|c| ["C1", "C2", "C3"].contains(&c.id.as_str()));
        let limits = AssociationLimits { max_path_depth: 1, max_assoc_length: 1 };
        let sk = build_skeletons(&st, limits, None).into_iter().find(|sk| sk.label() == "Person__Person").unwrap();
        let re = enumerate_renamings(&sk, &st.alignment, ValidityMode::Kensho, true).remove(0);
        (st, sk, re)
    }

    #[test]
    fn examples_pair_names_with_employer_addresses() {
        let (st, sk, re) = person_skeleton();
        let ex = generate_examples(&st.source, &sk, &re, &query_prefixes(&st), 10).unwrap();
        let text: Vec<String> = ex.iter().map(Example::render).collect();
        assert_eq!(ex.len(), 2, "{text:#?}");
        let alice = text.iter().find(|t| t.contains("\"Alice\"")).unwrap();
        assert!(alice.contains("\"9 Elm Road\""));
        assert!(!alice.contains("1 Main Street"));
        let bob = text.iter().find(|t| t.contains("\"Bob\"")).unwrap();
        assert!(bob.contains("\"1 Main Street\""));
        assert!(bob.contains("<http://example.org/trgt#work_address> _:"));
        assert!(generate_examples(&st.source, &sk, &re, &query_prefixes(&st), 1).unwrap().len() == 1);
    }

    #[test]
    fn zero_limit_and_all_epsilon() {
        let (st, sk, re) = person_skeleton();
        let pm = query_prefixes(&st);
        assert!(generate_examples(&st.source, &sk, &re, &pm, 0).unwrap().is_empty());
        let nothing = Renaming { bindings: vec![Binding::Epsilon; re.bindings.len()] };
        assert!(generate_examples(&st.source, &sk, &nothing, &pm, 10).unwrap().is_empty());
    }

    #[test]
    fn relabelling_keeps_the_graph_shape() {
        let g = parse_ntriples("_:a <http://x/p> _:b .\n_:b <http://x/p> \"1\" .\n").unwrap();
        let r = relabel_blanks(&g, "q3");
        assert!(r.is_isomorphic(&g));
        assert!(canonical_ntriples(&r).starts_with("_:q3a "));
    }
}
