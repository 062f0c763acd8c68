//! Random graphs and patterns, and a naive reference evaluator that
//! enumerates every variable assignment.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kbmap_core::rdf::{Graph, Iri, Literal, PrefixMap, Term, Triple};
use kbmap_core::sparql::{Element, Expr, Form, GroupPattern, Query, TermPattern, TriplePattern};
use proptest::prelude::*;

pub const NS: &str = "http://example.org/v#";

pub fn iri(local: &str) -> Iri {
    Iri::new(format!("{NS}{local}")).unwrap()
}

pub fn node(i: usize) -> Term {
    Term::Iri(iri(&["a", "b", "c", "d"][i]))
}

pub fn object(i: usize) -> Term {
    match i {
        0..=3 => node(i),
        4 => Term::Literal(Literal::simple("1")),
        _ => Term::Literal(Literal::simple("2")),
    }
}

pub fn predicate(i: usize) -> Iri {
    iri(["p", "q"][i])
}

pub fn graph_strategy() -> impl Strategy<Value = Graph> {
    prop::collection::vec((0..4usize, 0..2usize, 0..6usize), 0..=30).prop_map(|ts| {
        let mut g = Graph::new();
        for (s, p, o) in ts {
            g.insert(Triple::new(node(s), predicate(p), object(o)).unwrap());
        }
        g
    })
}

pub fn slot(vars: bool, constants: impl Strategy<Value = Term> + 'static) -> BoxedStrategy<TermPattern> {
    let var = (0..4usize).prop_map(|i| TermPattern::Var(format!("v{i}")));
    if vars {
        prop_oneof![3 => var, 1 => constants.prop_map(TermPattern::Term)].boxed()
    } else {
        constants.prop_map(TermPattern::Term).boxed()
    }
}

pub fn triple_strategy() -> impl Strategy<Value = TriplePattern> {
    let pred = prop_oneof![
        5 => (0..2usize).prop_map(|i| TermPattern::Term(Term::Iri(predicate(i)))),
        1 => (0..4usize).prop_map(|i| TermPattern::Var(format!("v{i}"))),
    ];
    (slot(true, (0..4usize).prop_map(node)), pred, slot(true, (0..6usize).prop_map(object)))
        .prop_map(|(s, p, o)| TriplePattern::new(s, p, o))
}

pub fn triples(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Element>> {
    prop::collection::vec(triple_strategy().prop_map(Element::Triple), n)
}

pub fn element_strategy() -> impl Strategy<Value = Vec<Element>> {
    prop_oneof![
        3 => triples(1..=1),
        // OPTIONAL, possibly with a nested OPTIONAL
        2 => (triples(1..=2), prop::option::of(triples(1..=1))).prop_map(|(mut body, nested)| {
            if let Some(n) = nested {
                body.push(Element::Optional(GroupPattern::new(n)));
            }
            vec![Element::Optional(GroupPattern::new(body))]
        }),
        1 => (triples(1..=1), triples(1..=2))
            .prop_map(|(a, b)| vec![Element::Union(vec![GroupPattern::new(a), GroupPattern::new(b)])]),
        1 => (0..4usize, 4..6usize).prop_map(|(v, w)| vec![Element::Bind(Expr::Var(format!("v{v}")), format!("v{w}"))]),
    ]
}

pub fn count(g: &GroupPattern, f: &dyn Fn(&Element) -> usize) -> usize {
    g.elements
        .iter()
        .map(|e| {
            f(e) + match e {
                Element::Optional(h) | Element::Group(h) => count(h, f),
                Element::Union(bs) => bs.iter().map(|b| count(b, f)).sum(),
                _ => 0,
            }
        })
        .sum()
}

/// Groups with at most 6 triple patterns, 2 OPTIONALs and 1 UNION.
pub fn pattern_strategy() -> impl Strategy<Value = GroupPattern> {
    prop::collection::vec(element_strategy(), 1..=4)
        .prop_map(|parts| GroupPattern::new(parts.into_iter().flatten().collect()))
        .prop_filter("size limits", |g| {
            count(g, &|e| matches!(e, Element::Triple(_)) as usize) <= 6
                && count(g, &|e| matches!(e, Element::Optional(_)) as usize) <= 2
                && count(g, &|e| matches!(e, Element::Union(_)) as usize) <= 1
                && bind_targets_fresh(g)
        })
}

/// The parser refuses BIND onto a variable already in scope, so random
/// patterns follow the same rule.
pub fn bind_targets_fresh(g: &GroupPattern) -> bool {
    let mut seen = BTreeSet::new();
    for e in &g.elements {
        if let Element::Bind(_, v) = e {
            if seen.contains(v) {
                return false;
            }
        }
        seen.extend(GroupPattern::new(vec![e.clone()]).vars());
    }
    true
}

pub type Mapping = BTreeMap<String, Term>;

pub mod oracle {
    use super::*;

    fn graph_terms(g: &Graph) -> Vec<Term> {
        let mut out = BTreeSet::new();
        for t in g.iter() {
            out.insert(t.subject.clone());
            out.insert(Term::Iri(t.predicate.clone()));
            out.insert(t.object.clone());
        }
        out.into_iter().collect()
    }

    fn ground(p: &TermPattern, m: &Mapping) -> Term {
        match p {
            TermPattern::Var(v) => m[v].clone(),
            TermPattern::Term(t) => t.clone(),
        }
    }

    /// Every assignment of the BGP's variables to graph terms under which
    /// each instantiated pattern is a graph triple.
    fn bgp(g: &Graph, patterns: &[&TriplePattern]) -> Vec<Mapping> {
        let vars: Vec<String> =
            patterns.iter().flat_map(|t| t.vars()).map(str::to_string).collect::<BTreeSet<_>>().into_iter().collect();
        let terms = graph_terms(g);
        let mut out = Vec::new();
        let mut digits = vec![0usize; vars.len()];
        if !vars.is_empty() && terms.is_empty() {
            return out;
        }
        loop {
            let m: Mapping = vars.iter().cloned().zip(digits.iter().map(|&d| terms[d].clone())).collect();
            let all = patterns.iter().all(|t| {
                let Term::Iri(p) = ground(&t.predicate, &m) else { return false };
                Triple::new(ground(&t.subject, &m), p, ground(&t.object, &m)).is_ok_and(|tr| g.contains(&tr))
            });
            if all {
                out.push(m);
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == digits.len() {
                    return out;
                }
                digits[k] += 1;
                if digits[k] < terms.len() {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
        }
    }

    fn compatible(a: &Mapping, b: &Mapping) -> bool {
        a.iter().all(|(k, v)| b.get(k).is_none_or(|w| w == v))
    }

    fn join(l: &[Mapping], r: &[Mapping]) -> Vec<Mapping> {
        let mut out = Vec::new();
        for a in l {
            for b in r {
                if compatible(a, b) {
                    let mut m = a.clone();
                    m.extend(b.clone());
                    out.push(m);
                }
            }
        }
        out
    }

    pub fn eval(g: &Graph, p: &GroupPattern) -> Vec<Mapping> {
        let mut acc = vec![Mapping::new()];
        let mut pending: Vec<&TriplePattern> = Vec::new();
        for e in &p.elements {
            if let Element::Triple(t) = e {
                pending.push(t);
                continue;
            }
            if !pending.is_empty() {
                acc = join(&acc, &bgp(g, &pending));
                pending.clear();
            }
            acc = match e {
                Element::Optional(h) => {
                    let right = eval(g, h);
                    let mut out = Vec::new();
                    for a in &acc {
                        let ext = join(std::slice::from_ref(a), &right);
                        if ext.is_empty() {
                            out.push(a.clone());
                        } else {
                            out.extend(ext);
                        }
                    }
                    out
                }
                Element::Group(h) => join(&acc, &eval(g, h)),
                Element::Union(bs) => join(&acc, &bs.iter().flat_map(|b| eval(g, b)).collect::<Vec<_>>()),
                Element::Bind(Expr::Var(x), v) => acc
                    .into_iter()
                    .map(|mut m| {
                        if let Some(t) = m.get(x).cloned() {
                            m.entry(v.clone()).or_insert(t);
                        }
                        m
                    })
                    .collect(),
                _ => unreachable!("generator only produces variable BINDs"),
            };
        }
        if !pending.is_empty() {
            acc = join(&acc, &bgp(g, &pending));
        }
        acc
    }
}

pub fn sorted(mut v: Vec<Mapping>) -> Vec<Mapping> {
    v.sort();
    v
}

pub fn query_of(pattern: GroupPattern) -> Query {
    let mut pm = PrefixMap::new();
    pm.insert("v", NS);
    Query { prefixes: pm, form: Form::Select(None), pattern }
}

