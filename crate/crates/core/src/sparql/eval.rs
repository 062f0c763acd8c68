use std::collections::{BTreeMap, BTreeSet};

use super::{Element, Expr, Form, GroupPattern, Query, SparqlError, TermPattern, TriplePattern};
use crate::rdf::{BlankNode, Graph, Iri, Term, Triple};

/// One solution mapping. Blank nodes created by `BNODE` are listed in
/// `fresh` under their label; anonymous `BNODE()` calls get a synthetic
/// label starting with `_`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Solution {
    pub bindings: BTreeMap<String, Term>,
    pub fresh: BTreeMap<String, BlankNode>,
}

impl Solution {
    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }
}

/// A value before blank-node materialization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Value {
    Term(Term),
    Fresh(String),
}

type Row = BTreeMap<String, Value>;

struct Index<'g> {
    all: Vec<&'g Triple>,
    by_predicate: BTreeMap<&'g Iri, Vec<&'g Triple>>,
}

impl<'g> Index<'g> {
    fn new(g: &'g Graph) -> Self {
        let mut by_predicate: BTreeMap<&Iri, Vec<&Triple>> = BTreeMap::new();
        for t in g.iter() {
            by_predicate.entry(&t.predicate).or_default().push(t);
        }
        Index { all: g.iter().collect(), by_predicate }
    }

    fn candidates(&self, p: &TriplePattern, row: &Row) -> &[&'g Triple] {
        let bound = match &p.predicate {
            TermPattern::Term(Term::Iri(i)) => Some(i),
            TermPattern::Term(_) => return &[],
            TermPattern::Var(v) => match row.get(v) {
                Some(Value::Term(Term::Iri(i))) => Some(i),
                Some(_) => return &[],
                None => None,
            },
        };
        match bound {
            Some(i) => self.by_predicate.get(i).map_or(&[], Vec::as_slice),
            None => &self.all,
        }
    }
}

struct Evaluator<'g> {
    index: Index<'g>,
    anon: usize,
}

/// Evaluate a group pattern bottom-up: adjacent triples form a basic graph
/// pattern, every other element is joined (OPTIONAL left-joined, BIND
/// extending, UNION concatenating) onto the solutions so far. Solutions
/// form a multiset in deterministic order.
pub fn evaluate_pattern(g: &Graph, pattern: &GroupPattern) -> Vec<Solution> {
    let mut ev = Evaluator { index: Index::new(g), anon: 0 };
    let rows = ev.group(pattern);
    rows.into_iter().enumerate().map(|(i, row)| materialize(i, row)).collect()
}

fn materialize(i: usize, row: Row) -> Solution {
    let mut sol = Solution::default();
    for (var, value) in row {
        let term = match value {
            Value::Term(t) => t,
            Value::Fresh(label) => {
                let n = sol.fresh.len();
                let b = sol
                    .fresh
                    .entry(label)
                    .or_insert_with(|| BlankNode::new(format!("s{i}b{n}")).expect("generated label is valid"));
                Term::BlankNode(b.clone())
            }
        };
        sol.bindings.insert(var, term);
    }
    sol
}

impl Evaluator<'_> {
    fn group(&mut self, g: &GroupPattern) -> Vec<Row> {
        let mut acc = vec![Row::new()];
        let mut bgp: Vec<&TriplePattern> = Vec::new();
        for e in &g.elements {
            if let Element::Triple(t) = e {
                bgp.push(t);
                continue;
            }
            if !bgp.is_empty() {
                acc = self.bgp_join(acc, &bgp);
                bgp.clear();
            }
            acc = match e {
                Element::Triple(_) => unreachable!(),
                Element::Optional(inner) => {
                    let right = self.group(inner);
                    left_join(&acc, &right)
                }
                Element::Group(inner) => {
                    let right = self.group(inner);
                    join(&acc, &right)
                }
                Element::Union(branches) => {
                    let mut right = Vec::new();
                    for b in branches {
                        right.extend(self.group(b));
                    }
                    join(&acc, &right)
                }
                Element::Bind(expr, var) => acc.into_iter().map(|row| self.extend(row, expr, var)).collect(),
            };
        }
        if !bgp.is_empty() {
            acc = self.bgp_join(acc, &bgp);
        }
        acc
    }

    /// Join with a basic graph pattern by matching it under each existing
    /// row; equivalent to joining with the BGP's own solutions.
    fn bgp_join(&self, acc: Vec<Row>, bgp: &[&TriplePattern]) -> Vec<Row> {
        let mut out = Vec::new();
        for row in acc {
            let mut local = row;
            self.match_bgp(bgp, &mut local, &mut out);
        }
        out
    }

    fn match_bgp(&self, bgp: &[&TriplePattern], row: &mut Row, out: &mut Vec<Row>) {
        let Some((first, rest)) = bgp.split_first() else {
            out.push(row.clone());
            return;
        };
        for t in self.index.candidates(first, row) {
            let mut added = Vec::new();
            let ok = bind_slot(&first.subject, &t.subject, row, &mut added)
                && bind_slot(&first.predicate, &Term::Iri(t.predicate.clone()), row, &mut added)
                && bind_slot(&first.object, &t.object, row, &mut added);
            if ok {
                self.match_bgp(rest, row, out);
            }
            for v in added {
                row.remove(&v);
            }
        }
    }

    fn extend(&mut self, mut row: Row, expr: &Expr, var: &str) -> Row {
        if row.contains_key(var) {
            return row;
        }
        let value = match expr {
            Expr::Var(v) => row.get(v).cloned(),
            Expr::Term(t) => Some(Value::Term(t.clone())),
            Expr::Bnode(Some(label)) => Some(Value::Fresh(label.clone())),
            Expr::Bnode(None) => {
                self.anon += 1;
                Some(Value::Fresh(format!("_{}", self.anon)))
            }
        };
        if let Some(v) = value {
            row.insert(var.to_string(), v);
        }
        row
    }
}

fn bind_slot(p: &TermPattern, term: &Term, row: &mut Row, added: &mut Vec<String>) -> bool {
    match p {
        TermPattern::Term(t) => t == term,
        TermPattern::Var(v) => match row.get(v) {
            Some(Value::Term(t)) => t == term,
            Some(Value::Fresh(_)) => false,
            None => {
                row.insert(v.clone(), Value::Term(term.clone()));
                added.push(v.clone());
                true
            }
        },
    }
}

fn compatible(a: &Row, b: &Row) -> bool {
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().all(|(k, v)| big.get(k).is_none_or(|w| w == v))
}

fn merge(a: &Row, b: &Row) -> Row {
    let mut out = a.clone();
    out.extend(b.iter().map(|(k, v)| (k.clone(), v.clone())));
    out
}

fn join(left: &[Row], right: &[Row]) -> Vec<Row> {
    let mut out = Vec::new();
    for l in left {
        for r in right {
            if compatible(l, r) {
                out.push(merge(l, r));
            }
        }
    }
    out
}

fn left_join(left: &[Row], right: &[Row]) -> Vec<Row> {
    let mut out = Vec::new();
    for l in left {
        let before = out.len();
        for r in right {
            if compatible(l, r) {
                out.push(merge(l, r));
            }
        }
        if out.len() == before {
            out.push(l.clone());
        }
    }
    out
}

/// Instantiate the template once per solution. Template blank nodes are
/// renamed per solution; triples with an unbound or ill-typed slot are
/// skipped. The result is a set.
pub fn execute_construct(g: &Graph, q: &Query) -> Result<Graph, SparqlError> {
    let template = q.template().ok_or(SparqlError::NotConstruct)?;
    let mut out = Graph::new();
    *out.prefixes_mut() = q.prefixes.clone();
    for (i, sol) in evaluate_pattern(g, &q.pattern).iter().enumerate() {
        for t in template {
            if let Some(triple) = instantiate(t, sol, i) {
                out.insert(triple);
            }
        }
    }
    Ok(out)
}

/// One template triple under solution number `i`, or `None` when a slot is
/// unbound or ill-typed.
pub fn instantiate(t: &TriplePattern, sol: &Solution, i: usize) -> Option<Triple> {
    let slot = |p: &TermPattern| -> Option<Term> {
        match p {
            TermPattern::Var(v) => sol.get(v).cloned(),
            TermPattern::Term(Term::BlankNode(b)) => BlankNode::new(format!("s{i}t{}", b.label())).ok().map(Term::BlankNode),
            TermPattern::Term(t) => Some(t.clone()),
        }
    };
    let predicate = match slot(&t.predicate)? {
        Term::Iri(i) => i,
        _ => return None,
    };
    Triple::new(slot(&t.subject)?, predicate, slot(&t.object)?).ok()
}

/// Solutions projected onto the SELECT variables.
pub fn execute_select(g: &Graph, q: &Query) -> Vec<Solution> {
    let sols = evaluate_pattern(g, &q.pattern);
    match &q.form {
        Form::Select(Some(vars)) => {
            let keep: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
            sols.into_iter()
                .map(|mut s| {
                    s.bindings.retain(|k, _| keep.contains(k.as_str()));
                    s
                })
                .collect()
        }
        _ => sols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_ntriples;
    use crate::sparql::parse_query;

    const EX2_FIRST: &str = "PREFIX src: <http://example.org/src#>
SELECT * WHERE {
    ?o a src:Organization.
    OPTIONAL
       {?o  src:located_in  ?ozCountry.
        ?ozCountry  a src:Country.}}";

    fn graph(nt: &str) -> Graph {
        parse_ntriples(nt).unwrap()
    }

    #[test]
    fn missing_country_stays_unbound() {
        let g = graph(
            r#"<http://example.org/src#acme> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/src#Organization> .
<http://example.org/src#acme> <http://example.org/src#name> "Acme" .
<http://example.org/src#initech> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/src#Organization> .
<http://example.org/src#initech> <http://example.org/src#located_in> <http://example.org/src#canada> .
<http://example.org/src#canada> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/src#Country> .
"#,
        );
        let q = parse_query(EX2_FIRST).unwrap();
        let sols = execute_select(&g, &q);
        assert_eq!(sols.len(), 2);
        let acme = Term::Iri(Iri::new("http://example.org/src#acme").unwrap());
        let of_acme: Vec<&Solution> = sols.iter().filter(|s| s.get("o") == Some(&acme)).collect();
        assert_eq!(of_acme.len(), 1);
        assert_eq!(of_acme[0].get("ozCountry"), None);
        let other = sols.iter().find(|s| s.get("o") != Some(&acme)).unwrap();
        assert_eq!(other.get("ozCountry"), Some(&Term::Iri(Iri::new("http://example.org/src#canada").unwrap())));
    }

    #[test]
    fn empty_graph_and_doubled_union() {
        let q = parse_query("SELECT * WHERE { ?s ?p ?o }").unwrap();
        assert!(evaluate_pattern(&Graph::new(), &q.pattern).is_empty());
        let g = graph("<http://x.org/a> <http://x.org/p> <http://x.org/b> .\n<http://x.org/a> <http://x.org/p> <http://x.org/c> .\n");
        let single = evaluate_pattern(&g, &q.pattern).len();
        let u = parse_query("SELECT * WHERE { { ?s ?p ?o } UNION { ?s ?p ?o } }").unwrap();
        assert_eq!(single, 2);
        assert_eq!(evaluate_pattern(&g, &u.pattern).len(), 2 * single);
    }

    #[test]
    fn bnode_is_shared_within_and_fresh_across_solutions() {
        let g = graph("<http://x.org/a> <http://x.org/p> <http://x.org/b> .\n<http://x.org/c> <http://x.org/p> <http://x.org/d> .\n");
        let q = parse_query(r#"SELECT * WHERE { ?s ?p ?o BIND(BNODE("k") AS ?x) BIND(BNODE("k") AS ?y) BIND(BNODE() AS ?z) }"#).unwrap();
        let sols = evaluate_pattern(&g, &q.pattern);
        assert_eq!(sols.len(), 2);
        for s in &sols {
            assert_eq!(s.get("x"), s.get("y"));
            assert_ne!(s.get("x"), s.get("z"));
        }
        assert_ne!(sols[0].get("x"), sols[1].get("x"));
        // a bound target is left alone
        let q = parse_query(r#"SELECT * WHERE { BIND(?s AS ?x) ?s ?p ?o }"#).unwrap();
        assert!(evaluate_pattern(&g, &q.pattern).iter().all(|s| s.get("x").is_none()));
    }

    #[test]
    fn construct_skips_unbound_slots_and_renames_template_blanks() {
        let g = graph(
            r#"<http://x.org/o1> <http://x.org/phone> "1" .
<http://x.org/o1> <http://x.org/addr> "A" .
<http://x.org/o2> <http://x.org/phone> "2" .
"#,
        );
        let q = parse_query(
            "PREFIX x: <http://x.org/>\nCONSTRUCT { _:c x:phone ?p . _:c x:addr ?a } WHERE { ?o x:phone ?p OPTIONAL { ?o x:addr ?a } }",
        )
        .unwrap();
        let out = execute_construct(&g, &q).unwrap();
        assert_eq!(out.len(), 3);
        let subjects: BTreeSet<&Term> = out.iter().map(|t| &t.subject).collect();
        assert_eq!(subjects.len(), 2);
        let select = parse_query("SELECT * WHERE { ?s ?p ?o }").unwrap();
        assert_eq!(execute_construct(&g, &select), Err(SparqlError::NotConstruct));
        assert!(execute_construct(&Graph::new(), &q).unwrap().is_empty());
    }
}
