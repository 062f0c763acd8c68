use std::collections::{BTreeMap, BTreeSet};

use super::{BlankNode, Iri, PrefixMap, Term, Triple};

/// A set of triples. Iteration order is the derived `Ord` of [`Triple`];
/// the canonical serialization order is defined in `ntriples`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    prefixes: PrefixMap,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn prefixes_mut(&mut self) -> &mut PrefixMap {
        &mut self.prefixes
    }

    pub fn extend(&mut self, other: &Graph) {
        self.triples.extend(other.triples.iter().cloned());
        self.prefixes.extend(&other.prefixes);
    }

    pub fn with_predicate<'a>(&'a self, predicate: &'a Iri) -> impl Iterator<Item = &'a Triple> + 'a {
        self.triples.iter().filter(move |t| &t.predicate == predicate)
    }

    pub fn objects<'a>(&'a self, subject: &'a Term, predicate: &'a Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| &t.subject == subject && &t.predicate == predicate)
            .map(|t| &t.object)
    }

    /// Blank-node-aware equality: true when a bijection between the blank
    /// nodes of the two graphs maps one triple set onto the other.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let ground = |g: &Graph| -> BTreeSet<Triple> { g.iter().filter(|t| !has_blank(t)).cloned().collect() };
        if ground(self) != ground(other) {
            return false;
        }
        let left: Vec<&Triple> = self.iter().filter(|t| has_blank(t)).collect();
        let right: BTreeSet<&Triple> = other.iter().filter(|t| has_blank(t)).collect();
        let left_nodes = blank_nodes(&left);
        let right_nodes = blank_nodes(&right.iter().copied().collect::<Vec<_>>());
        if left_nodes.len() != right_nodes.len() {
            return false;
        }
        let sig_left = signatures(&left);
        let sig_right = signatures(&right.iter().copied().collect::<Vec<_>>());
        let mut mapping = BTreeMap::new();
        let mut used = BTreeSet::new();
        let order: Vec<BlankNode> = left_nodes.into_iter().collect();
        search(&order, 0, &sig_left, &sig_right, &right_nodes, &mut mapping, &mut used, &left, &right)
    }
}

fn has_blank(t: &Triple) -> bool {
    matches!(t.subject, Term::BlankNode(_)) || matches!(t.object, Term::BlankNode(_))
}

fn blank_nodes(triples: &[&Triple]) -> BTreeSet<BlankNode> {
    let mut out = BTreeSet::new();
    for t in triples {
        for term in [&t.subject, &t.object] {
            if let Term::BlankNode(b) = term {
                out.insert(b.clone());
            }
        }
    }
    out
}

// Multiset of (position, predicate, other-end-if-ground) per blank node; a
// cheap invariant that prunes the bijection search.
fn signatures(triples: &[&Triple]) -> BTreeMap<BlankNode, Vec<String>> {
    let mut out: BTreeMap<BlankNode, Vec<String>> = BTreeMap::new();
    for t in triples {
        let render = |term: &Term| match term {
            Term::BlankNode(_) => "_".to_string(),
            other => other.to_string(),
        };
        if let Term::BlankNode(b) = &t.subject {
            out.entry(b.clone()).or_default().push(format!("s {} {}", t.predicate, render(&t.object)));
        }
        if let Term::BlankNode(b) = &t.object {
            out.entry(b.clone()).or_default().push(format!("o {} {}", t.predicate, render(&t.subject)));
        }
    }
    for v in out.values_mut() {
        v.sort();
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    order: &[BlankNode],
    idx: usize,
    sig_left: &BTreeMap<BlankNode, Vec<String>>,
    sig_right: &BTreeMap<BlankNode, Vec<String>>,
    right_nodes: &BTreeSet<BlankNode>,
    mapping: &mut BTreeMap<BlankNode, BlankNode>,
    used: &mut BTreeSet<BlankNode>,
    left: &[&Triple],
    right: &BTreeSet<&Triple>,
) -> bool {
    if idx == order.len() {
        return left.iter().all(|t| {
            let map = |term: &Term| match term {
                Term::BlankNode(b) => Term::BlankNode(mapping[b].clone()),
                other => other.clone(),
            };
            let image = Triple { subject: map(&t.subject), predicate: t.predicate.clone(), object: map(&t.object) };
            right.contains(&image)
        });
    }
    let node = &order[idx];
    for candidate in right_nodes {
        if used.contains(candidate) || sig_left.get(node) != sig_right.get(candidate) {
            continue;
        }
        mapping.insert(node.clone(), candidate.clone());
        used.insert(candidate.clone());
        if search(order, idx + 1, sig_left, sig_right, right_nodes, mapping, used, left, right) {
            return true;
        }
        mapping.remove(node);
        used.remove(candidate);
    }
    false
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph { triples: iter.into_iter().collect(), prefixes: PrefixMap::new() }
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

#[cfg(test)]
mod tests {
    use crate::rdf::parse_ntriples;

    #[test]
    fn isomorphism_ignores_blank_labels() {
        let a = parse_ntriples("_:x <a:p> \"1\" .\n_:x <a:q> _:y .\n_:y <a:p> \"2\" .\n").unwrap();
        let b = parse_ntriples("_:n2 <a:p> \"2\" .\n_:n1 <a:q> _:n2 .\n_:n1 <a:p> \"1\" .\n").unwrap();
        let c = parse_ntriples("_:n1 <a:p> \"2\" .\n_:n1 <a:q> _:n2 .\n_:n2 <a:p> \"1\" .\n").unwrap();
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&c));
    }

    #[test]
    fn isomorphism_detects_cross_pairing() {
        let grouped = parse_ntriples("_:a <a:ph> \"1\" .\n_:a <a:ad> \"x\" .\n_:b <a:ph> \"2\" .\n_:b <a:ad> \"y\" .\n").unwrap();
        let crossed = parse_ntriples("_:a <a:ph> \"1\" .\n_:a <a:ad> \"y\" .\n_:b <a:ph> \"2\" .\n_:b <a:ad> \"x\" .\n").unwrap();
        assert!(!grouped.is_isomorphic(&crossed));
    }
}
