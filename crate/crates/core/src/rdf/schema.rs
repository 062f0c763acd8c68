use std::collections::{BTreeMap, BTreeSet};

use super::vocab::{self, iri};
use super::{Graph, Iri, RdfError, Term, Triple};

/// The RDFS layer of a knowledge base: concepts, attributes (datatype
/// properties), object properties and the subclass hierarchy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    concepts: BTreeSet<Iri>,
    attributes: BTreeMap<Iri, Iri>,
    object_properties: BTreeMap<Iri, (Iri, Iri)>,
    subclass_edges: BTreeSet<(Iri, Iri)>,
    equivalent_classes: BTreeSet<(Iri, Iri)>,
    equivalent_properties: BTreeSet<(Iri, Iri)>,
}

impl Schema {
    pub fn concepts(&self) -> &BTreeSet<Iri> {
        &self.concepts
    }

    /// attribute → domain concept
    pub fn attributes(&self) -> &BTreeMap<Iri, Iri> {
        &self.attributes
    }

    /// object property → (domain, range)
    pub fn object_properties(&self) -> &BTreeMap<Iri, (Iri, Iri)> {
        &self.object_properties
    }

    /// (child, parent)
    pub fn subclass_edges(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.subclass_edges
    }

    pub fn equivalent_classes(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.equivalent_classes
    }

    pub fn equivalent_properties(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.equivalent_properties
    }

    pub fn is_concept(&self, c: &Iri) -> bool {
        self.concepts.contains(c)
    }

    /// True for declared attributes and for `rdfs:label`, which every
    /// concept carries implicitly.
    pub fn is_attribute(&self, a: &Iri) -> bool {
        self.attributes.contains_key(a) || a.as_str() == vocab::RDFS_LABEL
    }

    pub fn is_object_property(&self, p: &Iri) -> bool {
        self.object_properties.contains_key(p)
    }

    pub fn parents<'a>(&'a self, c: &'a Iri) -> impl Iterator<Item = &'a Iri> + 'a {
        self.subclass_edges.iter().filter(move |(child, _)| child == c).map(|(_, p)| p)
    }

    pub fn children<'a>(&'a self, c: &'a Iri) -> impl Iterator<Item = &'a Iri> + 'a {
        self.subclass_edges.iter().filter(move |(_, parent)| parent == c).map(|(ch, _)| ch)
    }

    /// Reflexive-transitive superclasses of `c`.
    pub fn ancestors(&self, c: &Iri) -> BTreeSet<Iri> {
        let mut out = BTreeSet::from([c.clone()]);
        let mut stack = vec![c.clone()];
        while let Some(x) = stack.pop() {
            for p in self.parents(&x) {
                if out.insert(p.clone()) {
                    stack.push(p.clone());
                }
            }
        }
        out
    }

    /// `sub ⊑ sup`, reflexively and transitively.
    pub fn is_subclass_of(&self, sub: &Iri, sup: &Iri) -> bool {
        sub == sup || self.ancestors(sub).contains(sup)
    }

    /// Attributes whose declared domain is exactly `c`.
    pub fn attributes_of<'a>(&'a self, c: &'a Iri) -> impl Iterator<Item = &'a Iri> + 'a {
        self.attributes.iter().filter(move |(_, d)| *d == c).map(|(a, _)| a)
    }

    /// Whether an attribute applies to instances of `c` (domain is `c` or a
    /// superclass).
    pub fn attribute_applies(&self, attr: &Iri, c: &Iri) -> bool {
        if attr.as_str() == vocab::RDFS_LABEL {
            return self.concepts.contains(c);
        }
        self.attributes.get(attr).is_some_and(|d| self.is_subclass_of(c, d))
    }

    /// Schema-layer triples. Re-extracting them yields an equal schema.
    pub fn to_graph(&self) -> Graph {
        let ty = iri(vocab::RDF_TYPE);
        let t = |s: &Iri, p: &Iri, o: &Iri| Triple { subject: Term::Iri(s.clone()), predicate: p.clone(), object: Term::Iri(o.clone()) };
        let mut g = Graph::new();
        for c in &self.concepts {
            g.insert(t(c, &ty, &iri(vocab::OWL_CLASS)));
        }
        for (a, d) in &self.attributes {
            g.insert(t(a, &ty, &iri(vocab::OWL_DATATYPE_PROPERTY)));
            g.insert(t(a, &iri(vocab::RDFS_DOMAIN), d));
        }
        for (p, (d, r)) in &self.object_properties {
            g.insert(t(p, &ty, &iri(vocab::OWL_OBJECT_PROPERTY)));
            g.insert(t(p, &iri(vocab::RDFS_DOMAIN), d));
            g.insert(t(p, &iri(vocab::RDFS_RANGE), r));
        }
        for (c, p) in &self.subclass_edges {
            g.insert(t(c, &iri(vocab::RDFS_SUBCLASS_OF), p));
        }
        for (a, b) in &self.equivalent_classes {
            g.insert(t(a, &iri(vocab::OWL_EQUIVALENT_CLASS), b));
        }
        for (a, b) in &self.equivalent_properties {
            g.insert(t(a, &iri(vocab::OWL_EQUIVALENT_PROPERTY), b));
        }
        g
    }

    fn check_acyclic(&self) -> Result<(), RdfError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&Iri, u8> = BTreeMap::new();
        fn visit<'a>(s: &'a Schema, c: &'a Iri, state: &mut BTreeMap<&'a Iri, u8>, path: &mut Vec<&'a Iri>) -> Result<(), RdfError> {
            match state.get(c) {
                Some(2) => return Ok(()),
                Some(1) => {
                    let start = path.iter().position(|x| *x == c).unwrap_or(0);
                    let cycle: Vec<&str> = path[start..].iter().chain(std::iter::once(&c)).map(|x| x.local_name()).collect();
                    return Err(RdfError::SubclassCycle(cycle.join(" -> ")));
                }
                _ => {}
            }
            state.insert(c, 1);
            path.push(c);
            for p in s.parents(c) {
                visit(s, p, state, path)?;
            }
            path.pop();
            state.insert(c, 2);
            Ok(())
        }
        for c in &self.concepts {
            visit(self, c, &mut state, &mut Vec::new())?;
        }
        Ok(())
    }
}

fn is_builtin(i: &Iri) -> bool {
    let s = i.as_str();
    s.starts_with(vocab::RDF) || s.starts_with(vocab::RDFS) || s.starts_with(vocab::OWL) || s.starts_with(vocab::XSD)
}

/// Extract the schema layer from `g`. Instance triples are ignored.
pub fn extract_schema(g: &Graph) -> Result<Schema, RdfError> {
    let mut class_decl = BTreeSet::new();
    let mut datatype_decl = BTreeSet::new();
    let mut property_decl = BTreeSet::new();
    let mut domains: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut ranges: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut schema = Schema::default();

    for t in g.iter() {
        let (Term::Iri(s), Term::Iri(o)) = (&t.subject, &t.object) else {
            continue;
        };
        match t.predicate.as_str() {
            vocab::RDF_TYPE => match o.as_str() {
                vocab::RDFS_CLASS | vocab::OWL_CLASS => {
                    class_decl.insert(s.clone());
                }
                vocab::OWL_DATATYPE_PROPERTY => {
                    datatype_decl.insert(s.clone());
                    property_decl.insert(s.clone());
                }
                vocab::OWL_OBJECT_PROPERTY | vocab::RDF_PROPERTY => {
                    property_decl.insert(s.clone());
                }
                _ => {}
            },
            vocab::RDFS_DOMAIN => {
                domains.entry(s.clone()).or_default().insert(o.clone());
            }
            vocab::RDFS_RANGE => {
                ranges.entry(s.clone()).or_default().insert(o.clone());
            }
            vocab::RDFS_SUBCLASS_OF => {
                schema.subclass_edges.insert((s.clone(), o.clone()));
            }
            vocab::OWL_EQUIVALENT_CLASS => {
                schema.equivalent_classes.insert((s.clone(), o.clone()));
            }
            vocab::OWL_EQUIVALENT_PROPERTY => {
                schema.equivalent_properties.insert((s.clone(), o.clone()));
            }
            _ => {}
        }
    }

    let single = |p: &Iri, map: &BTreeMap<Iri, BTreeSet<Iri>>, what: &'static str| -> Result<Option<Iri>, RdfError> {
        match map.get(p) {
            None => Ok(None),
            Some(set) => {
                let mut it = set.iter();
                let first = it.next().cloned();
                if let Some(second) = it.next() {
                    return Err(RdfError::Ambiguous(p.clone(), what, first.unwrap(), second.clone()));
                }
                Ok(first)
            }
        }
    };

    let properties: BTreeSet<Iri> =
        property_decl.iter().chain(domains.keys()).chain(ranges.keys()).filter(|p| !is_builtin(p)).cloned().collect();
    for p in &properties {
        let domain = single(p, &domains, "rdfs:domain")?;
        let range = single(p, &ranges, "rdfs:range")?;
        let literal_range = range.as_ref().is_some_and(vocab::is_literal_datatype);
        if datatype_decl.contains(p) || literal_range {
            let domain = domain.ok_or_else(|| RdfError::AttributeWithoutDomain(p.clone()))?;
            schema.attributes.insert(p.clone(), domain);
        } else {
            let domain = domain.ok_or_else(|| RdfError::MissingDomainOrRange(p.clone(), "rdfs:domain"))?;
            let range = range.ok_or_else(|| RdfError::MissingDomainOrRange(p.clone(), "rdfs:range"))?;
            schema.object_properties.insert(p.clone(), (domain, range));
        }
    }

    schema.concepts.extend(class_decl.into_iter().filter(|c| !is_builtin(c)));
    schema.concepts.extend(schema.attributes.values().cloned());
    for (d, r) in schema.object_properties.values() {
        schema.concepts.insert(d.clone());
        schema.concepts.insert(r.clone());
    }
    for (c, p) in &schema.subclass_edges {
        schema.concepts.insert(c.clone());
        schema.concepts.insert(p.clone());
    }

    for c in &schema.concepts {
        if schema.attributes.contains_key(c) {
            return Err(RdfError::Overlap(c.clone(), "concept", "attribute"));
        }
        if schema.object_properties.contains_key(c) {
            return Err(RdfError::Overlap(c.clone(), "concept", "object property"));
        }
    }
    schema.check_acyclic()?;
    Ok(schema)
}

/// A schema plus the instance triples it describes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Kb {
    pub schema: Schema,
    pub instances: Graph,
}

impl Kb {
    /// Checks that every `rdf:type` assertion names a schema concept.
    pub fn new(schema: Schema, instances: Graph) -> Result<Self, RdfError> {
        let ty = iri(vocab::RDF_TYPE);
        for t in instances.with_predicate(&ty) {
            match &t.object {
                Term::Iri(c) if schema.is_concept(c) => {}
                Term::Iri(c) => return Err(RdfError::UnknownType(t.subject.to_string(), c.clone())),
                other => return Err(RdfError::InvalidLiteral(format!("rdf:type object {other} is not an IRI"))),
            }
        }
        Ok(Kb { schema, instances })
    }

    /// Split one graph into its schema layer and its instance triples.
    pub fn from_graph(g: &Graph) -> Result<Self, RdfError> {
        let schema = extract_schema(g)?;
        let ty = iri(vocab::RDF_TYPE);
        let mut instances = Graph::new();
        *instances.prefixes_mut() = g.prefixes().clone();
        for t in g.iter() {
            let schema_triple = vocab::is_schema_predicate(&t.predicate)
                || (t.predicate == ty && t.object.as_iri().is_some_and(vocab::is_schema_type));
            if !schema_triple {
                instances.insert(t.clone());
            }
        }
        Kb::new(schema, instances)
    }

    /// The asserted type of `individual` that has no asserted subtype.
    pub fn most_specific_type(&self, individual: &Iri) -> Result<Iri, RdfError> {
        let subject = Term::Iri(individual.clone());
        let ty = iri(vocab::RDF_TYPE);
        let types: BTreeSet<&Iri> = self.instances.objects(&subject, &ty).filter_map(Term::as_iri).collect();
        if types.is_empty() {
            return Err(RdfError::Untyped(individual.clone()));
        }
        let specific: Vec<&Iri> = types
            .iter()
            .filter(|t| !types.iter().any(|u| u != *t && self.schema.is_subclass_of(u, t)))
            .copied()
            .collect();
        match specific.as_slice() {
            [one] => Ok((*one).clone()),
            many => Err(RdfError::MultipleMostSpecific(
                individual.clone(),
                many.iter().map(|i| i.local_name()).collect::<Vec<_>>().join(", "),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{parse_ntriples, serialize_ntriples};

    const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";

    fn nt(lines: &[(&str, &str, &str)]) -> Graph {
        let mut text = String::new();
        for (s, p, o) in lines {
            let p = p.replace("rdfs:", RDFS);
            let o = if let Some(local) = o.strip_prefix("xsd:") {
                format!("http://www.w3.org/2001/XMLSchema#{local}")
            } else {
                o.replace("rdfs:", RDFS)
            };
            text.push_str(&format!("<{s}> <{p}> <{o}> .\n"));
        }
        parse_ntriples(&text).unwrap()
    }

    fn i(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn literal_range_means_attribute() {
        let s = extract_schema(&nt(&[("e:p", "rdfs:domain", "e:A"), ("e:p", "rdfs:range", "xsd:string")])).unwrap();
        assert_eq!(s.attributes().get(&i("e:p")), Some(&i("e:A")));
        assert!(s.object_properties().is_empty());
        assert!(s.is_concept(&i("e:A")));
    }

    #[test]
    fn object_property_and_subclass() {
        let s = extract_schema(&nt(&[
            ("t:works_for", "rdfs:domain", "t:Employee"),
            ("t:works_for", "rdfs:range", "t:Organization"),
            ("t:Employee", "rdfs:subClassOf", "t:Person"),
        ]))
        .unwrap();
        assert_eq!(s.object_properties().get(&i("t:works_for")), Some(&(i("t:Employee"), i("t:Organization"))));
        assert!(s.subclass_edges().contains(&(i("t:Employee"), i("t:Person"))));
        assert!(s.is_subclass_of(&i("t:Employee"), &i("t:Person")));
        assert!(!s.is_subclass_of(&i("t:Person"), &i("t:Employee")));
    }

    #[test]
    fn missing_range_and_cycles_are_errors() {
        let err = extract_schema(&nt(&[("e:p", "rdfs:domain", "e:A")])).unwrap_err();
        assert!(matches!(err, RdfError::MissingDomainOrRange(_, "rdfs:range")));
        let err = extract_schema(&nt(&[
            ("e:A", "rdfs:subClassOf", "e:B"),
            ("e:B", "rdfs:subClassOf", "e:C"),
            ("e:C", "rdfs:subClassOf", "e:A"),
        ]))
        .unwrap_err();
        assert!(matches!(err, RdfError::SubclassCycle(_)));
    }

    #[test]
    fn declared_datatype_property_wins() {
        let g = parse_ntriples(&format!(
            "<e:p> <{}> <{}> .\n<e:p> <{RDFS}domain> <e:A> .\n<e:p> <{RDFS}range> <e:Custom> .\n",
            vocab::RDF_TYPE,
            vocab::OWL_DATATYPE_PROPERTY
        ))
        .unwrap();
        let s = extract_schema(&g).unwrap();
        assert!(s.attributes().contains_key(&i("e:p")));
        assert!(!s.is_concept(&i("e:Custom")));
    }

    #[test]
    fn extraction_is_idempotent() {
        let s = extract_schema(&nt(&[
            ("e:p", "rdfs:domain", "e:A"),
            ("e:p", "rdfs:range", "e:B"),
            ("e:d", "rdfs:domain", "e:B"),
            ("e:d", "rdfs:range", "rdfs:Literal"),
            ("e:C", "rdfs:subClassOf", "e:A"),
        ]))
        .unwrap();
        let again = extract_schema(&parse_ntriples(&serialize_ntriples(&s.to_graph())).unwrap()).unwrap();
        assert_eq!(s, again);
    }

    fn typed_kb(types: &[&str]) -> Kb {
        let mut g = nt(&[
            ("e:Employee", "rdfs:subClassOf", "e:Person"),
            ("e:Manager", "rdfs:subClassOf", "e:Employee"),
            ("e:Organization", "rdfs:subClassOf", "e:Agent"),
        ]);
        for t in types {
            g.insert(Triple::new(i("e:x"), iri(vocab::RDF_TYPE), i(t)).unwrap());
        }
        Kb::from_graph(&g).unwrap()
    }

    #[test]
    fn most_specific_type_cases() {
        assert_eq!(typed_kb(&["e:Employee"]).most_specific_type(&i("e:x")).unwrap(), i("e:Employee"));
        assert_eq!(typed_kb(&["e:Employee", "e:Person"]).most_specific_type(&i("e:x")).unwrap(), i("e:Employee"));
        assert!(typed_kb(&["e:Employee", "e:Organization"]).most_specific_type(&i("e:x")).is_err());
        assert!(typed_kb(&[]).most_specific_type(&i("e:x")).is_err());
    }

    // Oracle: keep the asserted types that are not a strict superclass of
    // another asserted type, using an explicit closure over the edge list.
    #[test]
    fn most_specific_matches_filter_oracle() {
        let kb = typed_kb(&["e:Manager", "e:Person", "e:Employee"]);
        let edges = [("e:Employee", "e:Person"), ("e:Manager", "e:Employee")];
        let below = |sup: &str, sub: &str| {
            let mut frontier = vec![sub];
            while let Some(x) = frontier.pop() {
                for (c, p) in edges {
                    if c == x {
                        if p == sup {
                            return true;
                        }
                        frontier.push(p);
                    }
                }
            }
            false
        };
        let asserted = ["e:Manager", "e:Person", "e:Employee"];
        let oracle: Vec<&str> = asserted.iter().copied().filter(|t| !asserted.iter().any(|u| below(t, u))).collect();
        assert_eq!(oracle, vec!["e:Manager"]);
        assert_eq!(kb.most_specific_type(&i("e:x")).unwrap(), i(oracle[0]));
    }

    #[test]
    fn kb_rejects_unknown_type() {
        let mut g = nt(&[("e:A", "rdfs:subClassOf", "e:B")]);
        g.insert(Triple::new(i("e:x"), iri(vocab::RDF_TYPE), i("e:Nope")).unwrap());
        assert!(matches!(Kb::from_graph(&g), Err(RdfError::UnknownType(..))));
    }
}
