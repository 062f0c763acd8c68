use super::Iri;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const RDFS_SUBPROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_LITERAL: &str = "http://www.w3.org/2000/01/rdf-schema#Literal";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
pub const OWL_EQUIVALENT_CLASS: &str = "http://www.w3.org/2002/07/owl#equivalentClass";
pub const OWL_EQUIVALENT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#equivalentProperty";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

/// Build an [`Iri`] from one of the constants above.
pub fn iri(s: &str) -> Iri {
    Iri::new(s).expect("vocabulary constant is a valid IRI")
}

pub fn is_literal_datatype(iri: &Iri) -> bool {
    iri.as_str().starts_with(XSD) || iri.as_str() == RDFS_LITERAL || iri.as_str() == "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString"
}

/// Schema-level predicates. Triples using these (or typing a subject as a
/// class/property) belong to the schema rather than the instance layer.
pub fn is_schema_predicate(iri: &Iri) -> bool {
    matches!(
        iri.as_str(),
        RDFS_DOMAIN | RDFS_RANGE | RDFS_SUBCLASS_OF | RDFS_SUBPROPERTY_OF | OWL_EQUIVALENT_CLASS | OWL_EQUIVALENT_PROPERTY
    )
}

pub fn is_schema_type(iri: &Iri) -> bool {
    matches!(iri.as_str(), RDFS_CLASS | OWL_CLASS | OWL_DATATYPE_PROPERTY | OWL_OBJECT_PROPERTY | RDF_PROPERTY)
}
