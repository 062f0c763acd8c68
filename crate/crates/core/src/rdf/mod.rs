//! RDF terms, graphs, N-Triples I/O and the RDFS schema layer.

mod graph;
mod ntriples;
mod prefix;
mod schema;
mod term;
pub mod vocab;

pub use graph::Graph;
pub use ntriples::{parse_ntriples, serialize_ntriples};
pub use prefix::PrefixMap;
pub use schema::{extract_schema, Kb, Schema};
pub use term::{BlankNode, Iri, Literal, Term, Triple};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI '{0}': {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid blank node label '{0}'")]
    InvalidBlankNode(String),
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error("literal {0} cannot be a subject")]
    LiteralSubject(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("object property {0} has no {1}")]
    MissingDomainOrRange(Iri, &'static str),
    #[error("attribute {0} has no domain")]
    AttributeWithoutDomain(Iri),
    #[error("{0} is declared with more than one {1}: {2} and {3}")]
    Ambiguous(Iri, &'static str, Iri, Iri),
    #[error("subclass cycle through {0}")]
    SubclassCycle(String),
    #[error("{0} is used both as {1} and as {2}")]
    Overlap(Iri, &'static str, &'static str),
    #[error("individual {0} has no rdf:type assertion")]
    Untyped(Iri),
    #[error("individual {0} has several most-specific types: {1}")]
    MultipleMostSpecific(Iri, String),
    #[error("instance triple types {0} with {1}, which is not a concept of the schema")]
    UnknownType(String, Iri),
}
