//! Compile correspondences between two RDFS knowledge bases into ranked
//! SPARQL CONSTRUCT mapping rules, and execute them over instance data.

pub mod alignment;
pub mod association;
pub mod exchange;
pub mod fixtures;
pub mod fragment;
pub mod interpretation;
pub mod pipeline;
pub mod querygen;
pub mod ranking;
pub mod rdf;
pub mod scenario;
pub mod sparql;

use alignment::{Alignment, AlignmentError};
use rdf::{Kb, RdfError};

/// A mapping problem: source KB (possibly with instances), target KB and
/// the alignment between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setting {
    pub source: Kb,
    pub target: Kb,
    pub alignment: Alignment,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Rdf(#[from] RdfError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}
