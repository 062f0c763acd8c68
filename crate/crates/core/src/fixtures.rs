//! Bundled example settings: the employee/organization running example and
//! the office/contact grouping example.

use crate::rdf::{parse_ntriples, Kb};
use crate::{alignment::Alignment, Error, Setting};

pub struct Fixture {
    pub name: &'static str,
    pub source: &'static str,
    pub target: &'static str,
    pub alignment: &'static str,
    pub source_instances: &'static str,
}

pub const RUNNING: Fixture = Fixture {
    name: "running",
    source: include_str!("../fixtures/running/source.nt"),
    target: include_str!("../fixtures/running/target.nt"),
    alignment: include_str!("../fixtures/running/alignment.json"),
    source_instances: include_str!("../fixtures/running/source_instances.nt"),
};

pub const OFFICES: Fixture = Fixture {
    name: "offices",
    source: include_str!("../fixtures/offices/source.nt"),
    target: include_str!("../fixtures/offices/target.nt"),
    alignment: include_str!("../fixtures/offices/alignment.json"),
    source_instances: include_str!("../fixtures/offices/source_instances.nt"),
};

impl Fixture {
    /// Schemas, alignment, and the source instances attached to the source
    /// KB.
    pub fn load(&self) -> Result<Setting, Error> {
        let mut source_graph = parse_ntriples(self.source)?;
        source_graph.extend(&parse_ntriples(self.source_instances)?);
        Ok(Setting {
            source: Kb::from_graph(&source_graph)?,
            target: Kb::from_graph(&parse_ntriples(self.target)?)?,
            alignment: Alignment::parse(self.alignment)?,
        })
    }
}
