//! Synthetic sink-properties settings and interpretation injection.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::alignment::{Alignment, Correspondence, CorrespondenceKind, DataPath, PathExpr};
use crate::rdf::{serialize_ntriples, vocab, Graph, Iri, Kb, PrefixMap, Schema, Term, Triple};
use crate::{Error, Setting};

pub const SOURCE_NS: &str = "http://example.org/sink/src#";
pub const TARGET_NS: &str = "http://example.org/sink/trgt#";

/// Which target concept each migrated attribute lands on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Migration {
    /// `d_i` moves to the i-th non-root concept in breadth-first order.
    #[default]
    BreadthFirst,
    /// `d_i` moves to the leftmost concept at depth i.
    LeftmostChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioParams {
    /// Depth of the taxonomy.
    #[serde(rename = "L")]
    pub depth: usize,
    /// Children per concept.
    #[serde(rename = "C")]
    pub breadth: usize,
    /// Attributes on the root.
    #[serde(rename = "D")]
    pub attributes: usize,
    pub migration: Migration,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameters: {0}")]
    Params(String),
    #[error("scenario I/O: {0}")]
    Io(#[from] io::Error),
}

impl ScenarioParams {
    pub fn new(depth: usize, breadth: usize, attributes: usize) -> Self {
        ScenarioParams { depth, breadth, attributes, migration: Migration::BreadthFirst }
    }

    pub fn with_migration(self, migration: Migration) -> Self {
        ScenarioParams { migration, ..self }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.depth < 1 {
            return Err(ScenarioError::Params("L must be at least 1".into()));
        }
        if self.breadth < 1 {
            return Err(ScenarioError::Params("C must be at least 1".into()));
        }
        let n = self.concept_count();
        if n.is_none_or(|n| n > 1 << 20) {
            return Err(ScenarioError::Params(format!("taxonomy with L={} C={} is too large", self.depth, self.breadth)));
        }
        Ok(())
    }

    /// Concepts per side: 1 + C + C^2 + ... + C^L.
    pub fn concept_count(&self) -> Option<usize> {
        let mut total = 1usize;
        let mut level = 1usize;
        for _ in 0..self.depth {
            level = level.checked_mul(self.breadth)?;
            total = total.checked_add(level)?;
        }
        Some(total)
    }
}

/// Parent of each concept of the complete C-ary taxonomy, in breadth-first
/// creation order (concept 0 is the root).
fn taxonomy(p: &ScenarioParams) -> Vec<Option<usize>> {
    let n = p.concept_count().expect("validated");
    (0..n).map(|i| if i == 0 { None } else { Some((i - 1) / p.breadth) }).collect()
}

/// Target owner of attribute `d_i` (1-based).
fn owners(p: &ScenarioParams) -> Vec<usize> {
    let n = p.concept_count().expect("validated");
    (1..=p.attributes)
        .map(|i| match p.migration {
            Migration::BreadthFirst if i < n => i,
            Migration::LeftmostChain if i <= p.depth => (0..i).fold(0, |c, _| c * p.breadth + 1),
            _ => 0,
        })
        .collect()
}

fn iri(ns: &str, local: &str) -> Iri {
    Iri::new(format!("{ns}{local}")).expect("generated IRIs are valid")
}

fn schema_graph(ns: &str, parents: &[Option<usize>], attr_owner: impl Fn(usize) -> usize, attributes: usize) -> Graph {
    let ty = vocab::iri(vocab::RDF_TYPE);
    let t = |s: Iri, p: &Iri, o: Iri| Triple { subject: Term::Iri(s), predicate: p.clone(), object: Term::Iri(o) };
    let mut g = Graph::new();
    for (i, parent) in parents.iter().enumerate() {
        g.insert(t(iri(ns, &format!("A{i}")), &ty, vocab::iri(vocab::OWL_CLASS)));
        if let Some(p) = parent {
            g.insert(t(iri(ns, &format!("A{i}")), &vocab::iri(vocab::RDFS_SUBCLASS_OF), iri(ns, &format!("A{p}"))));
        }
    }
    for i in 1..=attributes {
        let d = iri(ns, &format!("d{i}"));
        g.insert(t(d.clone(), &ty, vocab::iri(vocab::OWL_DATATYPE_PROPERTY)));
        g.insert(t(d.clone(), &vocab::iri(vocab::RDFS_DOMAIN), iri(ns, &format!("A{}", attr_owner(i)))));
        g.insert(t(d, &vocab::iri(vocab::RDFS_RANGE), vocab::iri(vocab::XSD_STRING)));
    }
    g
}

/// A sink-properties setting: the source keeps every attribute on the root,
/// the target moves them down the taxonomy, and the alignment pairs
/// same-named resources.
pub fn gen_sink_properties(p: &ScenarioParams) -> Result<Setting, ScenarioError> {
    p.validate()?;
    let parents = taxonomy(p);
    let owner = owners(p);
    let source = schema_graph(SOURCE_NS, &parents, |_| 0, p.attributes);
    let target = schema_graph(TARGET_NS, &parents, |i| owner[i - 1], p.attributes);
    let mut cs = Vec::new();
    for i in 0..parents.len() {
        cs.push(Correspondence {
            id: format!("c{i}"),
            kind: CorrespondenceKind::C2c { source: iri(SOURCE_NS, &format!("A{i}")), target: iri(TARGET_NS, &format!("A{i}")) },
        });
    }
    for i in 1..=p.attributes {
        cs.push(Correspondence {
            id: format!("d{i}"),
            kind: CorrespondenceKind::A2a {
                source: DataPath { concept: iri(SOURCE_NS, "A0"), path: PathExpr::single(iri(SOURCE_NS, &format!("d{i}"))) },
                target: DataPath {
                    concept: iri(TARGET_NS, &format!("A{}", owner[i - 1])),
                    path: PathExpr::single(iri(TARGET_NS, &format!("d{i}"))),
                },
            },
        });
    }
    let mut prefixes = PrefixMap::new();
    prefixes.insert("src", SOURCE_NS);
    prefixes.insert("trgt", TARGET_NS);
    let alignment = Alignment::new(cs, prefixes).expect("generated ids are unique");
    let kb = |g: &Graph| Kb::from_graph(g).expect("generated schema is well formed");
    Ok(Setting { source: kb(&source), target: kb(&target), alignment })
}

/// Source object properties that get parallel copies: the range is aligned
/// and has outgoing properties of its own, and the property is not part of
/// any r2r source path.
pub fn injection_candidates(setting: &Setting) -> Vec<Iri> {
    let schema = &setting.source.schema;
    let aligned = setting.alignment.aligned_concepts(crate::alignment::Side::Source, schema);
    let in_r2r: BTreeSet<&Iri> = setting.alignment.r2r().flat_map(|(_, s, _)| s.path.steps().iter().map(|st| &st.property)).collect();
    let has_outgoing = |c: &Iri| schema.object_properties().values().any(|(d, _)| schema.is_subclass_of(c, d));
    schema
        .object_properties()
        .iter()
        .filter(|(p, (_, r))| aligned.contains(r) && !in_r2r.contains(p) && has_outgoing(r))
        .map(|(p, _)| p.clone())
        .collect()
}

/// Add `k` parallel copies `p_1..p_k` of every injection candidate `p`.
pub fn inject_alternatives(setting: &Setting, k: usize) -> Result<Setting, Error> {
    if k == 0 {
        return Ok(setting.clone());
    }
    let schema = &setting.source.schema;
    let mut g = schema.to_graph();
    let ty = vocab::iri(vocab::RDF_TYPE);
    let t = |s: &Iri, p: &Iri, o: &Iri| Triple { subject: Term::Iri(s.clone()), predicate: p.clone(), object: Term::Iri(o.clone()) };
    for p in injection_candidates(setting) {
        let (d, r) = &schema.object_properties()[&p];
        for i in 1..=k {
            let copy = Iri::new(format!("{}_{i}", p.as_str()))?;
            g.insert(t(&copy, &ty, &vocab::iri(vocab::OWL_OBJECT_PROPERTY)));
            g.insert(t(&copy, &vocab::iri(vocab::RDFS_DOMAIN), d));
            g.insert(t(&copy, &vocab::iri(vocab::RDFS_RANGE), r));
        }
    }
    let source = Kb::new(crate::rdf::extract_schema(&g)?, setting.source.instances.clone())?;
    Ok(Setting { source, ..setting.clone() })
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'static str,
    #[serde(flatten)]
    params: &'a ScenarioParams,
    concepts: usize,
    correspondences: usize,
}

/// Write `source.nt`, `target.nt`, `alignment.json` and `params.json`.
pub fn write_scenario(dir: &Path, p: &ScenarioParams, setting: &Setting) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir)?;
    let schema_nt = |s: &Schema| {
        let mut g = s.to_graph();
        g.prefixes_mut().insert("owl", vocab::OWL);
        serialize_ntriples(&g)
    };
    fs::write(dir.join("source.nt"), schema_nt(&setting.source.schema))?;
    fs::write(dir.join("target.nt"), schema_nt(&setting.target.schema))?;
    fs::write(dir.join("alignment.json"), setting.alignment.render())?;
    let manifest = Manifest {
        scenario: "sink-properties",
        params: p,
        concepts: setting.source.schema.concepts().len(),
        correspondences: setting.alignment.len(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(dir.join("params.json"), json)?;
    Ok(())
}
