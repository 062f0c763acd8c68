//! Correspondences between a source and a target schema.

mod path;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use path::{Direction, PathError, PathExpr, Step};

use crate::rdf::{vocab, Iri, PrefixMap, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Source,
    Target,
}

/// A data path rooted at a concept and ending in an attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DataPath {
    pub concept: Iri,
    pub path: PathExpr,
}

/// An object-property path between two endpoint concepts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelPath {
    pub endpoints: (Iri, Iri),
    pub path: PathExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorrespondenceKind {
    C2c { source: Iri, target: Iri },
    A2a { source: DataPath, target: DataPath },
    R2r { source: RelPath, target: RelPath },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub id: String,
    pub kind: CorrespondenceKind,
}

impl Correspondence {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            CorrespondenceKind::C2c { .. } => "c2c",
            CorrespondenceKind::A2a { .. } => "a2a",
            CorrespondenceKind::R2r { .. } => "r2r",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AlignmentError {
    #[error("malformed alignment document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("correspondence {id}: unknown kind '{kind}'")]
    UnknownKind { id: String, kind: String },
    #[error("correspondence {id}: missing field '{field}'")]
    MissingField { id: String, field: &'static str },
    #[error("correspondence {id}: field '{field}': {source}")]
    BadPath { id: String, field: &'static str, source: PathError },
    #[error("duplicate correspondence id '{0}'")]
    DuplicateId(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    correspondences: Vec<Correspondence>,
    prefixes: PrefixMap,
}

impl Alignment {
    pub fn new(correspondences: Vec<Correspondence>, prefixes: PrefixMap) -> Result<Self, AlignmentError> {
        let mut seen = BTreeSet::new();
        for c in &correspondences {
            if !seen.insert(c.id.clone()) {
                return Err(AlignmentError::DuplicateId(c.id.clone()));
            }
        }
        Ok(Alignment { correspondences, prefixes })
    }

    pub fn correspondences(&self) -> &[Correspondence] {
        &self.correspondences
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn get(&self, id: &str) -> Option<&Correspondence> {
        self.correspondences.iter().find(|c| c.id == id)
    }

    /// Same prefixes, keeping only the correspondences `keep` accepts.
    pub fn filtered(&self, mut keep: impl FnMut(&Correspondence) -> bool) -> Alignment {
        Alignment {
            correspondences: self.correspondences.iter().filter(|c| keep(c)).cloned().collect(),
            prefixes: self.prefixes.clone(),
        }
    }

    pub fn c2c(&self) -> impl Iterator<Item = (&str, &Iri, &Iri)> {
        self.correspondences.iter().filter_map(|c| match &c.kind {
            CorrespondenceKind::C2c { source, target } => Some((c.id.as_str(), source, target)),
            _ => None,
        })
    }

    pub fn a2a(&self) -> impl Iterator<Item = (&str, &DataPath, &DataPath)> {
        self.correspondences.iter().filter_map(|c| match &c.kind {
            CorrespondenceKind::A2a { source, target } => Some((c.id.as_str(), source, target)),
            _ => None,
        })
    }

    pub fn r2r(&self) -> impl Iterator<Item = (&str, &RelPath, &RelPath)> {
        self.correspondences.iter().filter_map(|c| match &c.kind {
            CorrespondenceKind::R2r { source, target } => Some((c.id.as_str(), source, target)),
            _ => None,
        })
    }

    /// Is there a c2c `s ⇝ t`?
    pub fn concepts_correspond(&self, s: &Iri, t: &Iri) -> bool {
        self.c2c().any(|(_, a, b)| a == s && b == t)
    }

    pub fn has_c2c(&self, side: Side, concept: &Iri) -> bool {
        self.c2c().any(|(_, s, t)| match side {
            Side::Source => s == concept,
            Side::Target => t == concept,
        })
    }

    /// Data paths of a2a correspondences rooted at `concept` on `side`.
    pub fn attribute_paths(&self, side: Side, concept: &Iri) -> BTreeSet<PathExpr> {
        self.a2a()
            .filter_map(|(_, s, t)| {
                let dp = match side {
                    Side::Source => s,
                    Side::Target => t,
                };
                (&dp.concept == concept).then(|| dp.path.clone())
            })
            .collect()
    }

    /// Concepts in c2c correspondences, plus every concept along an a2a
    /// data path (its root included).
    pub fn aligned_concepts(&self, side: Side, schema: &Schema) -> BTreeSet<Iri> {
        let mut out = BTreeSet::new();
        for c in &self.correspondences {
            match (&c.kind, side) {
                (CorrespondenceKind::C2c { source, .. }, Side::Source) => {
                    out.insert(source.clone());
                }
                (CorrespondenceKind::C2c { target, .. }, Side::Target) => {
                    out.insert(target.clone());
                }
                (CorrespondenceKind::A2a { source, target }, _) => {
                    let dp = if side == Side::Source { source } else { target };
                    out.insert(dp.concept.clone());
                    if let Ok(visited) = dp.path.walk(schema, &dp.concept, true) {
                        out.extend(visited);
                    }
                }
                _ => {}
            }
        }
        out.retain(|c| schema.is_concept(c));
        out
    }

    pub fn parse(text: &str) -> Result<Self, AlignmentError> {
        let doc: Document = serde_json::from_str(text)?;
        let mut prefixes = PrefixMap::new();
        for (k, v) in &doc.prefixes {
            prefixes.insert(k.clone(), v.clone());
        }
        let mut out = Vec::new();
        for raw in doc.correspondences {
            out.push(raw.into_correspondence(&prefixes)?);
        }
        Alignment::new(out, prefixes)
    }

    /// Render as a document that [`Alignment::parse`] reads back to an equal
    /// alignment. Attribute-to-concept entries come back as their a2a
    /// rewrite.
    pub fn render(&self) -> String {
        let p = &self.prefixes;
        let name = |i: &Iri| p.abbreviate(i).unwrap_or_else(|| i.to_string());
        let doc = Document {
            prefixes: p.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            correspondences: self
                .correspondences
                .iter()
                .map(|c| {
                    let mut raw = RawEntry { id: c.id.clone(), kind: c.kind_name().to_string(), ..RawEntry::default() };
                    match &c.kind {
                        CorrespondenceKind::C2c { source, target } => {
                            raw.source = Some(name(source));
                            raw.target = Some(name(target));
                        }
                        CorrespondenceKind::A2a { source, target } => {
                            raw.source_concept = Some(name(&source.concept));
                            raw.source_path = Some(source.path.render(p));
                            raw.target_concept = Some(name(&target.concept));
                            raw.target_path = Some(target.path.render(p));
                        }
                        CorrespondenceKind::R2r { source, target } => {
                            raw.source_endpoints = Some([name(&source.endpoints.0), name(&source.endpoints.1)]);
                            raw.source_path = Some(source.path.render(p));
                            raw.target_endpoints = Some([name(&target.endpoints.0), name(&target.endpoints.1)]);
                            raw.target_path = Some(target.path.render(p));
                        }
                    }
                    raw
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("alignment document serializes");
        text.push('\n');
        text
    }
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    prefixes: BTreeMap<String, String>,
    correspondences: Vec<RawEntry>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct RawEntry {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_endpoints: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_endpoints: Option<[String; 2]>,
}

impl RawEntry {
    fn into_correspondence(self, prefixes: &PrefixMap) -> Result<Correspondence, AlignmentError> {
        let id = self.id.clone();
        let need = |v: &Option<String>, field: &'static str| -> Result<String, AlignmentError> {
            v.clone().ok_or_else(|| AlignmentError::MissingField { id: id.clone(), field })
        };
        let iri = |text: String, field: &'static str| -> Result<Iri, AlignmentError> {
            prefixes.expand(&text).map_err(|e| AlignmentError::BadPath { id: id.clone(), field, source: e.into() })
        };
        let path = |text: String, field: &'static str| -> Result<PathExpr, AlignmentError> {
            PathExpr::parse(&text, prefixes).map_err(|source| AlignmentError::BadPath { id: id.clone(), field, source })
        };
        let kind = match self.kind.as_str() {
            "c2c" => CorrespondenceKind::C2c {
                source: iri(need(&self.source, "source")?, "source")?,
                target: iri(need(&self.target, "target")?, "target")?,
            },
            "a2a" => CorrespondenceKind::A2a {
                source: DataPath {
                    concept: iri(need(&self.source_concept, "sourceConcept")?, "sourceConcept")?,
                    path: path(need(&self.source_path, "sourcePath")?, "sourcePath")?,
                },
                target: DataPath {
                    concept: iri(need(&self.target_concept, "targetConcept")?, "targetConcept")?,
                    path: path(need(&self.target_path, "targetPath")?, "targetPath")?,
                },
            },
            // an attribute matched to instances of a concept becomes an a2a
            // onto that concept's rdfs:label
            "a2c" => CorrespondenceKind::A2a {
                source: DataPath {
                    concept: iri(need(&self.source_concept, "sourceConcept")?, "sourceConcept")?,
                    path: path(need(&self.source_path, "sourcePath")?, "sourcePath")?,
                },
                target: DataPath {
                    concept: iri(need(&self.target, "target")?, "target")?,
                    path: PathExpr::single(vocab::iri(vocab::RDFS_LABEL)),
                },
            },
            "r2r" => {
                let se = self
                    .source_endpoints
                    .clone()
                    .ok_or_else(|| AlignmentError::MissingField { id: id.clone(), field: "sourceEndpoints" })?;
                let te = self
                    .target_endpoints
                    .clone()
                    .ok_or_else(|| AlignmentError::MissingField { id: id.clone(), field: "targetEndpoints" })?;
                let [s1, s2] = se;
                let [t1, t2] = te;
                CorrespondenceKind::R2r {
                    source: RelPath {
                        endpoints: (iri(s1, "sourceEndpoints")?, iri(s2, "sourceEndpoints")?),
                        path: path(need(&self.source_path, "sourcePath")?, "sourcePath")?,
                    },
                    target: RelPath {
                        endpoints: (iri(t1, "targetEndpoints")?, iri(t2, "targetEndpoints")?),
                        path: path(need(&self.target_path, "targetPath")?, "targetPath")?,
                    },
                }
            }
            other => return Err(AlignmentError::UnknownKind { id, kind: other.to_string() }),
        };
        Ok(Correspondence { id: self.id, kind })
    }
}

/// One line per problem; empty means the alignment is valid for the pair of
/// schemas.
pub fn validate_alignment(a: &Alignment, src: &Schema, tgt: &Schema) -> Vec<String> {
    let mut report = Vec::new();
    for c in a.correspondences() {
        let mut fail = |side: &str, msg: String| report.push(format!("{} ({}, {side}): {msg}", c.id, c.kind_name()));
        match &c.kind {
            CorrespondenceKind::C2c { source, target } => {
                for (side, schema, concept) in [("source", src, source), ("target", tgt, target)] {
                    if !schema.is_concept(concept) {
                        fail(side, format!("unknown concept {concept}"));
                    }
                }
            }
            CorrespondenceKind::A2a { source, target } => {
                for (side, schema, dp) in [("source", src, source), ("target", tgt, target)] {
                    if !schema.is_concept(&dp.concept) {
                        fail(side, format!("unknown concept {}", dp.concept));
                    } else if let Err(e) = dp.path.walk(schema, &dp.concept, true) {
                        fail(side, e);
                    }
                }
            }
            CorrespondenceKind::R2r { source, target } => {
                for (side, schema, rp) in [("source", src, source), ("target", tgt, target)] {
                    let (e1, e2) = &rp.endpoints;
                    if !schema.is_concept(e1) || !schema.is_concept(e2) {
                        fail(side, format!("unknown endpoint among {e1}, {e2}"));
                        continue;
                    }
                    match rp.path.walk(schema, e1, false) {
                        Err(e) => fail(side, e),
                        Ok(visited) => {
                            let end = visited.last().expect("walk includes the start");
                            if !schema.is_subclass_of(e2, end) && !schema.is_subclass_of(end, e2) {
                                fail(side, format!("path ends at {}, not at endpoint {}", end.local_name(), e2.local_name()));
                            }
                        }
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{extract_schema, parse_ntriples};

    const DOC: &str = r#"{
      "prefixes": {"src": "http://example.org/src#", "trgt": "http://example.org/trgt#"},
      "correspondences": [
        {"id":"C3","kind":"c2c","source":"src:Person","target":"trgt:Person"},
        {"id":"C1","kind":"a2a","sourceConcept":"src:Person","sourcePath":"src:name_person",
                               "targetConcept":"trgt:Person","targetPath":"trgt:name"},
        {"id":"C4","kind":"r2r","sourceEndpoints":["src:Employee","src:Organization"],"sourcePath":"src:employer",
                               "targetEndpoints":["trgt:Employee","trgt:Organization"],"targetPath":"trgt:works_for"}
      ]}"#;

    fn schema(ns: &str, extra: &str) -> Schema {
        let rdfs = "http://www.w3.org/2000/01/rdf-schema#";
        let xsd = "http://www.w3.org/2001/XMLSchema#string";
        let (person_attr, rel) = if ns == "src" { ("name_person", "employer") } else { ("name", "works_for") };
        let text = format!(
            "<http://example.org/{ns}#Employee> <{rdfs}subClassOf> <http://example.org/{ns}#Person> .\n\
             <http://example.org/{ns}#{person_attr}> <{rdfs}domain> <http://example.org/{ns}#Person> .\n\
             <http://example.org/{ns}#{person_attr}> <{rdfs}range> <{xsd}> .\n\
             <http://example.org/{ns}#{rel}> <{rdfs}domain> <http://example.org/{ns}#Employee> .\n\
             <http://example.org/{ns}#{rel}> <{rdfs}range> <http://example.org/{ns}#Organization> .\n{extra}"
        );
        extract_schema(&parse_ntriples(&text).unwrap()).unwrap()
    }

    #[test]
    fn parse_document() {
        let a = Alignment::parse(DOC).unwrap();
        assert_eq!(a.len(), 3);
        let (id, s, t) = a.a2a().next().unwrap();
        assert_eq!(id, "C1");
        assert_eq!(s.path.steps()[0].property.local_name(), "name_person");
        assert_eq!(t.concept.local_name(), "Person");
    }

    #[test]
    fn single_c2c() {
        let a = Alignment::parse(r#"{"correspondences":[{"id":"x","kind":"c2c","source":"a:A","target":"b:B"}]}"#).unwrap();
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn render_round_trips() {
        let a = Alignment::parse(DOC).unwrap();
        let again = Alignment::parse(&a.render()).unwrap();
        assert_eq!(a, again);
        assert_eq!(again.render(), a.render());
    }

    #[test]
    fn attribute_to_concept_rewrite() {
        let a = Alignment::parse(
            r#"{"correspondences":[{"id":"L","kind":"a2c","sourceConcept":"a:Org","sourcePath":"a:country_name","target":"b:Country"}]}"#,
        )
        .unwrap();
        let (_, s, t) = a.a2a().next().unwrap();
        assert_eq!(s.path.steps()[0].property.as_str(), "a:country_name");
        assert_eq!(t.concept.as_str(), "b:Country");
        assert_eq!(t.path.steps()[0].property.as_str(), vocab::RDFS_LABEL);
    }

    #[test]
    fn document_errors() {
        assert!(matches!(
            Alignment::parse(r#"{"correspondences":[{"id":"x","kind":"m2m"}]}"#),
            Err(AlignmentError::UnknownKind { .. })
        ));
        assert!(matches!(
            Alignment::parse(
                r#"{"correspondences":[{"id":"x","kind":"a2a","sourceConcept":"a:A","sourcePath":"a:p//a:q","targetConcept":"b:B","targetPath":"b:q"}]}"#
            ),
            Err(AlignmentError::BadPath { .. })
        ));
        assert!(matches!(
            Alignment::parse(
                r#"{"correspondences":[{"id":"x","kind":"c2c","source":"a:A","target":"b:B"},{"id":"x","kind":"c2c","source":"a:C","target":"b:D"}]}"#
            ),
            Err(AlignmentError::DuplicateId(_))
        ));
        assert!(matches!(
            Alignment::parse(r#"{"correspondences":[{"id":"x","kind":"c2c","source":"a:A"}]}"#),
            Err(AlignmentError::MissingField { field: "target", .. })
        ));
    }

    #[test]
    fn validation_reports() {
        let src = schema("src", "");
        let tgt = schema("trgt", "");
        let a = Alignment::parse(DOC).unwrap();
        assert_eq!(validate_alignment(&a, &src, &tgt), Vec::<String>::new());

        let missing = Alignment::parse(
            r#"{"prefixes":{"src":"http://example.org/src#","trgt":"http://example.org/trgt#"},
                "correspondences":[{"id":"x","kind":"c2c","source":"src:Nope","target":"trgt:Person"}]}"#,
        )
        .unwrap();
        assert_eq!(validate_alignment(&missing, &src, &tgt).len(), 1);

        let wrong = Alignment::parse(
            r#"{"prefixes":{"src":"http://example.org/src#","trgt":"http://example.org/trgt#"},
                "correspondences":[{"id":"x","kind":"r2r","sourceEndpoints":["src:Employee","src:Organization"],"sourcePath":"src:employer",
                "targetEndpoints":["trgt:Organization","trgt:Person"],"targetPath":"trgt:works_for"}]}"#,
        )
        .unwrap();
        let report = validate_alignment(&wrong, &src, &tgt);
        assert_eq!(report.len(), 1, "{report:?}");
        assert!(report[0].contains("target"));
    }

    #[test]
    fn aligned_concepts_follow_data_paths() {
        let rdfs = "http://www.w3.org/2000/01/rdf-schema#";
        let src = schema(
            "src",
            &format!(
                "<http://example.org/src#city> <{rdfs}domain> <http://example.org/src#Address> .\n\
                 <http://example.org/src#city> <{rdfs}range> <{rdfs}Literal> .\n\
                 <http://example.org/src#lives> <{rdfs}domain> <http://example.org/src#Person> .\n\
                 <http://example.org/src#lives> <{rdfs}range> <http://example.org/src#Address> .\n"
            ),
        );
        let a = Alignment::parse(
            r#"{"prefixes":{"src":"http://example.org/src#","trgt":"http://example.org/trgt#"},
                "correspondences":[
                  {"id":"C3","kind":"c2c","source":"src:Person","target":"trgt:Person"},
                  {"id":"A","kind":"a2a","sourceConcept":"src:Person","sourcePath":"src:lives/src:city","targetConcept":"trgt:Person","targetPath":"trgt:name"}]}"#,
        )
        .unwrap();
        let names: Vec<String> = a.aligned_concepts(Side::Source, &src).iter().map(|c| c.local_name().to_string()).collect();
        assert_eq!(names, vec!["Address", "Person"]);
        let only_c2c = a.filtered(|c| c.id == "C3");
        assert_eq!(only_c2c.aligned_concepts(Side::Source, &src).len(), 1);
    }
}
