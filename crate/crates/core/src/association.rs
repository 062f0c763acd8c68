//! Association paths between aligned concepts and the semantic association
//! trees built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::alignment::{Alignment, Direction, PathExpr, Side, Step};
use crate::rdf::{Iri, Schema};

pub const DEFAULT_MAX_PATH_DEPTH: usize = 3;
pub const DEFAULT_MAX_ASSOC_LENGTH: usize = 4;

/// Edge of an association path or SA tree: an object-property step or the
/// subclass edge (`a`) from a child concept to its parent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    Property(Step),
    Subclass,
}

impl Edge {
    pub fn render(&self) -> String {
        match self {
            Edge::Subclass => "a".to_string(),
            Edge::Property(s) => match s.direction {
                Direction::Forward => s.property.local_name().to_string(),
                Direction::Inverse => format!("^{}", s.property.local_name()),
            },
        }
    }

    fn sort_key(&self) -> String {
        match self {
            Edge::Subclass => "a".to_string(),
            Edge::Property(s) => match s.direction {
                Direction::Forward => s.property.as_str().to_string(),
                Direction::Inverse => format!("^{}", s.property.as_str()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicAssociation {
    pub root: Iri,
    pub attributes: Vec<PathExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociationPath {
    pub root: Iri,
    /// (edge, concept reached); the last concept is the tail.
    pub elements: Vec<(Edge, Iri)>,
}

impl AssociationPath {
    pub fn tail(&self) -> &Iri {
        &self.elements.last().expect("association paths are non-empty").1
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn render(&self) -> String {
        self.elements.iter().map(|(e, c)| format!("{}, {}", e.render(), c.local_name())).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AssociationError {
    #[error("{0} is not an aligned concept")]
    NotAligned(Iri),
}

/// Aligned concepts of one side and their basic associations.
#[derive(Clone, Debug)]
pub struct AlignedView<'a> {
    pub schema: &'a Schema,
    pub side: Side,
    pub aligned: BTreeSet<Iri>,
    attributes: BTreeMap<Iri, Vec<PathExpr>>,
}

impl<'a> AlignedView<'a> {
    pub fn new(schema: &'a Schema, alignment: &Alignment, side: Side) -> Self {
        let aligned = alignment.aligned_concepts(side, schema);
        let attributes =
            aligned.iter().map(|c| (c.clone(), alignment.attribute_paths(side, c).into_iter().collect())).collect();
        AlignedView { schema, side, aligned, attributes }
    }

    pub fn is_aligned(&self, c: &Iri) -> bool {
        self.aligned.contains(c)
    }

    pub fn basic_association(&self, c: &Iri) -> Result<BasicAssociation, AssociationError> {
        let attributes = self.attributes.get(c).ok_or_else(|| AssociationError::NotAligned(c.clone()))?;
        Ok(BasicAssociation { root: c.clone(), attributes: attributes.clone() })
    }

    /// Association paths from `root` with at most `max_depth` edges, in
    /// lexicographic order of their edge sequence.
    pub fn association_paths(&self, root: &Iri, max_depth: usize) -> Vec<AssociationPath> {
        let mut out = Vec::new();
        let mut stack: Vec<(Edge, Iri)> = Vec::new();
        self.extend_paths(root, root, max_depth, &mut stack, &mut out);
        out.sort_by_cached_key(|p| {
            (p.elements.iter().map(|(e, _)| e.sort_key()).collect::<Vec<_>>(), p.elements.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>())
        });
        out
    }

    fn steps_from(&self, c: &Iri, first: bool) -> Vec<(Edge, Iri)> {
        let mut steps = Vec::new();
        for (p, (domain, range)) in self.schema.object_properties() {
            if domain == c {
                steps.push((Edge::Property(Step::forward(p.clone())), range.clone()));
            }
            // paths never start against the direction of a property
            if range == c && !first {
                steps.push((Edge::Property(Step::inverse(p.clone())), domain.clone()));
            }
        }
        for parent in self.schema.parents(c) {
            steps.push((Edge::Subclass, parent.clone()));
        }
        steps
    }

    fn extend_paths(&self, root: &Iri, current: &Iri, max_depth: usize, stack: &mut Vec<(Edge, Iri)>, out: &mut Vec<AssociationPath>) {
        if stack.len() == max_depth {
            return;
        }
        for (edge, next) in self.steps_from(current, stack.is_empty()) {
            if let (Some((Edge::Property(prev), _)), Edge::Property(step)) = (stack.last(), &edge) {
                if prev.property == step.property && prev.direction == step.direction.reverse() {
                    continue;
                }
            }
            stack.push((edge, next.clone()));
            if self.is_aligned(&next) {
                out.push(AssociationPath { root: root.clone(), elements: stack.clone() });
            } else {
                self.extend_paths(root, &next, max_depth, stack, out);
            }
            stack.pop();
        }
    }
}

pub fn basic_association(schema: &Schema, a: &Alignment, side: Side, c: &Iri) -> Result<BasicAssociation, AssociationError> {
    AlignedView::new(schema, a, side).basic_association(c)
}

pub fn enumerate_association_paths(schema: &Schema, a: &Alignment, side: Side, root: &Iri, max_depth: usize) -> Vec<AssociationPath> {
    AlignedView::new(schema, a, side).association_paths(root, max_depth)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaNode {
    pub id: usize,
    pub concept: Iri,
    pub variable: String,
    /// (data path, variable), sorted by path.
    pub attributes: Vec<(PathExpr, String)>,
    pub parent: Option<usize>,
    pub edge: Option<Edge>,
    pub children: Vec<usize>,
    /// Edge count from the root.
    pub depth: usize,
    pub aligned: bool,
    /// The aligned node the attaching association path started from (the
    /// root anchors itself).
    pub anchor: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticAssociation {
    pub side: Side,
    pub nodes: Vec<SaNode>,
    pub max_length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssociationLimits {
    /// Maximum edges per association path.
    pub max_path_depth: usize,
    /// Maximum edges on any root-to-leaf branch of an SA.
    pub max_assoc_length: usize,
}

impl Default for AssociationLimits {
    fn default() -> Self {
        AssociationLimits { max_path_depth: DEFAULT_MAX_PATH_DEPTH, max_assoc_length: DEFAULT_MAX_ASSOC_LENGTH }
    }
}

/// A variable of an SA: a node variable (`attr == None`) or the variable of
/// one of the node's attributes (index into `SaNode::attributes`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub node: usize,
    pub attr: Option<usize>,
}

impl SemanticAssociation {
    /// All variables, each node followed by its attribute variables.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for n in &self.nodes {
            out.push(Var { name: n.variable.clone(), node: n.id, attr: None });
            for (i, (_, v)) in n.attributes.iter().enumerate() {
                out.push(Var { name: v.clone(), node: n.id, attr: Some(i) });
            }
        }
        out
    }

    pub fn root(&self) -> &SaNode {
        &self.nodes[0]
    }

    pub fn root_concept(&self) -> &Iri {
        &self.nodes[0].concept
    }

    pub fn node(&self, id: usize) -> &SaNode {
        &self.nodes[id]
    }

    pub fn variable_count(&self) -> usize {
        self.nodes.iter().map(|n| 1 + n.attributes.len()).sum()
    }

    /// True when `desc` is a strict descendant of `anc`.
    pub fn is_descendant(&self, desc: usize, anc: usize) -> bool {
        let mut cur = self.nodes[desc].parent;
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// The top of the chain of `a` edges containing `id`. Nodes of one group
    /// denote the same individual.
    pub fn group_of(&self, id: usize) -> usize {
        let mut cur = id;
        while self.nodes[cur].edge == Some(Edge::Subclass) {
            cur = self.nodes[cur].parent.expect("subclass edge has a parent");
        }
        cur
    }

    /// Property steps along the tree path from `from` to `to`. Subclass
    /// edges are free; walking up an edge reverses its direction.
    pub fn tree_path(&self, from: usize, to: usize) -> Vec<Step> {
        let chain = |mut n: usize| {
            let mut v = vec![n];
            while let Some(p) = self.nodes[n].parent {
                v.push(p);
                n = p;
            }
            v
        };
        let up = chain(from);
        let down = chain(to);
        let lca = *up.iter().find(|n| down.contains(n)).expect("nodes share the root");
        let mut steps = Vec::new();
        for &n in up.iter().take_while(|&&n| n != lca) {
            if let Some(Edge::Property(s)) = &self.nodes[n].edge {
                steps.push(Step { property: s.property.clone(), direction: s.direction.reverse() });
            }
        }
        let mut tail: Vec<Step> = Vec::new();
        for &n in down.iter().take_while(|&&n| n != lca) {
            if let Some(Edge::Property(s)) = &self.nodes[n].edge {
                tail.push(s.clone());
            }
        }
        tail.reverse();
        steps.extend(tail);
        steps
    }

    /// Indented text tree, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, &mut out);
        out
    }

    fn dump_node(&self, id: usize, indent: usize, out: &mut String) {
        let n = &self.nodes[id];
        let edge = n.edge.as_ref().map(|e| format!("{} ", e.render())).unwrap_or_default();
        let _ = write!(out, "{}{edge}{} : {}", "  ".repeat(indent), n.variable, n.concept.local_name());
        if !n.aligned {
            out.push_str(" (unaligned)");
        }
        if !n.attributes.is_empty() {
            let attrs: Vec<String> = n.attributes.iter().map(|(p, v)| format!("{p_}={v}", p_ = render_local(p))).collect();
            let _ = write!(out, " [{}]", attrs.join(", "));
        }
        out.push('\n');
        for &c in &n.children {
            self.dump_node(c, indent + 1, out);
        }
    }
}

fn render_local(p: &PathExpr) -> String {
    p.steps()
        .iter()
        .map(|s| match s.direction {
            Direction::Forward => s.property.local_name().to_string(),
            Direction::Inverse => format!("^{}", s.property.local_name()),
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn var_prefix(side: Side) -> &'static str {
    match side {
        Side::Source => "s",
        Side::Target => "t",
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

impl AlignedView<'_> {
    pub fn semantic_association(&self, root: &Iri, limits: AssociationLimits) -> Result<SemanticAssociation, AssociationError> {
        if !self.is_aligned(root) {
            return Err(AssociationError::NotAligned(root.clone()));
        }
        let mut sa = SemanticAssociation { side: self.side, nodes: Vec::new(), max_length: limits.max_assoc_length };
        let mut path_cache: BTreeMap<Iri, Vec<AssociationPath>> = BTreeMap::new();
        self.push_node(&mut sa, root, None, None, true, 0);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let concept = sa.nodes[id].concept.clone();
            let depth = sa.nodes[id].depth;
            let paths = path_cache.entry(concept.clone()).or_insert_with(|| self.association_paths(&concept, limits.max_path_depth)).clone();
            for path in paths {
                if depth + path.len() > limits.max_assoc_length {
                    continue;
                }
                let mut parent = id;
                for (i, (edge, c)) in path.elements.iter().enumerate() {
                    let is_tail = i + 1 == path.len();
                    parent = self.push_node(&mut sa, c, Some(parent), Some(edge.clone()), is_tail, id);
                }
                queue.push_back(parent);
            }
        }
        Ok(sa)
    }

    fn push_node(&self, sa: &mut SemanticAssociation, concept: &Iri, parent: Option<usize>, edge: Option<Edge>, aligned: bool, anchor: usize) -> usize {
        let id = sa.nodes.len();
        let variable = format!("{}_{}_{id}", var_prefix(self.side), sanitize(concept.local_name()));
        let mut attributes = Vec::new();
        if aligned {
            let mut used = BTreeSet::new();
            for path in self.attributes.get(concept).into_iter().flatten() {
                let base = format!("{variable}_{}", sanitize(&render_local(path)));
                let mut name = base.clone();
                let mut k = 2;
                while !used.insert(name.clone()) {
                    name = format!("{base}{k}");
                    k += 1;
                }
                attributes.push((path.clone(), name));
            }
        }
        let depth = parent.map(|p| sa.nodes[p].depth + 1).unwrap_or(0);
        sa.nodes.push(SaNode { id, concept: concept.clone(), variable, attributes, parent, edge, children: Vec::new(), depth, aligned, anchor });
        if let Some(p) = parent {
            sa.nodes[p].children.push(id);
        }
        id
    }
}

pub fn build_semantic_association(
    schema: &Schema,
    a: &Alignment,
    side: Side,
    root: &Iri,
    limits: AssociationLimits,
) -> Result<SemanticAssociation, AssociationError> {
    AlignedView::new(schema, a, side).semantic_association(root, limits)
}

/// SAs for every aligned concept of one side, in concept order.
pub fn all_semantic_associations(schema: &Schema, a: &Alignment, side: Side, limits: AssociationLimits) -> Vec<SemanticAssociation> {
    let view = AlignedView::new(schema, a, side);
    view.aligned.iter().map(|c| view.semantic_association(c, limits).expect("concept is aligned")).collect()
}
