//! Association query patterns and CONSTRUCT mapping rules built from a
//! skeleton and its renamings.

use std::collections::{BTreeMap, BTreeSet};

use crate::alignment::{Direction, PathExpr, Step};
use crate::association::{Edge, SemanticAssociation, Var};
use crate::interpretation::{Renaming, Skeleton};
use crate::rdf::{vocab, BlankNode, Iri, PrefixMap, Term};
use crate::sparql::{Element, Expr, Form, GroupPattern, Query, TermPattern, TriplePattern};
use crate::Setting;

/// Where blank nodes for ε-mapped or unaligned target nodes are created.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlankMode {
    /// `BIND(BNODE(..))` inside the source OPTIONALs whose match carries
    /// data below the node, so no blank node is made for empty matches.
    #[default]
    Scoped,
    /// A blank node per solution regardless of what matched.
    Naive,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryGenError {
    #[error("no renamings to build a query from")]
    NoRenamings,
    #[error("renaming has {got} bindings, target association has {want} variables")]
    Arity { got: usize, want: usize },
}

/// A position in a source association pattern where a clause can be added.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    /// The top level of the pattern.
    Top,
    /// The OPTIONAL opened for the property edge into this node.
    Edge(usize),
    /// The OPTIONAL holding attribute `.1` of node `.0`.
    Attribute(usize, usize),
}

/// The variable standing for `node` in queries: nodes joined by `a` edges
/// share the variable of the topmost one.
pub fn query_var(sa: &SemanticAssociation, node: usize) -> &str {
    &sa.node(sa.group_of(node)).variable
}

/// Nodes joined to `top` by `a` edges, `top` first, in tree order.
fn group_members(sa: &SemanticAssociation, top: usize) -> Vec<usize> {
    let mut out = vec![top];
    let mut i = 0;
    while i < out.len() {
        let n = out[i];
        out.extend(sa.node(n).children.iter().copied().filter(|&c| sa.node(c).edge == Some(Edge::Subclass)));
        i += 1;
    }
    out
}

fn typing(var: &str, concept: &Iri) -> TriplePattern {
    TriplePattern::new(TermPattern::var(var), TermPattern::iri(&vocab::iri(vocab::RDF_TYPE)), TermPattern::iri(concept))
}

fn step_triple(from: TermPattern, step: &Step, to: TermPattern) -> TriplePattern {
    let p = TermPattern::iri(&step.property);
    match step.direction {
        Direction::Forward => TriplePattern::new(from, p, to),
        Direction::Inverse => TriplePattern::new(to, p, from),
    }
}

/// Triples walking `path` from `from` to `to`; intermediate nodes come from
/// `middle(k)`.
fn path_triples(from: &str, path: &PathExpr, to: &str, middle: impl Fn(usize) -> TermPattern) -> Vec<TriplePattern> {
    let steps = path.steps();
    let mut out = Vec::new();
    let mut cur = TermPattern::var(from);
    for (k, s) in steps.iter().enumerate() {
        let next = if k + 1 == steps.len() { TermPattern::var(to) } else { middle(k + 1) };
        out.push(step_triple(cur, s, next.clone()));
        cur = next;
    }
    out
}

fn middle_var(attr_var: &str) -> impl Fn(usize) -> TermPattern + '_ {
    move |k| TermPattern::var(format!("{attr_var}__{k}"))
}

fn middle_blank(attr_var: &str) -> impl Fn(usize) -> TermPattern + '_ {
    move |k| TermPattern::Term(Term::BlankNode(BlankNode::new(format!("{attr_var}__{k}")).expect("variable names are valid labels")))
}

/// Typing triple for the root, an OPTIONAL per attribute, and an OPTIONAL
/// per property edge holding the child's typing triple and its own
/// expansion. Subclass children reuse the parent's variable and are not
/// optional.
pub fn association_query_pattern(sa: &SemanticAssociation) -> GroupPattern {
    source_pattern(sa, &BTreeMap::new())
}

/// The association pattern with `extra` clauses appended to the given
/// scopes.
fn source_pattern(sa: &SemanticAssociation, extra: &BTreeMap<Scope, Vec<Element>>) -> GroupPattern {
    let mut elements = group_elements(sa, 0, extra);
    elements.extend(extra.get(&Scope::Top).into_iter().flatten().cloned());
    GroupPattern::new(elements)
}

fn group_elements(sa: &SemanticAssociation, top: usize, extra: &BTreeMap<Scope, Vec<Element>>) -> Vec<Element> {
    let members = group_members(sa, top);
    let var = sa.node(top).variable.as_str();
    let mut out: Vec<Element> = members.iter().map(|&m| Element::Triple(typing(var, &sa.node(m).concept))).collect();
    for &m in &members {
        for (i, (path, attr)) in sa.node(m).attributes.iter().enumerate() {
            let mut body: Vec<Element> = path_triples(var, path, attr, middle_var(attr)).into_iter().map(Element::Triple).collect();
            body.extend(extra.get(&Scope::Attribute(m, i)).into_iter().flatten().cloned());
            out.push(Element::Optional(GroupPattern::new(body)));
        }
    }
    for &m in &members {
        for &c in &sa.node(m).children {
            let Some(Edge::Property(step)) = &sa.node(c).edge else { continue };
            let child = sa.node(c).variable.as_str();
            let mut body = vec![Element::Triple(step_triple(TermPattern::var(var), step, TermPattern::var(child)))];
            body.extend(group_elements(sa, c, extra));
            body.extend(extra.get(&Scope::Edge(c)).into_iter().flatten().cloned());
            out.push(Element::Optional(GroupPattern::new(body)));
        }
    }
    out
}

/// Every triple of the association pattern with OPTIONALs removed.
/// Intermediate nodes of multi-step attribute paths become template blank
/// nodes.
fn template_triples(sa: &SemanticAssociation) -> Vec<TriplePattern> {
    let mut out = Vec::new();
    template_group(sa, 0, &mut out);
    out
}

fn template_group(sa: &SemanticAssociation, top: usize, out: &mut Vec<TriplePattern>) {
    let members = group_members(sa, top);
    let var = sa.node(top).variable.as_str();
    out.extend(members.iter().map(|&m| typing(var, &sa.node(m).concept)));
    for &m in &members {
        for (path, attr) in &sa.node(m).attributes {
            out.extend(path_triples(var, path, attr, middle_blank(attr)));
        }
    }
    for &m in &members {
        for &c in &sa.node(m).children {
            let Some(Edge::Property(step)) = &sa.node(c).edge else { continue };
            out.push(step_triple(TermPattern::var(var), step, TermPattern::var(&sa.node(c).variable)));
            template_group(sa, c, out);
        }
    }
}

/// The OPTIONAL scope in which a source variable gets bound.
fn binding_scope(sa: &SemanticAssociation, v: &Var) -> Scope {
    match v.attr {
        Some(i) => Scope::Attribute(v.node, i),
        None => match sa.group_of(v.node) {
            0 => Scope::Top,
            g => Scope::Edge(g),
        },
    }
}

/// Enclosing scopes of `scope`, innermost first, excluding itself.
fn enclosing(sa: &SemanticAssociation, scope: Scope) -> Vec<Scope> {
    let parent_group = |g: usize| sa.group_of(sa.node(g).parent.expect("only the root has no parent"));
    let mut g = match scope {
        Scope::Top => return Vec::new(),
        Scope::Attribute(n, _) => sa.group_of(n),
        Scope::Edge(g) => parent_group(g),
    };
    let mut out = Vec::new();
    while g != 0 {
        out.push(Scope::Edge(g));
        g = parent_group(g);
    }
    out.push(Scope::Top);
    out
}

/// A target node (the top of its `a` group) that needs a fresh blank node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedBlank {
    pub node: usize,
    pub variable: String,
    pub label: String,
    /// Source scopes whose match should create the blank node; none of them
    /// encloses another.
    pub scopes: Vec<Scope>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlankNodePlan {
    pub blanks: Vec<PlannedBlank>,
}

impl BlankNodePlan {
    pub fn is_empty(&self) -> bool {
        self.blanks.is_empty()
    }

    pub fn get(&self, variable: &str) -> Option<&PlannedBlank> {
        self.blanks.iter().find(|b| b.variable == variable)
    }
}

/// Blank nodes for target nodes that are unaligned or mapped to ε, when
/// some variable below them (or one of their attributes) is mapped. Labels
/// are `b0`, `b1`, ... in tree order.
pub fn blank_node_plan(sk: &Skeleton, re: &Renaming) -> BlankNodePlan {
    let (s, t) = (&*sk.source, &*sk.target);
    let svars = s.variables();
    let tvars = t.variables();
    let mut plan = BlankNodePlan::default();
    for top in (0..t.nodes.len()).filter(|&n| t.group_of(n) == n) {
        let members = group_members(t, top);
        let mapped_here =
            tvars.iter().zip(&re.bindings).any(|(v, b)| v.attr.is_none() && members.contains(&v.node) && b.source().is_some());
        if mapped_here {
            continue;
        }
        let below = |n: usize| members.iter().any(|&m| n == m || t.is_descendant(n, m));
        let sources: Vec<usize> = tvars
            .iter()
            .zip(&re.bindings)
            .filter(|(v, _)| below(v.node) && !(v.attr.is_none() && members.contains(&v.node)))
            .filter_map(|(_, b)| b.source())
            .collect();
        if sources.is_empty() {
            continue;
        }
        let scopes: BTreeSet<Scope> = sources.iter().map(|&i| binding_scope(s, &svars[i])).collect();
        let minimal = scopes.iter().copied().filter(|sc| !enclosing(s, *sc).iter().any(|e| scopes.contains(e))).collect();
        plan.blanks.push(PlannedBlank {
            node: top,
            variable: t.node(top).variable.clone(),
            label: format!("b{}", plan.blanks.len()),
            scopes: minimal,
        });
    }
    plan
}

/// The source variable a target variable's value comes from, written as the
/// variable used in the source pattern.
fn source_query_var(s: &SemanticAssociation, v: &Var) -> String {
    match v.attr {
        Some(_) => v.name.clone(),
        None => query_var(s, v.node).to_string(),
    }
}

/// One UNION branch: the source pattern, blank-node binds in their scopes
/// and a BIND per mapped target group or attribute. Returns the branch and
/// the target variables it binds.
fn branch(sk: &Skeleton, re: &Renaming, mode: BlankMode, top_level_blanks: bool) -> (GroupPattern, BTreeSet<String>) {
    let (s, t) = (&*sk.source, &*sk.target);
    let svars = s.variables();
    let tvars = t.variables();
    let plan = blank_node_plan(sk, re);
    let mut extra: BTreeMap<Scope, Vec<Element>> = BTreeMap::new();
    let mut bound = BTreeSet::new();
    for b in &plan.blanks {
        let bind = Element::Bind(Expr::Bnode(Some(b.label.clone())), b.variable.clone());
        match mode {
            BlankMode::Scoped => {
                for sc in &b.scopes {
                    extra.entry(*sc).or_default().push(bind.clone());
                }
            }
            BlankMode::Naive if top_level_blanks => extra.entry(Scope::Top).or_default().push(bind),
            BlankMode::Naive => {}
        }
        bound.insert(b.variable.clone());
    }
    let mut g = source_pattern(s, &extra);
    for top in (0..t.nodes.len()).filter(|&n| t.group_of(n) == n) {
        let members = group_members(t, top);
        let first = members.iter().find_map(|&m| {
            tvars.iter().zip(&re.bindings).find(|(v, _)| v.node == m && v.attr.is_none()).and_then(|(_, b)| b.source())
        });
        if let Some(i) = first {
            let tv = t.node(top).variable.clone();
            g.elements.push(Element::Bind(Expr::Var(source_query_var(s, &svars[i])), tv.clone()));
            bound.insert(tv);
        }
    }
    for (v, b) in tvars.iter().zip(&re.bindings) {
        if let (Some(_), Some(i)) = (v.attr, b.source()) {
            g.elements.push(Element::Bind(Expr::Var(source_query_var(s, &svars[i])), v.name.clone()));
            bound.insert(v.name.clone());
        }
    }
    (g, bound)
}

/// The mapping rule for a skeleton: one UNION branch per renaming and the
/// target association pattern, without OPTIONALs, as template. Template
/// triples that mention a variable no branch can bind are left out.
///
/// In naive mode a single-renaming query writes planned blank nodes into
/// the template; with several renamings the plans differ per branch, so
/// each branch binds them unconditionally at its top level instead.
pub fn build_mapping_query(sk: &Skeleton, renamings: &[Renaming], prefixes: &PrefixMap, mode: BlankMode) -> Result<Query, QueryGenError> {
    if renamings.is_empty() {
        return Err(QueryGenError::NoRenamings);
    }
    let want = sk.target.variable_count();
    if let Some(re) = renamings.iter().find(|re| re.bindings.len() != want) {
        return Err(QueryGenError::Arity { got: re.bindings.len(), want });
    }
    let template_blanks = mode == BlankMode::Naive && renamings.len() == 1;
    let mut branches = Vec::new();
    let mut bound = BTreeSet::new();
    for re in renamings {
        let (g, b) = branch(sk, re, mode, !template_blanks);
        branches.push(g);
        bound.extend(b);
    }
    let mut template = template_triples(&sk.target);
    if template_blanks {
        let plan = blank_node_plan(sk, &renamings[0]);
        let blank = |p: &mut TermPattern| {
            if let TermPattern::Var(v) = p {
                if let Some(b) = plan.get(v) {
                    *p = TermPattern::Term(Term::BlankNode(BlankNode::new(b.label.clone()).expect("plan labels are valid")));
                }
            }
        };
        for t in &mut template {
            blank(&mut t.subject);
            blank(&mut t.object);
        }
    }
    template.retain(|t| t.vars().all(|v| bound.contains(v)));
    let pattern = if branches.len() == 1 {
        branches.pop().unwrap()
    } else {
        GroupPattern::new(vec![Element::Union(branches)])
    };
    Ok(Query { prefixes: prefixes.clone(), form: Form::Construct(template), pattern })
}

/// A query for a single renaming, as used for review examples.
pub fn build_renaming_query(sk: &Skeleton, re: &Renaming, prefixes: &PrefixMap, mode: BlankMode) -> Result<Query, QueryGenError> {
    build_mapping_query(sk, std::slice::from_ref(re), prefixes, mode)
}

/// Template variables that no BIND or triple pattern of the WHERE clause
/// can bind. Empty for every query built here.
pub fn unbound_template_vars(q: &Query) -> BTreeSet<String> {
    let Some(template) = q.template() else { return BTreeSet::new() };
    let bound = q.pattern.vars();
    template.iter().flat_map(|t| t.vars()).filter(|v| !bound.contains(*v)).map(str::to_string).collect()
}

/// Prefixes for generated queries: the alignment's, then those declared in
/// the source and target KBs.
pub fn query_prefixes(setting: &Setting) -> PrefixMap {
    let mut pm = PrefixMap::new();
    for (p, ns) in setting.alignment.prefixes().iter() {
        if Iri::new(ns).is_ok() {
            pm.insert(p, ns);
        }
    }
    for g in [&setting.source.instances, &setting.target.instances] {
        for (p, ns) in g.prefixes().iter() {
            if pm.get(p).is_none() && Iri::new(ns).is_ok() {
                pm.insert(p, ns);
            }
        }
    }
    pm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::Side;
    use crate::association::{build_semantic_association, AssociationLimits};
    use crate::fixtures;
    use crate::interpretation::{build_skeletons, enumerate_renamings, Binding, ValidityMode};
    use crate::sparql::{parse_query, serialize_query};
    use std::sync::Arc;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn sa(setting: &Setting, side: Side, root: &str, limits: AssociationLimits) -> SemanticAssociation {
        let schema = if side == Side::Source { &setting.source.schema } else { &setting.target.schema };
        build_semantic_association(schema, &setting.alignment, side, &iri(root), limits).unwrap()
    }

    fn triples(g: &GroupPattern) -> Vec<&TriplePattern> {
        g.elements.iter().filter_map(|e| if let Element::Triple(t) = e { Some(t) } else { None }).collect()
    }

    fn optionals(g: &GroupPattern) -> Vec<&GroupPattern> {
        g.elements.iter().filter_map(|e| if let Element::Optional(h) = e { Some(h) } else { None }).collect()
    }

    #[test]
    fn employee_pattern_keeps_person_typing_mandatory() {
        let st = fixtures::RUNNING.load().unwrap();
        let s = sa(&st, Side::Source, "http://example.org/src#Employee", AssociationLimits::default());
        let p = association_query_pattern(&s);
        let top = triples(&p);
        assert_eq!(top.len(), 2);
        assert!(top.iter().all(|t| t.subject == TermPattern::var("s_Employee_0")));
        assert_eq!(top[1].object, TermPattern::iri(&iri("http://example.org/src#Person")));
        // born_in, employer and has_worked_for each open an OPTIONAL that
        // types the child
        let opts = optionals(&p);
        let edges: Vec<_> = opts.iter().filter(|o| triples(o).len() == 2).collect();
        assert_eq!(edges.len(), 3);
        for o in edges {
            let ts = triples(o);
            assert_eq!(ts[0].subject, TermPattern::var("s_Employee_0"));
            assert_eq!(ts[1].predicate, TermPattern::iri(&vocab::iri(vocab::RDF_TYPE)));
        }
    }

    #[test]
    fn single_node_pattern() {
        let st = fixtures::OFFICES.load().unwrap();
        let s = sa(&st, Side::Source, "http://example.org/src#Office", AssociationLimits::default());
        let p = association_query_pattern(&s);
        assert_eq!(triples(&p).len(), 1);
        assert_eq!(optionals(&p).len(), 2);
        assert!(optionals(&p).iter().all(|o| o.elements.len() == 1));
    }

    #[test]
    fn organization_pattern_has_the_located_in_optional() {
        let st = fixtures::RUNNING.load().unwrap();
        let s = sa(&st, Side::Source, "http://example.org/src#Organization", AssociationLimits { max_path_depth: 1, max_assoc_length: 1 });
        let p = association_query_pattern(&s);
        let text = serialize_query(&Query { prefixes: query_prefixes(&st), form: Form::Select(None), pattern: p });
        assert!(text.contains("OPTIONAL {\n    ?s_Organization_0 src:located_in ?s_Country_1 .\n    ?s_Country_1 a src:Country .\n"), "{text}");
    }

    fn employee_skeleton(st: &Setting) -> Skeleton {
        let limits = AssociationLimits::default();
        let s = Arc::new(sa(st, Side::Source, "http://example.org/src#Employee", limits));
        let t = Arc::new(sa(st, Side::Target, "http://example.org/trgt#Employee", limits));
        let coverage = (0..st.alignment.len()).collect();
        Skeleton { source: s, target: t, coverage }
    }

    fn var_index(sa: &SemanticAssociation, name: &str) -> usize {
        sa.variables().iter().position(|v| v.name == name).unwrap_or_else(|| panic!("no variable {name}"))
    }

    /// Maps every target variable named in `pairs` to its source partner,
    /// everything else to ε.
    fn renaming(sk: &Skeleton, pairs: &[(&str, &str)]) -> Renaming {
        let mut bindings = vec![Binding::Epsilon; sk.target.variable_count()];
        for (t, s) in pairs {
            bindings[var_index(&sk.target, t)] = Binding::Source(var_index(&sk.source, s));
        }
        Renaming { bindings }
    }

    #[test]
    fn address_gets_a_blank_node_and_idle_organization_does_not() {
        let st = fixtures::RUNNING.load().unwrap();
        let sk = employee_skeleton(&st);
        let re = renaming(
            &sk,
            &[
                ("t_Employee_0", "s_Employee_0"),
                ("t_Person_1", "s_Person_1"),
                ("t_Organization_2", "s_Organization_3"),
                ("t_Address_4_address_line", "s_Organization_3_address"),
            ],
        );
        let plan = blank_node_plan(&sk, &re);
        let planned: Vec<&str> = plan.blanks.iter().map(|b| b.variable.as_str()).collect();
        assert_eq!(planned, vec!["t_Address_4"]);
        assert_eq!(plan.blanks[0].label, "b0");
        let org = sk.source.variables()[var_index(&sk.source, "s_Organization_3_address")].clone();
        assert_eq!(plan.blanks[0].scopes, vec![Scope::Attribute(org.node, org.attr.unwrap())]);
        // mapping the address node itself removes the need
        let full = renaming(&sk, &[("t_Employee_0", "s_Employee_0")]);
        assert!(blank_node_plan(&sk, &full).is_empty());
    }

    #[test]
    fn scoped_bnode_sits_in_the_attribute_optional() {
        let st = fixtures::RUNNING.load().unwrap();
        let sk = employee_skeleton(&st);
        let re = renaming(
            &sk,
            &[("t_Employee_0", "s_Employee_0"), ("t_Organization_2", "s_Organization_3"), ("t_Address_4_address_line", "s_Organization_3_address")],
        );
        let q = build_mapping_query(&sk, &[re.clone()], &query_prefixes(&st), BlankMode::Scoped).unwrap();
        let text = serialize_query(&q);
        assert!(
            text.contains("?s_Organization_3 src:address ?s_Organization_3_address .\n      BIND(BNODE(\"b0\") AS ?t_Address_4)\n    }"),
            "{text}"
        );
        assert!(unbound_template_vars(&q).is_empty());
        assert_eq!(parse_query(&text).unwrap(), q);
        let naive = build_mapping_query(&sk, &[re], &query_prefixes(&st), BlankMode::Naive).unwrap();
        let text = serialize_query(&naive);
        assert!(!text.contains("BNODE"));
        assert!(text.contains("_:b0 a trgt:Address ."), "{text}");
    }

    #[test]
    fn two_renamings_make_a_union() {
        let st = fixtures::RUNNING.load().unwrap();
        let sks = build_skeletons(&st, AssociationLimits::default(), None);
        let sk = sks.iter().find(|sk| sk.label() == "Employee__Employee").unwrap();
        let res = enumerate_renamings(sk, &st.alignment, ValidityMode::Kensho, true);
        assert!(res.len() >= 2);
        let q = build_mapping_query(sk, &res[..2], &query_prefixes(&st), BlankMode::Scoped).unwrap();
        assert!(matches!(q.pattern.elements.as_slice(), [Element::Union(bs)] if bs.len() == 2));
        assert_eq!(build_mapping_query(sk, &[], &PrefixMap::new(), BlankMode::Scoped), Err(QueryGenError::NoRenamings));
        let short = Renaming { bindings: vec![] };
        assert!(matches!(build_mapping_query(sk, &[short], &PrefixMap::new(), BlankMode::Scoped), Err(QueryGenError::Arity { .. })));
    }
}
