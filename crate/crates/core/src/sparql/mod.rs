//! The SPARQL subset used by mapping rules: CONSTRUCT and SELECT over
//! groups of triple patterns, OPTIONAL, BIND (variables, constants and
//! BNODE) and UNION.

mod eval;
mod parser;

use std::fmt::Write;

pub use eval::{evaluate_pattern, execute_construct, execute_select, instantiate, Solution};
pub use parser::parse_query;

use crate::rdf::{vocab, Iri, PrefixMap, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermPattern {
    Var(String),
    /// A constant. Blank nodes appear only in CONSTRUCT templates.
    Term(Term),
}

impl TermPattern {
    pub fn var(name: impl Into<String>) -> Self {
        TermPattern::Var(name.into())
    }

    pub fn iri(iri: &Iri) -> Self {
        TermPattern::Term(Term::Iri(iri.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub predicate: TermPattern,
    pub object: TermPattern,
}

impl TriplePattern {
    pub fn new(subject: TermPattern, predicate: TermPattern, object: TermPattern) -> Self {
        TriplePattern { subject, predicate, object }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object].into_iter().filter_map(|t| match t {
            TermPattern::Var(v) => Some(v.as_str()),
            TermPattern::Term(_) => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Term(Term),
    /// `BNODE("label")`, or `BNODE()` when the label is `None`.
    Bnode(Option<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Triple(TriplePattern),
    Optional(GroupPattern),
    Bind(Expr, String),
    /// Two or more branches.
    Union(Vec<GroupPattern>),
    Group(GroupPattern),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupPattern {
    pub elements: Vec<Element>,
}

impl GroupPattern {
    pub fn new(elements: Vec<Element>) -> Self {
        GroupPattern { elements }
    }

    /// Variables mentioned anywhere in the pattern, including BIND targets.
    pub fn vars(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        for e in &self.elements {
            match e {
                Element::Triple(t) => out.extend(t.vars().map(str::to_string)),
                Element::Optional(g) | Element::Group(g) => g.collect_vars(out),
                Element::Bind(expr, v) => {
                    if let Expr::Var(x) = expr {
                        out.insert(x.clone());
                    }
                    out.insert(v.clone());
                }
                Element::Union(bs) => bs.iter().for_each(|b| b.collect_vars(out)),
            }
        }
    }

    /// Deepest OPTIONAL nesting.
    pub fn optional_depth(&self) -> usize {
        self.elements
            .iter()
            .map(|e| match e {
                Element::Optional(g) => 1 + g.optional_depth(),
                Element::Group(g) => g.optional_depth(),
                Element::Union(bs) => bs.iter().map(GroupPattern::optional_depth).max().unwrap_or(0),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Form {
    Construct(Vec<TriplePattern>),
    /// `None` projects every variable (`SELECT *`).
    Select(Option<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub prefixes: PrefixMap,
    pub form: Form,
    pub pattern: GroupPattern,
}

impl Query {
    pub fn construct(prefixes: PrefixMap, template: Vec<TriplePattern>, pattern: GroupPattern) -> Self {
        Query { prefixes, form: Form::Construct(template), pattern }
    }

    pub fn template(&self) -> Option<&[TriplePattern]> {
        match &self.form {
            Form::Construct(t) => Some(t),
            Form::Select(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SparqlError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}, column {col}: {what} is outside the supported SPARQL subset")]
    Unsupported { line: usize, col: usize, what: String },
    #[error("not a CONSTRUCT query")]
    NotConstruct,
}

/// Canonical text: one triple or clause per line, two-space indentation,
/// IRIs abbreviated with the query's prefixes.
pub fn serialize_query(q: &Query) -> String {
    let mut out = String::new();
    for (p, ns) in q.prefixes.iter() {
        let _ = writeln!(out, "PREFIX {p}: <{ns}>");
    }
    match &q.form {
        Form::Construct(template) => {
            out.push_str("CONSTRUCT {\n");
            for t in template {
                let _ = writeln!(out, "  {}", triple(t, &q.prefixes));
            }
            out.push_str("}\nWHERE ");
        }
        Form::Select(None) => out.push_str("SELECT * WHERE "),
        Form::Select(Some(vars)) => {
            let vs: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
            let _ = write!(out, "SELECT {} WHERE ", vs.join(" "));
        }
    }
    group(&q.pattern, &q.prefixes, 0, &mut out);
    out.push('\n');
    out
}

fn group(g: &GroupPattern, pm: &PrefixMap, indent: usize, out: &mut String) {
    out.push_str("{\n");
    let pad = "  ".repeat(indent + 1);
    let mut prev_braced = false;
    for e in &g.elements {
        let braced = matches!(e, Element::Group(_) | Element::Union(_));
        if braced && prev_braced {
            // keeps two adjacent groups from reading back as one UNION
            let _ = writeln!(out, "{pad}.");
        }
        prev_braced = braced;
        match e {
            Element::Triple(t) => {
                let _ = writeln!(out, "{pad}{}", triple(t, pm));
            }
            Element::Optional(inner) => {
                let _ = write!(out, "{pad}OPTIONAL ");
                group(inner, pm, indent + 1, out);
                out.push('\n');
            }
            Element::Bind(expr, v) => {
                let _ = writeln!(out, "{pad}BIND({} AS ?{v})", expression(expr, pm));
            }
            Element::Union(branches) => {
                for (i, b) in branches.iter().enumerate() {
                    out.push_str(&pad);
                    if i > 0 {
                        out.push_str("UNION ");
                    }
                    group(b, pm, indent + 1, out);
                    out.push('\n');
                }
            }
            Element::Group(inner) => {
                out.push_str(&pad);
                group(inner, pm, indent + 1, out);
                out.push('\n');
            }
        }
    }
    out.push_str(&"  ".repeat(indent));
    out.push('}');
}

fn triple(t: &TriplePattern, pm: &PrefixMap) -> String {
    let pred = match &t.predicate {
        TermPattern::Term(Term::Iri(i)) if i.as_str() == vocab::RDF_TYPE => "a".to_string(),
        p => term_pattern(p, pm),
    };
    format!("{} {pred} {} .", term_pattern(&t.subject, pm), term_pattern(&t.object, pm))
}

fn term_pattern(t: &TermPattern, pm: &PrefixMap) -> String {
    match t {
        TermPattern::Var(v) => format!("?{v}"),
        TermPattern::Term(term) => render_term(term, pm),
    }
}

fn render_term(t: &Term, pm: &PrefixMap) -> String {
    match t {
        Term::Iri(i) => pm.display(i),
        other => other.to_string(),
    }
}

fn expression(e: &Expr, pm: &PrefixMap) -> String {
    match e {
        Expr::Var(v) => format!("?{v}"),
        Expr::Term(t) => render_term(t, pm),
        Expr::Bnode(None) => "BNODE()".to_string(),
        Expr::Bnode(Some(l)) => format!("BNODE({})", crate::rdf::Literal::simple(l.as_str())),
    }
}
