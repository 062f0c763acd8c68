use std::fmt;

use super::RdfError;

/// An absolute IRI. Construction rejects empty strings, whitespace and
/// strings without a scheme.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if value.is_empty() {
            return Err(RdfError::InvalidIri(value, "empty IRI"));
        }
        if value.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')) {
            return Err(RdfError::InvalidIri(value, "IRI contains a forbidden character"));
        }
        if !has_scheme(&value) {
            return Err(RdfError::InvalidIri(value, "IRI is not absolute"));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The fragment or last path segment, used to derive readable names.
    pub fn local_name(&self) -> &str {
        let s = self.0.as_str();
        let cut = s.rfind(['#', '/', ':']).map(|i| i + 1).unwrap_or(0);
        if cut >= s.len() {
            s
        } else {
            &s[cut..]
        }
    }
}

fn has_scheme(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BlankNode(String);

impl BlankNode {
    pub fn new(label: impl Into<String>) -> Result<Self, RdfError> {
        let label = label.into();
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            return Err(RdfError::InvalidBlankNode(label));
        }
        Ok(BlankNode(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    lexical: String,
    datatype: Option<Iri>,
    language: Option<String>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: None }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal { lexical: lexical.into(), datatype: Some(datatype), language: None }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Result<Self, RdfError> {
        let language = language.into();
        let valid = !language.is_empty()
            && language.split('-').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric()));
        if !valid {
            return Err(RdfError::InvalidLiteral(format!("bad language tag '{language}'")));
        }
        Ok(Literal { lexical: lexical.into(), datatype: None, language: Some(language) })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        for c in self.lexical.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                '\t' => f.write_str("\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^{dt}")
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Iri(Iri),
    BlankNode(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<BlankNode> for Term {
    fn from(b: BlankNode) -> Self {
        Term::BlankNode(b)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => i.fmt(f),
            Term::BlankNode(b) => b.fmt(f),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Term>, predicate: Iri, object: impl Into<Term>) -> Result<Self, RdfError> {
        let subject = subject.into();
        if subject.is_literal() {
            return Err(RdfError::LiteralSubject(subject.to_string()));
        }
        Ok(Triple { subject, predicate, object: object.into() })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_requires_scheme() {
        assert!(Iri::new("http://x.org/a").is_ok());
        assert!(Iri::new("a:x").is_ok());
        assert!(Iri::new("relative/path").is_err());
        assert!(Iri::new("").is_err());
        assert!(Iri::new("http://x.org/a b").is_err());
    }

    #[test]
    fn local_names() {
        assert_eq!(Iri::new("http://x.org/ns#Person").unwrap().local_name(), "Person");
        assert_eq!(Iri::new("http://x.org/ns/works_for").unwrap().local_name(), "works_for");
        assert_eq!(Iri::new("a:x").unwrap().local_name(), "x");
    }

    #[test]
    fn literal_rendering_escapes() {
        let l = Literal::simple("say \"hi\"\n");
        assert_eq!(l.to_string(), r#""say \"hi\"\n""#);
        let t = Literal::typed("1", Iri::new("http://www.w3.org/2001/XMLSchema#integer").unwrap());
        assert_eq!(t.to_string(), "\"1\"^^<http://www.w3.org/2001/XMLSchema#integer>");
        assert_eq!(Literal::lang("x", "en-GB").unwrap().to_string(), "\"x\"@en-GB");
        assert!(Literal::lang("x", "").is_err());
    }

    #[test]
    fn literal_subject_rejected() {
        let p = Iri::new("a:p").unwrap();
        assert!(Triple::new(Literal::simple("x"), p, Literal::simple("y")).is_err());
    }
}
