use std::collections::BTreeSet;

use super::{Element, Expr, Form, GroupPattern, Query, SparqlError, TermPattern, TriplePattern};
use crate::rdf::{vocab, BlankNode, Iri, Literal, PrefixMap, Term};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Semi,
    Star,
    Var(String),
    IriRef(String),
    PName(String, String),
    Word(String),
    Str(String),
    LangTag(String),
    Carets,
    Blank(String),
    Number(String),
    /// Anything else; reported by the parser so that keywords ahead of it
    /// get the more useful error.
    Other(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> SparqlError {
    SparqlError::Syntax { line, col, message: message.into() }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn tokenize(text: &str) -> Result<Vec<Token>, SparqlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    // advance over n chars, tracking position
    let step = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            step(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                step(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '.' => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: l0, col: c0 });
            step(&mut i, &mut line, &mut col, 1);
            continue;
        }
        let mut j = i + 1;
        let tok = match c {
            '<' => {
                while j < chars.len() && chars[j] != '>' {
                    if chars[j].is_whitespace() {
                        return Err(syntax(l0, c0, "unterminated IRI"));
                    }
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(l0, c0, "unterminated IRI"));
                }
                j += 1;
                Tok::IriRef(chars[i + 1..j - 1].iter().collect())
            }
            '?' | '$' => {
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(syntax(l0, c0, "empty variable name"));
                }
                Tok::Var(chars[i + 1..j].iter().collect())
            }
            '"' | '\'' => {
                let mut s = String::new();
                loop {
                    match chars.get(j) {
                        None | Some('\n') => return Err(syntax(l0, c0, "unterminated string")),
                        Some(&q) if q == c => break,
                        Some('\\') => {
                            let e = chars.get(j + 1).copied();
                            j += 2;
                            match e {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                Some('"') => s.push('"'),
                                Some('\'') => s.push('\''),
                                Some('\\') => s.push('\\'),
                                Some('u') => {
                                    let hex: String = chars.get(j..j + 4).map(|h| h.iter().collect()).unwrap_or_default();
                                    let ch = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32);
                                    match ch {
                                        Some(ch) if hex.len() == 4 => s.push(ch),
                                        _ => return Err(syntax(l0, c0, "bad \\u escape")),
                                    }
                                    j += 4;
                                }
                                _ => return Err(syntax(l0, c0, "bad string escape")),
                            }
                            continue;
                        }
                        Some(&ch) => s.push(ch),
                    }
                    j += 1;
                }
                j += 1;
                Tok::Str(s)
            }
            '@' => {
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '-') {
                    j += 1;
                }
                Tok::LangTag(chars[i + 1..j].iter().collect())
            }
            '^' if chars.get(j) == Some(&'^') => {
                j += 1;
                Tok::Carets
            }
            '_' if chars.get(j) == Some(&':') => {
                j += 1;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                Tok::Blank(chars[i + 2..j].iter().collect())
            }
            c if c.is_ascii_digit() || ((c == '-' || c == '+') && chars.get(j).is_some_and(char::is_ascii_digit)) => {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(char::is_ascii_digit) {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                Tok::Number(chars[i..j].iter().collect())
            }
            c if c.is_ascii_alphabetic() || c == ':' => {
                j = i;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                if chars.get(j) == Some(&':') {
                    j += 1;
                    let start = j;
                    while j < chars.len() && (is_name_char(chars[j]) || chars[j] == '.') {
                        j += 1;
                    }
                    // a trailing dot ends the triple
                    while j > start && chars[j - 1] == '.' {
                        j -= 1;
                    }
                    Tok::PName(word, chars[start..j].iter().collect())
                } else {
                    Tok::Word(word)
                }
            }
            other => Tok::Other(other),
        };
        out.push(Token { tok, line: l0, col: c0 });
        let n = j - i;
        step(&mut i, &mut line, &mut col, n);
    }
    Ok(out)
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "FILTER", "MINUS", "GRAPH", "SERVICE", "VALUES", "EXISTS", "BASE", "DISTINCT", "REDUCED", "ORDER", "LIMIT",
    "OFFSET", "GROUP", "HAVING", "ASK", "DESCRIBE", "FROM", "INSERT", "DELETE", "LOAD", "CLEAR",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
    prefixes: PrefixMap,
}

/// Parse a query in the supported subset. Anything outside it (FILTER,
/// solution modifiers, property paths, ...) is reported with its position.
pub fn parse_query(text: &str) -> Result<Query, SparqlError> {
    let toks = tokenize(text)?;
    let lines = text.split('\n').count();
    let end = (lines, text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1);
    let mut p = Parser { toks, pos: 0, end, prefixes: PrefixMap::new() };
    p.query()
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        let (line, col) = self.here();
        syntax(line, col, message)
    }

    fn unsupported(&self, what: impl Into<String>) -> SparqlError {
        let (line, col) = self.here();
        SparqlError::Unsupported { line, col, what: what.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SparqlError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn keyword(&self) -> Option<String> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.keyword().as_deref() == Some(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn check_unsupported_keyword(&self) -> Result<(), SparqlError> {
        match self.keyword() {
            Some(k) if UNSUPPORTED_KEYWORDS.contains(&k.as_str()) => Err(self.unsupported(k)),
            _ => Ok(()),
        }
    }

    fn query(&mut self) -> Result<Query, SparqlError> {
        while self.eat_keyword("PREFIX") {
            let prefix = match self.next() {
                Some(Tok::PName(p, l)) if l.is_empty() => p,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected prefix name"));
                }
            };
            let ns = match self.next() {
                Some(Tok::IriRef(ns)) => ns,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected namespace IRI"));
                }
            };
            self.prefixes.insert(prefix, ns);
        }
        self.check_unsupported_keyword()?;
        let form = if self.eat_keyword("CONSTRUCT") {
            self.expect(Tok::LBrace, "'{' opening the template")?;
            let mut template = Vec::new();
            while self.peek() != Some(&Tok::RBrace) {
                if self.peek().is_none() {
                    return Err(self.err("unterminated template"));
                }
                self.triples_block(&mut template, true)?;
            }
            self.pos += 1;
            Form::Construct(template)
        } else if self.eat_keyword("SELECT") {
            self.check_unsupported_keyword()?;
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
                Form::Select(None)
            } else {
                let mut vars = Vec::new();
                while let Some(Tok::Var(v)) = self.peek() {
                    vars.push(v.clone());
                    self.pos += 1;
                }
                if vars.is_empty() {
                    if self.peek() == Some(&Tok::LParen) {
                        return Err(self.unsupported("projection expression"));
                    }
                    return Err(self.err("expected '*' or variables after SELECT"));
                }
                Form::Select(Some(vars))
            }
        } else {
            return Err(self.err("expected CONSTRUCT or SELECT"));
        };
        self.check_unsupported_keyword()?;
        self.eat_keyword("WHERE");
        self.check_unsupported_keyword()?;
        let pattern = self.group()?;
        if self.peek().is_some() {
            self.check_unsupported_keyword()?;
            return Err(self.err("unexpected input after query"));
        }
        Ok(Query { prefixes: std::mem::take(&mut self.prefixes), form, pattern })
    }

    fn group(&mut self) -> Result<GroupPattern, SparqlError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut elements = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated group")),
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Dot) => self.pos += 1,
                Some(Tok::LBrace) => {
                    let first = self.group()?;
                    let mut branches = vec![first];
                    while self.eat_keyword("UNION") {
                        branches.push(self.group()?);
                    }
                    if branches.len() == 1 {
                        elements.push(Element::Group(branches.pop().unwrap()));
                    } else {
                        elements.push(Element::Union(branches));
                    }
                }
                Some(Tok::Word(_)) if self.keyword().as_deref() == Some("OPTIONAL") => {
                    self.pos += 1;
                    elements.push(Element::Optional(self.group()?));
                }
                Some(Tok::Word(_)) if self.keyword().as_deref() == Some("BIND") => {
                    self.pos += 1;
                    let before = GroupPattern { elements: elements.clone() }.vars();
                    let (expr, var) = self.bind(&before)?;
                    elements.push(Element::Bind(expr, var));
                }
                Some(Tok::Word(w)) if w != "a" && !matches!(w.as_str(), "true" | "false") => {
                    self.check_unsupported_keyword()?;
                    return Err(self.err(format!("unexpected keyword '{w}'")));
                }
                _ => {
                    let mut ts = Vec::new();
                    self.triples_block(&mut ts, false)?;
                    elements.extend(ts.into_iter().map(Element::Triple));
                }
            }
        }
        Ok(GroupPattern { elements })
    }

    fn bind(&mut self, in_scope: &BTreeSet<String>) -> Result<(Expr, String), SparqlError> {
        self.expect(Tok::LParen, "'(' after BIND")?;
        let expr = match self.peek() {
            Some(Tok::Var(v)) => {
                let v = v.clone();
                self.pos += 1;
                Expr::Var(v)
            }
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("BNODE") => {
                self.pos += 1;
                self.expect(Tok::LParen, "'(' after BNODE")?;
                let label = match self.peek() {
                    Some(Tok::Str(s)) => {
                        let s = s.clone();
                        self.pos += 1;
                        Some(s)
                    }
                    _ => None,
                };
                self.expect(Tok::RParen, "')' closing BNODE")?;
                Expr::Bnode(label)
            }
            Some(Tok::Word(w)) if !matches!(w.as_str(), "true" | "false") => {
                return Err(self.unsupported(format!("function {w}")));
            }
            _ => Expr::Term(self.constant(false)?),
        };
        if !self.eat_keyword("AS") {
            if matches!(self.peek(), Some(Tok::RParen | Tok::Comma)) {
                return Err(self.err("expected AS"));
            }
            return Err(self.unsupported("expression"));
        }
        let var = match self.peek() {
            Some(Tok::Var(v)) => v.clone(),
            _ => return Err(self.err("expected variable after AS")),
        };
        if in_scope.contains(&var) {
            return Err(self.err(format!("BIND target ?{var} is already in scope")));
        }
        self.pos += 1;
        self.expect(Tok::RParen, "')' closing BIND")?;
        Ok((expr, var))
    }

    /// subject predicate object (, object)* (; predicate object ...)* '.'?
    fn triples_block(&mut self, out: &mut Vec<TriplePattern>, template: bool) -> Result<(), SparqlError> {
        let subject = self.term_pattern(template)?;
        loop {
            let (predicate, inverse) = self.predicate()?;
            loop {
                let object = self.term_pattern(template)?;
                if inverse {
                    out.push(TriplePattern::new(object, predicate.clone(), subject.clone()));
                } else {
                    out.push(TriplePattern::new(subject.clone(), predicate.clone(), object));
                }
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.peek() == Some(&Tok::Semi) {
                self.pos += 1;
                // trailing ';' before '.' or '}'
                if matches!(self.peek(), Some(Tok::Dot | Tok::RBrace)) {
                    break;
                }
            } else {
                break;
            }
        }
        match self.peek() {
            Some(Tok::Dot) => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::RBrace) => Ok(()),
            Some(Tok::Word(w)) if ["OPTIONAL", "BIND"].contains(&w.to_ascii_uppercase().as_str()) => Ok(()),
            Some(Tok::LBrace) => Ok(()),
            Some(Tok::Word(_)) => {
                self.check_unsupported_keyword()?;
                Err(self.err("expected '.' after triple"))
            }
            Some(Tok::LParen) | Some(Tok::Star) => Err(self.unsupported("property path")),
            _ => Err(self.err("expected '.' after triple")),
        }
    }

    /// The predicate and whether it was written inverted (`^p`).
    fn predicate(&mut self) -> Result<(TermPattern, bool), SparqlError> {
        if self.peek() == Some(&Tok::Other('^')) {
            self.pos += 1;
            return match self.peek() {
                Some(Tok::IriRef(_) | Tok::PName(..)) => Ok((TermPattern::Term(Term::Iri(self.iri()?)), true)),
                _ => Err(self.unsupported("property path")),
            };
        }
        let p = match self.peek() {
            Some(Tok::Word(w)) if w == "a" => {
                self.pos += 1;
                Ok(TermPattern::Term(Term::Iri(vocab::iri(vocab::RDF_TYPE))))
            }
            Some(Tok::Var(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(TermPattern::Var(v))
            }
            Some(Tok::IriRef(_) | Tok::PName(..)) => Ok(TermPattern::Term(Term::Iri(self.iri()?))),
            Some(Tok::LParen) | Some(Tok::Star) | Some(Tok::Other('!')) => Err(self.unsupported("property path")),
            _ => {
                self.check_unsupported_keyword()?;
                Err(self.err("expected predicate"))
            }
        }?;
        Ok((p, false))
    }

    fn term_pattern(&mut self, template: bool) -> Result<TermPattern, SparqlError> {
        match self.peek() {
            Some(Tok::Other('/' | '|' | '+' | '?')) | Some(Tok::Star) => Err(self.unsupported("property path")),
            Some(Tok::Var(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(TermPattern::Var(v))
            }
            Some(Tok::Word(w)) if !matches!(w.as_str(), "true" | "false") => {
                self.check_unsupported_keyword()?;
                Err(self.err(format!("unexpected '{w}'")))
            }
            _ => Ok(TermPattern::Term(self.constant(template)?)),
        }
    }

    fn iri(&mut self) -> Result<Iri, SparqlError> {
        let (line, col) = self.here();
        let bad = |e: crate::rdf::RdfError| syntax(line, col, e.to_string());
        match self.next() {
            Some(Tok::IriRef(s)) => Iri::new(s).map_err(bad),
            Some(Tok::PName(p, l)) => match self.prefixes.get(&p) {
                Some(ns) => Iri::new(format!("{ns}{l}")).map_err(bad),
                None => Err(syntax(line, col, format!("undeclared prefix '{p}:'"))),
            },
            _ => {
                self.pos -= 1;
                Err(self.err("expected IRI"))
            }
        }
    }

    fn constant(&mut self, allow_blank: bool) -> Result<Term, SparqlError> {
        let (line, col) = self.here();
        match self.peek().cloned() {
            Some(Tok::IriRef(_) | Tok::PName(..)) => Ok(Term::Iri(self.iri()?)),
            Some(Tok::Blank(label)) => {
                if !allow_blank {
                    return Err(self.unsupported("blank node in a graph pattern"));
                }
                self.pos += 1;
                BlankNode::new(label).map(Term::BlankNode).map_err(|e| syntax(line, col, e.to_string()))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Tok::LangTag(tag)) => {
                        self.pos += 1;
                        Literal::lang(s, tag).map(Term::Literal).map_err(|e| syntax(line, col, e.to_string()))
                    }
                    Some(Tok::Carets) => {
                        self.pos += 1;
                        let dt = self.iri()?;
                        Ok(Term::Literal(Literal::typed(s, dt)))
                    }
                    _ => Ok(Term::Literal(Literal::simple(s))),
                }
            }
            Some(Tok::Number(n)) => {
                self.pos += 1;
                let dt = if n.contains('.') { "decimal" } else { "integer" };
                Ok(Term::Literal(Literal::typed(n, vocab::iri(&format!("{}{dt}", vocab::XSD)))))
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                self.pos += 1;
                Ok(Term::Literal(Literal::typed(w, vocab::iri(&format!("{}boolean", vocab::XSD)))))
            }
            _ => {
                self.check_unsupported_keyword()?;
                Err(self.err("expected a term"))
            }
        }
    }
}
