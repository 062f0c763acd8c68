use std::fmt::Write as _;

use super::{BlankNode, Graph, Iri, Literal, RdfError, Term, Triple};

/// Parse W3C N-Triples. Comments and blank lines are skipped; duplicate
/// triples collapse.
pub fn parse_ntriples(text: &str) -> Result<Graph, RdfError> {
    let mut graph = Graph::new();
    for (idx, line) in text.lines().enumerate() {
        let mut cur = Cursor { src: line, pos: 0, line: idx + 1 };
        cur.skip_ws();
        if cur.at_end() || cur.peek() == Some('#') {
            continue;
        }
        let subject = match cur.peek() {
            Some('<') => Term::Iri(cur.iri()?),
            Some('_') => Term::BlankNode(cur.blank()?),
            _ => return Err(cur.err("expected IRI or blank node as subject")),
        };
        cur.skip_ws();
        if cur.peek() != Some('<') {
            return Err(cur.err("expected IRI as predicate"));
        }
        let predicate = cur.iri()?;
        cur.skip_ws();
        let object = match cur.peek() {
            Some('<') => Term::Iri(cur.iri()?),
            Some('_') => Term::BlankNode(cur.blank()?),
            Some('"') => Term::Literal(cur.literal()?),
            _ => return Err(cur.err("expected IRI, blank node or literal as object")),
        };
        cur.skip_ws();
        if cur.next() != Some('.') {
            return Err(cur.err("expected '.' at end of triple"));
        }
        cur.skip_ws();
        if !cur.at_end() && cur.peek() != Some('#') {
            return Err(cur.err("unexpected content after '.'"));
        }
        graph.insert(Triple { subject, predicate, object });
    }
    Ok(graph)
}

/// Canonical form: one triple per line, lines sorted by their rendering.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut lines: Vec<String> = graph.iter().map(|t| t.to_string()).collect();
    lines.sort();
    let mut out = String::new();
    for line in lines {
        let _ = writeln!(out, "{line}");
    }
    out
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl Cursor<'_> {
    fn err(&self, message: &str) -> RdfError {
        RdfError::Syntax { line: self.line, message: format!("column {}: {message}", self.pos + 1) }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.next();
        }
    }

    fn iri(&mut self) -> Result<Iri, RdfError> {
        self.next(); // '<'
        let mut s = String::new();
        loop {
            match self.next() {
                Some('>') => break,
                Some('\\') => s.push(self.unicode_escape()?),
                Some(c) => s.push(c),
                None => return Err(self.err("unterminated IRI")),
            }
        }
        Iri::new(s).map_err(|e| RdfError::Syntax { line: self.line, message: e.to_string() })
    }

    fn blank(&mut self) -> Result<BlankNode, RdfError> {
        self.next();
        if self.next() != Some(':') {
            return Err(self.err("expected ':' after '_'"));
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            self.next();
        }
        // a label may contain '.' but not end with one; give trailing dots back
        while self.pos > start && self.src[..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        BlankNode::new(&self.src[start..self.pos]).map_err(|e| RdfError::Syntax { line: self.line, message: e.to_string() })
    }

    fn literal(&mut self) -> Result<Literal, RdfError> {
        self.next(); // '"'
        let mut lexical = String::new();
        loop {
            match self.next() {
                Some('"') => break,
                Some('\\') => match self.next() {
                    Some('t') => lexical.push('\t'),
                    Some('b') => lexical.push('\u{8}'),
                    Some('n') => lexical.push('\n'),
                    Some('r') => lexical.push('\r'),
                    Some('f') => lexical.push('\u{c}'),
                    Some('"') => lexical.push('"'),
                    Some('\'') => lexical.push('\''),
                    Some('\\') => lexical.push('\\'),
                    Some('u') => lexical.push(self.hex(4)?),
                    Some('U') => lexical.push(self.hex(8)?),
                    _ => return Err(self.err("malformed escape in literal")),
                },
                Some(c) => lexical.push(c),
                None => return Err(self.err("unterminated literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.next();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.next();
                    } else {
                        break;
                    }
                }
                Literal::lang(lexical, tag).map_err(|e| RdfError::Syntax { line: self.line, message: e.to_string() })
            }
            Some('^') => {
                self.next();
                if self.next() != Some('^') || self.peek() != Some('<') {
                    return Err(self.err("malformed datatype"));
                }
                Ok(Literal::typed(lexical, self.iri()?))
            }
            _ => Ok(Literal::simple(lexical)),
        }
    }

    fn unicode_escape(&mut self) -> Result<char, RdfError> {
        match self.next() {
            Some('u') => self.hex(4),
            Some('U') => self.hex(8),
            _ => Err(self.err("malformed escape in IRI")),
        }
    }

    fn hex(&mut self, n: usize) -> Result<char, RdfError> {
        let mut v = 0u32;
        for _ in 0..n {
            let d = self.next().and_then(|c| c.to_digit(16)).ok_or_else(|| self.err("malformed unicode escape"))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| self.err("invalid code point"))
    }
}
