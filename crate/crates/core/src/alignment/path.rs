use std::fmt;

use crate::rdf::{Iri, PrefixMap, RdfError, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub property: Iri,
    pub direction: Direction,
}

impl Step {
    pub fn forward(property: Iri) -> Self {
        Step { property, direction: Direction::Forward }
    }

    pub fn inverse(property: Iri) -> Self {
        Step { property, direction: Direction::Inverse }
    }
}

/// A property path restricted to sequence (`/`) and inverse (`^`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathExpr {
    steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("empty path expression")]
    Empty,
    #[error("empty step in path expression '{0}'")]
    EmptyStep(String),
    #[error(transparent)]
    Iri(#[from] RdfError),
}

impl PathExpr {
    pub fn new(steps: Vec<Step>) -> Result<Self, PathError> {
        if steps.is_empty() {
            return Err(PathError::Empty);
        }
        Ok(PathExpr { steps })
    }

    pub fn single(property: Iri) -> Self {
        PathExpr { steps: vec![Step::forward(property)] }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn last(&self) -> &Step {
        self.steps.last().expect("path is non-empty")
    }

    /// Parse `a/b/^c`. Full IRIs in angle brackets may contain '/', so the
    /// split respects brackets.
    pub fn parse(text: &str, prefixes: &PrefixMap) -> Result<Self, PathError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(PathError::Empty);
        }
        let mut parts = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, c) in text.char_indices() {
            match c {
                '<' => depth += 1,
                '>' => depth = depth.saturating_sub(1),
                '/' if depth == 0 => {
                    parts.push(&text[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        parts.push(&text[start..]);
        let mut steps = Vec::new();
        for part in parts {
            let part = part.trim();
            let (direction, name) = match part.strip_prefix('^') {
                Some(rest) => (Direction::Inverse, rest.trim()),
                None => (Direction::Forward, part),
            };
            if name.is_empty() {
                return Err(PathError::EmptyStep(text.to_string()));
            }
            steps.push(Step { property: prefixes.expand(name)?, direction });
        }
        PathExpr::new(steps)
    }

    pub fn render(&self, prefixes: &PrefixMap) -> String {
        self.steps
            .iter()
            .map(|s| {
                let name = prefixes.display(&s.property);
                match s.direction {
                    Direction::Forward => name,
                    Direction::Inverse => format!("^{name}"),
                }
            })
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Concepts visited by the object-property prefix of the path starting
    /// at `start` (the start included). The final step is not followed when
    /// `data_path` is set, since it is the attribute.
    pub fn walk(&self, schema: &Schema, start: &Iri, data_path: bool) -> Result<Vec<Iri>, String> {
        let object_steps = if data_path { &self.steps[..self.steps.len() - 1] } else { &self.steps[..] };
        let mut current = start.clone();
        let mut visited = vec![current.clone()];
        for step in object_steps {
            let (domain, range) = schema
                .object_properties()
                .get(&step.property)
                .ok_or_else(|| format!("{} is not an object property", step.property))?;
            let (from, to) = match step.direction {
                Direction::Forward => (domain, range),
                Direction::Inverse => (range, domain),
            };
            if !schema.is_subclass_of(&current, from) {
                return Err(format!("step {} does not apply to {}", step.property.local_name(), current.local_name()));
            }
            current = to.clone();
            visited.push(current.clone());
        }
        if data_path {
            let last = self.last();
            if last.direction != Direction::Forward {
                return Err(format!("attribute step {} must be forward", last.property.local_name()));
            }
            if !schema.is_attribute(&last.property) {
                return Err(format!("{} is not an attribute", last.property));
            }
            if !schema.attribute_applies(&last.property, &current) {
                return Err(format!("attribute {} does not apply to {}", last.property.local_name(), current.local_name()));
            }
        }
        Ok(visited)
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&PrefixMap::new()))
    }
}
