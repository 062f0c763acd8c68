use std::collections::BTreeMap;

use super::{Iri, RdfError};

/// Short prefix → namespace IRI. Used to expand compact names in
/// alignment documents and queries, and to abbreviate IRIs for display.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.entries.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.entries.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: &PrefixMap) {
        for (k, v) in other.iter() {
            self.entries.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
    }

    /// Resolve `<iri>`, `prefix:local` or a bare absolute IRI.
    pub fn expand(&self, name: &str) -> Result<Iri, RdfError> {
        let name = name.trim();
        if let Some(inner) = name.strip_prefix('<').and_then(|s| s.strip_suffix('>')) {
            return Iri::new(inner);
        }
        if let Some((prefix, local)) = name.split_once(':') {
            if let Some(ns) = self.entries.get(prefix) {
                return Iri::new(format!("{ns}{local}"));
            }
        }
        Iri::new(name)
    }

    /// Longest-namespace match; `None` when no prefix applies or the local
    /// part would not be a valid prefixed-name local.
    pub fn abbreviate(&self, iri: &Iri) -> Option<String> {
        let s = iri.as_str();
        self.entries
            .iter()
            .filter(|(_, ns)| s.starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.len())
            .and_then(|(prefix, ns)| {
                let local = &s[ns.len()..];
                let valid = local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                    && !local.starts_with('-');
                valid.then(|| format!("{prefix}:{local}"))
            })
    }

    /// Abbreviated form if possible, `<iri>` otherwise.
    pub fn display(&self, iri: &Iri) -> String {
        self.abbreviate(iri).unwrap_or_else(|| iri.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_and_abbreviate() {
        let mut p = PrefixMap::new();
        p.insert("src", "http://example.org/src#");
        let iri = p.expand("src:Person").unwrap();
        assert_eq!(iri.as_str(), "http://example.org/src#Person");
        assert_eq!(p.abbreviate(&iri).as_deref(), Some("src:Person"));
        assert_eq!(p.expand("<http://x.org/a>").unwrap().as_str(), "http://x.org/a");
        // unknown prefix falls back to treating the text as an absolute IRI
        assert_eq!(p.expand("urn:x").unwrap().as_str(), "urn:x");
        let other = Iri::new("http://other.org/x").unwrap();
        assert_eq!(p.display(&other), "<http://other.org/x>");
    }
}
