//! Flat `key = value` text files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may contain
//! spaces (water type names do); the value is whatever follows the last `=`.

use std::path::Path;

use crate::error::{Error, Result};

/// Entries in file order, with their 1-based line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.rsplit_once('=') else {
                return Err(Error::parse(context, i + 1, format!("expected `key = value`, got {line:?}")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(context, i + 1, "empty key"));
            }
            if entries.iter().any(|(k, _, _): &(String, String, usize)| k == key) {
                return Err(Error::parse(context, i + 1, format!("duplicate key {key:?}")));
            }
            entries.push((key.to_string(), value.trim().to_string(), i + 1));
        }
        Ok(KeyValues { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map_or(0, |e| e.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_with_spaces() {
        let kv = KeyValues::parse("# weights\nSwamp Perennial = 0.5\n\nLake=3.25\n", "w").unwrap();
        assert_eq!(kv.get("Swamp Perennial"), Some("0.5"));
        assert_eq!(kv.get("Lake"), Some("3.25"));
        assert_eq!(kv.line_of("Lake"), 4);
        assert_eq!(kv.get("lake"), None);
    }

    #[test]
    fn rejects_garbage_and_duplicates() {
        assert!(KeyValues::parse("no equals sign\n", "x").is_err());
        assert!(KeyValues::parse(" = 3\n", "x").is_err());
        let err = KeyValues::parse("a = 1\na = 2\n", "cfg").unwrap_err().to_string();
        assert!(err.contains("cfg: line 2"), "{err}");
    }
}
