//! Flat `key = value` documents shared by model and hardware config files.
//!
//! One entry per line. Blank lines and lines starting with `#` are ignored,
//! and a trailing `# comment` after a value is stripped. Keys are unique.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("line {line}: unknown key `{key}`")]
    Unknown { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for key `{key}`: {reason}")]
    Invalid {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(KvError::Malformed {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(KvError::Malformed {
                    line,
                    text: raw.to_string(),
                });
            }
            if entries
                .insert(key.to_string(), (value.to_string(), line))
                .is_some()
            {
                return Err(KvError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Rejects any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), KvError> {
        for (key, (_, line)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(KvError::Unknown {
                    line: *line,
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Result<(&str, usize), KvError> {
        self.entries
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| KvError::Missing(key.to_string()))
    }

    pub fn get<T>(&self, key: &str) -> Result<T, KvError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let (value, line) = self.raw(key)?;
        value.parse().map_err(|e: T::Err| KvError::Invalid {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T, KvError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if self.contains(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> KvError {
        let (value, line) = self
            .entries
            .get(key)
            .map(|(v, l)| (v.clone(), *l))
            .unwrap_or_default();
        KvError::Invalid {
            line,
            key: key.to_string(),
            value,
            reason: reason.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let doc = KvDoc::parse("# header\n a = 1 \n\nb=two # trailing\n").unwrap();
        assert_eq!(doc.get::<u32>("a").unwrap(), 1);
        assert_eq!(doc.raw("b").unwrap().0, "two");
    }

    #[test]
    fn reports_offending_key() {
        let doc = KvDoc::parse("a = x\n").unwrap();
        let err = doc.get::<u32>("a").unwrap_err();
        assert!(err.to_string().contains("`a`"));
        assert!(matches!(
            KvDoc::parse("a = 1\na = 2").unwrap_err(),
            KvError::Duplicate { line: 2, .. }
        ));
        assert!(matches!(
            KvDoc::parse("novalue").unwrap_err(),
            KvError::Malformed { line: 1, .. }
        ));
        let doc = KvDoc::parse("zz = 1").unwrap();
        assert!(matches!(
            doc.check_keys(&["a"]).unwrap_err(),
            KvError::Unknown { .. }
        ));
    }
}
