//! Flat `field=value` documents used for reports, sweep evidence and
//! pipeline summaries. One field per line, first line names the kind.

use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocError {
    #[error("line {line}: expected `field=value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate field `{field}`")]
    Duplicate { line: usize, field: String },
    #[error("missing field `{0}`")]
    Missing(String),
    #[error("field `{field}`: invalid value {value:?}")]
    Invalid { field: String, value: String },
    #[error("expected a `{expected}` document, found `{found}`")]
    Kind { expected: String, found: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlatDoc {
    fields: Vec<(String, String)>,
}

impl FlatDoc {
    pub fn new(kind: &str) -> Self {
        FlatDoc {
            fields: vec![("kind".to_string(), kind.to_string())],
        }
    }

    pub fn push(&mut self, field: impl Into<String>, value: impl Display) {
        self.fields.push((field.into(), value.to_string()));
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    pub fn kind(&self) -> Option<&str> {
        self.get("kind").ok()
    }

    pub fn get(&self, field: &str) -> Result<&str, DocError> {
        self.fields
            .iter()
            .find(|(k, _)| k == field)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| DocError::Missing(field.to_string()))
    }

    pub fn parse<T: FromStr>(&self, field: &str) -> Result<T, DocError> {
        let raw = self.get(field)?;
        raw.parse().map_err(|_| self.invalid(field, raw))
    }

    /// Comma-separated list; the empty string is the empty list.
    pub fn parse_list<T: FromStr>(&self, field: &str) -> Result<Vec<T>, DocError> {
        let raw = self.get(field)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| s.parse().map_err(|_| self.invalid(field, s)))
            .collect()
    }

    pub fn invalid(&self, field: &str, value: &str) -> DocError {
        DocError::Invalid {
            field: field.to_string(),
            value: value.to_string(),
        }
    }

    pub fn expect_kind(&self, expected: &str) -> Result<(), DocError> {
        match self.kind() {
            Some(k) if k == expected => Ok(()),
            found => Err(DocError::Kind {
                expected: expected.to_string(),
                found: found.unwrap_or("").to_string(),
            }),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    fn parse_str(text: &str) -> Result<Self, DocError> {
        let mut fields: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(DocError::Malformed {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            if fields.iter().any(|(f, _)| f == k) {
                return Err(DocError::Duplicate {
                    line: i + 1,
                    field: k.to_string(),
                });
            }
            fields.push((k.to_string(), v.to_string()));
        }
        Ok(FlatDoc { fields })
    }
}

impl FromStr for FlatDoc {
    type Err = DocError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let mut d = FlatDoc::new("x");
        d.push("a", 1);
        d.push("b.c", "p=q");
        d.push("list", "1,2,3");
        let text = d.render();
        assert_eq!(text, "kind=x\na=1\nb.c=p=q\nlist=1,2,3\n");
        let back: FlatDoc = text.parse().unwrap();
        assert_eq!(back, d);
        assert_eq!(back.get("b.c").unwrap(), "p=q");
        assert_eq!(back.parse_list::<u32>("list").unwrap(), vec![1, 2, 3]);
        assert!(back.expect_kind("y").is_err());
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(
            "kind=x\nnope\n".parse::<FlatDoc>(),
            Err(DocError::Malformed {
                line: 2,
                text: "nope".into()
            })
        );
        assert!(matches!(
            "a=1\na=2".parse::<FlatDoc>(),
            Err(DocError::Duplicate { line: 2, .. })
        ));
        let d: FlatDoc = "kind=x\nn=abc".parse().unwrap();
        assert!(matches!(d.parse::<u64>("n"), Err(DocError::Invalid { .. })));
        assert!(matches!(d.parse::<u64>("m"), Err(DocError::Missing(_))));
    }
}
