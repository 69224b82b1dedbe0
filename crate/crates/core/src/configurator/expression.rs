use std::fmt;

use super::description::ConfiguratorId;
use crate::error::{Error, Result};

pub const CONSTRUCT: &str = "::construct";
pub const SYNONYM: &str = "::synonym";

/// `::Identifier:key`, where the identifier may be `Type named Name`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Reference {
    pub target: ConfiguratorId,
    pub key: String,
}

impl Reference {
    pub fn new(target: ConfiguratorId, key: impl Into<String>) -> Self {
        Self {
            target,
            key: key.into(),
        }
    }

    /// Parses the text after `define key` / `synonym key`. Tokens are
    /// rejoined with single spaces before splitting at the last `:`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::MacroParse {
            macro_text: text.to_owned(),
            reason: reason.to_owned(),
        };
        let body = text
            .strip_prefix("::")
            .ok_or_else(|| bad("reference must start with `::`"))?;
        let (ident, key) = body
            .rsplit_once(':')
            .ok_or_else(|| bad("expected `::Identifier:key`"))?;
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(bad("reference key must be a single token"));
        }
        let tokens: Vec<&str> = ident.split_whitespace().collect();
        match ConfiguratorId::split_tokens(&tokens) {
            Some((target, [])) => Ok(Self::new(target, key)),
            _ => Err(bad("malformed configurator identifier")),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "::{}:{}", self.target, self.key)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueExpression {
    Literal(String),
    Reference(Reference),
    /// Resolved through the configurator's synonym entry for this key.
    SynonymLookup(String),
    Construct,
}

impl ValueExpression {
    /// `key` is the key being defined; it names the synonym entry for
    /// `::synonym`.
    pub fn parse(key: &str, tokens: &[impl AsRef<str>]) -> Result<Self> {
        let text = tokens
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        Ok(match text.as_str() {
            CONSTRUCT => ValueExpression::Construct,
            SYNONYM => ValueExpression::SynonymLookup(key.to_owned()),
            t if t.starts_with("::") => ValueExpression::Reference(Reference::parse(t)?),
            _ => ValueExpression::Literal(text),
        })
    }
}

impl fmt::Display for ValueExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpression::Literal(s) => f.write_str(s),
            ValueExpression::Reference(r) => r.fmt(f),
            ValueExpression::SynonymLookup(_) => f.write_str(SYNONYM),
            ValueExpression::Construct => f.write_str(CONSTRUCT),
        }
    }
}
