use std::fmt;

use crate::error::{Error, Result};

pub const NAMED: &str = "named";
pub const VERSION: &str = "version";
pub const DEFAULT_VERSION: &str = "1";

/// Identity of a configurator inside a linker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConfiguratorDescription {
    pub type_name: String,
    pub instance_name: String,
    pub version: String,
}

impl ConfiguratorDescription {
    pub fn new(type_name: impl Into<String>, instance_name: Option<&str>) -> Self {
        let type_name = type_name.into();
        let instance_name = instance_name.unwrap_or(&type_name).to_owned();
        Self {
            type_name,
            instance_name,
            version: DEFAULT_VERSION.to_owned(),
        }
    }

    pub fn with_version(mut self, version: impl Into<String>) -> Self {
        self.version = version.into();
        self
    }

    pub fn id(&self) -> ConfiguratorId {
        ConfiguratorId {
            type_name: self.type_name.clone(),
            instance_name: self.instance_name.clone(),
        }
    }

    pub fn is_named(&self) -> bool {
        self.instance_name != self.type_name
    }
}

impl fmt::Display for ConfiguratorDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id().fmt(f)
    }
}

/// `Type` or `Type named Name`; the key under which a configurator is attached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConfiguratorId {
    pub type_name: String,
    pub instance_name: String,
}

impl ConfiguratorId {
    pub fn new(type_name: &str, instance_name: Option<&str>) -> Self {
        Self {
            type_name: type_name.to_owned(),
            instance_name: instance_name.unwrap_or(type_name).to_owned(),
        }
    }

    /// Parses a whole identifier string such as `HelloWorld named English`.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match ConfiguratorId::split_tokens(&tokens) {
            Some((id, [])) => Ok(id),
            _ => Err(Error::UnknownConfigurator(text.trim().to_owned())),
        }
    }

    /// Consumes the identifier prefix of `tokens`, returning the remainder.
    pub fn split_tokens<S: AsRef<str>>(tokens: &[S]) -> Option<(Self, &[S])> {
        let first = tokens.first()?.as_ref();
        if first == NAMED || first.is_empty() {
            return None;
        }
        if tokens.get(1).map(AsRef::as_ref) == Some(NAMED) {
            let name = tokens.get(2)?.as_ref();
            if name == NAMED {
                return None;
            }
            Some((Self::new(first, Some(name)), &tokens[3..]))
        } else {
            Some((Self::new(first, None), &tokens[1..]))
        }
    }

    pub fn tokens(&self) -> Vec<String> {
        if self.type_name == self.instance_name {
            vec![self.type_name.clone()]
        } else {
            vec![
                self.type_name.clone(),
                NAMED.to_owned(),
                self.instance_name.clone(),
            ]
        }
    }
}

impl fmt::Display for ConfiguratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.type_name == self.instance_name {
            f.write_str(&self.type_name)
        } else {
            write!(f, "{} {NAMED} {}", self.type_name, self.instance_name)
        }
    }
}

/// A dependency declaration. Matches on type name; instance and version are
/// optional constraints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RequirementPattern {
    pub type_name: String,
    pub instance_name: Option<String>,
    pub version: Option<String>,
}

impl RequirementPattern {
    pub fn on(desc: &ConfiguratorDescription) -> Self {
        Self {
            type_name: desc.type_name.clone(),
            instance_name: desc.is_named().then(|| desc.instance_name.clone()),
            version: None,
        }
    }

    pub fn of_type(type_name: &str) -> Self {
        Self {
            type_name: type_name.to_owned(),
            instance_name: None,
            version: None,
        }
    }

    /// `Type [named Name] [version V]`
    pub fn parse_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let text = || {
            tokens
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let bad = |reason: &str| Error::MacroParse {
            macro_text: text(),
            reason: reason.to_owned(),
        };
        let (id, rest) =
            ConfiguratorId::split_tokens(tokens).ok_or_else(|| bad("expected identifier"))?;
        let named = tokens.get(1).map(AsRef::as_ref) == Some(NAMED);
        let version = match rest {
            [] => None,
            [kw, v] if kw.as_ref() == VERSION => Some(v.as_ref().to_owned()),
            _ => return Err(bad("expected `version <v>` or end of identifier")),
        };
        Ok(Self {
            instance_name: named.then_some(id.instance_name),
            type_name: id.type_name,
            version,
        })
    }

    pub fn matches(&self, desc: &ConfiguratorDescription) -> bool {
        self.type_name == desc.type_name
            && self
                .instance_name
                .as_ref()
                .is_none_or(|n| *n == desc.instance_name)
            && self.version.as_ref().is_none_or(|v| *v == desc.version)
    }

    pub fn tokens(&self) -> Vec<String> {
        let mut out = vec![self.type_name.clone()];
        if let Some(name) = &self.instance_name {
            out.push(NAMED.into());
            out.push(name.clone());
        }
        if let Some(v) = &self.version {
            out.push(VERSION.into());
            out.push(v.clone());
        }
        out
    }
}

impl fmt::Display for RequirementPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens().join(" "))
    }
}
