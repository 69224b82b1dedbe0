use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use super::description::DEFAULT_VERSION;
use super::{Configurator, RequirementPattern};

type Setup = Rc<dyn Fn(&mut Configurator)>;

/// How to build one configurator type.
#[derive(Clone)]
pub struct TypeSpec {
    pub version: String,
    pub static_requirements: Vec<RequirementPattern>,
    setup: Setup,
}

impl TypeSpec {
    pub fn new<F>(setup: F) -> Self
    where
        F: Fn(&mut Configurator) + 'static,
    {
        Self {
            version: DEFAULT_VERSION.to_owned(),
            static_requirements: Vec::new(),
            setup: Rc::new(setup),
        }
    }

    pub fn version(mut self, version: &str) -> Self {
        self.version = version.to_owned();
        self
    }

    pub fn requires(mut self, pattern: RequirementPattern) -> Self {
        self.static_requirements.push(pattern);
        self
    }

    pub(crate) fn setup(&self, cfg: &mut Configurator) {
        for p in &self.static_requirements {
            cfg.add_static_requirement(p.clone());
        }
        (self.setup)(cfg)
    }
}

impl fmt::Debug for TypeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeSpec")
            .field("version", &self.version)
            .field("static_requirements", &self.static_requirements)
            .finish_non_exhaustive()
    }
}

/// Configurator types that can be attached, by type name.
#[derive(Clone, Debug, Default)]
pub struct TypeRegistry {
    types: IndexMap<String, TypeSpec>,
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, type_name: &str, spec: TypeSpec) -> &mut Self {
        self.types.insert(type_name.to_owned(), spec);
        self
    }

    pub fn get(&self, type_name: &str) -> Option<&TypeSpec> {
        self.types.get(type_name)
    }

    pub fn contains(&self, type_name: &str) -> bool {
        self.types.contains_key(type_name)
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }
}
