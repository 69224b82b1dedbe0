//! Configurators: named metadata packages living in a [`Linker`].
//!
//! A configurator owns a [`TriggerStore`] with its metadata, a synonym table,
//! its declared requirements, and the handlers that react to macros and to
//! framework messages. Macros are offered to each registered macro handler in
//! turn; the base parser (`additem`, `define`, `addreq`, `synonym`, `oncall`)
//! is always the last one asked.

mod description;
mod expression;
mod registry;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use indexmap::IndexMap;

pub use description::{ConfiguratorDescription, ConfiguratorId, RequirementPattern};
pub use expression::{Reference, ValueExpression, CONSTRUCT, SYNONYM};
pub use registry::{TypeRegistry, TypeSpec};

use crate::error::{Error, Result};
use crate::linker::Linker;
use crate::scriptgen::{self, ScriptGen, ScriptGenRegistration};
use crate::trigger_store::{HandlerId, TriggerHandler, TriggerKind, TriggerStore};

pub const RESET: &str = "Reset";

pub type FrameworkHandler = Rc<dyn Fn(&Configurator, &Linker) -> Result<()>>;
pub type ConstructFn = Arc<dyn Fn(&Configurator, &Linker) -> Result<String> + Send + Sync>;
type MacroFn = Rc<dyn Fn(&Configurator, &[String], &Linker) -> Result<()>>;

/// One link of the macro handler chain. A handler accepts a macro when its
/// first token is one of the handler's verbs.
#[derive(Clone)]
pub struct MacroHandler {
    name: String,
    verbs: Vec<String>,
    apply: MacroFn,
}

impl MacroHandler {
    pub fn new<F>(name: &str, verbs: &[&str], apply: F) -> Self
    where
        F: Fn(&Configurator, &[String], &Linker) -> Result<()> + 'static,
    {
        Self {
            name: name.to_owned(),
            verbs: verbs.iter().map(|v| v.to_string()).collect(),
            apply: Rc::new(apply),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn accepts(&self, tokens: &[String]) -> bool {
        tokens.first().is_some_and(|t| self.verbs.contains(t))
    }
}

impl fmt::Debug for MacroHandler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MacroHandler")
            .field("name", &self.name)
            .field("verbs", &self.verbs)
            .finish()
    }
}

pub const BASE_PARSER: &str = "base";
const BASE_VERBS: &[&str] = &["additem", "define", "addreq", "synonym", "oncall"];

/// A macro understood by the base parser.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseMacro {
    AddItem(String),
    Define(String, ValueExpression),
    AddReq(RequirementPattern),
    Synonym(String, Reference),
    OnCall {
        message: String,
        command: Vec<String>,
    },
}

impl BaseMacro {
    pub fn parse(tokens: &[String]) -> Result<Self> {
        let bad = |reason: &str| Error::MacroParse {
            macro_text: tokens.join(" "),
            reason: reason.to_owned(),
        };
        let (verb, args) = tokens.split_first().ok_or_else(|| bad("empty macro"))?;
        match verb.as_str() {
            "additem" => match args {
                [key] => Ok(BaseMacro::AddItem(key.clone())),
                _ => Err(bad("usage: additem <key>")),
            },
            "define" => {
                let (key, expr) = args
                    .split_first()
                    .ok_or_else(|| bad("usage: define <key> <expression>"))?;
                Ok(BaseMacro::Define(
                    key.clone(),
                    ValueExpression::parse(key, expr)?,
                ))
            }
            "addreq" => Ok(BaseMacro::AddReq(RequirementPattern::parse_tokens(args)?)),
            "synonym" => match args.split_first() {
                Some((key, rest)) if !rest.is_empty() => Ok(BaseMacro::Synonym(
                    key.clone(),
                    Reference::parse(&rest.join(" "))?,
                )),
                _ => Err(bad("usage: synonym <key> ::Identifier:key")),
            },
            "oncall" => match args {
                [message, kw, command @ ..] if kw == "do" && !command.is_empty() => {
                    Ok(BaseMacro::OnCall {
                        message: message.clone(),
                        command: command.to_vec(),
                    })
                }
                _ => Err(bad("usage: oncall <message> do <macro>")),
            },
            _ => Err(Error::UnknownMacro(tokens.join(" "))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameworkOutcome {
    Handled,
    Delegated(ConfiguratorDescription),
    Skipped,
}

impl fmt::Display for FrameworkOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameworkOutcome::Handled => f.write_str("Handled"),
            FrameworkOutcome::Delegated(d) => write!(f, "Delegated to {d}"),
            FrameworkOutcome::Skipped => f.write_str("Skipped"),
        }
    }
}

pub struct Configurator {
    description: ConfiguratorDescription,
    slug: String,
    store: TriggerStore<Linker>,
    synonyms: RefCell<IndexMap<String, Reference>>,
    static_requirements: Vec<RequirementPattern>,
    requirements: RefCell<Vec<RequirementPattern>>,
    framework_handlers: IndexMap<String, FrameworkHandler>,
    macro_handlers: Vec<MacroHandler>,
    stored_commands: RefCell<IndexMap<String, Vec<Vec<String>>>>,
    delegations: RefCell<IndexMap<String, ConfiguratorDescription>>,
    expressions: RefCell<IndexMap<String, (ValueExpression, HandlerId)>>,
    constructors: HashMap<String, ConstructFn>,
    scriptgen: Option<Rc<dyn ScriptGen>>,
    registrations: RefCell<Vec<ScriptGenRegistration>>,
}

impl fmt::Debug for Configurator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Configurator")
            .field("description", &self.description)
            .field("store", &self.store)
            .field("requirements", &self.requirements.borrow())
            .finish_non_exhaustive()
    }
}

impl Configurator {
    /// A bare configurator: base parser and a `Reset` handler that drops the
    /// script objects it produced.
    pub fn new(description: ConfiguratorDescription, slug: impl Into<String>) -> Self {
        let mut framework_handlers: IndexMap<String, FrameworkHandler> = IndexMap::new();
        framework_handlers.insert(
            RESET.to_owned(),
            Rc::new(|cfg: &Configurator, linker: &Linker| {
                linker.remove_script_objects(|obj| obj.producer == cfg.description);
                Ok(())
            }),
        );
        Self {
            description,
            slug: slug.into(),
            store: TriggerStore::new(),
            synonyms: RefCell::default(),
            static_requirements: Vec::new(),
            requirements: RefCell::default(),
            framework_handlers,
            macro_handlers: vec![MacroHandler::new(
                BASE_PARSER,
                BASE_VERBS,
                |cfg, tokens, linker| cfg.apply_base(BaseMacro::parse(tokens)?, linker),
            )],
            stored_commands: RefCell::default(),
            delegations: RefCell::default(),
            expressions: RefCell::default(),
            constructors: HashMap::new(),
            scriptgen: None,
            registrations: RefCell::default(),
        }
    }

    pub fn description(&self) -> &ConfiguratorDescription {
        &self.description
    }

    pub fn id(&self) -> ConfiguratorId {
        self.description.id()
    }

    /// Filesystem- and DAG-safe name, unique within the linker.
    pub fn slug(&self) -> &str {
        &self.slug
    }

    pub fn store(&self) -> &TriggerStore<Linker> {
        &self.store
    }

    // ---- construction-time customisation -------------------------------

    /// Adds a handler ahead of the base parser (and after earlier additions).
    pub fn push_macro_handler(&mut self, handler: MacroHandler) {
        let base = self.macro_handlers.len() - 1;
        self.macro_handlers.insert(base, handler);
    }

    pub fn macro_handler_names(&self) -> Vec<&str> {
        self.macro_handlers.iter().map(MacroHandler::name).collect()
    }

    pub fn on_framework<F>(&mut self, message: &str, handler: F)
    where
        F: Fn(&Configurator, &Linker) -> Result<()> + 'static,
    {
        self.framework_handlers
            .insert(message.to_owned(), Rc::new(handler));
    }

    /// Registers the function evaluated for `define <key> ::construct`.
    pub fn register_constructor<F>(&mut self, key: &str, f: F)
    where
        F: Fn(&Configurator, &Linker) -> Result<String> + Send + Sync + 'static,
    {
        self.constructors.insert(key.to_owned(), Arc::new(f));
    }

    pub fn add_static_requirement(&mut self, pattern: RequirementPattern) {
        self.static_requirements.push(pattern);
    }

    pub fn set_scriptgen(&mut self, scriptgen: Rc<dyn ScriptGen>) {
        self.scriptgen = Some(scriptgen);
    }

    pub fn add_schema_key(&self, key: &str) {
        if !self.store.contains_key(key) {
            self.store.untriggered_write(key, "");
        }
    }

    // ---- accessors --------------------------------------------------------

    pub fn scriptgen(&self) -> Option<Rc<dyn ScriptGen>> {
        self.scriptgen.clone()
    }

    pub fn static_requirements(&self) -> &[RequirementPattern] {
        &self.static_requirements
    }

    /// Requirements added after construction, in declaration order.
    pub fn dynamic_requirements(&self) -> Vec<RequirementPattern> {
        self.requirements.borrow().clone()
    }

    pub fn requirements(&self) -> Vec<RequirementPattern> {
        let mut all = self.static_requirements.clone();
        all.extend(self.requirements.borrow().iter().cloned());
        all
    }

    pub fn requires(&self, desc: &ConfiguratorDescription) -> bool {
        self.static_requirements.iter().any(|p| p.matches(desc))
            || self.requirements.borrow().iter().any(|p| p.matches(desc))
    }

    pub fn synonyms(&self) -> Vec<(String, Reference)> {
        self.synonyms
            .borrow()
            .iter()
            .map(|(k, r)| (k.clone(), r.clone()))
            .collect()
    }

    pub fn synonym(&self, key: &str) -> Option<Reference> {
        self.synonyms.borrow().get(key).cloned()
    }

    pub fn stored_commands(&self) -> Vec<(String, Vec<Vec<String>>)> {
        self.stored_commands
            .borrow()
            .iter()
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect()
    }

    /// Non-literal definition of `key`, if any.
    pub fn expression(&self, key: &str) -> Option<ValueExpression> {
        self.expressions.borrow().get(key).map(|(e, _)| e.clone())
    }

    pub fn delegation(&self, message: &str) -> Option<ConfiguratorDescription> {
        self.delegations.borrow().get(message).cloned()
    }

    pub fn set_delegation(&self, message: &str, target: ConfiguratorDescription) {
        self.delegations
            .borrow_mut()
            .insert(message.to_owned(), target);
    }

    pub fn registrations(&self) -> Vec<ScriptGenRegistration> {
        self.registrations.borrow().clone()
    }

    pub(crate) fn push_registration(&self, reg: ScriptGenRegistration) -> bool {
        let mut regs = self.registrations.borrow_mut();
        if regs.iter().any(|r| r.delegator_type == reg.delegator_type) {
            return false;
        }
        regs.push(reg);
        true
    }

    pub fn handles(&self, message: &str) -> bool {
        self.framework_handlers.contains_key(message)
    }

    // ---- macros -------------------------------------------------------------

    /// Offers `tokens` to each macro handler in turn; the first one that
    /// accepts processes it.
    pub fn apply_macro(&self, tokens: &[String], linker: &Linker) -> Result<()> {
        let handler = self
            .macro_handlers
            .iter()
            .find(|h| h.accepts(tokens))
            .ok_or_else(|| Error::UnknownMacro(tokens.join(" ")))?;
        (handler.apply)(self, tokens, linker)
    }

    /// Checks that some handler accepts `tokens` without applying it. Base
    /// macros are fully parsed.
    pub fn check_macro(&self, tokens: &[String]) -> Result<()> {
        match self.macro_handlers.iter().find(|h| h.accepts(tokens)) {
            None => Err(Error::MacroParse {
                macro_text: tokens.join(" "),
                reason: "no macro handler accepts it".into(),
            }),
            Some(h) if h.name == BASE_PARSER => BaseMacro::parse(tokens).map(drop),
            Some(_) => Ok(()),
        }
    }

    pub fn apply_base(&self, mac: BaseMacro, linker: &Linker) -> Result<()> {
        match mac {
            BaseMacro::AddItem(key) => self.add_item(&key, linker),
            BaseMacro::Define(key, expr) => self.define(&key, expr, linker),
            BaseMacro::AddReq(pattern) => self.add_requirement(pattern, linker),
            BaseMacro::Synonym(key, target) => {
                self.set_synonym(&key, target);
                Ok(())
            }
            BaseMacro::OnCall { message, command } => self.store_oncall(&message, command),
        }
    }

    pub fn add_item(&self, key: &str, linker: &Linker) -> Result<()> {
        check_key(key)?;
        if !self.store.contains_key(key) {
            self.store.write(key, "", linker)?;
        }
        Ok(())
    }

    /// Literal values are stored immediately. References, synonym lookups and
    /// constructs install a read trigger so that every read re-evaluates.
    pub fn define(&self, key: &str, expr: ValueExpression, linker: &Linker) -> Result<()> {
        check_key(key)?;
        let handler = match &expr {
            ValueExpression::Literal(value) => {
                self.clear_expression(key);
                return self.store.write(key, value, linker);
            }
            ValueExpression::Reference(r) => reference_handler(
                self.description.clone(),
                vec![r.target.to_string(), r.key.clone()],
            ),
            ValueExpression::SynonymLookup(syn) => {
                synonym_handler(self.description.clone(), syn.clone())
            }
            ValueExpression::Construct => {
                let f = self
                    .constructors
                    .get(key)
                    .cloned()
                    .ok_or_else(|| Error::NoConstructRegistered(key.to_owned()))?;
                construct_handler(self.description.clone(), f)
            }
        };
        self.clear_expression(key);
        if !self.store.contains_key(key) {
            self.store.untriggered_write(key, "");
        }
        let id = self
            .store
            .register_trigger(TriggerKind::IndexedRead(key.to_owned()), handler);
        self.expressions
            .borrow_mut()
            .insert(key.to_owned(), (expr, id));
        Ok(())
    }

    fn clear_expression(&self, key: &str) {
        let previous = self.expressions.borrow_mut().shift_remove(key);
        if let Some((_, id)) = previous {
            self.store.deregister_trigger(id);
        }
    }

    /// Records a dependency. In strict mode it must already be satisfied by an
    /// attached configurator.
    pub fn add_requirement(&self, pattern: RequirementPattern, linker: &Linker) -> Result<()> {
        if linker.strict() && !linker.requirement_satisfied(&pattern) {
            return Err(Error::UnsatisfiedDependency {
                requester: self.description.to_string(),
                requirement: pattern.to_string(),
            });
        }
        let mut reqs = self.requirements.borrow_mut();
        if !reqs.contains(&pattern) && !self.static_requirements.contains(&pattern) {
            reqs.push(pattern);
        }
        Ok(())
    }

    pub fn set_synonym(&self, key: &str, target: Reference) {
        self.synonyms.borrow_mut().insert(key.to_owned(), target);
    }

    pub fn store_oncall(&self, message: &str, command: Vec<String>) -> Result<()> {
        self.check_macro(&command)?;
        self.stored_commands
            .borrow_mut()
            .entry(message.to_owned())
            .or_default()
            .push(command);
        Ok(())
    }

    // ---- framework ----------------------------------------------------------

    /// Runs the commands stored for `message`, then delegates, handles, or
    /// skips it.
    pub fn handle_framework(&self, message: &str, linker: &Linker) -> Result<FrameworkOutcome> {
        let stored = self.stored_commands.borrow().get(message).cloned();
        for command in stored.unwrap_or_default() {
            self.apply_macro(&command, linker)?;
        }
        if let Some(target) = self.delegation(message) {
            let sg_cfg = linker.configurator(&target.id())?;
            let sg = sg_cfg
                .scriptgen()
                .ok_or_else(|| Error::NotAScriptGen(target.to_string()))?;
            scriptgen::delegated_call(sg.as_ref(), &sg_cfg, message, self, linker)?;
            return Ok(FrameworkOutcome::Delegated(target));
        }
        match self.framework_handlers.get(message).cloned() {
            Some(handler) => {
                handler(self, linker)?;
                Ok(FrameworkOutcome::Handled)
            }
            None => Ok(FrameworkOutcome::Skipped),
        }
    }

    // ---- lookup -------------------------------------------------------------

    /// Triggered read of `key`, chasing references, synonyms and constructs.
    pub fn resolve_value(&self, key: &str, linker: &Linker) -> Result<String> {
        let _guard = linker.enter_resolution(&self.description, key)?;
        self.store.read(key, linker)
    }
}

fn check_key(key: &str) -> Result<()> {
    if key.is_empty() || key.contains(char::is_whitespace) {
        return Err(Error::InvalidKey(key.to_owned()));
    }
    Ok(())
}

// extras: [target identifier, remote key]
fn reference_handler(
    owner: ConfiguratorDescription,
    extras: Vec<String>,
) -> TriggerHandler<Linker> {
    TriggerHandler::with_extras(
        move |call: &crate::trigger_store::TriggerCall<'_, Linker>| {
            let target = ConfiguratorId::parse(&call.extras[0])?;
            let value = call
                .ctx
                .lookup_parameter(&owner, &target, &call.extras[1])?;
            call.store.untriggered_write(call.key, &value);
            Ok(())
        },
        extras,
    )
}

fn synonym_handler(owner: ConfiguratorDescription, synonym_key: String) -> TriggerHandler<Linker> {
    TriggerHandler::new(
        move |call: &crate::trigger_store::TriggerCall<'_, Linker>| {
            let cfg = call.ctx.configurator(&owner.id())?;
            let target = cfg
                .synonym(&synonym_key)
                .ok_or_else(|| Error::NoSynonym(synonym_key.clone()))?;
            let value = call
                .ctx
                .lookup_parameter(&owner, &target.target, &target.key)?;
            call.store.untriggered_write(call.key, &value);
            Ok(())
        },
    )
}

fn construct_handler(owner: ConfiguratorDescription, f: ConstructFn) -> TriggerHandler<Linker> {
    TriggerHandler::new(
        move |call: &crate::trigger_store::TriggerCall<'_, Linker>| {
            let cfg = call.ctx.configurator(&owner.id())?;
            let value = f(&cfg, call.ctx)?;
            call.store.untriggered_write(call.key, &value);
            Ok(())
        },
    )
}
