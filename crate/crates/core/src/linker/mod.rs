//! The Linker: container and message bus for configurators.
//!
//! It owns the attached configurators (in attach order), enforces namespace
//! visibility on cross-configurator lookups, stores generated script objects,
//! and drives framework messages.

mod dump;

use std::cell::{Cell, RefCell};
use std::fs;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use indexmap::IndexMap;

use crate::builtins::{self, RunMode, RunReport};
use crate::configurator::{
    Configurator, ConfiguratorDescription, ConfiguratorId, FrameworkOutcome, RequirementPattern,
    TypeRegistry,
};
use crate::error::{Error, Result};
use crate::scriptgen::{self, ScriptObject};

pub use dump::DUMP_HEADER;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispatchRecord {
    pub message: String,
    pub configurator: ConfiguratorDescription,
    pub outcome: FrameworkOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DispatchSummary {
    pub records: Vec<DispatchRecord>,
}

pub struct Linker {
    registry: TypeRegistry,
    configurators: RefCell<Vec<Rc<Configurator>>>,
    repository: RefCell<Vec<ScriptObject>>,
    next_sequence: Cell<u64>,
    groups: RefCell<IndexMap<String, Vec<String>>>,
    strict: Cell<bool>,
    dispatch_log: RefCell<Vec<DispatchRecord>>,
    resolving: RefCell<Vec<(ConfiguratorDescription, String)>>,
    lookups: Cell<u64>,
    output_dir: RefCell<Option<PathBuf>>,
    scratch_dir: RefCell<Option<tempfile::TempDir>>,
    run_mode: Cell<RunMode>,
    run_reports: RefCell<Vec<RunReport>>,
}

impl Default for Linker {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Linker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Linker")
            .field("configurators", &self.configurators.borrow().len())
            .field("repository", &self.repository.borrow().len())
            .field("strict", &self.strict.get())
            .finish_non_exhaustive()
    }
}

impl Linker {
    /// Linker with the builtin configurator types, in strict mode.
    pub fn new() -> Self {
        Self::with_registry(builtins::registry())
    }

    pub fn with_registry(registry: TypeRegistry) -> Self {
        Self {
            registry,
            configurators: RefCell::default(),
            repository: RefCell::default(),
            next_sequence: Cell::new(0),
            groups: RefCell::default(),
            strict: Cell::new(true),
            dispatch_log: RefCell::default(),
            resolving: RefCell::default(),
            lookups: Cell::new(0),
            output_dir: RefCell::default(),
            scratch_dir: RefCell::default(),
            run_mode: Cell::new(RunMode::Foreground),
            run_reports: RefCell::default(),
        }
    }

    pub fn registry(&self) -> &TypeRegistry {
        &self.registry
    }

    /// Strict mode requires declared dependencies for attach and
    /// cross-namespace lookups; lenient mode skips both checks.
    pub fn set_strict(&self, strict: bool) {
        self.strict.set(strict);
    }

    pub fn strict(&self) -> bool {
        self.strict.get()
    }

    // ---- configurators ------------------------------------------------------

    pub fn attach(&self, type_name: &str, instance_name: Option<&str>) -> Result<ConfiguratorId> {
        let spec = self
            .registry
            .get(type_name)
            .ok_or_else(|| Error::UnknownType(type_name.to_owned()))?;
        let id = ConfiguratorId::new(type_name, instance_name);
        if self.find(&id).is_some() {
            return Err(Error::DuplicateIdentifier(id.to_string()));
        }
        let desc = ConfiguratorDescription::new(type_name, instance_name)
            .with_version(spec.version.clone());
        if self.strict() {
            if let Some(missing) = spec
                .static_requirements
                .iter()
                .find(|p| !self.requirement_satisfied(p))
            {
                return Err(Error::UnsatisfiedDependency {
                    requester: desc.to_string(),
                    requirement: missing.to_string(),
                });
            }
        }
        let mut cfg = Configurator::new(desc, self.unique_slug(&id));
        spec.setup(&mut cfg);
        let cfg = Rc::new(cfg);
        self.configurators.borrow_mut().push(Rc::clone(&cfg));

        for sg in self.configurators() {
            for reg in sg.registrations() {
                if reg.delegator_type == type_name {
                    scriptgen::apply_registration(sg.description(), &reg, &cfg, self)?;
                }
            }
        }
        Ok(id)
    }

    fn unique_slug(&self, id: &ConfiguratorId) -> String {
        let clean = |s: &str| -> String {
            s.chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') {
                        c
                    } else {
                        '_'
                    }
                })
                .collect()
        };
        let taken = |s: &str| self.configurators.borrow().iter().any(|c| c.slug() == s);
        let short = clean(&id.instance_name);
        if !taken(&short) {
            return short;
        }
        let long = format!("{}_{}", clean(&id.type_name), short);
        let mut candidate = long.clone();
        let mut n = 2;
        while taken(&candidate) {
            candidate = format!("{long}_{n}");
            n += 1;
        }
        candidate
    }

    fn find(&self, id: &ConfiguratorId) -> Option<Rc<Configurator>> {
        self.configurators
            .borrow()
            .iter()
            .find(|c| c.id() == *id)
            .cloned()
    }

    pub fn configurator(&self, id: &ConfiguratorId) -> Result<Rc<Configurator>> {
        self.find(id)
            .ok_or_else(|| Error::UnknownConfigurator(id.to_string()))
    }

    /// Looks up a configurator by its rendered identifier.
    pub fn get(&self, identifier: &str) -> Result<Rc<Configurator>> {
        self.configurator(&ConfiguratorId::parse(identifier)?)
    }

    /// Attached configurators in attach order.
    pub fn configurators(&self) -> Vec<Rc<Configurator>> {
        self.configurators.borrow().clone()
    }

    pub fn requirement_satisfied(&self, pattern: &RequirementPattern) -> bool {
        self.configurators
            .borrow()
            .iter()
            .any(|c| pattern.matches(c.description()))
    }

    /// Sends macro `tokens` to the configurator `id`.
    pub fn route(&self, id: &ConfiguratorId, tokens: &[String]) -> Result<()> {
        self.configurator(id)?.apply_macro(tokens, self)
    }

    // ---- framework ------------------------------------------------------------

    pub fn define_group(&self, name: &str, messages: Vec<String>) {
        self.groups.borrow_mut().insert(name.to_owned(), messages);
    }

    pub fn groups(&self) -> Vec<(String, Vec<String>)> {
        self.groups
            .borrow()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Dispatches `message` to every configurator in attach order. The first
    /// handler error aborts the run.
    pub fn run_framework(&self, message: &str) -> Result<DispatchSummary> {
        let mut summary = DispatchSummary::default();
        for cfg in self.configurators() {
            let outcome = cfg
                .handle_framework(message, self)
                .map_err(|e| Error::Dispatch {
                    message: message.to_owned(),
                    configurator: cfg.description().to_string(),
                    source: Box::new(e),
                })?;
            let record = DispatchRecord {
                message: message.to_owned(),
                configurator: cfg.description().clone(),
                outcome,
            };
            self.dispatch_log.borrow_mut().push(record.clone());
            summary.records.push(record);
        }
        Ok(summary)
    }

    /// Runs each name in turn; names of groups expand to their messages.
    pub fn run_messages<S: AsRef<str>>(&self, names: &[S]) -> Result<DispatchSummary> {
        let mut summary = DispatchSummary::default();
        for name in names {
            let name = name.as_ref();
            let group = self.groups.borrow().get(name).cloned();
            let messages = group.unwrap_or_else(|| vec![name.to_owned()]);
            for m in messages {
                summary.records.extend(self.run_framework(&m)?.records);
            }
        }
        Ok(summary)
    }

    pub fn dispatch_log(&self) -> Vec<DispatchRecord> {
        self.dispatch_log.borrow().clone()
    }

    // ---- parameter lookup -----------------------------------------------------

    /// Reads `key` from `target` on behalf of `requester`. In strict mode the
    /// requester must hold a requirement matching the target.
    pub fn lookup_parameter(
        &self,
        requester: &ConfiguratorDescription,
        target: &ConfiguratorId,
        key: &str,
    ) -> Result<String> {
        self.lookups.set(self.lookups.get() + 1);
        let target_cfg = self.configurator(target)?;
        if self.strict() && requester != target_cfg.description() {
            let requester_cfg = self.configurator(&requester.id())?;
            if !requester_cfg.requires(target_cfg.description()) {
                return Err(Error::VisibilityViolation {
                    requester: requester.to_string(),
                    target: target.to_string(),
                    key: key.to_owned(),
                });
            }
        }
        target_cfg.resolve_value(key, self)
    }

    /// Number of `lookup_parameter` calls so far.
    pub fn lookup_count(&self) -> u64 {
        self.lookups.get()
    }

    pub(crate) fn enter_resolution(
        &self,
        desc: &ConfiguratorDescription,
        key: &str,
    ) -> Result<ResolutionGuard<'_>> {
        let mut stack = self.resolving.borrow_mut();
        if let Some(pos) = stack.iter().position(|(d, k)| d == desc && k == key) {
            let mut chain: Vec<String> = stack[pos..]
                .iter()
                .map(|(d, k)| format!("{d}:{k}"))
                .collect();
            chain.push(format!("{desc}:{key}"));
            return Err(Error::CircularReference(chain));
        }
        stack.push((desc.clone(), key.to_owned()));
        Ok(ResolutionGuard(&self.resolving))
    }

    // ---- script objects -------------------------------------------------------

    /// Stores `obj`, assigning the next sequence number. Returns the stored copy.
    pub fn add_script_object(&self, mut obj: ScriptObject) -> ScriptObject {
        obj.sequence = self.next_sequence.get();
        self.next_sequence.set(obj.sequence + 1);
        self.repository.borrow_mut().push(obj.clone());
        obj
    }

    /// Objects for `target` accepted by `filter`, in sequence order.
    pub fn collect_script_objects(
        &self,
        target: &str,
        filter: impl Fn(&ScriptObject) -> bool,
    ) -> Vec<ScriptObject> {
        let mut found: Vec<ScriptObject> = self
            .repository
            .borrow()
            .iter()
            .filter(|o| o.target == target && filter(o))
            .cloned()
            .collect();
        found.sort_by_key(|o| o.sequence);
        found
    }

    pub fn script_objects(&self) -> Vec<ScriptObject> {
        self.repository.borrow().clone()
    }

    pub fn remove_script_objects(&self, pred: impl Fn(&ScriptObject) -> bool) {
        self.repository.borrow_mut().retain(|o| !pred(o));
    }

    // ---- materialisation and job running --------------------------------------

    pub fn set_output_dir(&self, dir: impl Into<PathBuf>) {
        *self.output_dir.borrow_mut() = Some(dir.into());
    }

    /// Where script objects are written: the output directory when set,
    /// otherwise a scratch directory that lives as long as the linker.
    pub fn output_dir(&self) -> Result<PathBuf> {
        if let Some(dir) = self.output_dir.borrow().clone() {
            return Ok(dir);
        }
        let mut scratch = self.scratch_dir.borrow_mut();
        if scratch.is_none() {
            *scratch = Some(tempfile::Builder::new().prefix("runjob-").tempdir()?);
        }
        Ok(scratch.as_ref().unwrap().path().to_path_buf())
    }

    /// Writes `obj` to the output directory (executable for scripts).
    pub fn materialize(&self, obj: &ScriptObject) -> Result<PathBuf> {
        let dir = self.output_dir()?;
        fs::create_dir_all(&dir)?;
        let path = dir.join(obj.file_name());
        write_script(
            &path,
            &obj.file_contents(),
            obj.kind != scriptgen::ScriptKind::Dag,
        )?;
        Ok(path)
    }

    pub fn set_run_mode(&self, mode: RunMode) {
        self.run_mode.set(mode);
    }

    pub fn run_mode(&self) -> RunMode {
        self.run_mode.get()
    }

    pub fn push_run_report(&self, report: RunReport) {
        self.run_reports.borrow_mut().push(report);
    }

    /// Drains the reports of jobs started since the last call.
    pub fn take_run_reports(&self) -> Vec<RunReport> {
        std::mem::take(&mut *self.run_reports.borrow_mut())
    }

    // ---- provenance -----------------------------------------------------------

    /// Declarative macro text reproducing the current state. With `resolve`,
    /// references are replaced by their current values.
    pub fn dump_state(&self, resolve: bool) -> Result<String> {
        dump::dump(self, resolve)
    }
}

pub(crate) struct ResolutionGuard<'a>(&'a RefCell<Vec<(ConfiguratorDescription, String)>>);

impl Drop for ResolutionGuard<'_> {
    fn drop(&mut self) {
        self.0.borrow_mut().pop();
    }
}

fn write_script(path: &Path, contents: &str, executable: bool) -> std::io::Result<()> {
    fs::write(path, contents)?;
    #[cfg(unix)]
    if executable {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o755))?;
    }
    Ok(())
}
