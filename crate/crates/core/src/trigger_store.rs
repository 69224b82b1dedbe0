//! Instrumented key/value store.
//!
//! Every configurator keeps its metadata in a [`TriggerStore`]. Handlers can
//! be attached to reads and writes, either of any key (global) or of one key
//! (indexed). Handlers receive a back reference to the store and must use the
//! untriggered accessors when they mutate it; triggered accesses from inside a
//! handler are allowed but nesting is capped by a recursion limit.
//!
//! The store is generic over a context type `C` that is handed to every
//! handler. The linker passes itself so that handlers can resolve references
//! into other namespaces.

use std::cell::{Cell, RefCell};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, Result};

pub const DEFAULT_RECURSION_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TriggerKind {
    GlobalRead,
    GlobalWrite,
    IndexedRead(String),
    IndexedWrite(String),
}

impl TriggerKind {
    fn is_read(&self) -> bool {
        matches!(self, TriggerKind::GlobalRead | TriggerKind::IndexedRead(_))
    }

    fn bound_key(&self) -> Option<&str> {
        match self {
            TriggerKind::IndexedRead(k) | TriggerKind::IndexedWrite(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HandlerId(u64);

/// Arguments of one handler activation: the back reference, the key that was
/// accessed, then the extras fixed at registration.
pub struct TriggerCall<'a, C> {
    pub store: &'a TriggerStore<C>,
    pub key: &'a str,
    pub extras: &'a [String],
    pub ctx: &'a C,
}

type Callback<C> = dyn Fn(&TriggerCall<'_, C>) -> Result<()> + Send + Sync;

pub struct TriggerHandler<C> {
    callback: Arc<Callback<C>>,
    extras: Arc<[String]>,
}

impl<C> Clone for TriggerHandler<C> {
    fn clone(&self) -> Self {
        Self {
            callback: Arc::clone(&self.callback),
            extras: Arc::clone(&self.extras),
        }
    }
}

impl<C> TriggerHandler<C> {
    pub fn new<F>(callback: F) -> Self
    where
        F: Fn(&TriggerCall<'_, C>) -> Result<()> + Send + Sync + 'static,
    {
        Self::with_extras(callback, Vec::new())
    }

    pub fn with_extras<F>(callback: F, extras: Vec<String>) -> Self
    where
        F: Fn(&TriggerCall<'_, C>) -> Result<()> + Send + Sync + 'static,
    {
        Self {
            callback: Arc::new(callback),
            extras: extras.into(),
        }
    }

    pub fn extras(&self) -> &[String] {
        &self.extras
    }
}

/// Storage behind a [`TriggerStore`]. Implementations must keep keys in
/// insertion order; overwriting a key keeps its position and deleting it
/// removes it from the order.
pub trait Backend: Send {
    fn get(&self, key: &str) -> Option<String>;
    fn set(&mut self, key: &str, value: &str);
    fn delete(&mut self, key: &str) -> Option<String>;
    fn entries(&self) -> Vec<(String, String)>;
}

#[derive(Debug, Default, Clone)]
pub struct MapBackend {
    map: IndexMap<String, String>,
}

impl Backend for MapBackend {
    fn get(&self, key: &str) -> Option<String> {
        self.map.get(key).cloned()
    }

    fn set(&mut self, key: &str, value: &str) {
        match self.map.get_mut(key) {
            Some(v) => *v = value.to_owned(),
            None => {
                self.map.insert(key.to_owned(), value.to_owned());
            }
        }
    }

    fn delete(&mut self, key: &str) -> Option<String> {
        self.map.shift_remove(key)
    }

    fn entries(&self) -> Vec<(String, String)> {
        self.map
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

pub struct TriggerStore<C> {
    backend: RefCell<Box<dyn Backend>>,
    handlers: RefCell<Vec<(HandlerId, TriggerKind, TriggerHandler<C>)>>,
    next_id: Cell<u64>,
    depth: Cell<usize>,
    recursion_limit: Cell<usize>,
}

impl<C> Default for TriggerStore<C> {
    fn default() -> Self {
        Self::new()
    }
}

impl<C> fmt::Debug for TriggerStore<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TriggerStore")
            .field("entries", &self.entries())
            .field("handlers", &self.handlers.borrow().len())
            .finish()
    }
}

impl<C> TriggerStore<C> {
    pub fn new() -> Self {
        Self::with_backend(Box::<MapBackend>::default())
    }

    pub fn with_backend(backend: Box<dyn Backend>) -> Self {
        Self {
            backend: RefCell::new(backend),
            handlers: RefCell::new(Vec::new()),
            next_id: Cell::new(0),
            depth: Cell::new(0),
            recursion_limit: Cell::new(DEFAULT_RECURSION_LIMIT),
        }
    }

    pub fn set_recursion_limit(&self, limit: usize) {
        self.recursion_limit.set(limit);
    }

    /// Current nesting of triggered accesses; 0 outside any access.
    pub fn depth(&self) -> usize {
        self.depth.get()
    }

    /// Stores `value` and then fires global write handlers followed by the
    /// indexed write handlers for `key`.
    pub fn write(&self, key: &str, value: &str, ctx: &C) -> Result<()> {
        let _guard = self.enter(key)?;
        self.backend.borrow_mut().set(key, value);
        self.fire(false, key, ctx)
    }

    /// Fires global read handlers then indexed read handlers for `key`, then
    /// returns the stored value. Handlers run even when the key is absent so
    /// that they can construct it.
    pub fn read(&self, key: &str, ctx: &C) -> Result<String> {
        let _guard = self.enter(key)?;
        self.fire(true, key, ctx)?;
        self.untriggered_read(key)
    }

    pub fn untriggered_write(&self, key: &str, value: &str) {
        self.backend.borrow_mut().set(key, value);
    }

    pub fn untriggered_read(&self, key: &str) -> Result<String> {
        self.backend
            .borrow()
            .get(key)
            .ok_or_else(|| Error::KeyNotFound(key.to_owned()))
    }

    /// Removes `key` without firing handlers.
    pub fn remove(&self, key: &str) -> Option<String> {
        self.backend.borrow_mut().delete(key)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.backend.borrow().get(key).is_some()
    }

    pub fn keys(&self) -> Vec<String> {
        self.entries().into_iter().map(|(k, _)| k).collect()
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        self.backend.borrow().entries()
    }

    pub fn len(&self) -> usize {
        self.backend.borrow().entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn register_trigger(&self, kind: TriggerKind, handler: TriggerHandler<C>) -> HandlerId {
        let id = HandlerId(self.next_id.get());
        self.next_id.set(id.0 + 1);
        self.handlers.borrow_mut().push((id, kind, handler));
        id
    }

    /// Returns false when `id` was not registered (or already removed).
    pub fn deregister_trigger(&self, id: HandlerId) -> bool {
        let mut handlers = self.handlers.borrow_mut();
        let before = handlers.len();
        handlers.retain(|(hid, _, _)| *hid != id);
        handlers.len() != before
    }

    pub fn handler_count(&self) -> usize {
        self.handlers.borrow().len()
    }

    /// Replaces the storage implementation. The new backend is probed first;
    /// all entries are then copied over in order. Handlers are untouched.
    pub fn swap_backend(&self, mut new_backend: Box<dyn Backend>) -> Result<()> {
        check_conformance(new_backend.as_mut())?;
        let mut backend = self.backend.borrow_mut();
        for (k, v) in backend.entries() {
            new_backend.set(&k, &v);
        }
        let copied = new_backend.entries();
        if copied != backend.entries() {
            return Err(Error::BackendContractViolation(
                "entries differ after copy".into(),
            ));
        }
        *backend = new_backend;
        Ok(())
    }

    fn enter(&self, key: &str) -> Result<DepthGuard<'_>> {
        let depth = self.depth.get() + 1;
        let limit = self.recursion_limit.get();
        if depth > limit {
            return Err(Error::RecursionLimitExceeded {
                key: key.to_owned(),
                limit,
            });
        }
        self.depth.set(depth);
        Ok(DepthGuard(&self.depth))
    }

    fn fire(&self, read: bool, key: &str, ctx: &C) -> Result<()> {
        // snapshot so handlers may (de)register while running
        let active: Vec<TriggerHandler<C>> = {
            let handlers = self.handlers.borrow();
            let matching = |global: bool| {
                handlers
                    .iter()
                    .filter(move |(_, kind, _)| {
                        kind.is_read() == read
                            && match kind.bound_key() {
                                None => global,
                                Some(k) => !global && k == key,
                            }
                    })
                    .map(|(_, _, h)| h.clone())
            };
            matching(true).chain(matching(false)).collect()
        };
        for handler in active {
            let call = TriggerCall {
                store: self,
                key,
                extras: &handler.extras,
                ctx,
            };
            (handler.callback)(&call)?;
        }
        Ok(())
    }
}

struct DepthGuard<'a>(&'a Cell<usize>);

impl Drop for DepthGuard<'_> {
    fn drop(&mut self) {
        self.0.set(self.0.get() - 1);
    }
}

const PROBE_A: &str = "\u{0}runjob-probe-a";
const PROBE_B: &str = "\u{0}runjob-probe-b";

fn check_conformance(backend: &mut dyn Backend) -> Result<()> {
    let fail = |what: &str| Err(Error::BackendContractViolation(what.to_owned()));
    backend.set(PROBE_A, "1");
    backend.set(PROBE_B, "2");
    backend.set(PROBE_A, "3");
    if backend.get(PROBE_A).as_deref() != Some("3") || backend.get(PROBE_B).as_deref() != Some("2")
    {
        return fail("get does not return the last set value");
    }
    let order: Vec<String> = backend
        .entries()
        .into_iter()
        .map(|(k, _)| k)
        .filter(|k| k == PROBE_A || k == PROBE_B)
        .collect();
    if order != [PROBE_A, PROBE_B] {
        return fail("iteration does not follow insertion order");
    }
    if backend.delete(PROBE_A).is_none() || backend.delete(PROBE_B).is_none() {
        return fail("delete did not report the removed value");
    }
    if backend.get(PROBE_A).is_some() || backend.get(PROBE_B).is_some() {
        return fail("deleted keys are still readable");
    }
    Ok(())
}
