//! Metadata-driven workflow planning.
//!
//! Processing steps are described by [`Configurator`]s attached to a
//! [`Linker`]. A line-oriented macro language drives the linker; framework
//! messages (`Reset`, `MakeJob`, `MakeScript`, `RunJob`, ...) make the
//! configurators generate script fragments, which ScriptGens assemble into
//! composite shell scripts or DAG files. The linker state can be dumped back
//! to macro text at any time as a provenance record.
//!
//! ```
//! use runjob::{macro_lang, Linker};
//!
//! let linker = Linker::new();
//! macro_lang::execute_script(&linker, "
//!     attach HelloWorldScriptGen
//!     cfg HelloWorldScriptGen define English Hello World
//!     attach HelloWorld named English
//!     cfg HelloWorldScriptGen register HelloWorld
//!     cfg HelloWorld named English define HelloMessage ::HelloWorldScriptGen:English
//! ").unwrap();
//! let cfg = linker.get("HelloWorld named English").unwrap();
//! assert_eq!(cfg.resolve_value("HelloMessage", &linker).unwrap(), "Hello World");
//! ```

pub mod builtins;
pub mod configurator;
pub mod error;
pub mod linker;
pub mod macro_lang;
pub mod scriptgen;
pub mod trigger_store;

pub use configurator::{Configurator, ConfiguratorDescription, ConfiguratorId, FrameworkOutcome};
pub use error::{Error, Result};
pub use linker::Linker;
pub use scriptgen::ScriptObject;
pub use trigger_store::TriggerStore;
