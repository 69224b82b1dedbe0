//! Builtin configurator types.
//!
//! | type                  | role                                                  |
//! |-----------------------|-------------------------------------------------------|
//! | `HelloWorld`          | echoes its `HelloMessage`                             |
//! | `HelloWorldScriptGen` | shell ScriptGen that also serves metadata             |
//! | `ShellScriptGen`      | shell ScriptGen for `Step` chains                     |
//! | `DagGen`              | wraps all fragments into a DAG on `MakeScript`        |
//! | `Fork`                | runs the composites of a ScriptGen on `RunJob`        |
//! | `FileInput`           | loads `key=value` metadata from a file on `Reset`     |
//! | `Step`                | one application step: executable, input, output, args |

mod file_input;
mod fork;
mod hello;
mod step;

use std::rc::Rc;

use crate::configurator::{Configurator, MacroHandler, TypeRegistry, TypeSpec};
use crate::error::{Error, Result};
use crate::linker::Linker;
use crate::scriptgen::{self, ScriptGen, MAKE_SCRIPT};

pub use file_input::{fileinput_load, SOURCE_FILE};
pub use fork::{fork_run, JobRun, RunMode, RunReport, EXECUTABLE_LIST, SCRIPTGEN_NAME};
pub use hello::{hello_fragment, HELLO_MESSAGE};
pub use step::{step_fragment, ARGS, EXECUTABLE, INPUT_FILE, OUTPUT_FILE};

pub const HELLO_WORLD: &str = "HelloWorld";
pub const HELLO_WORLD_SCRIPTGEN: &str = "HelloWorldScriptGen";
pub const SHELL_SCRIPTGEN: &str = "ShellScriptGen";
pub const DAG_GEN: &str = "DagGen";
pub const FORK: &str = "Fork";
pub const FILE_INPUT: &str = "FileInput";
pub const STEP: &str = "Step";

/// Registry holding every builtin type.
pub fn registry() -> TypeRegistry {
    let mut reg = TypeRegistry::new();
    reg.register(
        HELLO_WORLD,
        TypeSpec::new(|cfg| cfg.add_schema_key(HELLO_MESSAGE)),
    )
    .register(HELLO_WORLD_SCRIPTGEN, TypeSpec::new(shell_scriptgen))
    .register(SHELL_SCRIPTGEN, TypeSpec::new(shell_scriptgen))
    .register(DAG_GEN, TypeSpec::new(dag_gen))
    .register(FORK, TypeSpec::new(fork::setup))
    .register(FILE_INPUT, TypeSpec::new(file_input::setup))
    .register(STEP, TypeSpec::new(step::setup));
    reg
}

/// Generates shell fragments for `HelloWorld` and `Step` delegators.
#[derive(Debug, Default, Clone, Copy)]
pub struct ShellScriptGen;

impl ScriptGen for ShellScriptGen {
    fn supports(&self, delegator_type: &str) -> bool {
        matches!(delegator_type, HELLO_WORLD | STEP)
    }

    fn fragment(&self, delegator: &Configurator, linker: &Linker) -> Result<String> {
        match delegator.description().type_name.as_str() {
            HELLO_WORLD => hello_fragment(delegator, linker),
            STEP => step_fragment(delegator, linker),
            other => Err(Error::UnsupportedDelegator {
                scriptgen: SHELL_SCRIPTGEN.to_owned(),
                delegator: other.to_owned(),
            }),
        }
    }
}

/// Installs the ScriptGen interface: `register <Type>` and a `MakeScript`
/// handler producing the composite.
pub fn install_scriptgen(cfg: &mut Configurator, sg: Rc<dyn ScriptGen>) {
    cfg.set_scriptgen(sg);
    cfg.push_macro_handler(MacroHandler::new(
        "scriptgen",
        &["register"],
        |cfg, tokens, linker| match tokens {
            [_, delegator_type] => scriptgen::register_delegator(cfg, delegator_type, linker),
            _ => Err(Error::MacroParse {
                macro_text: tokens.join(" "),
                reason: "usage: register <ConfiguratorType>".into(),
            }),
        },
    ));
    cfg.on_framework(MAKE_SCRIPT, |cfg, linker| {
        scriptgen::make_composite(cfg, linker).map(drop)
    });
}

fn shell_scriptgen(cfg: &mut Configurator) {
    install_scriptgen(cfg, Rc::new(ShellScriptGen));
}

fn dag_gen(cfg: &mut Configurator) {
    cfg.on_framework(MAKE_SCRIPT, |cfg, linker| {
        scriptgen::make_dag(cfg.description(), linker).map(drop)
    });
}
