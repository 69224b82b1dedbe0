//! The macro language: the user interface to the linker.
//!
//! Scripts are line oriented. `#` starts a comment, a trailing `\` continues
//! the logical line, and tokens are separated by whitespace. Directives:
//!
//! ```text
//! attach Type [named Name]
//! cfg Type [named Name] <configurator macro>
//! framework run <message|group>...
//! framework group <name> <message>...
//! source <path>
//! loop <var> <from> <to>  ...  endloop     # $(var) is substituted in the body
//! ```

mod interp;
mod parse;
mod tokenize;

pub use interp::{check_file, execute_script, parse_text, ExecutionLog, Interpreter, LogEntry};
pub use parse::{parse_directive, parse_program, Directive, Statement};
pub use tokenize::{tokenize, LogicalLine};
