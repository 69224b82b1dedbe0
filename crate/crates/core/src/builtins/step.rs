use crate::configurator::Configurator;
use crate::error::{Error, Result};
use crate::linker::Linker;
use crate::scriptgen::sh_quote;

pub const EXECUTABLE: &str = "Executable";
pub const INPUT_FILE: &str = "InputFile";
pub const OUTPUT_FILE: &str = "OutputFile";
pub const ARGS: &str = "Args";

pub(super) fn setup(cfg: &mut Configurator) {
    for key in [EXECUTABLE, INPUT_FILE, OUTPUT_FILE, ARGS] {
        cfg.add_schema_key(key);
    }
}

/// `"<Executable>" <Args> < "<InputFile>" > "<OutputFile>"`; the
/// redirections are omitted when the file is empty. `Args` is passed to the
/// shell unquoted.
pub fn step_fragment(cfg: &Configurator, linker: &Linker) -> Result<String> {
    let exe = cfg.resolve_value(EXECUTABLE, linker)?;
    if exe.is_empty() {
        return Err(Error::MissingValue {
            configurator: cfg.description().to_string(),
            key: EXECUTABLE.to_owned(),
        });
    }
    let args = cfg.resolve_value(ARGS, linker)?;
    let input = cfg.resolve_value(INPUT_FILE, linker)?;
    let output = cfg.resolve_value(OUTPUT_FILE, linker)?;

    let mut line = sh_quote(&exe);
    if !args.is_empty() {
        line.push(' ');
        line.push_str(&args);
    }
    if !input.is_empty() {
        line.push_str(" < ");
        line.push_str(&sh_quote(&input));
    }
    if !output.is_empty() {
        line.push_str(" > ");
        line.push_str(&sh_quote(&output));
    }
    Ok(line)
}
