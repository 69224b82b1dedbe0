use crate::configurator::Configurator;
use crate::error::Result;
use crate::linker::Linker;
use crate::scriptgen::sh_quote;

pub const HELLO_MESSAGE: &str = "HelloMessage";

/// `echo "<message>"` with the resolved `HelloMessage`.
pub fn hello_fragment(cfg: &Configurator, linker: &Linker) -> Result<String> {
    let message = cfg.resolve_value(HELLO_MESSAGE, linker)?;
    Ok(format!("echo {}", sh_quote(&message)))
}
