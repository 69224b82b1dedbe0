use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;

use crate::configurator::{Configurator, RESET};
use crate::error::{Error, Result};
use crate::linker::Linker;

pub const SOURCE_FILE: &str = "SourceFile";

pub(super) fn setup(cfg: &mut Configurator) {
    cfg.add_schema_key(SOURCE_FILE);
    cfg.on_framework(RESET, |cfg, linker| {
        linker.remove_script_objects(|o| o.producer == *cfg.description());
        fileinput_load(cfg, linker).map(drop)
    });
}

/// Loads `key=value` lines from the file named by `SourceFile` into the
/// store, bypassing triggers. Blank lines and `#` comments are skipped.
pub fn fileinput_load(cfg: &Configurator, linker: &Linker) -> Result<usize> {
    let path = cfg.resolve_value(SOURCE_FILE, linker)?;
    if path.is_empty() {
        return Err(Error::MissingValue {
            configurator: cfg.description().to_string(),
            key: SOURCE_FILE.to_owned(),
        });
    }
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::FileNotFound(path.clone()),
        _ => Error::Io(e),
    })?;

    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                pairs.push((k.trim().to_owned(), v.trim().to_owned()))
            }
            _ => {
                return Err(Error::MalformedLine {
                    path,
                    line: idx + 1,
                })
            }
        }
    }
    for (k, v) in &pairs {
        cfg.store().untriggered_write(k, v);
    }
    Ok(pairs.len())
}
