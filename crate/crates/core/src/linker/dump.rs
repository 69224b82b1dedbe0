use super::Linker;
use crate::configurator::{Configurator, ValueExpression};
use crate::error::Result;
use crate::macro_lang::Directive;

pub const DUMP_HEADER: &str = "# runjob declarative state dump\n# source this file into an empty linker to rebuild the workflow\n";

pub(super) fn dump(linker: &Linker, resolve: bool) -> Result<String> {
    let cfgs = linker.configurators();
    let mut directives = Vec::new();

    for cfg in &cfgs {
        directives.push(Directive::Attach(cfg.id()));
    }
    for cfg in &cfgs {
        dump_configurator(cfg, linker, resolve, &mut directives)?;
    }
    for sg in &cfgs {
        for reg in sg.registrations() {
            directives.push(cfg_line(sg, vec!["register".into(), reg.delegator_type]));
        }
    }
    for (name, messages) in linker.groups() {
        directives.push(Directive::FrameworkGroup { name, messages });
    }

    let mut out = String::from(DUMP_HEADER);
    for d in directives {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    Ok(out)
}

fn cfg_line(cfg: &Configurator, command: Vec<String>) -> Directive {
    Directive::Cfg {
        target: cfg.id(),
        command,
    }
}

fn dump_configurator(
    cfg: &Configurator,
    linker: &Linker,
    resolve: bool,
    out: &mut Vec<Directive>,
) -> Result<()> {
    let keys = cfg.store().keys();
    for key in &keys {
        out.push(cfg_line(cfg, vec!["additem".into(), key.clone()]));
    }
    for key in &keys {
        let value = match cfg.expression(key) {
            Some(ValueExpression::Construct) if resolve => cfg.store().untriggered_read(key)?,
            Some(_) if resolve => cfg.resolve_value(key, linker)?,
            Some(expr) => expr.to_string(),
            None => cfg.store().untriggered_read(key)?,
        };
        if value.is_empty() {
            continue;
        }
        let mut command = vec!["define".to_owned(), key.clone()];
        command.extend(value.split_whitespace().map(str::to_owned));
        out.push(cfg_line(cfg, command));
    }
    for (key, target) in cfg.synonyms() {
        out.push(cfg_line(
            cfg,
            vec!["synonym".into(), key, target.to_string()],
        ));
    }
    for pattern in cfg.dynamic_requirements() {
        let mut command = vec!["addreq".to_owned()];
        command.extend(pattern.tokens());
        out.push(cfg_line(cfg, command));
    }
    for (message, commands) in cfg.stored_commands() {
        for command in commands {
            let mut line = vec!["oncall".to_owned(), message.clone(), "do".to_owned()];
            line.extend(command);
            out.push(cfg_line(cfg, line));
        }
    }
    Ok(())
}
