use std::fmt;

use super::tokenize::LogicalLine;
use crate::configurator::ConfiguratorId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Directive {
    Attach(ConfiguratorId),
    Cfg {
        target: ConfiguratorId,
        command: Vec<String>,
    },
    FrameworkRun(Vec<String>),
    FrameworkGroup {
        name: String,
        messages: Vec<String>,
    },
    Source(String),
    Loop {
        var: String,
        from: String,
        to: String,
        body: Vec<Statement>,
    },
    Comment,
    Blank,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub line: usize,
    pub directive: Directive,
}

fn parse_error(line: usize, token: &str, message: &str) -> Error {
    Error::Parse {
        line,
        token: token.to_owned(),
        message: message.to_owned(),
    }
}

/// Parses one logical line. `loop` yields a loop with an empty body; its
/// body is filled in by [`parse_program`].
pub fn parse_directive(tokens: &[String], line: usize) -> Result<Directive> {
    let Some((head, args)) = tokens.split_first() else {
        return Ok(Directive::Blank);
    };
    let last = tokens.last().map(String::as_str).unwrap_or_default();
    match head.as_str() {
        "attach" => match ConfiguratorId::split_tokens(args) {
            Some((id, [])) => Ok(Directive::Attach(id)),
            Some((_, [extra, ..])) => Err(parse_error(
                line,
                extra,
                "unexpected token after identifier",
            )),
            None => Err(parse_error(
                line,
                args.first().map_or(head, |t| t),
                "expected `Type [named Name]`",
            )),
        },
        "cfg" => match ConfiguratorId::split_tokens(args) {
            Some((_, [])) => Err(parse_error(line, last, "missing macro after identifier")),
            Some((target, command)) => Ok(Directive::Cfg {
                target,
                command: command.to_vec(),
            }),
            None => Err(parse_error(
                line,
                args.first().map_or(head, |t| t),
                "expected configurator identifier",
            )),
        },
        "framework" => match args {
            [kw, messages @ ..] if kw == "run" && !messages.is_empty() => {
                Ok(Directive::FrameworkRun(messages.to_vec()))
            }
            [kw, name, messages @ ..] if kw == "group" && !messages.is_empty() => {
                Ok(Directive::FrameworkGroup {
                    name: name.clone(),
                    messages: messages.to_vec(),
                })
            }
            _ => Err(parse_error(
                line,
                args.first().map_or(head, |t| t),
                "expected `framework run <msg>..` or `framework group <name> <msg>..`",
            )),
        },
        "source" => match args {
            [path] => Ok(Directive::Source(path.clone())),
            _ => Err(parse_error(line, last, "expected `source <path>`")),
        },
        "loop" => match args {
            [var, from, to] => {
                for bound in [from, to] {
                    if !bound.contains("$(") && bound.parse::<i64>().is_err() {
                        return Err(parse_error(line, bound, "loop bound must be an integer"));
                    }
                }
                Ok(Directive::Loop {
                    var: var.clone(),
                    from: from.clone(),
                    to: to.clone(),
                    body: Vec::new(),
                })
            }
            _ => Err(parse_error(line, last, "expected `loop <var> <from> <to>`")),
        },
        "endloop" => Err(parse_error(line, head, "`endloop` without `loop`")),
        other => Err(parse_error(line, other, "unknown directive")),
    }
}

/// Parses a whole script, nesting loop bodies.
pub fn parse_program(lines: &[LogicalLine]) -> Result<Vec<Statement>> {
    // stack of open loops: (statement, body so far)
    let mut stack: Vec<(Statement, Vec<Statement>)> = Vec::new();
    let mut top: Vec<Statement> = Vec::new();

    for l in lines {
        let is_end = l.tokens.first().map(String::as_str) == Some("endloop");
        if is_end {
            if l.tokens.len() > 1 {
                return Err(parse_error(
                    l.line,
                    &l.tokens[1],
                    "unexpected token after `endloop`",
                ));
            }
            let (mut stmt, body) = stack
                .pop()
                .ok_or_else(|| parse_error(l.line, "endloop", "`endloop` without `loop`"))?;
            if let Directive::Loop { body: b, .. } = &mut stmt.directive {
                *b = body;
            }
            match stack.last_mut() {
                Some((_, body)) => body.push(stmt),
                None => top.push(stmt),
            }
            continue;
        }
        let directive = if l.tokens.is_empty() && l.comment {
            Directive::Comment
        } else {
            parse_directive(&l.tokens, l.line)?
        };
        let stmt = Statement {
            line: l.line,
            directive,
        };
        if matches!(stmt.directive, Directive::Loop { .. }) {
            stack.push((stmt, Vec::new()));
        } else {
            match stack.last_mut() {
                Some((_, body)) => body.push(stmt),
                None => top.push(stmt),
            }
        }
    }
    if let Some((open, _)) = stack.pop() {
        return Err(parse_error(open.line, "loop", "`loop` without `endloop`"));
    }
    Ok(top)
}

impl Directive {
    /// Applies `f` to every token except loop variable names and loop bodies.
    pub fn try_map_tokens(&self, f: &impl Fn(&str) -> Result<String>) -> Result<Directive> {
        let id = |id: &ConfiguratorId| -> Result<ConfiguratorId> {
            Ok(ConfiguratorId {
                type_name: f(&id.type_name)?,
                instance_name: f(&id.instance_name)?,
            })
        };
        let all = |v: &[String]| v.iter().map(|t| f(t)).collect::<Result<Vec<_>>>();
        Ok(match self {
            Directive::Attach(i) => Directive::Attach(id(i)?),
            Directive::Cfg { target, command } => Directive::Cfg {
                target: id(target)?,
                command: all(command)?,
            },
            Directive::FrameworkRun(m) => Directive::FrameworkRun(all(m)?),
            Directive::FrameworkGroup { name, messages } => Directive::FrameworkGroup {
                name: f(name)?,
                messages: all(messages)?,
            },
            Directive::Source(p) => Directive::Source(f(p)?),
            Directive::Loop {
                var,
                from,
                to,
                body,
            } => Directive::Loop {
                var: var.clone(),
                from: f(from)?,
                to: f(to)?,
                body: body.clone(),
            },
            Directive::Comment | Directive::Blank => self.clone(),
        })
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        match self {
            Directive::Attach(id) => write!(f, "{pad}attach {id}"),
            Directive::Cfg { target, command } => {
                write!(f, "{pad}cfg {target} {}", command.join(" "))
            }
            Directive::FrameworkRun(m) => write!(f, "{pad}framework run {}", m.join(" ")),
            Directive::FrameworkGroup { name, messages } => {
                write!(f, "{pad}framework group {name} {}", messages.join(" "))
            }
            Directive::Source(p) => write!(f, "{pad}source {p}"),
            Directive::Loop {
                var,
                from,
                to,
                body,
            } => {
                writeln!(f, "{pad}loop {var} {from} {to}")?;
                for stmt in body {
                    stmt.directive.fmt_indented(f, indent + 1)?;
                    writeln!(f)?;
                }
                write!(f, "{pad}endloop")
            }
            Directive::Comment => write!(f, "{pad}#"),
            Directive::Blank => Ok(()),
        }
    }
}

/// Canonical macro text for the directive.
impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}
