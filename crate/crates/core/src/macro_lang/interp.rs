use std::fs;
use std::path::{Path, PathBuf};

use super::parse::{parse_program, Directive, Statement};
use super::tokenize::tokenize;
use crate::error::{Error, Result};
use crate::linker::{DispatchSummary, Linker};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub file: String,
    pub line: usize,
    /// The directive after loop-variable substitution.
    pub directive: String,
    pub dispatch: Option<DispatchSummary>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionLog {
    pub entries: Vec<LogEntry>,
}

/// Parses `text` fully, then executes it line by line, stopping at the first
/// error. A parse error leaves the linker untouched.
pub fn execute_script(linker: &Linker, text: &str) -> Result<ExecutionLog> {
    let mut interp = Interpreter::new(linker);
    interp.execute_str(text, "<script>", Path::new("."))?;
    Ok(interp.into_log())
}

pub fn parse_text(text: &str) -> Result<Vec<Statement>> {
    parse_program(&tokenize(text)?)
}

pub struct Interpreter<'l> {
    linker: &'l Linker,
    include_stack: Vec<PathBuf>,
    vars: Vec<(String, i64)>,
    log: ExecutionLog,
}

fn located(file: &str, line: usize, e: Error) -> Error {
    Error::At {
        file: file.to_owned(),
        line,
        source: Box::new(e),
    }
}

fn parse_located(text: &str, file: &str) -> Result<Vec<Statement>> {
    parse_text(text).map_err(|e| {
        let line = e.line().unwrap_or(0);
        located(file, line, e)
    })
}

impl<'l> Interpreter<'l> {
    pub fn new(linker: &'l Linker) -> Self {
        Self {
            linker,
            include_stack: Vec::new(),
            vars: Vec::new(),
            log: ExecutionLog::default(),
        }
    }

    pub fn log(&self) -> &ExecutionLog {
        &self.log
    }

    pub fn into_log(self) -> ExecutionLog {
        self.log
    }

    /// `name` labels errors; `base_dir` anchors relative `source` paths.
    pub fn execute_str(&mut self, text: &str, name: &str, base_dir: &Path) -> Result<()> {
        let program = parse_located(text, name)?;
        self.execute_statements(&program, name, base_dir)
    }

    pub fn execute_file(&mut self, path: &Path) -> Result<()> {
        let canonical = fs::canonicalize(path).map_err(|_| Error::FileNotFound(path.to_owned()))?;
        if self.include_stack.contains(&canonical) {
            let mut chain = self.include_stack.clone();
            chain.push(canonical.clone());
            return Err(Error::SourceCycle {
                path: canonical,
                chain,
            });
        }
        let text = fs::read_to_string(&canonical)?;
        let name = path.display().to_string();
        let base = canonical
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        self.include_stack.push(canonical);
        let result = self.execute_str(&text, &name, &base);
        self.include_stack.pop();
        result
    }

    pub fn execute_statements(
        &mut self,
        program: &[Statement],
        file: &str,
        base_dir: &Path,
    ) -> Result<()> {
        for stmt in program {
            self.execute_statement(stmt, file, base_dir)
                .map_err(|e| match e {
                    // inner loop statements already carry a line in this file
                    Error::At { file: ref f, .. } if f == file => e,
                    e => located(file, stmt.line, e),
                })?;
        }
        Ok(())
    }

    fn execute_statement(&mut self, stmt: &Statement, file: &str, base_dir: &Path) -> Result<()> {
        if matches!(stmt.directive, Directive::Comment | Directive::Blank) {
            return Ok(());
        }
        let directive = stmt
            .directive
            .try_map_tokens(&|t| self.substitute(t, stmt.line))?;
        let mut entry = LogEntry {
            file: file.to_owned(),
            line: stmt.line,
            directive: match &directive {
                Directive::Loop { var, from, to, .. } => format!("loop {var} {from} {to}"),
                d => d.to_string(),
            },
            dispatch: None,
        };
        match directive {
            Directive::Attach(id) => {
                let instance =
                    (id.instance_name != id.type_name).then_some(id.instance_name.as_str());
                self.linker.attach(&id.type_name, instance)?;
            }
            Directive::Cfg { target, command } => self.linker.route(&target, &command)?,
            Directive::FrameworkRun(messages) => {
                entry.dispatch = Some(self.linker.run_messages(&messages)?);
            }
            Directive::FrameworkGroup { name, messages } => {
                self.linker.define_group(&name, messages)
            }
            Directive::Source(path) => {
                self.log.entries.push(entry);
                return self.execute_file(&base_dir.join(path));
            }
            Directive::Loop {
                var,
                from,
                to,
                body,
            } => {
                let bound = |s: &str| {
                    s.parse::<i64>().map_err(|_| Error::Parse {
                        line: stmt.line,
                        token: s.to_owned(),
                        message: "loop bound must be an integer".into(),
                    })
                };
                let (from, to) = (bound(&from)?, bound(&to)?);
                self.log.entries.push(entry);
                for i in from..=to {
                    self.vars.push((var.clone(), i));
                    let result = self.execute_statements(&body, file, base_dir);
                    self.vars.pop();
                    result?;
                }
                return Ok(());
            }
            Directive::Comment | Directive::Blank => unreachable!(),
        }
        self.log.entries.push(entry);
        Ok(())
    }

    /// Replaces each `$(var)` with the innermost binding of `var`.
    fn substitute(&self, token: &str, line: usize) -> Result<String> {
        let mut out = String::new();
        let mut rest = token;
        while let Some(start) = rest.find("$(") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let end = after.find(')').ok_or_else(|| Error::Parse {
                line,
                token: token.to_owned(),
                message: "unterminated `$(`".into(),
            })?;
            let name = &after[..end];
            let value = self
                .vars
                .iter()
                .rev()
                .find(|(v, _)| v == name)
                .map(|(_, value)| *value)
                .ok_or_else(|| Error::Parse {
                    line,
                    token: token.to_owned(),
                    message: format!("undefined loop variable `{name}`"),
                })?;
            out.push_str(&value.to_string());
            rest = &after[end + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Parses `path` and every file it sources without executing anything.
/// Returns the number of statements parsed.
pub fn check_file(path: &Path) -> Result<usize> {
    fn walk(path: &Path, stack: &mut Vec<PathBuf>) -> Result<usize> {
        let canonical = fs::canonicalize(path).map_err(|_| Error::FileNotFound(path.to_owned()))?;
        if stack.contains(&canonical) {
            let mut chain = stack.clone();
            chain.push(canonical.clone());
            return Err(Error::SourceCycle {
                path: canonical,
                chain,
            });
        }
        let name = path.display().to_string();
        let program = parse_located(&fs::read_to_string(&canonical)?, &name)?;
        let base = canonical
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        stack.push(canonical);
        let mut count = 0;
        let mut todo: Vec<&Statement> = program.iter().collect();
        while let Some(stmt) = todo.pop() {
            count += 1;
            match &stmt.directive {
                Directive::Loop { body, .. } => todo.extend(body.iter()),
                Directive::Source(p) if !p.contains("$(") => {
                    count +=
                        walk(&base.join(p), stack).map_err(|e| located(&name, stmt.line, e))?;
                }
                _ => {}
            }
        }
        stack.pop();
        Ok(count)
    }
    walk(path, &mut Vec::new())
}
