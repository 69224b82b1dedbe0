use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use runjob::macro_lang::{tokenize, Interpreter};
use runjob::{Error, Linker};

use crate::print_reports;

const PROMPT: &str = "runjob> ";
const MORE: &str = "...> ";

/// Line-oriented session over a linker. Input is buffered until it forms
/// complete statements: a trailing `\` or an open `loop` asks for more.
pub struct Repl<'l> {
    linker: &'l Linker,
    interp: Interpreter<'l>,
    prompt: bool,
    pending: String,
    first_line: usize,
    lineno: usize,
}

enum Input {
    Complete,
    Incomplete,
}

impl<'l> Repl<'l> {
    pub fn new(linker: &'l Linker, prompt: bool) -> Self {
        Self {
            linker,
            interp: Interpreter::new(linker),
            prompt,
            pending: String::new(),
            first_line: 1,
            lineno: 0,
        }
    }

    /// Reads until EOF or `quit`. Errors are reported on `err` and the
    /// session carries on.
    pub fn run(
        &mut self,
        input: impl BufRead,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> io::Result<()> {
        self.show_prompt(out)?;
        for line in input.lines() {
            let line = line?;
            self.lineno += 1;
            if !self.feed(&line, out, err)? {
                return Ok(());
            }
            self.show_prompt(out)?;
        }
        if !self.pending.trim().is_empty() {
            self.flush(out, err)?;
        }
        Ok(())
    }

    /// Handles one physical line; false once the session should end.
    pub fn feed(
        &mut self,
        line: &str,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> io::Result<bool> {
        if self.pending.is_empty() {
            self.first_line = self.lineno.max(1);
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["quit"] | ["exit"] => return Ok(false),
                ["dump"] => return self.dump(false, out, err).map(|_| true),
                ["dump", "--resolve"] => return self.dump(true, out, err).map(|_| true),
                _ => {}
            }
        }
        self.pending.push_str(line);
        self.pending.push('\n');
        if let Input::Complete = self.classify() {
            self.flush(out, err)?;
        }
        Ok(true)
    }

    fn classify(&self) -> Input {
        match tokenize(&self.pending) {
            Err(Error::DanglingContinuation { .. }) => Input::Incomplete,
            Err(_) => Input::Complete,
            Ok(lines) => {
                let mut depth = 0i64;
                for l in &lines {
                    match l.tokens.first().map(String::as_str) {
                        Some("loop") => depth += 1,
                        Some("endloop") => depth -= 1,
                        _ => {}
                    }
                }
                if depth > 0 {
                    Input::Incomplete
                } else {
                    Input::Complete
                }
            }
        }
    }

    fn flush(&mut self, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<()> {
        let text = std::mem::take(&mut self.pending);
        let name = format!("<stdin:{}>", self.first_line);
        let base = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
        let result = self.interp.execute_str(&text, &name, &base);
        print_reports(&self.linker.take_run_reports(), out, err)?;
        if let Err(e) = result {
            writeln!(err, "error: {e}")?;
        }
        Ok(())
    }

    fn dump(&self, resolve: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<()> {
        match self.linker.dump_state(resolve) {
            Ok(text) => out.write_all(text.as_bytes()),
            Err(e) => writeln!(err, "error: {e}"),
        }
    }

    fn show_prompt(&self, out: &mut dyn Write) -> io::Result<()> {
        if self.prompt {
            out.write_all(
                if self.pending.is_empty() {
                    PROMPT
                } else {
                    MORE
                }
                .as_bytes(),
            )?;
            out.flush()?;
        }
        Ok(())
    }
}
