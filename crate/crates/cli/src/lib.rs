//! Command-line front end: run macro scripts in batch mode or interactively.
//!
//! ```text
//! runjob run helloworld.mac --out build
//! runjob run chain.mac --target dag --out build
//! runjob run helloworld.mac --dump state.mac --resolve
//! runjob repl
//! ```

mod repl;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use runjob::builtins::{RunMode, RunReport, DAG_GEN};
use runjob::macro_lang::{check_file, Interpreter};
use runjob::scriptgen::{self, ScriptKind, DAG};
use runjob::Linker;

pub use repl::Repl;

/// Messages dispatched when a script never runs the framework itself.
pub const DEFAULT_FRAMEWORK: [&str; 4] = ["Reset", "MakeJob", "MakeScript", "RunJob"];

#[derive(Debug, Parser)]
#[command(
    name = "runjob",
    version,
    about = "Configure, generate and run job workflows from macro scripts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a macro script and materialize the generated scripts.
    Run(RunArgs),
    /// Read directives interactively.
    Repl(SessionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Shell,
    Dag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Foreground,
    Background,
    DryRun,
}

impl From<Mode> for RunMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Foreground => RunMode::Foreground,
            Mode::Background => RunMode::Background,
            Mode::DryRun => RunMode::DryRun,
        }
    }
}

/// Options shared by batch and interactive sessions.
#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// Directory receiving generated scripts.
    #[arg(long, default_value = "build")]
    pub out: PathBuf,

    /// Allow reads from configurators without a declared requirement.
    #[arg(long, env = "RUNJOB_LENIENT_DEPS", value_parser = parse_flag, num_args = 0, default_missing_value = "1", default_value = "0")]
    pub lenient_deps: bool,

    /// How Fork runs the generated composites.
    #[arg(long, value_enum, default_value_t = Mode::Foreground)]
    pub run_mode: Mode,
}

fn parse_flag(s: &str) -> Result<bool, String> {
    match s {
        "1" | "true" | "yes" | "on" => Ok(true),
        "" | "0" | "false" | "no" | "off" => Ok(false),
        other => Err(format!("expected 0 or 1, got `{other}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Macro script to execute.
    pub script: PathBuf,

    #[command(flatten)]
    pub session: SessionArgs,

    #[arg(long, value_enum, default_value_t = Target::Shell)]
    pub target: Target,

    /// Write the declarative state dump here (`-` for stdout).
    #[arg(long)]
    pub dump: Option<PathBuf>,

    /// Dump resolved literals instead of reference expressions.
    #[arg(long, requires = "dump")]
    pub resolve: bool,

    /// Parse the script and everything it sources; execute nothing.
    #[arg(long)]
    pub check: bool,

    /// Framework messages (or group names) to run after the script,
    /// comma separated. Defaults to Reset,MakeJob,MakeScript,RunJob when the
    /// script runs no framework call itself.
    #[arg(long, value_delimiter = ',', conflicts_with = "no_framework")]
    pub framework: Vec<String>,

    /// Never run framework messages beyond those in the script.
    #[arg(long)]
    pub no_framework: bool,
}

/// Builds a linker configured from the session options.
pub fn session_linker(args: &SessionArgs) -> io::Result<Linker> {
    let linker = Linker::new();
    linker.set_strict(!args.lenient_deps);
    linker.set_run_mode(args.run_mode.into());
    fs::create_dir_all(&args.out)?;
    linker.set_output_dir(std::path::absolute(&args.out)?);
    Ok(linker)
}

/// Runs the parsed command line. Returns the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Run(args) => run(&args, out, err),
        Command::Repl(args) => {
            session_linker(&args)
                .map_err(runjob::Error::from)
                .and_then(|linker| {
                    let stdin = io::stdin();
                    let prompt = io::IsTerminal::is_terminal(&stdin);
                    Repl::new(&linker, prompt).run(stdin.lock(), out, err)?;
                    Ok(0)
                })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "runjob: {e}");
            1
        }
    }
}

fn run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> runjob::Result<i32> {
    if args.check {
        let n = check_file(&args.script)?;
        writeln!(out, "{}: {n} statements ok", args.script.display())?;
        return Ok(0);
    }

    let linker = session_linker(&args.session)?;
    let mut interp = Interpreter::new(&linker);
    interp.execute_file(&args.script)?;
    let ran_framework = interp.log().entries.iter().any(|e| e.dispatch.is_some());
    print_reports(&linker.take_run_reports(), out, err)?;

    if let Some(path) = &args.dump {
        let text = linker.dump_state(args.resolve)?;
        if path == Path::new("-") {
            out.write_all(text.as_bytes())?;
        } else {
            fs::write(path, text)?;
        }
    }

    let messages: Vec<String> = if !args.framework.is_empty() {
        args.framework.clone()
    } else if ran_framework || args.no_framework {
        Vec::new()
    } else {
        DEFAULT_FRAMEWORK.iter().map(|m| m.to_string()).collect()
    };
    let run_result = linker.run_messages(&messages);
    let reports = linker.take_run_reports();
    print_reports(&reports, out, err)?;
    run_result?;

    for path in materialize(&linker, args.target)? {
        writeln!(err, "wrote {}", path.display())?;
    }
    Ok(if reports.iter().all(RunReport::success) {
        0
    } else {
        1
    })
}

/// Writes the composites (shell) or the fragments plus `workflow.dag` (dag)
/// into the output directory.
pub fn materialize(linker: &Linker, target: Target) -> runjob::Result<Vec<PathBuf>> {
    let objects = match target {
        Target::Shell => {
            linker.collect_script_objects(scriptgen::SHELL, |o| o.kind == ScriptKind::Composite)
        }
        Target::Dag => {
            if linker.collect_script_objects(DAG, |_| true).is_empty() {
                let dag_gen = match linker
                    .configurators()
                    .into_iter()
                    .find(|c| c.description().type_name == DAG_GEN)
                {
                    Some(cfg) => cfg,
                    None => linker.configurator(&linker.attach(DAG_GEN, None)?)?,
                };
                scriptgen::make_dag(dag_gen.description(), linker)?;
            }
            let mut objs =
                linker.collect_script_objects(scriptgen::SHELL, |o| o.kind == ScriptKind::Fragment);
            objs.extend(linker.collect_script_objects(DAG, |o| o.kind == ScriptKind::Dag));
            objs
        }
    };
    objects.iter().map(|o| linker.materialize(o)).collect()
}

/// Echoes what Fork did: job stdout for foreground runs, pids for
/// background runs and command lines for dry runs.
pub fn print_reports(
    reports: &[RunReport],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<()> {
    for report in reports {
        for job in &report.jobs {
            match report.mode {
                RunMode::Foreground => {
                    out.write_all(job.stdout.as_bytes())?;
                    err.write_all(job.stderr.as_bytes())?;
                    match job.status {
                        Some(0) => {}
                        Some(code) => {
                            writeln!(err, "runjob: job {} exited with status {code}", job.job_id)?
                        }
                        None => writeln!(err, "runjob: job {} was killed", job.job_id)?,
                    }
                }
                RunMode::Background => match job.pid {
                    Some(pid) => writeln!(out, "started {} (pid {pid})", job.job_id)?,
                    None => writeln!(err, "runjob: job {} did not start", job.job_id)?,
                },
                RunMode::DryRun => writeln!(out, "would run {}", job.command)?,
            }
        }
    }
    out.flush()
}
