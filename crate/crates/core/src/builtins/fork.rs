//! Batch portal that runs composite scripts as local child processes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::configurator::{Configurator, ConfiguratorId};
use crate::error::{Error, Result};
use crate::linker::Linker;
use crate::scriptgen::{ScriptKind, RUN_JOB, SHELL};

pub const SCRIPTGEN_NAME: &str = "ScriptGenName";
pub const EXECUTABLE_LIST: &str = "ExecutableList";

/// Environment variable naming the job in every child process.
pub const JOB_ID_VAR: &str = "RUNJOB_JOB_ID";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RunMode {
    #[default]
    Foreground,
    Background,
    DryRun,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobRun {
    pub job_id: String,
    pub command: String,
    pub pid: Option<u32>,
    /// Exit code; `None` when not waited for (or killed by a signal).
    pub status: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub mode: RunMode,
    pub jobs: Vec<JobRun>,
}

impl RunReport {
    /// True unless a waited-for job exited non-zero or was killed.
    pub fn success(&self) -> bool {
        self.mode != RunMode::Foreground || self.jobs.iter().all(|j| j.status == Some(0))
    }
}

pub(super) fn setup(cfg: &mut Configurator) {
    cfg.add_schema_key(SCRIPTGEN_NAME);
    cfg.add_schema_key(EXECUTABLE_LIST);
    cfg.register_constructor(EXECUTABLE_LIST, construct_executable_list);
    cfg.on_framework(RUN_JOB, |cfg, linker| {
        let list = cfg.resolve_value(EXECUTABLE_LIST, linker)?;
        let paths: Vec<PathBuf> = list.split_whitespace().map(PathBuf::from).collect();
        let report = fork_run(&paths, linker.run_mode());
        match report {
            Ok(report) => {
                linker.push_run_report(report);
                Ok(())
            }
            Err((report, err)) => {
                linker.push_run_report(report);
                Err(err)
            }
        }
    });
}

/// Materialized paths of every composite produced by the ScriptGen named in
/// `ScriptGenName`, in sequence order, separated by spaces.
fn construct_executable_list(cfg: &Configurator, linker: &Linker) -> Result<String> {
    let name = cfg.resolve_value(SCRIPTGEN_NAME, linker)?;
    if name.is_empty() {
        return Err(Error::MissingValue {
            configurator: cfg.description().to_string(),
            key: SCRIPTGEN_NAME.to_owned(),
        });
    }
    let sg = ConfiguratorId::parse(&name)?;
    linker.configurator(&sg)?;
    let composites = linker.collect_script_objects(SHELL, |o| {
        o.kind == ScriptKind::Composite && o.producer.id() == sg
    });
    let paths = composites
        .iter()
        .map(|c| linker.materialize(c).map(|p| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    Ok(paths.join(" "))
}

fn job_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Runs each script. Children get an empty environment apart from `PATH`
/// and `RUNJOB_JOB_ID`. On spawn failures the partial report is returned
/// alongside the aggregated error.
pub fn fork_run(
    paths: &[PathBuf],
    mode: RunMode,
) -> std::result::Result<RunReport, (RunReport, Error)> {
    let mut report = RunReport {
        mode,
        jobs: Vec::new(),
    };
    let mut failures = Vec::new();
    let search_path = std::env::var_os("PATH").unwrap_or_else(|| OsString::from("/usr/bin:/bin"));

    for path in paths {
        let mut job = JobRun {
            job_id: job_id(path),
            command: path.display().to_string(),
            pid: None,
            status: None,
            stdout: String::new(),
            stderr: String::new(),
        };
        let mut cmd = Command::new(path);
        cmd.env_clear()
            .env("PATH", &search_path)
            .env(JOB_ID_VAR, &job.job_id)
            .stdin(Stdio::null());
        match mode {
            RunMode::DryRun => {}
            RunMode::Foreground => match cmd.output() {
                Ok(out) => {
                    job.status = out.status.code();
                    job.stdout = String::from_utf8_lossy(&out.stdout).into_owned();
                    job.stderr = String::from_utf8_lossy(&out.stderr).into_owned();
                }
                Err(e) => failures.push(format!("{}: {e}", job.command)),
            },
            RunMode::Background => match cmd.spawn() {
                Ok(child) => job.pid = Some(child.id()),
                Err(e) => failures.push(format!("{}: {e}", job.command)),
            },
        }
        report.jobs.push(job);
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err((report, Error::SpawnFailure(failures)))
    }
}
