use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use runjob::macro_lang::Interpreter;
use runjob::Linker;
use runjob_cli::Repl;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn runjob(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_runjob"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUNJOB_LENIENT_DEPS")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn repl_session(input: &str) -> (Linker, String, String) {
    let linker = Linker::new();
    let mut out = Vec::new();
    let mut err = Vec::new();
    Repl::new(&linker, false)
        .run(Cursor::new(input), &mut out, &mut err)
        .unwrap();
    (linker, text(&out), text(&err))
}

#[test]
fn run_writes_composite_and_prints_greetings() {
    let dir = tempfile::tempdir().unwrap();
    let hello = fixture("helloworld.mac");
    let out = runjob(
        &["run", hello.to_str().unwrap(), "--out", "build"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(
        text(&out.stdout),
        "Hello World\nSalut le Monde\nHallo Welt\n"
    );
    let composite = dir.path().join("build/composite_HelloWorldScriptGen.sh");
    let run = Command::new(&composite).output().unwrap();
    assert_eq!(
        text(&run.stdout),
        "Hello World\nSalut le Monde\nHallo Welt\n"
    );
}

#[test]
fn check_executes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let hello = fixture("helloworld.mac");
    let out = runjob(
        &["run", hello.to_str().unwrap(), "--check", "--out", "build"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("statements ok"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn dag_target_writes_workflow_and_fragments() {
    let dir = tempfile::tempdir().unwrap();
    let chain = fixture("chain.mac");
    let out = runjob(
        &[
            "run",
            chain.to_str().unwrap(),
            "--target",
            "dag",
            "--out",
            "build",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let dag = fs::read_to_string(dir.path().join("build/workflow.dag")).unwrap();
    let parents: Vec<&str> = dag.lines().filter(|l| l.starts_with("PARENT")).collect();
    assert_eq!(
        parents,
        ["PARENT job_A CHILD job_B", "PARENT job_B CHILD job_C"]
    );
    for job in ["job_A.sh", "job_B.sh", "job_C.sh"] {
        assert!(dir.path().join("build").join(job).exists(), "{job}");
    }
}

#[test]
fn macro_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let dangling = fixture("dangling.mac");
    let out = runjob(&["run", dangling.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("dangling.mac:3"),
        "{}",
        text(&out.stderr)
    );

    let script = dir.path().join("bad.mac");
    fs::write(&script, "attach Step\n\ncfg Step frobnicate\n").unwrap();
    let out = runjob(&["run", "bad.mac"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("bad.mac:3"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run"][..],
        &["run", "x.mac", "--target", "pdf"],
        &["frobnicate"],
        &["run", "x.mac", "--resolve"],
    ] {
        assert_eq!(runjob(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn lenient_deps_flag_and_env() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("vis.mac"),
        "attach Step named A\nattach Step named B\n\
         cfg Step named A define OutputFile a.txt\n\
         cfg Step named B define OutputFile ::Step named A:OutputFile\n\
         cfg Step named B oncall MakeJob do addreq Fork\n",
    )
    .unwrap();
    let dump = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_runjob"));
        cmd.args([
            "run",
            "vis.mac",
            "--no-framework",
            "--dump",
            "-",
            "--resolve",
        ])
        .args(extra)
        .current_dir(dir.path())
        .env_remove("RUNJOB_LENIENT_DEPS");
        if let Some(v) = env {
            cmd.env("RUNJOB_LENIENT_DEPS", v);
        }
        cmd.output().unwrap()
    };
    let strict = dump(&[], None);
    assert_eq!(strict.status.code(), Some(1));
    assert!(text(&strict.stderr).contains("no declared dependency"));
    for out in [dump(&["--lenient-deps"], None), dump(&[], Some("1"))] {
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        assert!(text(&out.stdout).contains("cfg Step named B define OutputFile a.txt\n"));
    }
}

#[test]
fn dump_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let hello = fixture("helloworld.mac");
    let first = runjob(
        &[
            "run",
            hello.to_str().unwrap(),
            "--no-framework",
            "--dump",
            "state.mac",
        ],
        dir.path(),
    );
    assert_eq!(first.status.code(), Some(0));
    let second = runjob(
        &["run", "state.mac", "--no-framework", "--dump", "again.mac"],
        dir.path(),
    );
    assert_eq!(second.status.code(), Some(0), "{}", text(&second.stderr));
    assert_eq!(
        fs::read_to_string(dir.path().join("state.mac")).unwrap(),
        fs::read_to_string(dir.path().join("again.mac")).unwrap()
    );
}

#[test]
fn explicit_framework_messages_and_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let hello = fixture("helloworld.mac");
    let out = runjob(
        &[
            "run",
            hello.to_str().unwrap(),
            "--framework",
            "Reset,MakeJob,MakeScript,RunJob",
            "--run-mode",
            "dry-run",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("would run "), "{stdout}");
    assert!(stdout
        .trim_end()
        .ends_with("composite_HelloWorldScriptGen.sh"));
}

#[test]
fn repl_matches_batch_dump() {
    let script = fs::read_to_string(fixture("helloworld.mac")).unwrap();
    let batch = Linker::new();
    Interpreter::new(&batch)
        .execute_file(&fixture("helloworld.mac"))
        .unwrap();

    let (linker, out, err) =
        repl_session(&format!("{script}dump\nquit\ncfg Fork additem ignored\n"));
    assert_eq!(err, "");
    let expected = batch.dump_state(false).unwrap();
    assert_eq!(out, expected);
    assert_eq!(linker.dump_state(false).unwrap(), expected);
}

#[test]
fn repl_framework_run_prints_like_batch_mode() {
    let script = fs::read_to_string(fixture("helloworld.mac")).unwrap();
    let (_, out, err) = repl_session(&format!(
        "{script}framework run Reset MakeJob MakeScript RunJob\n"
    ));
    assert_eq!(err, "");
    assert_eq!(out, "Hello World\nSalut le Monde\nHallo Welt\n");
}

#[test]
fn repl_continues_after_errors() {
    let (linker, _, err) =
        repl_session("cfg Nobody additem x\nattach Step\nattach Step\ncfg Step additem y\n");
    assert_eq!(err.lines().count(), 2, "{err}");
    assert!(err.contains("Nobody"));
    assert!(linker.get("Step").unwrap().store().contains_key("y"));
}

#[test]
fn repl_waits_for_loops_and_continuations() {
    let (linker, _, err) = repl_session(
        "loop i 1 2\n  attach Step named s$(i)\nendloop\ncfg Step named s1 \\\n  define k \\\n  v w\ndump --resolve\n",
    );
    assert_eq!(err, "");
    assert_eq!(linker.configurators().len(), 2);
    let s1 = linker.get("Step named s1").unwrap();
    assert_eq!(s1.resolve_value("k", &linker).unwrap(), "v w");
}

#[test]
fn repl_reports_unfinished_input_at_eof() {
    let (linker, _, err) = repl_session("loop i 1 2\n  attach Step named s$(i)\n");
    assert!(err.contains("without `endloop`"), "{err}");
    assert!(linker.configurators().is_empty());
}
