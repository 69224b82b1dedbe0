#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use runjob::macro_lang::Interpreter;
use runjob::Linker;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn load(linker: &Linker, name: &str) {
    Interpreter::new(linker)
        .execute_file(&fixture(name))
        .unwrap();
}

pub fn hello_linker() -> Linker {
    let linker = Linker::new();
    load(&linker, "helloworld.mac");
    linker
}

pub fn run_sh(path: &Path, cwd: &Path) -> (i32, String) {
    let out = Command::new(path).current_dir(cwd).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
    )
}
