//! Shared helpers for the CLI integration and acceptance suites.
#![allow(dead_code)] // each test target uses a different subset

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

pub struct CmdResult {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn polsar(args: &[&str]) -> CmdResult {
    let output = Command::new(env!("CARGO_BIN_EXE_polsar"))
        .args(args)
        .output()
        .expect("binary runs");
    CmdResult {
        status: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

pub fn assert_ok(result: &CmdResult, what: &str) {
    assert_eq!(
        result.status, 0,
        "{what} failed (exit {}):\n{}\n{}",
        result.status, result.stdout, result.stderr
    );
}

/// Fresh scratch directory under the target tmp area.
pub fn scratch(name: &str) -> PathBuf {
    let mut dir = std::env::temp_dir();
    dir.push(format!("polsar-accept-{}-{}", std::process::id(), name));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).ok();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// File name -> contents for every regular file below `dir`.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn assert_identical_trees(a: &Path, b: &Path, what: &str) {
    let ca = dir_contents(a);
    let cb = dir_contents(b);
    let names_a: Vec<&String> = ca.keys().collect();
    let names_b: Vec<&String> = cb.keys().collect();
    assert_eq!(names_a, names_b, "{what}: file sets differ");
    for (name, bytes) in &ca {
        assert_eq!(
            bytes, &cb[name],
            "{what}: {name} differs between runs"
        );
    }
}
