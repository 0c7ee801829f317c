#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tileprop::ARReport;

pub fn tileprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tileprop"))
        .args(args)
        .output()
        .expect("spawn tileprop")
}

/// Runs the binary and panics with its stderr on a non-zero exit.
pub fn ok(args: &[&str]) -> Output {
    let out = tileprop(args);
    assert!(
        out.status.success(),
        "tileprop {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn synth(dir: &Path, count: u32, seed: u64) {
    ok(&["synth", "--out", p(dir), "--count", &count.to_string(), "--seed", &seed.to_string()]);
}

pub fn eval(scenes: &Path, proposals: &Path, out: &Path) -> ARReport {
    let report = out.join("report.txt");
    ok(&["eval", "--scenes", p(scenes), "--proposals", p(proposals), "--out", p(&report)]);
    serde_json::from_str(&fs::read_to_string(report.with_extension("json")).unwrap()).unwrap()
}

/// Sorted (name, bytes) of every file in `dir`.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// `dir_contents` without the run manifest, whose recorded paths differ.
pub fn jsonl_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    dir_contents(dir).into_iter().filter(|(n, _)| n.ends_with(".jsonl")).collect()
}

pub fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}
