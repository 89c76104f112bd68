//! Helpers shared by the binary-driving test suites. Each suite uses its
//! own subset, so unused-item lints stay off here.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_proxyforest");
pub const OUT_ENV: &str = "PROXYFOREST_OUT_DIR";
pub const RECORD_HEADER: &str =
    "sex,street,district,city,date,priors,race,skin_complexion,clothing,incident_reason";

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove(OUT_ENV)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

pub fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Every regular file in `dir` as name -> bytes.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("readable dir") {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            files.insert(
                entry.file_name().into_string().unwrap(),
                fs::read(entry.path()).unwrap(),
            );
        }
    }
    files
}

pub fn assert_same_artifacts(a: &Path, b: &Path, what: &str) {
    let fa = dir_contents(a);
    let fb = dir_contents(b);
    assert_eq!(
        fa.keys().collect::<Vec<_>>(),
        fb.keys().collect::<Vec<_>>(),
        "{what}: artifact names differ"
    );
    for (name, bytes) in &fa {
        assert_eq!(bytes, &fb[name], "{what}: {name} differs between reruns");
    }
}

pub fn write_labels(path: &Path) {
    let rows = [
        "label",
        "smith john",
        "smyth jon",
        "smith jon",
        "garcia maria",
        "garsia maria",
        "chen wei",
        "chan wai",
        "lee kim",
    ];
    fs::write(path, rows.join("\n")).unwrap();
}

pub fn write_tiny_corpus(path: &Path) {
    let rows = [
        RECORD_HEADER,
        "M,100 OAK ST,d1,c1,2009-03-05,1,W,light,BLU JENS,LOITERING",
        "F,200 ELM AVE,d2,c2,2009-03-06,0,B,dark,RED HAT,TRESPASS",
        "M,300 PINE RD,d1,c3,2009-03-07,2,H,medium,GRN SHRT,LOITERING",
    ];
    fs::write(path, rows.join("\n")).unwrap();
}
