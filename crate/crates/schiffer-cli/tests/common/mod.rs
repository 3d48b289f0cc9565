#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn schiffer(args: &[&str]) -> Output {
    schiffer_env(args, None)
}

/// Run the binary with `SCHIFFER_OUT` set to `out`, or removed.
pub fn schiffer_env(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_schiffer"));
    cmd.args(args);
    match out {
        Some(p) => cmd.env("SCHIFFER_OUT", p),
        None => cmd.env_remove("SCHIFFER_OUT"),
    };
    cmd.output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn assert_schema(name: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let schema = read_json(&path);
    if let Err(e) = jsonschema::validate(&schema, instance) {
        panic!("{name}: {e}");
    }
}
