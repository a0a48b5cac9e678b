#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use causalproc::choi::channels;
use causalproc::network::{build_brickwork, GateSupply, NetworkSpec};
use causalproc::process::{feedback_loop, process_from_channel, process_from_state};
use causalproc::{CMatrix, LabeledOperator, SystemId};
use serde::Serialize;
use tempfile::TempDir;

pub struct Run {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Run {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

pub fn causalproc(args: &[&str], threads: usize) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_causalproc"))
        .args(args)
        .env("CAUSALPROC_THREADS", threads.to_string())
        .output()
        .expect("binary runs");
    Run {
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        code: out.status.code().unwrap_or(-1),
    }
}

pub fn q(l: &str, d: usize) -> SystemId {
    SystemId::sys(l, d)
}

/// Input files written once per test.
pub struct Fixtures {
    pub dir: TempDir,
}

impl Fixtures {
    pub fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        let phi = LabeledOperator::phi_plus(q("a", 2), q("b", 2)).unwrap();
        f.write("phi_plus.json", &phi);
        f.write(
            "omega.json",
            &LabeledOperator::maximally_mixed(vec![q("a", 2), q("b", 2)]).unwrap(),
        );
        f.write(
            "phi_process.json",
            &process_from_state(
                &LabeledOperator::phi_plus(q("a1", 2), q("b1", 2)).unwrap(),
                &[("A", &["a1"]), ("B", &["b1"])],
            )
            .unwrap(),
        );
        f.write("feedback.json", &feedback_loop(2).unwrap());
        f.write("identity.json", &channels::identity(2, "a2", "b1").unwrap());
        f.write("erasure.json", &channels::erasure(0.25, 2, "a2", "b1").unwrap());
        f.write("depolarizing.json", &channels::depolarizing(1.0, 2, "a2", "b1").unwrap());
        f.write(
            "identity_process.json",
            &process_from_channel(&channels::identity(2, "a2", "b1").unwrap(), "A", "B").unwrap(),
        );
        f.write("identity_net.json", &identity_network());
        f.write(
            "config.json",
            &serde_json::json!({"restarts": 3, "seed": 1, "max_iterations": 500}),
        );
        std::fs::write(f.path("truncated.json"), r#"{"systems": [{"label": "a", "dim": 2}], "matr"#).unwrap();
        f
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    pub fn write<T: Serialize>(&self, name: &str, value: &T) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
        p
    }
}

/// fig6-small layout with identity gates and the same region.
pub fn identity_network() -> NetworkSpec {
    let fig = causalproc::network::fig6_small(0).unwrap();
    let net = build_brickwork(2, 4, &GateSupply::Fixed(vec![CMatrix::identity(4, 4); 3])).unwrap();
    net.with_region(fig.region.unwrap())
}

pub fn schema(name: &str) -> serde_json::Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn assert_schema(name: &str, doc: &serde_json::Value) {
    let s = schema(name);
    let v = jsonschema::validator_for(&s).unwrap();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}
