#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_occlupose"))
}

/// Runs the binary, panicking with its stderr unless the exit code matches.
pub fn run_expect(args: &[&str], code: i32) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {args:?}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn run_ok(args: &[&str]) -> Output {
    run_expect(args, 0)
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_path_buf()
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            walk(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            let hash = Sha256::digest(std::fs::read(&path).unwrap());
            out.insert(rel, hash.iter().map(|b| format!("{b:02x}")).collect());
        }
    }
}

/// SHA-256 of every file under `root` by relative path, skipping run
/// manifests (they hold timings).
pub fn checksums(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out.retain(|k, _| !k.ends_with("manifest.json"));
    out
}

pub fn file_checksum(path: &Path) -> String {
    Sha256::digest(std::fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Two single-target scenes without occluders and a quick pipeline.
pub const CLEAN_CONFIG: &str = r#"
[benchmark]
n_scenes = 2

[synth]
images_per_scene = 2
occluders = []

[[synth.targets]]
primitive = { shape = "box", x = 0.1, y = 0.07, z = 0.05 }

[pipeline]
k = 2
n_refine = 2
n_dense = 1024
"#;

/// The default three targets and one occluder, smaller.
pub const OCCLUDED_CONFIG: &str = r#"
[benchmark]
n_scenes = 2

[synth]
images_per_scene = 2
points_per_model = 1024

[pipeline]
k = 2
n_refine = 1
n_dense = 512
"#;
