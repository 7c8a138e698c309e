#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use cabinsim::dataset::{generate_fixture, load_dataset, DatasetIndex};
use tempfile::TempDir;

pub const SEED: u64 = 7;

fn shared_root() -> &'static PathBuf {
    static ROOT: OnceLock<PathBuf> = OnceLock::new();
    ROOT.get_or_init(|| {
        let base = Path::new(env!("CARGO_TARGET_TMPDIR"));
        let root = base.join(format!("fixture-{SEED}-v{}", env!("CARGO_PKG_VERSION")));
        if !root.join("manifest.json").exists() {
            std::fs::create_dir_all(base).unwrap();
            let staging = tempfile::tempdir_in(base).unwrap();
            generate_fixture(staging.path(), SEED).unwrap();
            let staged = staging.keep();
            // Another test binary may have won the race.
            if std::fs::rename(&staged, &root).is_err() {
                let _ = std::fs::remove_dir_all(&staged);
            }
        }
        root
    })
}

/// Read-only fixture shared by every test in the binary.
pub fn fixture() -> &'static DatasetIndex {
    static INDEX: OnceLock<DatasetIndex> = OnceLock::new();
    INDEX.get_or_init(|| load_dataset(fixture_root()).unwrap())
}

pub fn fixture_root() -> &'static Path {
    shared_root()
}

/// Private, mutable copy of the fixture.
pub fn fixture_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(fixture_root(), dir.path());
    dir
}

fn copy_dir(from: &Path, to: &Path) {
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target: PathBuf = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            std::fs::create_dir_all(&target).unwrap();
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// Deterministic speech-like test signal: a 140 Hz harmonic series under a
/// 4 Hz syllabic envelope, with short pauses.
pub fn speech_like(rate: u32, seconds: f64) -> Vec<f64> {
    let n = (rate as f64 * seconds).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let env = (std::f64::consts::PI * 4.0 * t).sin().abs();
            let env = if env < 0.15 { 0.0 } else { env };
            let voice: f64 = (1..12)
                .map(|k| (2.0 * std::f64::consts::PI * 140.0 * k as f64 * t).sin() / k as f64)
                .sum();
            0.2 * env * voice
        })
        .collect()
}
