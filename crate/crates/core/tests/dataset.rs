mod common;

use std::fs;

use cabinsim::dataset::{
    estimate_sensitivity, generate_fixture, load_dataset, update_manifest_sensitivity, validate,
    Condition, DatasetError, Finding, Manifest, NoiseCondition, SetupKind, SourcePosition,
    WindowState, FIXTURE_CAR, MANIFEST_FILE,
};
use cabinsim::dsp::{a_weighted_level_db, equivalent_level, AudioBuffer, SensitivityMap};
use cabinsim::wav::{read_wav, write_wav, WavFormat};
use common::{fixture, fixture_copy, fixture_root, SEED};

fn w(v: u8) -> WindowState {
    WindowState::new(v).unwrap()
}

#[test]
fn fixture_shape() {
    let index = fixture();
    assert_eq!(index.cars().len(), 1);
    let car = index.car(FIXTURE_CAR).unwrap();
    assert_eq!(car.setups().len(), 2);
    for setup in car.setups() {
        assert_eq!(setup.channel_count(), 8);
        let speech = setup
            .impulse_responses()
            .iter()
            .filter(|e| e.position() != SourcePosition::AudioSystem)
            .count();
        assert_eq!(speech, 20);
        assert!(setup.impulse_response(SourcePosition::AudioSystem, w(2)).is_some());
        assert_eq!(setup.events().count(), 1);
    }
    assert_eq!(car.setup(SetupKind::Array).unwrap().reference_channel(), 4);
    assert_eq!(car.setup(SetupKind::Distributed).unwrap().reference_channel(), 2);
    assert!(car.setup(SetupKind::Array).unwrap().geometry().unwrap().is_uniform_circular(1e-9));
}

#[test]
fn fixture_validates_clean() {
    let report = validate(fixture());
    assert!(report.is_empty(), "{:#?}", report.findings);
    // Idempotent.
    assert_eq!(validate(fixture()), report);
}

#[test]
fn manifest_round_trips_through_index() {
    let text = fs::read_to_string(fixture_root().join(MANIFEST_FILE)).unwrap();
    let on_disk: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(fixture().to_manifest(), on_disk);
}

#[test]
fn fixture_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let cfg = cabinsim::dataset::FixtureConfig { noise_seconds: 0.5, ..cabinsim::dataset::FixtureConfig::new(SEED) };
    cabinsim::dataset::generate_fixture_with(a.path(), &cfg).unwrap();
    let b = tempfile::tempdir().unwrap();
    cabinsim::dataset::generate_fixture_with(b.path(), &cfg).unwrap();
    let mut files = Vec::new();
    collect(a.path(), a.path(), &mut files);
    assert!(files.len() > 50);
    for rel in files {
        assert_eq!(fs::read(a.path().join(&rel)).unwrap(), fs::read(b.path().join(&rel)).unwrap(), "{rel:?}");
    }
    let c = tempfile::tempdir().unwrap();
    cabinsim::dataset::generate_fixture_with(c.path(), &cabinsim::dataset::FixtureConfig { seed: SEED + 1, ..cfg }).unwrap();
    assert_ne!(
        fs::read(a.path().join("array/ir/driver_w0.wav")).unwrap(),
        fs::read(c.path().join("array/ir/driver_w0.wav")).unwrap()
    );
}

fn collect(base: &std::path::Path, dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(base, &p, out);
        } else {
            out.push(p.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

#[test]
fn fixture_noise_level_rises_with_speed() {
    let setup = fixture().setup(FIXTURE_CAR, SetupKind::Array).unwrap();
    let car = fixture().car(FIXTURE_CAR).unwrap();
    let ch = setup.reference_channel();
    for &win in &car.window_states {
        let levels: Vec<f64> = car
            .speed_grid
            .iter()
            .map(|&s| {
                let clip = setup.noise_for(&Condition::driving(s, win)).unwrap().audio().unwrap();
                equivalent_level(clip, setup.sensitivity(), ch).unwrap()
            })
            .collect();
        assert!(levels.windows(2).all(|p| p[1] > p[0]), "{levels:?}");
    }
    let slow = setup.noise_for(&Condition::driving(50, w(0))).unwrap().audio().unwrap();
    let fast = setup.noise_for(&Condition::driving(110, w(0))).unwrap().audio().unwrap();
    assert!(
        equivalent_level(fast, setup.sensitivity(), ch).unwrap()
            > equivalent_level(slow, setup.sensitivity(), ch).unwrap()
    );
}

#[test]
fn fixture_keeps_headroom() {
    for setup in fixture().car(FIXTURE_CAR).unwrap().setups() {
        for clip in setup.noise() {
            let peak = clip.audio().unwrap().peak();
            assert!(peak < 0.7, "{}: peak {peak}", clip.path().display());
        }
    }
}

#[test]
fn audio_is_decoded_once_and_shared() {
    let setup = fixture().setup(FIXTURE_CAR, SetupKind::Distributed).unwrap();
    let entry = setup.impulse_response(SourcePosition::RearLeft, w(1)).unwrap();
    let a = entry.audio().unwrap() as *const AudioBuffer<f64>;
    let b = entry.audio().unwrap() as *const AudioBuffer<f64>;
    assert_eq!(a, b);
    let set = entry.to_set().unwrap();
    assert_eq!(set.ir.channel_count(), 8);
    assert!(set.calibration_level > 0.0);
}

#[test]
fn missing_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::MissingManifest(_))));
}

#[test]
fn malformed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(MANIFEST_FILE), "{ not json").unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(err, DatasetError::MalformedManifest { .. }));
    assert!(err.to_string().contains(MANIFEST_FILE));
}

#[test]
fn dangling_reference_names_file() {
    let dir = fixture_copy();
    fs::remove_file(dir.path().join("array/noise/driving_s70_w1.wav")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(err, DatasetError::DanglingReference(_)));
    assert!(err.to_string().contains("driving_s70_w1.wav"), "{err}");
}

fn edit_manifest(dir: &std::path::Path, f: impl FnOnce(&mut Manifest)) {
    let path = dir.join(MANIFEST_FILE);
    let mut m: Manifest = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut m);
    fs::write(path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
}

#[test]
fn duplicate_ir_key_is_rejected() {
    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| {
        let irs = &mut m.cars[0].setups[0].impulse_responses;
        let dup = irs[0].clone();
        irs.push(dup);
    });
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(err, DatasetError::DuplicateKey { .. }));
    assert!(err.to_string().contains("duplicate catalog key"));
}

#[test]
fn manifest_invariants_enforced() {
    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| m.cars[0].setups[0].reference_channel = 8);
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::InvalidManifest { .. })));

    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| m.cars[0].setups[1].channel_count = 6);
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::InvalidManifest { .. })));

    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| m.cars[0].setups[0].geometry = None);
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::InvalidManifest { .. })));

    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| m.cars[0].setups[0].impulse_responses[3].calibration_level = 0.0);
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::InvalidManifest { .. })));

    let dir = fixture_copy();
    let path = dir.path().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).unwrap().replacen("\"window\": 3", "\"window\": 4", 1);
    fs::write(&path, text).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(DatasetError::MalformedManifest { .. })));
}

#[test]
fn deleted_ir_is_one_missing_combination() {
    let dir = fixture_copy();
    let rel = "distributed/ir/rear_middle_w2.wav";
    fs::remove_file(dir.path().join(rel)).unwrap();
    edit_manifest(dir.path(), |m| {
        m.cars[0].setups[1].impulse_responses.retain(|e| e.file != rel);
    });
    let report = validate(&load_dataset(dir.path()).unwrap());
    assert_eq!(report.len(), 1, "{:#?}", report.findings);
    assert!(matches!(
        &report.findings[0],
        Finding::MissingImpulseResponse { position: SourcePosition::RearMiddle, window, setup: SetupKind::Distributed, .. }
            if window.get() == 2
    ));
}

#[test]
fn missing_noise_combination_and_unavailable_declaration() {
    let dir = fixture_copy();
    edit_manifest(dir.path(), |m| {
        m.cars[0].setups[0].noise.retain(|n| {
            !(n.condition == NoiseCondition::Driving { speed: 90 } && n.window.get() == 3)
        });
    });
    let report = validate(&load_dataset(dir.path()).unwrap());
    assert_eq!(report.len(), 1);
    assert!(matches!(&report.findings[0], Finding::MissingNoise { condition, .. } if condition.speed == 90));

    edit_manifest(dir.path(), |m| m.cars[0].unavailable.push(Condition::driving(90, w(3))));
    assert!(validate(&load_dataset(dir.path()).unwrap()).is_empty());
}

#[test]
fn injected_clipping_is_one_finding() {
    let dir = fixture_copy();
    let path = dir.path().join("array/noise/ventilation_l2_w1.wav");
    let clip: AudioBuffer<f64> = read_wav(&path).unwrap();
    let mut channels = clip.clone().into_channels();
    for v in &mut channels[5][1000..1010] {
        *v = 1.0;
    }
    write_wav(&path, &AudioBuffer::new(clip.sample_rate(), channels).unwrap(), WavFormat::Pcm24).unwrap();
    let report = validate(&load_dataset(dir.path()).unwrap());
    assert_eq!(report.len(), 1, "{:#?}", report.findings);
    assert!(matches!(
        &report.findings[0],
        Finding::Clipping { channel: 5, first_sample: 1000, runs: 1, .. }
    ));
}

#[test]
fn format_mismatches_are_reported() {
    let dir = fixture_copy();
    let path = dir.path().join("array/noise/driving_s50_w0.wav");
    let clip: AudioBuffer<f64> = read_wav(&path).unwrap();
    let two = clip.select_channels(&[0, 1]).unwrap();
    write_wav(&path, &two, WavFormat::Pcm24).unwrap();
    let report = validate(&load_dataset(dir.path()).unwrap());
    assert!(report.findings.iter().any(|f| matches!(f, Finding::FormatMismatch { .. })));
    // The catalog still loads; decoding reports the mismatch.
    let index = load_dataset(dir.path()).unwrap();
    let setup = index.setup(FIXTURE_CAR, SetupKind::Array).unwrap();
    assert!(matches!(
        setup.noise_for(&Condition::driving(50, w(0))).unwrap().audio(),
        Err(DatasetError::ChannelCount { .. })
    ));
}

#[test]
fn sensitivity_from_minus_40_dbfs_recording() {
    let rec = AudioBuffer::mono(48000, common::speech_like(48000, 2.0)).unwrap();
    let digital = a_weighted_level_db(&rec, 0).unwrap();
    let rec = rec.scaled(10f64.powf((-40.0 - digital) / 20.0));
    let offset = estimate_sensitivity(&rec, 0, 65.0).unwrap();
    assert!((offset - 105.0).abs() < 1e-9, "{offset}");
    let level = equivalent_level(&rec, &SensitivityMap::uniform(1, offset).unwrap(), 0).unwrap();
    assert!((level - 65.0).abs() < 1e-9);
}

#[test]
fn manifest_sensitivity_update_preserves_everything_else() {
    let dir = fixture_copy();
    let path = dir.path().join(MANIFEST_FILE);
    let before = fs::read_to_string(&path).unwrap();
    update_manifest_sensitivity(dir.path(), FIXTURE_CAR, SetupKind::Distributed, 3, 101.25).unwrap();
    let after = fs::read_to_string(&path).unwrap();
    let changed: Vec<(&str, &str)> = before.lines().zip(after.lines()).filter(|(a, b)| a != b).collect();
    assert_eq!(before.lines().count(), after.lines().count());
    assert_eq!(changed.len(), 1, "{changed:?}");
    assert!(changed[0].1.contains("101.25"));
    let index = load_dataset(dir.path()).unwrap();
    let setup = index.setup(FIXTURE_CAR, SetupKind::Distributed).unwrap();
    assert_eq!(setup.sensitivity().offset(3).unwrap(), 101.25);
}

#[test]
fn generate_into_unwritable_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    assert!(generate_fixture(file.join("sub"), 1).is_err());
}
