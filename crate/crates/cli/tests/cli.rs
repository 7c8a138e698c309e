use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use cabinsim::array::SteeringMatrix;
use cabinsim::dsp::AudioBuffer;
use cabinsim::wav::{read_info, read_wav, write_wav, WavFormat};
use tempfile::TempDir;

const SEED: u64 = 3;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cabinsim"));
    cmd.env_remove("CAVE_DATASET_ROOT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Fixture written once by the `fixture` subcommand.
fn root() -> &'static Path {
    static ROOT: OnceLock<PathBuf> = OnceLock::new();
    ROOT.get_or_init(|| {
        let base = Path::new(env!("CARGO_TARGET_TMPDIR"));
        let root = base.join(format!("cli-fixture-{SEED}-v{}", env!("CARGO_PKG_VERSION")));
        if !root.join("manifest.json").exists() {
            fs::create_dir_all(base).unwrap();
            let staging = tempfile::tempdir_in(base).unwrap();
            let o = run(&["fixture", staging.path().to_str().unwrap(), "--seed", &SEED.to_string()]);
            assert!(o.status.success(), "{}", stderr(&o));
            let staged = staging.keep();
            if fs::rename(&staged, &root).is_err() {
                let _ = fs::remove_dir_all(&staged);
            }
        }
        root
    })
}

fn root_str() -> &'static str {
    root().to_str().unwrap()
}

fn copy_root() -> TempDir {
    fn copy(from: &Path, to: &Path) {
        for e in fs::read_dir(from).unwrap() {
            let e = e.unwrap();
            let target = to.join(e.file_name());
            if e.file_type().unwrap().is_dir() {
                fs::create_dir_all(&target).unwrap();
                copy(&e.path(), &target);
            } else {
                fs::copy(e.path(), &target).unwrap();
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    copy(root(), dir.path());
    dir
}

fn speech_wav(dir: &Path, rate: u32, seconds: f64) -> PathBuf {
    let n = (rate as f64 * seconds) as usize;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            0.3 * (6.0 * t).sin().abs() * (2.0 * std::f64::consts::PI * 180.0 * t).sin()
        })
        .collect();
    let path = dir.join("speech.wav");
    write_wav(&path, &AudioBuffer::mono(rate, x).unwrap(), WavFormat::Pcm24).unwrap();
    path
}

#[test]
fn synth_writes_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let x = speech_wav(tmp.path(), 48000, 2.5);
    let out = tmp.path().join("y.wav");
    let o = run(&[
        "--root", root_str(), "synth", "--car", "fixture", "--setup", "array", "--p", "driver", "--ls", "60",
        "--w", "1", "--speed", "70", "--x", x.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let info = read_info(&out).unwrap();
    assert_eq!((info.channels, info.sample_rate, info.bits_per_sample), (8, 16000, 24));
    assert_eq!(info.frames, 40000);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["samples"], 40000);
    assert_eq!(sidecar["seed"], 1);
    assert!(sidecar["levels"]["speech"].is_number());
    assert!(sidecar["levels"]["noise"].is_number());
    assert!(sidecar["gains"]["speech_effort"].is_number());
}

#[test]
fn synth_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let x = speech_wav(tmp.path(), 16000, 1.5);
    let go = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = run(&[
            "--root", root_str(), "synth", "--setup", "distributed", "--p", "rear_left", "--ls", "65", "--w", "2",
            "--speed", "110", "--vent", "2", "--x", x.to_str().unwrap(), "--seed", seed, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    assert_eq!(go("a.wav", "9"), go("b.wav", "9"));
    assert_ne!(go("a.wav", "9"), go("c.wav", "10"));
}

#[test]
fn invalid_parameters_exit_2_and_name_them() {
    let tmp = tempfile::tempdir().unwrap();
    let x = speech_wav(tmp.path(), 16000, 0.5);
    let x = x.to_str().unwrap();
    let o_path = tmp.path().join("o.wav");
    let base = ["--root", root_str(), "synth", "--setup", "array", "--p", "driver", "--x", x];
    for (extra, needle) in [
        (vec!["--ls", "-5", "--w", "0"], "Ls must be ≥ 0"),
        (vec!["--ls", "60", "--w", "7"], "w must be in 0..=3"),
        (vec!["--ls", "60", "--w", "-1"], "w must be in 0..=3"),
        (vec!["--ls", "60", "--w", "0", "--vent", "4"], "l must be in 1..=3"),
        (vec!["--ls", "60", "--w", "0", "--speed", "60"], "s=60"),
        (vec!["--ls", "60", "--w", "0", "--la", "60"], "z must be given when La is set"),
        (vec!["--w", "0"], "Ls is required"),
    ] {
        let mut args = base.to_vec();
        args.extend(extra.iter().copied());
        args.extend(["--out", o_path.to_str().unwrap()]);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{extra:?}: {}", stderr(&o));
    }
    assert!(!o_path.exists());
}

#[test]
fn missing_input_file_is_io_error() {
    let o = run(&[
        "--root", root_str(), "synth", "--setup", "array", "--p", "driver", "--ls", "60", "--w", "0", "--x",
        "/nonexistent/speech.wav",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cannot read x"));
}

#[test]
fn spec_file_with_flag_overrides_and_components() {
    let tmp = tempfile::tempdir().unwrap();
    speech_wav(tmp.path(), 16000, 1.0);
    let spec = tmp.path().join("scene.json");
    fs::write(
        &spec,
        r#"{"car":"fixture","setup":"array","p":"front_passenger","Ls":60,"w":0,"x":"speech.wav","s":50,"seed":4}"#,
    )
    .unwrap();
    let out = tmp.path().join("out/mix.wav");
    let o = run(&[
        "--root", root_str(), "synth", "--spec", spec.to_str().unwrap(), "--ls", "66", "--vent", "3",
        "--channels", "4,0", "--emit-components", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["Ls"], 66.0);
    assert_eq!(sidecar["s"], 50);
    assert_eq!(sidecar["l"], 3);
    assert_eq!(sidecar["seed"], 4);
    assert_eq!(sidecar["channels"], serde_json::json!([4, 0]));
    assert_eq!(sidecar["components"].as_array().unwrap().len(), 4);

    let y: AudioBuffer<f64> = read_wav(&out).unwrap();
    assert_eq!(y.channel_count(), 2);
    let parts: Vec<AudioBuffer<f64>> = ["S", "A", "N", "V"]
        .iter()
        .map(|c| read_wav(tmp.path().join(format!("out/mix_{c}.wav"))).unwrap())
        .collect();
    assert!(parts[1].is_silent());
    let lsb = 1.0 / 8_388_608.0;
    for ch in 0..2 {
        for i in 0..y.len() {
            let sum: f64 = parts.iter().map(|p| p.channel(ch).unwrap()[i]).sum();
            assert!((sum - y.channel(ch).unwrap()[i]).abs() <= 4.0 * lsb);
        }
    }
}

#[test]
fn batch_mode_renders_every_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let x = speech_wav(tmp.path(), 16000, 0.8);
    let specs = tmp.path().join("specs");
    fs::create_dir(&specs).unwrap();
    for (i, p) in ["driver", "rear_left", "rear_right"].iter().enumerate() {
        let spec = serde_json::json!({
            "car": "fixture", "setup": "array", "p": p, "Ls": 60 + i, "w": i, "x": x, "s": 90, "seed": i
        });
        fs::write(specs.join(format!("scene{i}.json")), spec.to_string()).unwrap();
    }
    let out = tmp.path().join("rendered");
    let o = run(&[
        "--root", root_str(), "synth", "--batch", specs.to_str().unwrap(), "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        assert_eq!(read_info(out.join(format!("scene{i}.wav"))).unwrap().frames, 12800);
        assert!(out.join(format!("scene{i}.json")).exists());
    }
    fs::write(specs.join("zbad.json"), r#"{"setup":"array","p":"driver","Ls":-1,"w":0,"x":"a.wav"}"#).unwrap();
    let o = run(&["--root", root_str(), "synth", "--batch", specs.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zbad.json"));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn metrics_table_rows_satisfy_identity() {
    let o = run(&["--root", root_str(), "metrics", "--table", "--p", "driver", "--ls", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "speed,w,ventilation,noise_dba,snr_db,speech_dba,channel");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 32);
    for r in rows {
        let (n, snr, s): (f64, f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap());
        assert_eq!(snr + n, s, "{r:?}");
        assert_eq!(r[6], "4");
    }
}

#[test]
fn metrics_single_condition_and_json() {
    let o = run(&["--root", root_str(), "metrics", "--condition", "speed=70,w=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..3], ["70", "0", "off"]);

    let o = run(&[
        "--root", root_str(), "metrics", "--condition", "speed=0,w=3,vent=1", "--setup", "distributed", "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["ventilation"], 1);
    assert_eq!(v[0]["channel"], 2);

    let o = run(&["--root", root_str(), "metrics", "--condition", "speed=60,w=0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--root", root_str(), "metrics"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_and_exits() {
    let o = bin().args(["validate"]).env("CAVE_DATASET_ROOT", root()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0 findings");

    let dir = copy_root();
    let path = dir.path().join("array/noise/driving_s50_w0.wav");
    let clip: AudioBuffer<f64> = read_wav(&path).unwrap();
    let mut ch = clip.clone().into_channels();
    ch[2][100..110].fill(1.0);
    write_wav(&path, &AudioBuffer::new(16000, ch).unwrap(), WavFormat::Pcm24).unwrap();
    let o = run(&["--root", dir.path().to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("driving_s50_w0.wav"));
    assert!(stdout(&o).trim_end().ends_with("1 findings"));
    let o = run(&["--root", dir.path().to_str().unwrap(), "validate", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["findings"][0]["finding"], "clipping");
}

#[test]
fn root_errors() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CAVE_DATASET_ROOT"));
    let empty = tempfile::tempdir().unwrap();
    let o = run(&["--root", empty.path().to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("missing manifest"));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_then_metrics_reflects_offset() {
    let dir = copy_root();
    let root = dir.path().to_str().unwrap();
    let before = stdout(&run(&["--root", root, "metrics", "--condition", "speed=90,w=1"]));
    let before = &csv_rows(&before)[0];

    // Pink-ish calibration recording at a known digital level.
    let n = 48000;
    let mut state = 0.0;
    let rec: Vec<f64> = (0..n)
        .map(|i| {
            let w = ((i as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5;
            state = 0.98 * state + w;
            0.01 * state
        })
        .collect();
    let rec_path = dir.path().join("cal.wav");
    write_wav(&rec_path, &AudioBuffer::mono(48000, rec).unwrap(), WavFormat::Float32).unwrap();
    let o = run(&[
        "--root", root, "calibrate", "--recording", rec_path.to_str().unwrap(), "--channel", "4", "--ref-dba",
        "94", "--setup", "array",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let offset: f64 = stdout(&o).trim().parse().unwrap();

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let stored = manifest["cars"][0]["setups"][0]["sensitivity"][4].as_f64().unwrap();
    assert_eq!(stored, offset);
    let old = serde_json::from_str::<serde_json::Value>(&fs::read_to_string(root_str().to_owned() + "/manifest.json").unwrap())
        .unwrap()["cars"][0]["setups"][0]["sensitivity"][4]
        .as_f64()
        .unwrap();

    let after = stdout(&run(&["--root", root, "metrics", "--condition", "speed=90,w=1"]));
    let after = &csv_rows(&after)[0];
    let shift = |k: usize| after[k].parse::<f64>().unwrap() - before[k].parse::<f64>().unwrap();
    assert!((shift(3) - (offset - old)).abs() < 1e-5, "{} vs {}", shift(3), offset - old);
    assert!((shift(5) - (offset - old)).abs() < 1e-5);
    assert!(shift(4).abs() < 1e-5);

    let o = run(&[
        "--root", root, "calibrate", "--recording", rec_path.to_str().unwrap(), "--channel", "9", "--ref-dba",
        "94", "--setup", "array",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn steering_export() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sv.bin");
    let o = run(&[
        "steering", "--freqs", "250:4000:250", "--azimuths", "0,45,90,135", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (m, header) = SteeringMatrix::<f64>::read_from(&out).unwrap();
    assert_eq!(m.shape(), (16, 4, 8));
    assert_eq!(header.speed_of_sound, 343.0);

    let o = run(&[
        "--root", root_str(), "steering", "--car", "fixture", "--freqs", "1000", "--azimuths", "0:350:10", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(SteeringMatrix::<f64>::read_from(&out).unwrap().0.shape(), (1, 36, 8));
    let o = run(&["steering", "--freqs", "-5", "--azimuths", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
