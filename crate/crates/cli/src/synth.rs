use std::fs;
use std::path::{Path, PathBuf};

use cabinsim::dataset::{load_dataset, DatasetIndex};
use cabinsim::scene::{synthesize, Component, SceneReport, SceneSpec};
use cabinsim::wav::{write_wav, WavFormat};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::{Cli, SceneFlags, SynthArgs, DEFAULT_SEED};

pub fn run(cli: &Cli, args: &SynthArgs) -> Result<(), CliError> {
    let index = load_dataset(cli.root()?)?;
    match &args.batch {
        Some(dir) => batch(cli, args, &index, dir),
        None => {
            let spec = build_spec(&args.scene, &index)?;
            render(cli, &index, &spec, &args.out, args.emit_components)
        }
    }
}

fn batch(cli: &Cli, args: &SynthArgs, index: &DatasetIndex, dir: &Path) -> Result<(), CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::usage(format!("no *.json scene specs in {}", dir.display())));
    }
    let out_dir = args.out_dir.clone().unwrap_or_else(|| dir.to_path_buf());
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(format!("{}: {e}", out_dir.display())))?;

    let results: Vec<Result<(), CliError>> = files
        .par_iter()
        .map(|file| {
            let flags = SceneFlags { spec: Some(file.clone()), ..args.scene.clone() };
            let spec = build_spec(&flags, index)?;
            let stem = file.file_stem().unwrap_or_default();
            let out = out_dir.join(Path::new(stem).with_extension("wav"));
            render(cli, index, &spec, &out, args.emit_components)
        })
        .collect();

    let mut first = None;
    for (file, result) in files.iter().zip(results) {
        if let Err(e) = result {
            eprintln!("error: {}: {e}", file.display());
            first.get_or_insert(e);
        }
    }
    match first {
        None => {
            cli.log().info(format!("{} scenes written to {}", files.len(), out_dir.display()));
            Ok(())
        }
        Some(e) => Err(e),
    }
}

fn render(cli: &Cli, index: &DatasetIndex, spec: &SceneSpec, out: &Path, components: bool) -> Result<(), CliError> {
    let result = synthesize(index, spec)?;
    write(out, &result.y)?;
    let mut files = Vec::new();
    if components {
        for c in Component::ALL {
            let path = component_path(out, c);
            write(&path, result.component(c))?;
            files.push(path);
        }
    }
    for w in &result.report.warnings {
        cli.log().info(format!("warning: {}: {w}", out.display()));
    }
    let sidecar = Sidecar { output: out, components: files, spec, report: &result.report };
    let json = serde_json::to_string_pretty(&sidecar).map_err(CliError::io)? + "\n";
    let path = out.with_extension("json");
    fs::write(&path, json).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    cli.log().debug(format!(
        "{}: {} channels, {} samples at {} Hz",
        out.display(),
        result.y.channel_count(),
        result.y.len(),
        result.y.sample_rate()
    ));
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    output: &'a Path,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    components: Vec<PathBuf>,
    spec: &'a SceneSpec,
    #[serde(flatten)]
    report: &'a SceneReport,
}

fn write(path: &Path, buf: &cabinsim::Buffer) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
    }
    write_wav(path, buf, WavFormat::Pcm24)?;
    Ok(())
}

/// `scene.wav` -> `scene_S.wav`.
pub fn component_path(out: &Path, component: Component) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}_{}.wav", component.symbol()))
}

/// Merge a spec file (if any) with flags, flags taking precedence.
pub fn build_spec(flags: &SceneFlags, index: &DatasetIndex) -> Result<SceneSpec, CliError> {
    let mut map = match &flags.spec {
        Some(path) => read_spec_file(path)?,
        None => Map::new(),
    };
    let mut set = |key: &str, v: Value| {
        map.insert(key.to_string(), v);
    };
    if let Some(v) = &flags.car {
        set("car", v.as_str().into());
    }
    if let Some(v) = flags.setup {
        set("setup", v.as_str().into());
    }
    if let Some(v) = flags.p {
        set("p", v.as_str().into());
    }
    if let Some(v) = flags.ls {
        set("Ls", v.into());
    }
    if let Some(v) = flags.w {
        set("w", ranged("w", v, 0, 3, "w must be in 0..=3")?.into());
    }
    if let Some(v) = &flags.x {
        set("x", v.to_string_lossy().as_ref().into());
    }
    if let Some(v) = flags.la {
        set("La", v.into());
    }
    if let Some(v) = &flags.z {
        set("z", v.to_string_lossy().as_ref().into());
    }
    if let Some(v) = flags.speed {
        set("s", ranged("s", v, 0, u32::MAX as i64, "s must be ≥ 0 km/h")?.into());
    }
    if let Some(v) = flags.vent {
        set("l", ranged("l", v, 1, 3, "l must be in 1..=3")?.into());
    }
    if let Some(v) = &flags.channels {
        set("channels", v.clone().into());
    }
    if let Some(v) = flags.target_rate {
        set("target_rate", v.into());
    }
    if let Some(v) = flags.seed {
        set("seed", v.into());
    }
    if !map.contains_key("car") {
        match index.cars() {
            [only] => {
                map.insert("car".into(), only.id.clone().into());
            }
            _ => return Err(CliError::usage("car is required when the dataset has several cars")),
        }
    }
    map.entry("seed").or_insert(DEFAULT_SEED.into());
    for (key, flag) in [("setup", "--setup"), ("p", "--p"), ("Ls", "--ls"), ("w", "--w"), ("x", "--x")] {
        if !map.contains_key(key) {
            return Err(CliError::usage(format!("{key} is required ({flag} or the spec file)")));
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::usage(format!("invalid scene spec: {e}")))
}

fn ranged(name: &str, v: i64, lo: i64, hi: i64, rule: &str) -> Result<i64, CliError> {
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{rule} (got {name}={v})")))
    }
}

fn read_spec_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::usage(format!("{}: scene spec must be a JSON object", path.display())));
    };
    // Audio paths in a spec file are relative to the file.
    let base = path.parent().unwrap_or(Path::new(""));
    for key in ["x", "z"] {
        if let Some(Value::String(p)) = map.get(key) {
            if Path::new(p).is_relative() {
                let joined = base.join(p).to_string_lossy().into_owned();
                map.insert(key.into(), joined.into());
            }
        }
    }
    Ok(map)
}
