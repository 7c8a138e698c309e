use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use cabinsim::array::{steering_vectors, ArrayGeometry};
use cabinsim::dataset::{
    estimate_sensitivity, generate_fixture, load_dataset, update_manifest_sensitivity, validate_with, DatasetIndex,
    SetupKind, ValidationOptions,
};
use cabinsim::metrics::{condition_table, snr, write_csv, write_json, MetricsQuery};
use cabinsim::wav::read_wav;

use crate::error::CliError;
use crate::{CalibrateArgs, Cli, FixtureArgs, MetricsArgs, ReportFormat, SteeringArgs, ValidateArgs, ValidateFormat};

fn car_or_only(index: &DatasetIndex, car: &Option<String>) -> Result<String, CliError> {
    match (car, index.cars()) {
        (Some(c), _) => Ok(c.clone()),
        (None, [only]) => Ok(only.id.clone()),
        (None, _) => Err(CliError::usage("--car is required when the dataset has several cars")),
    }
}

pub fn metrics(cli: &Cli, args: &MetricsArgs) -> Result<(), CliError> {
    let index = load_dataset(cli.root()?)?;
    let mut query = MetricsQuery::new(car_or_only(&index, &args.car)?, args.setup, args.p, args.ls);
    query.channel = args.channel;
    let rows = match &args.condition {
        Some(c) => vec![snr(&index, &query, c)?],
        None => condition_table(&index, &query)?,
    };
    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        ReportFormat::Csv => write_csv(&rows, out)?,
        ReportFormat::Json => write_json(&rows, out)?,
    }
    Ok(())
}

pub fn validate(cli: &Cli, args: &ValidateArgs) -> Result<(), CliError> {
    let index = load_dataset(cli.root()?)?;
    let mut options = ValidationOptions::default();
    if let Some(t) = args.clip_threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::usage(format!("--clip-threshold must be in (0, 1] (got {t})")));
        }
        options.clip_threshold = Some(t);
    }
    if let Some(run) = args.clip_min_run {
        options.clip_min_run = run.max(1);
    }
    let report = validate_with(&index, &options);
    let mut out = io::stdout().lock();
    match args.format {
        ValidateFormat::Text => {
            for f in &report.findings {
                writeln!(out, "{f}")?;
            }
            writeln!(out, "{} findings", report.len())?;
        }
        ValidateFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &report).map_err(CliError::io)?;
            writeln!(out)?;
        }
    }
    if report.is_empty() {
        Ok(())
    } else {
        Err(CliError::Findings(report.len()))
    }
}

pub fn calibrate(cli: &Cli, args: &CalibrateArgs) -> Result<(), CliError> {
    let root = cli.root()?;
    let index = load_dataset(root)?;
    let car = car_or_only(&index, &args.car)?;
    let setup = index.setup(&car, args.setup)?;
    if args.channel >= setup.channel_count() {
        return Err(CliError::usage(format!(
            "--channel {} out of range (setup has {})",
            args.channel,
            setup.channel_count()
        )));
    }
    let recording: cabinsim::Buffer = read_wav(&args.recording)?;
    let rec_channel = args
        .recording_channel
        .unwrap_or(if recording.channel_count() == 1 { 0 } else { args.channel });
    let offset = estimate_sensitivity(&recording, rec_channel, args.ref_dba).map_err(|e| {
        CliError::usage(format!("{}: channel {rec_channel}: {e}", args.recording.display()))
    })?;
    println!("{offset}");
    if !args.dry_run {
        update_manifest_sensitivity(root, &car, args.setup, args.channel, offset)?;
        cli.log().info(format!("updated {car}/{} microphone {} to {offset:.4} dB", args.setup, args.channel));
    }
    Ok(())
}

pub fn fixture(cli: &Cli, args: &FixtureArgs) -> Result<(), CliError> {
    let dir = match &args.dir {
        Some(d) => d,
        None => cli.root()?,
    };
    generate_fixture(dir, args.seed)?;
    cli.log().info(format!("fixture written to {} (seed {})", dir.display(), args.seed));
    Ok(())
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` within rounding).
pub fn parse_axis(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let bad = |detail: &str| CliError::usage(format!("--{what}: {detail} in `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("range needs start ≤ stop and a positive step"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|k| start + k as f64 * step).collect()
        }
        [_] => text.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected a list or start:stop:step")),
    };
    if values.is_empty() {
        return Err(bad("empty axis"));
    }
    Ok(values)
}

pub fn steering(cli: &Cli, args: &SteeringArgs) -> Result<(), CliError> {
    let freqs = parse_axis(&args.freqs, "freqs")?;
    let azimuths: Vec<f64> = parse_axis(&args.azimuths, "azimuths")?.iter().map(|d| d * PI / 180.0).collect();
    let geometry = match &args.car {
        Some(car) => {
            let index = load_dataset(cli.root()?)?;
            let setup = index.setup(car, SetupKind::Array)?;
            setup
                .geometry()
                .cloned()
                .ok_or_else(|| CliError::usage(format!("car `{car}` has no array geometry")))?
        }
        None => ArrayGeometry::circular(args.mics, args.radius, [0.0; 3])?
            .with_speed_of_sound(args.speed_of_sound)?,
    };
    let matrix = steering_vectors(&geometry, &freqs, &azimuths)?;
    matrix.write_to(&args.out, geometry.speed_of_sound())?;
    let (f, a, m) = matrix.shape();
    cli.log().info(format!("{}: {f} frequencies x {a} azimuths x {m} microphones", args.out.display()));
    Ok(())
}
