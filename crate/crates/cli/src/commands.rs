use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use fountain_core::comparison::{compare, frequency_from_offsets, interval_mean, ComparisonRecord, ComparisonReport};
use fountain_core::density::{allan_deviation, evaluate_collisional, evaluate_stability, Density};
use fountain_core::evaluation::{
    evaluate_campaign, evaluate_environment, evaluate_zeeman_data, CampaignData, Constants,
};
use fountain_core::interrogation::{central_fringe_fwhm, fringe_contrast, ramsey_probability};
use fountain_core::simulator::{ballistic_timing, simulate_campaign, FountainConfig};
use fountain_core::{
    io, reference_budget, render_report, Budget, BudgetReport, InterrogationConfig, LaunchScan, ReportFormat,
};
use serde::{Deserialize, Serialize};

use crate::{Cli, Command, Format, GlobalOpts, Stream};

pub const CONFIG_FILE: &str = "config.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const CYCLES_FILE: &str = "cycles.csv";
pub const SCAN_FILE: &str = "launch_scan.csv";
pub const ROUTINE_FILE: &str = "routine.json";
pub const TILT_FILE: &str = "tilt_scans.csv";
pub const TEMPERATURE_FILE: &str = "temperature.csv";
pub const TRUE_MAP_FILE: &str = "field_map_true.csv";

/// Routine operating point: apogee and a track of Zeeman-fringe offsets.
#[derive(Serialize, Deserialize)]
struct Routine {
    routine_apogee_mm: f64,
    fringe_track_hz: Vec<f64>,
}

/// Input errors exit with 2, numerical failures with 3.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<fountain_core::Error>() {
        Some(c) if c.is_numerical() => 3,
        _ => 2,
    }
}

fn kind(e: &anyhow::Error) -> &'static str {
    e.downcast_ref::<fountain_core::Error>().map_or("input", |c| c.kind())
}

pub fn report_error(kind: &str, message: &str, code: u8) -> ExitCode {
    let record = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{record}");
    ExitCode::from(code)
}

pub fn fail(e: &anyhow::Error) -> ExitCode {
    let mut msg = String::new();
    for cause in e.chain().map(|c| c.to_string()) {
        if !msg.contains(&cause) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&cause);
        }
    }
    report_error(kind(e), &msg, exit_code(e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| {
        fountain_core::Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| {
        fountain_core::Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        }
        .into()
    })
}

fn load_constants(g: &GlobalOpts) -> Result<Constants> {
    let mut c = match &g.constants {
        Some(p) => Constants::from_json(&read_text(p)?).with_context(|| format!("constants {}", p.display()))?,
        None => Constants::default(),
    };
    c.dcp.seed = g.seed;
    if let Some(n) = g.mc_trials {
        c.dcp.mc_trials = n;
    }
    Ok(c)
}

fn load_config(path: Option<&Path>, seed: u64) -> Result<FountainConfig> {
    let mut cfg = match path {
        Some(p) => FountainConfig::from_json(&read_text(p)?).with_context(|| format!("config {}", p.display()))?,
        None => FountainConfig::default(),
    };
    cfg.seed = seed;
    Ok(cfg)
}

/// Writes `text` to `<out>/<name>`, or to stdout without an output directory.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => write_file(&dir.join(name), text),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                s.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| fountain_core::Error::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| {
        fountain_core::Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn emit_json<T: Serialize>(out: Option<&Path>, name: &str, value: &T) -> Result<()> {
    emit(out, name, &serde_json::to_string_pretty(value)?)
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> fountain_core::Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn out_dir(g: &GlobalOpts) -> Result<&Path> {
    g.out
        .as_deref()
        .ok_or_else(|| anyhow!("--out <dir> is required for this subcommand"))
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Simulate { cycles } => simulate(g, *cycles),
        Command::EvalZeeman {
            scan,
            routine,
            apogee_mm,
        } => {
            let constants = load_constants(g)?;
            let cfg = load_config(g.config.as_deref(), g.seed)?;
            let scan: LaunchScan = io::read_path(scan, io::read_launch_scan)?;
            let routine: Option<Routine> = routine.as_deref().map(parse_json).transpose()?;
            let apogee = match (apogee_mm, &routine) {
                (Some(a), _) => *a,
                (None, Some(r)) => r.routine_apogee_mm,
                (None, None) => ballistic_timing(&cfg)?.apogee_m * 1000.0,
            };
            let track = routine.as_ref().map(|r| r.fringe_track_hz.as_slice());
            let ev = evaluate_zeeman_data(&scan, track, &cfg.kinematics(), apogee, &constants)?;
            if let Some(dir) = out {
                let map = csv_string(|b| io::write_field_map(b, &ev.reconstruction.map))?;
                write_file(&dir.join("field_map.csv"), &map)?;
            }
            emit_json(out, "zeeman.json", &ev)
        }
        Command::EvalCollisional { cycles } => {
            let constants = load_constants(g)?;
            let cfg = load_config(g.config.as_deref(), g.seed)?;
            let records = io::read_path(cycles, io::read_cycles)?;
            let collisional = evaluate_collisional(&records, constants.sigma_nonlinear)?;
            let stability = evaluate_stability(&records, collisional.stats.k, cfg.cycle_s)?;
            emit_json(
                out,
                "collisional.json",
                &serde_json::json!({ "collisional": collisional, "stability": stability }),
            )
        }
        Command::EvalDcp { scans } => {
            let constants = load_constants(g)?;
            let scans = io::read_path(scans, |f, s| io::read_tilt_scans(f, s, constants.tilt_adjustment_mrad))?;
            let res = fountain_core::dcp::evaluate_dcp(&scans, &constants.dcp)?;
            emit_json(out, "dcp.json", &res)
        }
        Command::EvalEnvironment { temperature } => {
            let constants = load_constants(g)?;
            let log = temperature
                .as_deref()
                .map(|p| io::read_path(p, io::read_temperature_log))
                .transpose()?;
            emit_json(
                out,
                "environment.json",
                &evaluate_environment(log.as_deref(), &constants)?,
            )
        }
        Command::Adev { cycles, density } => {
            let cfg = load_config(g.config.as_deref(), g.seed)?;
            let records = io::read_path(cycles, io::read_cycles)?;
            let y: Vec<f64> = records
                .iter()
                .filter(|r| match density {
                    Stream::All => true,
                    Stream::High => r.density == Density::High,
                    Stream::Low => r.density == Density::Low,
                })
                .map(|r| r.y)
                .collect();
            let points = allan_deviation(&y, cfg.cycle_s)?;
            emit(out, "adev.csv", &csv_string(|b| io::write_adev(b, &points))?)
        }
        Command::Budget { input, data, format } => budget(g, input.as_deref(), data.as_deref(), *format),
        Command::Compare {
            record,
            maser,
            utc,
            start,
            end,
            y_maser_lab,
            spacing_days,
            uncertainties,
        } => {
            let reports: Vec<ComparisonReport> = match (record, maser, utc) {
                (Some(p), _, _) => {
                    let value: serde_json::Value = parse_json(p)?;
                    let records: Vec<ComparisonRecord<f64>> = if value.is_array() {
                        serde_json::from_value(value)
                    } else {
                        serde_json::from_value(value).map(|r| vec![r])
                    }
                    .map_err(|e| fountain_core::Error::Parse {
                        path: p.display().to_string(),
                        message: e.to_string(),
                    })?;
                    records.iter().map(compare).collect::<fountain_core::Result<_>>()?
                }
                (None, Some(m), Some(u)) => {
                    let (start, end) = (start.unwrap_or_default(), end.unwrap_or_default());
                    let us = uncertainties.as_deref().unwrap_or_default();
                    if us.len() != 4 {
                        bail!(fountain_core::Error::InvalidArgument(format!(
                            "--uncertainties takes 4 values, got {}",
                            us.len()
                        )));
                    }
                    let samples = io::read_path(m, io::read_maser_comparison)?;
                    let offsets = io::read_path(u, io::read_utc_offsets)?;
                    let (y_fm, dead) = interval_mean(&samples, start, end, *spacing_days)?;
                    let rec = ComparisonRecord {
                        mjd_start: start,
                        mjd_end: end,
                        y_fountain_maser: y_fm,
                        y_maser_lab: *y_maser_lab,
                        y_utc_lab: frequency_from_offsets(&offsets, start, end)?,
                        u_a: us[0],
                        u_b: us[1],
                        u_link_lab: us[2],
                        u_link_tai: us[3],
                        dead_time_fraction: dead,
                    };
                    vec![compare(&rec)?]
                }
                _ => bail!("compare needs --record, or --maser with --utc"),
            };
            if reports.len() == 1 {
                emit_json(out, "comparison.json", &reports[0])
            } else {
                emit_json(out, "comparison.json", &reports)
            }
        }
        Command::Fringe {
            tau_in,
            t_r,
            pulse_area,
            span_hz,
            points,
        } => {
            if *points < 2 || span_hz.is_nan() || *span_hz <= 0.0 {
                bail!(fountain_core::Error::InvalidArgument(
                    "fringe needs >= 2 points and a positive span".into()
                ));
            }
            let area = pulse_area.unwrap_or(std::f64::consts::FRAC_PI_2);
            let cfg = InterrogationConfig::from_pulse_area(area, *tau_in, *t_r)?;
            let step = 2.0 * span_hz / (*points - 1) as f64;
            let curve = (0..*points)
                .map(|i| {
                    let d = -span_hz + step * i as f64;
                    Ok((d, ramsey_probability(d, &cfg)?))
                })
                .collect::<fountain_core::Result<Vec<_>>>()?;
            emit(out, "fringe.csv", &csv_string(|b| io::write_lineshape(b, &curve))?)?;
            if let Some(dir) = out {
                let summary = serde_json::json!({
                    "fwhm_hz": central_fringe_fwhm(&cfg)?,
                    "contrast": fringe_contrast(&cfg)?,
                });
                write_file(&dir.join("fringe.json"), &serde_json::to_string_pretty(&summary)?)?;
            }
            Ok(())
        }
    }
}

fn simulate(g: &GlobalOpts, cycles: usize) -> Result<()> {
    let dir = out_dir(g)?;
    let cfg = load_config(g.config.as_deref(), g.seed)?;
    let camp = simulate_campaign(&cfg, cycles)?;
    write_file(&dir.join(CONFIG_FILE), &cfg.to_json())?;
    write_file(
        &dir.join(TRUTH_FILE),
        &serde_json::to_string_pretty(&camp.dataset.truth)?,
    )?;
    write_file(
        &dir.join(CYCLES_FILE),
        &csv_string(|b| io::write_cycles(b, &camp.dataset.cycles))?,
    )?;
    write_file(
        &dir.join(SCAN_FILE),
        &csv_string(|b| io::write_launch_scan(b, &camp.launch_scan))?,
    )?;
    let routine = Routine {
        routine_apogee_mm: camp.routine_apogee_mm,
        fringe_track_hz: camp.fringe_track_hz.clone(),
    };
    write_file(&dir.join(ROUTINE_FILE), &serde_json::to_string_pretty(&routine)?)?;
    write_file(
        &dir.join(TILT_FILE),
        &csv_string(|b| io::write_tilt_scans(b, &camp.tilt_scans))?,
    )?;
    write_file(
        &dir.join(TEMPERATURE_FILE),
        &csv_string(|b| io::write_temperature_log(b, &camp.temperature_log))?,
    )?;
    write_file(
        &dir.join(TRUE_MAP_FILE),
        &csv_string(|b| io::write_field_map(b, &cfg.true_field_map))?,
    )
}

fn budget(g: &GlobalOpts, input: Option<&Path>, data: Option<&Path>, format: Format) -> Result<()> {
    let out = g.out.as_deref();
    let budget: Budget = match (input, data) {
        (Some(p), _) => {
            let report = BudgetReport::from_json(&read_text(p)?).map_err(|e| match e {
                fountain_core::Error::Parse { message, .. } => fountain_core::Error::Parse {
                    path: p.display().to_string(),
                    message,
                },
                other => other,
            })?;
            Budget::from_report(&report)?
        }
        (None, Some(dir)) => {
            let ev = evaluate_directory(g, dir)?;
            if let Some(o) = out {
                write_file(
                    &o.join("evaluation.json"),
                    &serde_json::to_string_pretty(&ev.to_json())?,
                )?;
            }
            ev.budget
        }
        (None, None) => fountain_core::assemble_budget(reference_budget())?,
    };
    match format {
        Format::Json => emit(out, "budget.json", &render_report(&budget, ReportFormat::Json)),
        Format::Text => emit(out, "budget.txt", &render_report(&budget, ReportFormat::TextTable)),
    }
}

/// Full evaluation of a directory in the `simulate` layout. The config is
/// taken from `--config` if given, else from the directory.
fn evaluate_directory(g: &GlobalOpts, dir: &Path) -> Result<fountain_core::evaluation::Evaluation> {
    let constants = load_constants(g)?;
    let cfg_path: PathBuf = g.config.clone().unwrap_or_else(|| dir.join(CONFIG_FILE));
    let cfg = if cfg_path.exists() || g.config.is_some() {
        load_config(Some(&cfg_path), g.seed)?
    } else {
        load_config(None, g.seed)?
    };
    let cycles = io::read_path(&dir.join(CYCLES_FILE), io::read_cycles)?;
    let scan: LaunchScan = io::read_path(&dir.join(SCAN_FILE), io::read_launch_scan)?;
    let routine_path = dir.join(ROUTINE_FILE);
    let routine: Option<Routine> = routine_path.exists().then(|| parse_json(&routine_path)).transpose()?;
    let tilt = io::read_path(&dir.join(TILT_FILE), |f, s| {
        io::read_tilt_scans(f, s, constants.tilt_adjustment_mrad)
    })?;
    let temp_path = dir.join(TEMPERATURE_FILE);
    let temperature = temp_path
        .exists()
        .then(|| io::read_path(&temp_path, io::read_temperature_log))
        .transpose()?;
    let apogee = match &routine {
        Some(r) => r.routine_apogee_mm,
        None => ballistic_timing(&cfg)?.apogee_m * 1000.0,
    };
    let data = CampaignData {
        cycles: &cycles,
        cycle_s: cfg.cycle_s,
        launch_scan: &scan,
        fringe_track_hz: routine.as_ref().map(|r| r.fringe_track_hz.as_slice()),
        kinematics: cfg.kinematics(),
        routine_apogee_mm: apogee,
        interrogation: cfg.interrogation()?,
        tilt_scans: &tilt,
        temperature_log: temperature.as_deref(),
    };
    Ok(evaluate_campaign(&data, &constants)?)
}
