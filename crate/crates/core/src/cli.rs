//! Command-line front end: `run`, `sweep`, `reproduce-paper` and
//! `validate-config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::{run_scenario, write_bundle, write_sweep_csv, Mode, ScenarioConfig, ScenarioResult, SweepRow};

const NOISE_KEYS: [&str; 3] = ["noise_n0", "snr_db", "target_evm_pct"];
const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "dmimo-sim", version, about = "Two-TRxP coherent joint transmission link simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write a result bundle.
    Run(RunArgs),
    /// Run a scenario over a grid of one numeric parameter.
    Sweep(SweepArgs),
    /// Run the bundled two-TRxP reproduction.
    ReproducePaper(CommonArgs),
    /// Parse and validate a config without running it.
    ValidateConfig(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON scenario config, or a `result.json` with an embedded config.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set mode=NCJT` or `--set trxp2.gain_db=-1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Suppress the summary table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Numeric config key to sweep (dotted path).
    #[arg(long)]
    pub param: String,
    /// `start:stop:count`, inclusive and linearly spaced.
    #[arg(long)]
    pub range: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Settings carried by the config file next to the scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileSettings {
    pub output_dir: Option<PathBuf>,
    pub verbosity: Option<u8>,
}

/// Parse `args` (including the program name) and execute. Returns the
/// process exit code: 0 on success, 2 for usage and config errors, 1 for
/// run failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidParameter(_) | Error::Json(_) => 2,
                _ => 1,
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => {
            let (config, settings) = load_config(&a.config, &a.common.overrides, a.common.seed, a.common.trials)?;
            let result = run_scenario(&config)?;
            finish(&result, &a.common, &settings)
        }
        Command::ReproducePaper(a) => {
            let mut value = serde_json::to_value(ScenarioConfig::reproduction())?;
            apply_overrides(&mut value, &a.overrides)?;
            let config = finalize(value, a.seed, a.trials)?;
            let result = run_scenario(&config)?;
            finish(&result, a, &FileSettings::default())?;
            if !a.quiet {
                if let Some(g) = result.gain_report {
                    println!(
                        "CJT gain {:.2} dB vs TRxP 1 (hardware 5.22 dB), {:.2} dB vs TRxP 2 (hardware 5.35 dB), theory {:.2} dB",
                        g.gain_vs_1_db, g.gain_vs_2_db, g.theoretical_gain_db
                    );
                }
            }
            Ok(())
        }
        Command::Sweep(a) => sweep(a),
        Command::ValidateConfig(a) => {
            let (config, _) = load_config(&a.config, &a.overrides, None, None)?;
            let num = config.validate()?;
            println!(
                "config ok: mode {}, {} subcarriers, CP {:.5} us, {} trials",
                config.mode,
                num.n_subcarriers,
                num.cp_duration_s * 1e6,
                config.trials
            );
            Ok(())
        }
    }
}

fn finish(result: &ScenarioResult, common: &CommonArgs, settings: &FileSettings) -> Result<()> {
    let out = output_dir(common, settings);
    write_bundle(result, &out)?;
    if !quiet(common, settings) {
        print!("{}", summary_table(result));
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn output_dir(common: &CommonArgs, settings: &FileSettings) -> PathBuf {
    common.out.clone().or_else(|| settings.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn quiet(common: &CommonArgs, settings: &FileSettings) -> bool {
    common.quiet || settings.verbosity == Some(0)
}

/// Mode, EVM, SNR and gain per mode.
pub fn summary_table(result: &ScenarioResult) -> String {
    let mut s = format!("{:<8} {:>10} {:>9} {:>9}\n", "mode", "EVM %", "SNR dB", "gain dB");
    for summary in &result.summaries {
        let gain = match (summary.mode, &result.gain_report) {
            (Mode::Cjt, Some(g)) => format!("{:.2}", g.gain_vs_1_db),
            _ => "-".to_string(),
        };
        s.push_str(&format!(
            "{:<8} {:>10.3} {:>9.2} {:>9}\n",
            summary.mode.as_str(),
            summary.mean_evm_pct,
            summary.snr_db_estimate,
            gain
        ));
    }
    s
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let values = parse_range(&a.range)?;
    let (base, settings) = load_config(&a.config, &a.common.overrides, a.common.seed, a.common.trials)?;
    let base_value = serde_json::to_value(&base)?;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut value = base_value.clone();
        apply_override(&mut value, &a.param, Value::from(v))?;
        let config = parse_config(value)?;
        let result = run_scenario(&config)?;
        let mode = if config.mode == Mode::Cjt { Mode::Cjt } else { config.mode };
        let s = result.summary(mode).expect("mode ran");
        rows.push(SweepRow {
            value: v,
            mean_evm_pct: s.mean_evm_pct,
            snr_db_estimate: s.snr_db_estimate,
            gain_db: result.gain_report.map(|g| g.gain_vs_1_db),
        });
        if !quiet(&a.common, &settings) {
            println!("{} = {v}: EVM {:.3}%, SNR {:.2} dB", a.param, s.mean_evm_pct, s.snr_db_estimate);
        }
    }
    let out = output_dir(&a.common, &settings).join("sweep.csv");
    write_sweep_csv(&a.param, &rows, &out)?;
    if !quiet(&a.common, &settings) {
        println!("wrote {}", out.display());
    }
    Ok(())
}

/// `start:stop:count`, `count >= 1`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("range must be start:stop:count with count >= 1, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())
}

/// Read a config or result file, apply overrides and parse strictly.
pub fn load_config(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<(ScenarioConfig, FileSettings)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
    if let Some(inner) = value.get("resolved_config") {
        value = inner.clone();
    }
    let settings = take_settings(&mut value)?;
    apply_overrides(&mut value, overrides)?;
    Ok((finalize(value, seed, trials)?, settings))
}

fn take_settings(value: &mut Value) -> Result<FileSettings> {
    let Some(obj) = value.as_object_mut() else {
        return Err(Error::Config { path: "$".into(), message: "config must be a JSON object".into() });
    };
    let output_dir = match obj.remove("output_dir") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(Error::Config { path: "output_dir".into(), message: "expected a string".into() }),
    };
    let verbosity = match obj.remove("verbosity") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) if n.as_u64().is_some_and(|v| v <= 3) => Some(n.as_u64().unwrap_or(1) as u8),
        Some(Value::String(s)) => Some(match s.as_str() {
            "quiet" => 0,
            "normal" => 1,
            "verbose" => 2,
            _ => {
                return Err(Error::Config {
                    path: "verbosity".into(),
                    message: format!("expected quiet, normal, verbose or 0..=3, got '{s}'"),
                })
            }
        }),
        Some(_) => return Err(Error::Config { path: "verbosity".into(), message: "expected 0..=3".into() }),
    };
    Ok(FileSettings { output_dir, verbosity })
}

fn finalize(mut value: Value, seed: Option<u64>, trials: Option<usize>) -> Result<ScenarioConfig> {
    if let Some(s) = seed {
        apply_override(&mut value, "seed", Value::from(s))?;
    }
    if let Some(t) = trials {
        apply_override(&mut value, "trials", Value::from(t))?;
    }
    let config = parse_config(value)?;
    config.validate()?;
    Ok(config)
}

/// Strict parse with the offending key path in the error.
pub fn parse_config(value: Value) -> Result<ScenarioConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("override '{o}' is not KEY=VALUE")))?;
        let parsed = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        apply_override(value, key.trim(), parsed)?;
    }
    Ok(())
}

/// Set a dotted key. Setting one noise specification clears the others.
pub fn apply_override(value: &mut Value, key: &str, new: Value) -> Result<()> {
    if key.is_empty() {
        return Err(Error::InvalidParameter("empty override key".into()));
    }
    if NOISE_KEYS.contains(&key) {
        if let Some(obj) = value.as_object_mut() {
            for k in NOISE_KEYS {
                obj.insert(k.to_string(), Value::Null);
            }
        }
    }
    let mut target = value;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = target
            .as_object_mut()
            .ok_or_else(|| Error::Config { path: parts[..i].join("."), message: "not an object".into() })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), new);
            return Ok(());
        }
        target = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
