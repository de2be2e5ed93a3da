use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioResult;
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `result.json`, `trials.csv`, `constellation_<mode>.csv` and
/// `chest_trxp<i>.csv` into `dir`, creating it if needed.
///
/// Files are rendered in memory first so a serialisation failure leaves the
/// directory untouched.
pub fn write_bundle(result: &ScenarioResult, dir: &Path) -> Result<Vec<String>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    let mut json = serde_json::to_vec_pretty(result)?;
    json.push(b'\n');
    files.push(("result.json".into(), json));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "mode", "evm_pct", "snr_db_estimate", "delay_difference_s", "error"])?;
    for r in &result.trials {
        w.write_record(&[
            r.trial.to_string(),
            r.mode.to_string(),
            opt(r.evm_pct),
            opt(r.snr_db_estimate),
            opt(r.delay_difference_s),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    files.push(("trials.csv".into(), w.into_inner().map_err(|e| e.into_error())?));

    for (mode, symbols) in &result.constellations {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "q"])?;
        for s in symbols {
            w.write_record(&[s.re.to_string(), s.im.to_string()])?;
        }
        files.push((format!("constellation_{mode}.csv"), w.into_inner().map_err(|e| e.into_error())?));
    }

    for est in &result.channel_estimates {
        let mut buf = Vec::new();
        est.write_csv(&mut buf)?;
        files.push((format!("chest_trxp{}.csv", est.trxp_id), buf));
    }

    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(dir.join(&name), bytes)?;
        names.push(name);
    }
    Ok(names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_evm_pct: f64,
    pub snr_db_estimate: f64,
    pub gain_db: Option<f64>,
}

pub fn write_sweep_csv(parameter: &str, rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([parameter, "mean_evm_pct", "snr_db_estimate", "gain_db"])?;
    for r in rows {
        w.write_record(&[r.value.to_string(), r.mean_evm_pct.to_string(), r.snr_db_estimate.to_string(), opt(r.gain_db)])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}
