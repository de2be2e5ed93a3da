use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{air_delay, fronthaul_delay, PathModel};
use crate::cjt_core::PrecoderMode;
use crate::error::{Error, Result};
use crate::numerology::{OfdmNumerology, QamConstellation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumerologyConfig {
    pub scs_hz: f64,
    pub n_rb: usize,
    pub fft_size: usize,
    pub symbols_per_burst: usize,
}

impl Default for NumerologyConfig {
    fn default() -> Self {
        Self { scs_hz: 30e3, n_rb: 24, fft_size: 512, symbols_per_burst: 14 }
    }
}

impl NumerologyConfig {
    pub fn build(&self) -> Result<OfdmNumerology> {
        OfdmNumerology::new(self.scs_hz, self.n_rb, self.fft_size, self.symbols_per_burst)
    }
}

/// One TRxP's analog path: fronthaul, unmodelled device delay and the air
/// interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrxpConfig {
    pub fronthaul_length_m: f64,
    pub velocity_factor: f64,
    pub excess_delay_s: f64,
    pub wireless_distance_m: f64,
    pub gain_db: f64,
    pub phase_rad: f64,
    pub tx_power_scale: f64,
}

impl TrxpConfig {
    pub fn total_delay_s(&self) -> Result<f64> {
        Ok(fronthaul_delay(self.fronthaul_length_m, self.velocity_factor)? + self.excess_delay_s + air_delay(self.wireless_distance_m))
    }

    pub fn path_model(&self, extra_phase_rad: f64) -> Result<PathModel> {
        let gain = Complex64::from_polar(10f64.powf(self.gain_db / 20.0), self.phase_rad + extra_phase_rad);
        let path = PathModel::new(
            fronthaul_delay(self.fronthaul_length_m, self.velocity_factor)? + self.excess_delay_s,
            air_delay(self.wireless_distance_m),
            gain,
            self.tx_power_scale,
        );
        path.validate()?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Single1,
    Single2,
    #[serde(rename = "NCJT")]
    Ncjt,
    #[serde(rename = "CJT")]
    Cjt,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Single1, Mode::Single2, Mode::Ncjt, Mode::Cjt];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single1 => "Single1",
            Mode::Single2 => "Single2",
            Mode::Ncjt => "NCJT",
            Mode::Cjt => "CJT",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfMode {
    #[default]
    Baseband,
    DigitalIf,
}

fn default_numerology() -> NumerologyConfig {
    NumerologyConfig::default()
}
fn default_one() -> f64 {
    1.0
}
fn default_qam() -> usize {
    256
}
fn default_trials() -> usize {
    1
}
fn default_cutoff() -> f64 {
    36.0 / 512.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_numerology")]
    pub numerology: NumerologyConfig,
    pub trxp1: TrxpConfig,
    pub trxp2: TrxpConfig,
    /// Receiver noise per complex sample. Exactly one of `noise_n0`,
    /// `snr_db` and `target_evm_pct` is set.
    #[serde(default)]
    pub noise_n0: Option<f64>,
    /// Per-subcarrier SNR of TRxP 1 alone.
    #[serde(default)]
    pub snr_db: Option<f64>,
    /// TRxP 1 alone is calibrated to this EVM.
    #[serde(default)]
    pub target_evm_pct: Option<f64>,
    /// Estimation-burst noise relative to data noise; 0 gives perfect
    /// estimates.
    #[serde(default = "default_one")]
    pub estimation_n0_scale: f64,
    #[serde(default = "default_qam")]
    pub qam_order: usize,
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub if_mode: IfMode,
    #[serde(default)]
    pub precoder: PrecoderMode,
    /// Draw an independent carrier phase per TRxP per trial.
    #[serde(default)]
    pub random_phase: bool,
    #[serde(default = "default_cutoff")]
    pub smoothing_cutoff_fraction: f64,
    /// Receiver carrier offset, digital-IF mode only.
    #[serde(default)]
    pub cfo_hz: f64,
}

impl ScenarioConfig {
    /// Two-TRxP geometry of the reference measurement: 800 m of fiber with
    /// 0.1 us of device delay against 1.2 m of coax, antennas at 1 m and
    /// 1.3 m, equal received amplitudes, single-TRxP EVM matched at 9.2%.
    pub fn reproduction() -> Self {
        Self {
            numerology: NumerologyConfig::default(),
            trxp1: TrxpConfig {
                fronthaul_length_m: 800.0,
                velocity_factor: 0.7,
                excess_delay_s: 1.0076e-7,
                wireless_distance_m: 1.0,
                gain_db: 0.0,
                phase_rad: 0.0,
                tx_power_scale: 1.0,
            },
            trxp2: TrxpConfig {
                fronthaul_length_m: 1.2,
                velocity_factor: 0.7,
                excess_delay_s: 0.0,
                wireless_distance_m: 1.3,
                gain_db: 0.0,
                phase_rad: 1.9,
                tx_power_scale: 1.0,
            },
            noise_n0: None,
            snr_db: None,
            target_evm_pct: Some(9.2),
            estimation_n0_scale: 1.0,
            qam_order: 256,
            mode: Mode::Cjt,
            trials: 100,
            seed: 2024,
            if_mode: IfMode::Baseband,
            precoder: PrecoderMode::Ratio,
            random_phase: true,
            smoothing_cutoff_fraction: 36.0 / 512.0,
            cfo_hz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<OfdmNumerology> {
        let num = self.numerology.build()?;
        let set = [self.noise_n0.is_some(), self.snr_db.is_some(), self.target_evm_pct.is_some()];
        if set.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::InvalidParameter(
                "exactly one of noise_n0, snr_db and target_evm_pct must be set".into(),
            ));
        }
        if let Some(n0) = self.noise_n0 {
            if !(n0 >= 0.0 && n0.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise_n0 must be non-negative, got {n0}")));
            }
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidParameter("snr_db must be finite".into()));
            }
        }
        if let Some(t) = self.target_evm_pct {
            if !(t > 0.0 && t < 100.0) {
                return Err(Error::InvalidParameter(format!("target_evm_pct must be in (0, 100), got {t}")));
            }
        }
        if !(self.estimation_n0_scale >= 0.0 && self.estimation_n0_scale.is_finite()) {
            return Err(Error::InvalidParameter("estimation_n0_scale must be non-negative".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.smoothing_cutoff_fraction > 0.0 && self.smoothing_cutoff_fraction <= 1.0) {
            return Err(Error::InvalidParameter("smoothing_cutoff_fraction must be in (0, 1]".into()));
        }
        if !self.cfo_hz.is_finite() {
            return Err(Error::InvalidParameter("cfo_hz must be finite".into()));
        }
        QamConstellation::new(self.qam_order)?;
        self.trxp1.path_model(0.0)?;
        self.trxp2.path_model(0.0)?;
        Ok(num)
    }

    /// Noise power when it follows from the config alone.
    pub fn direct_n0(&self) -> Result<Option<f64>> {
        if let Some(n0) = self.noise_n0 {
            return Ok(Some(n0));
        }
        if let Some(snr) = self.snr_db {
            let p = self.trxp1.path_model(0.0)?.received_power_gain();
            return Ok(Some(p * 10f64.powf(-snr / 10.0)));
        }
        Ok(None)
    }

    pub fn paths(&self, phases: [f64; 2]) -> Result<[PathModel; 2]> {
        Ok([self.trxp1.path_model(phases[0])?, self.trxp2.path_model(phases[1])?])
    }

    pub(crate) fn random_phases(&self, u: [f64; 2]) -> [f64; 2] {
        if self.random_phase {
            [2.0 * PI * u[0], 2.0 * PI * u[1]]
        } else {
            [0.0, 0.0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry_delay_difference() {
        let c = ScenarioConfig::reproduction();
        let d = c.trxp1.total_delay_s().unwrap() - c.trxp2.total_delay_s().unwrap();
        assert!((d - 3.9062e-6).abs() < 1e-11, "{d}");
        assert!(d > c.validate().unwrap().cp_duration_s);
    }

    #[test]
    fn json_round_trip_and_strict_keys() {
        let c = ScenarioConfig::reproduction();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert!(text.contains("\"mode\": \"CJT\""));
        assert!(text.contains("\"if_mode\": \"baseband\""));
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let bad = text.replace("\"gain_db\"", "\"gain_dbb\"");
        assert!(serde_json::from_str::<ScenarioConfig>(&bad).is_err());
    }

    #[test]
    fn noise_specification_is_exclusive() {
        let mut c = ScenarioConfig::reproduction();
        assert!(c.validate().is_ok());
        c.noise_n0 = Some(0.01);
        assert!(c.validate().is_err());
        c.target_evm_pct = None;
        assert!(c.validate().is_ok());
        c.noise_n0 = None;
        assert!(c.validate().is_err());
        c.snr_db = Some(20.0);
        assert!((c.direct_n0().unwrap().unwrap() - 0.01).abs() < 1e-15);
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn target_bounds() {
        let mut c = ScenarioConfig::reproduction();
        c.target_evm_pct = Some(0.0);
        assert!(c.validate().is_err());
        c.target_evm_pct = Some(100.0);
        assert!(c.validate().is_err());
    }
}
