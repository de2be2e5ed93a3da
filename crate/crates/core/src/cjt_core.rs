//! Coherent joint transmission: precoder synthesis and alignment, plus the
//! SNR and gain arithmetic linking EVM to combining gain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{NoiseModel, PathModel};
use crate::error::{Error, Result};
use crate::estimation::ChannelEstimate;
use crate::numerology::{OfdmNumerology, ResourceGrid};

/// Relative floor on `|h2|` below which a subcarrier is treated as faded.
pub const SINGULAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    /// `h1 / h2`: TRxP 2 is equalized to TRxP 1's full response.
    #[default]
    Ratio,
    /// Unit-magnitude weights with the phase of the ratio.
    CoPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    pub weights: Vec<Complex64>,
    /// Emission time of TRxP 2 relative to TRxP 1, on the sample grid.
    pub time_offset_s: f64,
    pub time_offset_samples: i64,
    pub target_trxp: usize,
    pub mode: PrecoderMode,
}

impl Precoder {
    pub fn identity(n_subcarriers: usize) -> Self {
        Self {
            weights: vec![Complex64::new(1.0, 0.0); n_subcarriers],
            time_offset_s: 0.0,
            time_offset_samples: 0,
            target_trxp: 2,
            mode: PrecoderMode::Ratio,
        }
    }
}

/// Weights for TRxP 2 from the smoothed estimates of both TRxPs.
///
/// TRxP 2 is delayed by `D = round(delta_t * fs)` samples. Each estimate's
/// phase slope is referenced to its own FFT window position `n_i`, so the
/// weight carries the residual `exp(-j 2 pi k (n1 - n2 - D) / N)`.
pub fn synthesize_precoder(
    est1: &ChannelEstimate,
    est2: &ChannelEstimate,
    measured_delta_t_s: f64,
    numerology: &OfdmNumerology,
    mode: PrecoderMode,
) -> Result<Precoder> {
    let n_sc = numerology.n_subcarriers;
    if est1.smoothed.len() != n_sc || est2.smoothed.len() != n_sc {
        return Err(Error::Dimension(format!("estimates must have {n_sc} subcarriers")));
    }
    let fs = numerology.fs_hz;
    let d = (measured_delta_t_s * fs).round();
    let n1 = (est1.burst_timestamp_s * fs).round();
    let n2 = (est2.burst_timestamp_s * fs).round();
    let residual = n1 - n2 - d;

    let peak = est2.smoothed.iter().map(|h| h.norm()).fold(0.0, f64::max);
    let floor = SINGULAR_FLOOR * peak;
    let mut weights = Vec::with_capacity(n_sc);
    for k in 0..n_sc {
        let h2 = est2.smoothed[k];
        if !(h2.norm() > floor) {
            return Err(Error::Singular { what: "TRxP 2 channel estimate", index: k });
        }
        let ramp = Complex64::from_polar(
            1.0,
            -2.0 * PI * numerology.signed_bin(k) as f64 * residual / numerology.fft_size as f64,
        );
        let w = est1.smoothed[k] / h2 * ramp;
        weights.push(match mode {
            PrecoderMode::Ratio => w,
            PrecoderMode::CoPhase => {
                if w.norm() > 0.0 {
                    w / w.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }
        });
    }
    Ok(Precoder { weights, time_offset_s: d / fs, time_offset_samples: d as i64, target_trxp: est2.trxp_id, mode })
}

/// Multiply every cell by its subcarrier's weight.
pub fn apply_precoder(grid: &ResourceGrid, precoder: &Precoder) -> Result<ResourceGrid> {
    let n_sc = grid.symbols.n_subcarriers();
    if precoder.weights.len() != n_sc {
        return Err(Error::Dimension(format!(
            "precoder has {} weights for {n_sc} subcarriers",
            precoder.weights.len()
        )));
    }
    let mut symbols = grid.symbols.clone();
    for t in 0..symbols.n_symbols() {
        for (cell, w) in symbols.symbol_mut(t).iter_mut().zip(&precoder.weights) {
            *cell *= w;
        }
    }
    grid.with_symbols(symbols)
}

/// Received SNR with the paths adding in phase and no total-power
/// constraint: `(sum sqrt(p_i) |h_i|)^2 / N0`. For equal TRxPs this is
/// `P ||h||^2 / N0` with `P` the summed transmit power.
pub fn theoretical_snr(paths: &[PathModel], noise: &NoiseModel) -> Result<f64> {
    check_noise(noise)?;
    let amplitude: f64 = paths.iter().map(|p| p.tx_power_scale.abs() * p.complex_gain.norm()).sum();
    Ok(amplitude * amplitude / noise.n0)
}

/// Power sum `sum p_i |h_i|^2 / N0`, the SNR when the paths add with random
/// relative phase.
pub fn incoherent_snr(paths: &[PathModel], noise: &NoiseModel) -> Result<f64> {
    check_noise(noise)?;
    Ok(paths.iter().map(|p| p.received_power_gain()).sum::<f64>() / noise.n0)
}

fn check_noise(noise: &NoiseModel) -> Result<()> {
    if !(noise.n0 > 0.0 && noise.n0.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise power must be positive, got {}", noise.n0)));
    }
    Ok(())
}

pub fn theoretical_cjt_gain(paths_cjt: &[PathModel], paths_baseline: &[PathModel], noise: &NoiseModel) -> Result<f64> {
    let base = theoretical_snr(paths_baseline, noise)?;
    if base <= 0.0 {
        return Err(Error::InvalidParameter("baseline paths carry no power".into()));
    }
    Ok(10.0 * (theoretical_snr(paths_cjt, noise)? / base).log10())
}

/// `20 log10(evm_a / evm_b)`: the SNR gain of b over a when `EVM^2 ~ 1/SNR`.
pub fn gain_from_evm(evm_a_pct: f64, evm_b_pct: f64) -> Result<f64> {
    if !(evm_a_pct > 0.0 && evm_b_pct > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "EVM values must be positive, got {evm_a_pct} and {evm_b_pct}"
        )));
    }
    Ok(20.0 * (evm_a_pct / evm_b_pct).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub evm_single_1_pct: f64,
    pub evm_single_2_pct: f64,
    pub evm_cjt_pct: f64,
    pub evm_ncjt_pct: f64,
    pub gain_vs_1_db: f64,
    pub gain_vs_2_db: f64,
    /// Against TRxP 1 alone.
    pub theoretical_gain_db: f64,
    pub theoretical_gain_vs_2_db: f64,
}

impl GainReport {
    pub fn from_evms(
        evm_single_1_pct: f64,
        evm_single_2_pct: f64,
        evm_cjt_pct: f64,
        evm_ncjt_pct: f64,
        theoretical_gain_db: f64,
        theoretical_gain_vs_2_db: f64,
    ) -> Result<Self> {
        Ok(Self {
            evm_single_1_pct,
            evm_single_2_pct,
            evm_cjt_pct,
            evm_ncjt_pct,
            gain_vs_1_db: gain_from_evm(evm_single_1_pct, evm_cjt_pct)?,
            gain_vs_2_db: gain_from_evm(evm_single_2_pct, evm_cjt_pct)?,
            theoretical_gain_db,
            theoretical_gain_vs_2_db,
        })
    }
}
