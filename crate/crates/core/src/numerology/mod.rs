//! OFDM lattice, QAM mapping and resource-grid construction.
//!
//! The default lattice is NR-like: 30 kHz subcarrier spacing, 24 resource
//! blocks (288 active subcarriers) on a 512-point FFT at 15.36 Msps, with a
//! uniform 36-sample cyclic prefix (2.34375 us).

mod grid;
mod qam;

pub use grid::{build_resource_grid, CellKind, Grid, PilotPattern, ResourceGrid};
pub use qam::{demap_qam, map_qam, QamConstellation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subcarriers per resource block.
pub const SUBCARRIERS_PER_RB: usize = 12;

/// Normal cyclic prefix of NR is 144 samples for a 2048-point FFT.
const CP_NUMERATOR: usize = 144;
const CP_DENOMINATOR: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    pub scs_hz: f64,
    pub n_rb: usize,
    pub n_subcarriers: usize,
    pub fft_size: usize,
    pub fs_hz: f64,
    pub cp_samples: usize,
    pub cp_duration_s: f64,
    pub symbols_per_burst: usize,
}

impl OfdmNumerology {
    pub fn new(scs_hz: f64, n_rb: usize, fft_size: usize, symbols_per_burst: usize) -> Result<Self> {
        if !(scs_hz.is_finite() && scs_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("subcarrier spacing must be positive, got {scs_hz}")));
        }
        if n_rb == 0 {
            return Err(Error::InvalidParameter("at least one resource block is required".into()));
        }
        if symbols_per_burst == 0 {
            return Err(Error::InvalidParameter("a burst needs at least one OFDM symbol".into()));
        }
        if !fft_size.is_power_of_two() {
            return Err(Error::FftSizeNotPowerOfTwo(fft_size));
        }
        let n_subcarriers = SUBCARRIERS_PER_RB * n_rb;
        if fft_size < 2 || n_subcarriers > fft_size - 2 {
            return Err(Error::AllocationExceedsFft { n_subcarriers, fft_size });
        }
        let fs_hz = fft_size as f64 * scs_hz;
        let cp_samples = ((fft_size * CP_NUMERATOR) as f64 / CP_DENOMINATOR as f64).round().max(1.0) as usize;
        Ok(Self {
            scs_hz,
            n_rb,
            n_subcarriers,
            fft_size,
            fs_hz,
            cp_samples,
            cp_duration_s: cp_samples as f64 / fs_hz,
            symbols_per_burst,
        })
    }

    /// 30 kHz SCS, 24 RBs, 512-point FFT, 14 symbols.
    pub fn nr_default() -> Self {
        Self::new(30e3, 24, 512, 14).expect("default numerology is valid")
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_samples
    }

    pub fn burst_len(&self) -> usize {
        self.symbol_len() * self.symbols_per_burst
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.fs_hz
    }

    /// Signed FFT bin of active subcarrier `k`.
    pub fn signed_bin(&self, k: usize) -> i64 {
        signed_bin(k, self.n_subcarriers)
    }

    /// Index into an FFT buffer of `fft_size` for active subcarrier `k`.
    pub fn fft_index(&self, k: usize) -> usize {
        self.signed_bin(k).rem_euclid(self.fft_size as i64) as usize
    }

    /// CP length as a fraction of the useful symbol; the delay span a channel
    /// estimate can legitimately occupy.
    pub fn cp_fraction(&self) -> f64 {
        self.cp_samples as f64 / self.fft_size as f64
    }
}

pub fn build_numerology(scs_hz: f64, n_rb: usize, fft_size: usize, symbols_per_burst: usize) -> Result<OfdmNumerology> {
    OfdmNumerology::new(scs_hz, n_rb, fft_size, symbols_per_burst)
}

/// Active subcarriers are split evenly around an unused DC bin: the lower
/// half maps to bins `-n/2..=-1`, the upper half to `1..=n/2`.
pub fn signed_bin(k: usize, n_subcarriers: usize) -> i64 {
    let half = (n_subcarriers / 2) as i64;
    let k = k as i64;
    if k < half {
        k - half
    } else {
        k - half + 1
    }
}
