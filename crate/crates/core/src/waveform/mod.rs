//! OFDM modulation and demodulation, plus optional digital-IF up/down
//! conversion used to exercise carrier recovery.

pub(crate) mod filter;
mod ofdm;
mod passband;

pub use filter::{decimate, interpolate, lowpass_taps};
pub use ofdm::{burst_offsets, modulate_symbols, ofdm_demodulate, ofdm_modulate};
pub use passband::{downconvert_ideal, upconvert, IfParams, PassbandSignal};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex baseband samples with their sampling rate and the time of the
/// first sample on the simulation clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub fs_hz: f64,
    pub t0_s: f64,
}

impl BasebandSignal {
    pub fn new(samples: Vec<Complex64>, fs_hz: f64, t0_s: f64) -> Self {
        Self { samples, fs_hz, t0_s }
    }

    pub fn zeros(len: usize, fs_hz: f64, t0_s: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], fs_hz, t0_s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power per sample.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.samples.iter().map(|&s| s * factor).collect(), self.fs_hz, self.t0_s)
    }
}
