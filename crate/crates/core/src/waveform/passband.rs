use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::filter::{decimate, interpolate, resampling_taps};
use super::BasebandSignal;
use crate::error::{Error, Result};

/// Digital intermediate-frequency carrier. The RF carrier is not simulated;
/// the receiver sees the band at `if_hz`, offset by `cfo_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfParams {
    pub if_hz: f64,
    pub oversample: usize,
    pub cfo_hz: f64,
    pub phase0_rad: f64,
}

impl IfParams {
    /// IF at a quarter of the oversampled rate, 4x oversampling.
    pub fn quarter_rate(baseband_fs_hz: f64) -> Self {
        Self { if_hz: baseband_fs_hz, oversample: 4, cfo_hz: 0.0, phase0_rad: 0.0 }
    }

    pub fn validate(&self, baseband_fs_hz: f64) -> Result<()> {
        if self.oversample == 0 {
            return Err(Error::InvalidParameter("oversample factor must be at least 1".into()));
        }
        let nyquist_hz = self.oversample as f64 * baseband_fs_hz / 2.0;
        if !(self.if_hz > 0.0 && self.if_hz < nyquist_hz) {
            return Err(Error::Aliasing { if_hz: self.if_hz, nyquist_hz });
        }
        Ok(())
    }

    pub(crate) fn carrier_phase(&self, t_s: f64) -> f64 {
        2.0 * PI * (self.if_hz + self.cfo_hz) * t_s + self.phase0_rad
    }
}

/// Real-valued samples at the oversampled rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PassbandSignal {
    pub samples: Vec<f64>,
    pub fs_hz: f64,
    pub t0_s: f64,
}

impl PassbandSignal {
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// Interpolate by the oversampling factor and mix onto the carrier. The
/// `sqrt(2)` factor keeps per-sample power equal to the baseband power.
pub fn upconvert(signal: &BasebandSignal, if_params: &IfParams) -> Result<PassbandSignal> {
    if_params.validate(signal.fs_hz)?;
    let factor = if_params.oversample;
    let taps = resampling_taps(factor);
    let up = interpolate(&signal.samples, factor, &taps);
    let fs_hz = signal.fs_hz * factor as f64;
    let samples = up
        .iter()
        .enumerate()
        .map(|(m, &z)| {
            let theta = if_params.carrier_phase(signal.t0_s + m as f64 / fs_hz);
            SQRT_2 * (z * Complex64::from_polar(1.0, theta)).re
        })
        .collect();
    Ok(PassbandSignal { samples, fs_hz, t0_s: signal.t0_s })
}

/// Genie downconversion with the exact carrier (frequency, offset and phase).
pub fn downconvert_ideal(passband: &PassbandSignal, if_params: &IfParams) -> Result<BasebandSignal> {
    let factor = if_params.oversample;
    let baseband_fs = passband.fs_hz / factor as f64;
    if_params.validate(baseband_fs)?;
    let mixed: Vec<Complex64> = passband
        .samples
        .iter()
        .enumerate()
        .map(|(m, &x)| {
            let theta = if_params.carrier_phase(passband.t0_s + m as f64 / passband.fs_hz);
            Complex64::from_polar(SQRT_2 * x, -theta)
        })
        .collect();
    let taps = resampling_taps(factor);
    Ok(BasebandSignal::new(decimate(&mixed, factor, &taps), baseband_fs, passband.t0_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
    use crate::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::FftPlanner;

    fn ofdm_burst(seed: u64) -> BasebandSignal {
        let num = OfdmNumerology::nr_default();
        let c = QamConstellation::new(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..PilotPattern::Comb4.data_capacity_bits(&num, &c))
            .map(|_| rng.random_range(0..2u8))
            .collect();
        ofdm_modulate(&ResourceGrid::build(&num, &bits, &c, PilotPattern::Comb4, seed).unwrap())
    }

    #[test]
    fn tone_lands_at_if_plus_tone() {
        let fs = 15.36e6;
        let params = IfParams::quarter_rate(fs);
        let tone_hz = 1.2e6;
        let n = 4096;
        let x = BasebandSignal::new(
            (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * tone_hz * k as f64 / fs)).collect(),
            fs,
            0.0,
        );
        let p = upconvert(&x, &params).unwrap();
        let mut spec: Vec<Complex64> = p.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::<f64>::new().plan_fft_forward(spec.len()).process(&mut spec);
        let half = spec.len() / 2;
        let peak = (0..half).max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm())).unwrap();
        let peak_hz = peak as f64 * p.fs_hz / spec.len() as f64;
        let bin_hz = p.fs_hz / spec.len() as f64;
        assert!((peak_hz - (params.if_hz + tone_hz)).abs() <= bin_hz, "{peak_hz}");
        assert!((p.power() - 1.0).abs() < 0.02);
    }

    #[test]
    fn ideal_round_trip_on_ofdm() {
        let x = ofdm_burst(8);
        for params in [
            IfParams::quarter_rate(x.fs_hz),
            IfParams { if_hz: 14e6, oversample: 4, cfo_hz: 1234.0, phase0_rad: 0.7 },
        ] {
            let y = downconvert_ideal(&upconvert(&x, &params).unwrap(), &params).unwrap();
            assert_eq!(y.len(), x.len());
            // in-band comparison: CP edges spill outside the filter passband
            let num = OfdmNumerology::nr_default();
            let offsets = burst_offsets(&num, 0);
            let gx = ofdm_demodulate(&x, &num, &offsets).unwrap();
            let gy = ofdm_demodulate(&y, &num, &offsets).unwrap();
            let err: f64 = gx.cells().iter().zip(gy.cells()).map(|(a, b)| (a - b).norm_sqr()).sum();
            let rel_db = 10.0 * (err / gx.energy()).log10();
            assert!(rel_db < -40.0, "round trip error {rel_db} dB");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let params = IfParams::quarter_rate(15.36e6);
        let z = BasebandSignal::zeros(1000, 15.36e6, 0.0);
        let p = upconvert(&z, &params).unwrap();
        assert!(p.samples.iter().all(|&s| s == 0.0));
        let back = downconvert_ideal(&p, &params).unwrap();
        assert!(back.samples.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn pure_carrier_becomes_dc() {
        let params = IfParams { if_hz: 10e6, oversample: 4, cfo_hz: 300.0, phase0_rad: -0.4 };
        let fs = 61.44e6;
        let n = 8192;
        let p = PassbandSignal {
            samples: (0..n).map(|m| SQRT_2 * params.carrier_phase(m as f64 / fs).cos()).collect(),
            fs_hz: fs,
            t0_s: 0.0,
        };
        let y = downconvert_ideal(&p, &params).unwrap();
        for s in &y.samples[100..y.len() - 100] {
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-3, "{s}");
        }
    }

    #[test]
    fn aliasing_rejected() {
        let fs = 15.36e6;
        let bad = IfParams { if_hz: 40e6, oversample: 4, cfo_hz: 0.0, phase0_rad: 0.0 };
        assert!(matches!(upconvert(&BasebandSignal::zeros(10, fs, 0.0), &bad), Err(Error::Aliasing { .. })));
        let bad = IfParams { if_hz: 0.0, ..bad };
        assert!(upconvert(&BasebandSignal::zeros(10, fs, 0.0), &bad).is_err());
    }
}
