use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::BasebandSignal;

/// Minimum peak-to-mean ratio of the squared correlation for a valid sync.
pub const DEFAULT_PSR_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    /// Start of the reference within the signal, in samples from its first
    /// sample, with a fractional part.
    pub offset_samples: f64,
    pub peak_index: usize,
    pub psr: f64,
}

impl SyncResult {
    /// Start time on the simulation clock.
    pub fn time_s(&self, signal: &BasebandSignal) -> f64 {
        signal.t0_s + self.offset_samples / signal.fs_hz
    }

    /// Integer CP start for demodulation, `backoff` samples ahead of the
    /// estimate so the FFT window stays inside the prefix.
    pub fn symbol_start(&self, backoff: usize) -> usize {
        (self.offset_samples.round().max(0.0) as usize).saturating_sub(backoff)
    }
}

pub fn time_sync(signal: &BasebandSignal, reference: &BasebandSignal) -> Result<SyncResult> {
    time_sync_with_threshold(signal, reference, DEFAULT_PSR_THRESHOLD)
}

/// Cross-correlate against the known reference and refine the peak with a
/// parabola through the magnitudes at the peak and its two neighbours.
pub fn time_sync_with_threshold(signal: &BasebandSignal, reference: &BasebandSignal, threshold: f64) -> Result<SyncResult> {
    if reference.is_empty() || signal.len() < reference.len() {
        return Err(Error::Dimension(format!(
            "signal of {} samples cannot contain a reference of {}",
            signal.len(),
            reference.len()
        )));
    }
    if (signal.fs_hz - reference.fs_hz).abs() > 1e-9 * signal.fs_hz {
        return Err(Error::SampleRateMismatch(signal.fs_hz, reference.fs_hz));
    }
    let lags = signal.len() - reference.len() + 1;
    let size = (signal.len() + reference.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    a[..signal.len()].copy_from_slice(&signal.samples);
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    b[..reference.len()].copy_from_slice(&reference.samples);
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    ifft.process(&mut a);
    let mag: Vec<f64> = a[..lags].iter().map(|c| c.norm()).collect();

    let (peak, &peak_mag) = mag
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("at least one lag");
    let mean_sq = mag.iter().map(|m| m * m).sum::<f64>() / lags as f64;
    let psr = if mean_sq > 0.0 { peak_mag * peak_mag / mean_sq } else { 0.0 };
    if !(psr >= threshold) {
        return Err(Error::SyncFailure { psr, threshold });
    }

    let mut frac = 0.0;
    if peak > 0 && peak + 1 < lags {
        let (l, c, r) = (mag[peak - 1], mag[peak], mag[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom.abs() > 1e-300 {
            frac = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(SyncResult { offset_samples: peak as f64 + frac, peak_index: peak, psr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_awgn, delay_signal, NoiseModel};
    use crate::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
    use crate::waveform::ofdm_modulate;

    fn reference() -> BasebandSignal {
        let num = OfdmNumerology::nr_default();
        let c = QamConstellation::qpsk();
        ofdm_modulate(&ResourceGrid::build(&num, &[], &c, PilotPattern::AllReference, 9).unwrap())
    }

    fn embed(x: &BasebandSignal, delay_samples: f64, extra: usize) -> BasebandSignal {
        let mut y = delay_signal(x, delay_samples / x.fs_hz);
        y.samples.resize(y.len() + extra, Complex64::new(0.0, 0.0));
        y
    }

    #[test]
    fn integer_delay_is_exact() {
        let x = reference();
        let r = time_sync(&embed(&x, 100.0, 300), &x).unwrap();
        assert_eq!(r.peak_index, 100);
        assert!((r.offset_samples - 100.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_delay_within_half_sample() {
        let x = reference();
        let d = 3.8055e-6 * x.fs_hz;
        assert!((d - 58.45).abs() < 0.01);
        let r = time_sync(&embed(&x, d, 300), &x).unwrap();
        assert!((r.offset_samples - d).abs() < 0.5, "{}", r.offset_samples);
    }

    #[test]
    fn noisy_delay_within_half_sample() {
        let x = reference();
        let p = x.power();
        for seed in 0..20 {
            let d = 40.0 + seed as f64 * 1.37;
            let y = add_awgn(&embed(&x, d, 500), &NoiseModel { n0: p / 10.0, seed });
            let r = time_sync(&y, &x).unwrap();
            assert!((r.offset_samples - d).abs() < 0.5, "seed {seed}: {} vs {d}", r.offset_samples);
        }
    }

    #[test]
    fn noise_only_fails() {
        let x = reference();
        let noise = add_awgn(&BasebandSignal::zeros(3 * x.len(), x.fs_hz, 0.0), &NoiseModel { n0: 1.0, seed: 4 });
        assert!(matches!(time_sync(&noise, &x), Err(Error::SyncFailure { .. })));
        let silent = BasebandSignal::zeros(3 * x.len(), x.fs_hz, 0.0);
        assert!(matches!(time_sync(&silent, &x), Err(Error::SyncFailure { .. })));
    }

    #[test]
    fn short_signal_rejected() {
        let x = reference();
        let short = BasebandSignal::zeros(10, x.fs_hz, 0.0);
        assert!(time_sync(&short, &x).is_err());
    }

    #[test]
    fn symbol_start_backs_off() {
        let r = SyncResult { offset_samples: 58.4, peak_index: 58, psr: 100.0 };
        assert_eq!(r.symbol_start(9), 49);
        assert_eq!(r.symbol_start(100), 0);
    }
}
